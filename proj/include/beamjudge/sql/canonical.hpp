#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace beamjudge::sql {

enum class Aggregate { none, count, sum, avg, min, max };

enum class ArithOp { none, add, sub, mul, div };

enum class CompareOp {
  eq, ne, lt, le, gt, ge,
  like, not_like,
  in, not_in,
  between, not_between,
  exists, not_exists,
};

enum class SortDirection { asc, desc };

enum class SetOperator { union_, except, intersect };

// Column reference after alias resolution. table is the base table name, or
// empty when the column could not be attributed to a single table. column
// may be "*".
struct ColumnRef {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnRef&) const = default;
};

struct ColumnUnit {
  Aggregate aggregate = Aggregate::none;
  ColumnRef column;
  bool distinct = false;  // count(DISTINCT x)

  auto operator<=>(const ColumnUnit&) const = default;
};

// A column unit, optionally combined arithmetically with a second one.
// For commutative operators the operands are stored in sorted order.
struct ValueUnit {
  ColumnUnit lhs;
  ArithOp op = ArithOp::none;
  std::optional<ColumnUnit> rhs;

  auto operator<=>(const ValueUnit&) const = default;
};

// Literal value. Quoted strings keep their case; numbers are normalized by
// stripping trailing fractional zeros.
struct Literal {
  std::string text;
  bool quoted = false;

  auto operator<=>(const Literal&) const = default;
};

struct CanonicalQuery;

// Shared immutable handle to a nested query. Compared by value.
struct Subquery {
  std::shared_ptr<const CanonicalQuery> query;
};

using Operand = std::variant<Literal, ValueUnit, Subquery>;

enum class ConditionKind { predicate, disjunction };

// Either a single predicate (left op right...) or an OR over branches, where
// each branch is a sorted, duplicate-free list of conjuncts.
struct Condition {
  ConditionKind kind = ConditionKind::predicate;
  std::optional<ValueUnit> left;  // absent for [NOT] EXISTS
  CompareOp op = CompareOp::eq;
  std::vector<Operand> right;     // two operands for BETWEEN, a list for IN (...)
  std::vector<std::vector<Condition>> branches;
};

// Equality between two columns, stored with left <= right.
struct JoinCondition {
  ColumnRef left;
  ColumnRef right;

  auto operator<=>(const JoinCondition&) const = default;
};

struct OrderItem {
  ValueUnit expr;
  SortDirection direction = SortDirection::asc;

  auto operator<=>(const OrderItem&) const = default;
};

std::strong_ordering operator<=>(const Subquery& a, const Subquery& b);
std::strong_ordering operator<=>(const Condition& a, const Condition& b);
inline bool operator==(const Subquery& a, const Subquery& b) { return (a <=> b) == 0; }
inline bool operator==(const Condition& a, const Condition& b) { return (a <=> b) == 0; }

struct SetOperation {
  SetOperator op;
  Subquery right;

  auto operator<=>(const SetOperation&) const = default;
  bool operator==(const SetOperation&) const = default;
};

// Clause-component form of a query. Equality of two CanonicalQuery values is
// the logical-form equivalence used for accuracy.
struct CanonicalQuery {
  bool distinct = false;  // SELECT DISTINCT
  std::set<ValueUnit> select_items;
  std::set<std::string> from_tables;
  std::set<JoinCondition> join_conditions;
  std::set<Condition> where_conjuncts;
  std::set<ColumnRef> group_by;
  std::set<Condition> having;
  std::vector<OrderItem> order_by;
  std::optional<std::int64_t> limit;
  std::optional<SetOperation> set_op;

  std::strong_ordering operator<=>(const CanonicalQuery&) const = default;
  bool operator==(const CanonicalQuery&) const = default;
};

namespace detail {

template <class T>
std::strong_ordering compare_seq(const std::vector<T>& a, const std::vector<T>& b) {
  return std::lexicographical_compare_three_way(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

inline std::strong_ordering operator<=>(const Subquery& a, const Subquery& b) {
  if (a.query == b.query) return std::strong_ordering::equal;
  if (!a.query) return std::strong_ordering::less;
  if (!b.query) return std::strong_ordering::greater;
  return *a.query <=> *b.query;
}

inline std::strong_ordering operator<=>(const Condition& a, const Condition& b) {
  if (auto c = a.kind <=> b.kind; c != 0) return c;
  if (auto c = a.left <=> b.left; c != 0) return c;
  if (auto c = a.op <=> b.op; c != 0) return c;
  if (auto c = detail::compare_seq(a.right, b.right); c != 0) return c;
  return detail::compare_seq(a.branches, b.branches);
}

inline bool is_subquery(const Operand& o) { return std::holds_alternative<Subquery>(o); }

inline const char* to_string(Aggregate a) {
  switch (a) {
    case Aggregate::none: return "";
    case Aggregate::count: return "count";
    case Aggregate::sum: return "sum";
    case Aggregate::avg: return "avg";
    case Aggregate::min: return "min";
    case Aggregate::max: return "max";
  }
  return "";
}

inline const char* to_string(ArithOp op) {
  switch (op) {
    case ArithOp::none: return "";
    case ArithOp::add: return "+";
    case ArithOp::sub: return "-";
    case ArithOp::mul: return "*";
    case ArithOp::div: return "/";
  }
  return "";
}

inline const char* to_string(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::like: return "LIKE";
    case CompareOp::not_like: return "NOT LIKE";
    case CompareOp::in: return "IN";
    case CompareOp::not_in: return "NOT IN";
    case CompareOp::between: return "BETWEEN";
    case CompareOp::not_between: return "NOT BETWEEN";
    case CompareOp::exists: return "EXISTS";
    case CompareOp::not_exists: return "NOT EXISTS";
  }
  return "";
}

inline const char* to_string(SetOperator op) {
  switch (op) {
    case SetOperator::union_: return "UNION";
    case SetOperator::except: return "EXCEPT";
    case SetOperator::intersect: return "INTERSECT";
  }
  return "";
}

inline const char* to_string(SortDirection d) {
  return d == SortDirection::asc ? "ASC" : "DESC";
}

}  // namespace beamjudge::sql
