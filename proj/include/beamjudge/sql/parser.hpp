#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "beamjudge/error.hpp"
#include "beamjudge/sql/canonical.hpp"
#include "beamjudge/sql/lexer.hpp"

namespace beamjudge::sql {

namespace detail {

inline bool is_reserved(std::string_view w) {
  static const std::set<std::string_view> kReserved = {
      "select", "from",  "where",  "group",     "by",    "order",   "having", "limit",
      "union",  "except", "intersect", "join",  "inner", "left",    "right",  "full",
      "outer",  "cross", "natural", "on",       "as",    "and",     "or",     "not",
      "in",     "like",  "between", "exists",   "distinct", "asc",  "desc",   "is",
      "null",   "case",  "when",   "then",      "else",  "end",     "with",   "over",
      "offset", "all",   "using",
  };
  return kReserved.count(w) > 0;
}

inline std::optional<Aggregate> aggregate_from(std::string_view w) {
  if (w == "count") return Aggregate::count;
  if (w == "sum") return Aggregate::sum;
  if (w == "avg") return Aggregate::avg;
  if (w == "min") return Aggregate::min;
  if (w == "max") return Aggregate::max;
  return std::nullopt;
}

// "1.50" -> "1.5", "2.0" -> "2", ".5" -> "0.5". Exponent forms are kept as written.
inline std::string normalize_number(std::string num) {
  if (num.find('e') != std::string::npos) return num;
  if (num.front() == '.') num.insert(num.begin(), '0');
  if (num.find('.') != std::string::npos) {
    while (num.back() == '0') num.pop_back();
    if (num.back() == '.') num.pop_back();
  }
  return num;
}

inline CompareOp mirror(CompareOp op) {
  switch (op) {
    case CompareOp::lt: return CompareOp::gt;
    case CompareOp::le: return CompareOp::ge;
    case CompareOp::gt: return CompareOp::lt;
    case CompareOp::ge: return CompareOp::le;
    default: return op;
  }
}

inline bool is_plain_column(const ValueUnit& v) {
  return v.op == ArithOp::none && v.lhs.aggregate == Aggregate::none && !v.lhs.distinct &&
         v.lhs.column.column != "*";
}

template <class T>
void sort_unique(std::vector<T>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Boolean expression tree before flattening into conjunct sets.
struct BoolNode {
  enum class Kind { leaf, conj, disj } kind = Kind::leaf;
  Condition leaf;
  std::vector<BoolNode> kids;
};

inline std::vector<Condition> to_conjuncts(const BoolNode& node) {
  std::vector<Condition> out;
  switch (node.kind) {
    case BoolNode::Kind::leaf:
      out.push_back(node.leaf);
      break;
    case BoolNode::Kind::conj:
      for (const auto& kid : node.kids) {
        auto part = to_conjuncts(kid);
        out.insert(out.end(), part.begin(), part.end());
      }
      sort_unique(out);
      break;
    case BoolNode::Kind::disj: {
      std::vector<std::vector<Condition>> branches;
      for (const auto& kid : node.kids) {
        auto branch = to_conjuncts(kid);
        // OR is associative: splice a nested disjunction into this one.
        if (branch.size() == 1 && branch.front().kind == ConditionKind::disjunction) {
          for (auto& b : branch.front().branches) branches.push_back(std::move(b));
        } else {
          branches.push_back(std::move(branch));
        }
      }
      sort_unique(branches);
      if (branches.size() == 1) return branches.front();
      Condition c;
      c.kind = ConditionKind::disjunction;
      c.branches = std::move(branches);
      out.push_back(std::move(c));
      break;
    }
  }
  return out;
}

}  // namespace detail

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  CanonicalQuery parse_statement() {
    auto q = parse_query(nullptr);
    accept_symbol(";");
    if (peek().kind != TokenKind::end) fail("unexpected trailing input '" + peek().text + "'");
    return q;
  }

 private:
  struct Scope {
    std::map<std::string, std::string> aliases;  // alias or table name -> base table
    std::size_t table_refs = 0;
    std::string first_table;
    const Scope* parent = nullptr;
  };

  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    return tokens_[std::min(pos_ + ahead, tokens_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < tokens_.size() - 1) ++pos_;
    return t;
  }
  bool accept_word(std::string_view w) {
    if (peek().is_word(w)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_symbol(std::string_view s) {
    if (peek().is_symbol(s)) {
      next();
      return true;
    }
    return false;
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w)) fail("expected '" + std::string(w) + "'");
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) fail("expected '" + std::string(s) + "'");
  }
  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    if (t.kind == TokenKind::end) throw ParseError(what + ", found end of input", t.offset);
    throw ParseError(what, t.offset);
  }
  [[noreturn]] void unsupported(const std::string& what) const {
    throw UnsupportedConstruct(what, peek().offset);
  }
  bool at_identifier(std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::quoted || (t.kind == TokenKind::word && !detail::is_reserved(t.text));
  }
  std::string identifier() {
    if (!at_identifier()) {
      if (peek().is_word("with")) unsupported("WITH clause");
      fail("expected identifier");
    }
    return next().text;
  }

  // ---- scope resolution ----------------------------------------------------

  static void resolve(ColumnRef& ref, const Scope& scope) {
    if (!ref.table.empty()) {
      for (const Scope* s = &scope; s != nullptr; s = s->parent) {
        if (auto it = s->aliases.find(ref.table); it != s->aliases.end()) {
          ref.table = it->second;
          return;
        }
      }
      return;  // unknown qualifier is kept verbatim
    }
    if (ref.column != "*" && scope.table_refs == 1) ref.table = scope.first_table;
  }

  static void resolve(ValueUnit& v, const Scope& scope) {
    resolve(v.lhs.column, scope);
    if (v.rhs) resolve(v.rhs->column, scope);
    normalize(v);
  }

  static void normalize(ValueUnit& v) {
    if ((v.op == ArithOp::add || v.op == ArithOp::mul) && v.rhs && *v.rhs < v.lhs)
      std::swap(v.lhs, *v.rhs);
  }

  // ---- query blocks --------------------------------------------------------

  CanonicalQuery parse_query(const Scope* parent) {
    if (peek().is_word("with")) unsupported("WITH clause");
    expect_word("select");

    CanonicalQuery q;
    if (accept_word("distinct")) q.distinct = true;
    if (peek().is_word("all")) next();

    std::vector<ValueUnit> raw_items;
    do {
      if (peek().is_symbol("(") && peek(1).is_word("select")) unsupported("subquery in select list");
      raw_items.push_back(parse_value_unit());
      if (accept_word("as")) {
        identifier();
      } else if (at_identifier()) {
        next();  // bare alias
      }
    } while (accept_symbol(","));

    Scope scope;
    scope.parent = parent;
    expect_word("from");
    std::vector<Condition> on_conditions;
    parse_from(q, scope, on_conditions);

    for (auto& item : raw_items) {
      resolve(item, scope);
      q.select_items.insert(item);
    }
    for (auto& c : on_conditions) place_condition(q, std::move(c), /*from_on=*/true);

    if (accept_word("where")) {
      for (auto& c : detail::to_conjuncts(parse_or(scope)))
        place_condition(q, std::move(c), /*from_on=*/false);
    }
    if (accept_word("group")) {
      expect_word("by");
      do {
        auto unit = parse_column_unit();
        if (unit.aggregate != Aggregate::none) unsupported("aggregate in GROUP BY");
        resolve(unit.column, scope);
        q.group_by.insert(unit.column);
      } while (accept_symbol(","));
    }
    if (accept_word("having")) {
      for (auto& c : detail::to_conjuncts(parse_or(scope))) q.having.insert(std::move(c));
    }
    if (accept_word("order")) {
      expect_word("by");
      do {
        OrderItem item{parse_value_unit(), SortDirection::asc};
        resolve(item.expr, scope);
        if (accept_word("desc")) {
          item.direction = SortDirection::desc;
        } else {
          accept_word("asc");
        }
        q.order_by.push_back(std::move(item));
      } while (accept_symbol(","));
    }
    if (accept_word("limit")) {
      const Token& t = peek();
      if (t.kind != TokenKind::number || t.text.find_first_not_of("0123456789") != std::string::npos)
        fail("expected non-negative integer after LIMIT");
      try {
        q.limit = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        fail("LIMIT value out of range");
      }
      next();
      if (peek().is_word("offset")) unsupported("OFFSET");
    }
    if (peek().is_word("offset")) unsupported("OFFSET");

    std::optional<SetOperator> op;
    if (accept_word("union")) {
      op = SetOperator::union_;
      if (peek().is_word("all")) unsupported("UNION ALL");
    } else if (accept_word("except")) {
      op = SetOperator::except;
    } else if (accept_word("intersect")) {
      op = SetOperator::intersect;
    }
    if (op) {
      CanonicalQuery right;
      if (accept_symbol("(")) {
        right = parse_query(parent);
        expect_symbol(")");
      } else {
        right = parse_query(parent);
      }
      q.set_op = SetOperation{*op, Subquery{std::make_shared<const CanonicalQuery>(std::move(right))}};
    }
    return q;
  }

  void parse_table_ref(CanonicalQuery& q, Scope& scope) {
    if (peek().is_symbol("(")) {
      if (peek(1).is_word("select")) unsupported("subquery in FROM");
      fail("expected table name");
    }
    std::string table = identifier();
    if (peek().is_symbol(".")) unsupported("schema-qualified table name");
    std::string alias;
    if (accept_word("as")) {
      alias = identifier();
    } else if (at_identifier()) {
      alias = next().text;
    }
    q.from_tables.insert(table);
    scope.aliases.try_emplace(table, table);
    if (!alias.empty()) scope.aliases.insert_or_assign(alias, table);
    if (scope.table_refs++ == 0) scope.first_table = table;
  }

  void parse_from(CanonicalQuery& q, Scope& scope, std::vector<Condition>& on_conditions) {
    parse_table_ref(q, scope);
    for (;;) {
      if (accept_symbol(",")) {
        parse_table_ref(q, scope);
        continue;
      }
      const Token& t = peek();
      if (t.is_word("left") || t.is_word("right") || t.is_word("full") || t.is_word("outer") ||
          t.is_word("cross") || t.is_word("natural")) {
        unsupported(t.text + " join");
      }
      if (accept_word("inner")) {
        if (!peek().is_word("join")) fail("expected 'join'");
      }
      if (!accept_word("join")) break;
      parse_table_ref(q, scope);
      if (accept_word("on")) {
        for (auto& c : detail::to_conjuncts(parse_or(scope))) on_conditions.push_back(std::move(c));
      } else if (peek().is_word("using")) {
        unsupported("JOIN USING");
      }
    }
  }

  // Routes a conjunct either to the join-condition set or to WHERE. Column
  // equalities from ON always count as joins; from WHERE only when they link
  // two distinct known tables (implicit comma joins).
  static void place_condition(CanonicalQuery& q, Condition c, bool from_on) {
    if (c.kind == ConditionKind::predicate && c.op == CompareOp::eq && c.left &&
        detail::is_plain_column(*c.left) && c.right.size() == 1 &&
        std::holds_alternative<ValueUnit>(c.right.front())) {
      const auto& rhs = std::get<ValueUnit>(c.right.front());
      if (detail::is_plain_column(rhs)) {
        const ColumnRef& a = c.left->lhs.column;
        const ColumnRef& b = rhs.lhs.column;
        const bool cross_table = !a.table.empty() && !b.table.empty() && a.table != b.table;
        if (from_on || cross_table) {
          q.join_conditions.insert(a < b ? JoinCondition{a, b} : JoinCondition{b, a});
          return;
        }
      }
    }
    q.where_conjuncts.insert(std::move(c));
  }

  // ---- expressions ---------------------------------------------------------

  ColumnRef parse_column_ref() {
    if (accept_symbol("*")) return {"", "*"};
    const Token& t = peek();
    if (t.kind == TokenKind::number || t.kind == TokenKind::string) unsupported("literal operand");
    if (t.is_word("case")) unsupported("CASE expression");
    if (t.is_word("null")) unsupported("NULL literal");
    if (t.is_word("select")) unsupported("unparenthesized subquery");
    std::string first = identifier();
    if (peek().is_symbol("(")) unsupported("function " + first);
    if (accept_symbol(".")) {
      if (accept_symbol("*")) return {first, "*"};
      return {first, identifier()};
    }
    return {"", first};
  }

  ColumnUnit parse_column_unit() {
    ColumnUnit unit;
    if (peek().kind == TokenKind::word && peek(1).is_symbol("(")) {
      if (auto agg = detail::aggregate_from(peek().text)) {
        next();
        next();
        unit.aggregate = *agg;
        unit.distinct = accept_word("distinct");
        unit.column = parse_column_ref();
        const Token& t = peek();
        if (t.is_symbol("+") || t.is_symbol("-") || t.is_symbol("*") || t.is_symbol("/"))
          unsupported("expression inside aggregate");
        expect_symbol(")");
        if (peek().is_word("over")) unsupported("window function");
        return unit;
      }
    }
    if (peek().is_symbol("(")) unsupported("parenthesized expression");
    unit.column = parse_column_ref();
    return unit;
  }

  std::optional<ArithOp> peek_arith() const {
    const Token& t = peek();
    if (t.kind != TokenKind::symbol) return std::nullopt;
    if (t.text == "+") return ArithOp::add;
    if (t.text == "-") return ArithOp::sub;
    if (t.text == "*") return ArithOp::mul;
    if (t.text == "/") return ArithOp::div;
    return std::nullopt;
  }

  ValueUnit parse_value_unit() {
    ValueUnit v;
    v.lhs = parse_column_unit();
    if (auto op = peek_arith()) {
      next();
      v.op = *op;
      v.rhs = parse_column_unit();
      if (peek_arith()) unsupported("arithmetic with more than two operands");
    }
    return v;
  }

  Operand parse_operand(const Scope& scope) {
    if (peek().is_symbol("(") && peek(1).is_word("select")) {
      next();
      auto sub = parse_query(&scope);
      expect_symbol(")");
      return Subquery{std::make_shared<const CanonicalQuery>(std::move(sub))};
    }
    const Token& t = peek();
    if (t.kind == TokenKind::string) {
      Literal lit{next().text, true};
      if (peek_arith()) unsupported("arithmetic on literals");
      return lit;
    }
    bool negative = false;
    if ((t.is_symbol("-") || t.is_symbol("+")) && peek(1).kind == TokenKind::number) {
      negative = next().text == "-";
    }
    if (peek().kind == TokenKind::number) {
      std::string num = detail::normalize_number(next().text);
      if (negative && num != "0") num.insert(num.begin(), '-');
      if (peek_arith()) unsupported("arithmetic on literals");
      return Literal{std::move(num), false};
    }
    ValueUnit v = parse_value_unit();
    resolve(v, scope);
    return v;
  }

  detail::BoolNode parse_or(const Scope& scope) {
    detail::BoolNode first = parse_and(scope);
    if (!peek().is_word("or")) return first;
    detail::BoolNode node;
    node.kind = detail::BoolNode::Kind::disj;
    node.kids.push_back(std::move(first));
    while (accept_word("or")) node.kids.push_back(parse_and(scope));
    return node;
  }

  detail::BoolNode parse_and(const Scope& scope) {
    detail::BoolNode first = parse_primary(scope);
    if (!peek().is_word("and")) return first;
    detail::BoolNode node;
    node.kind = detail::BoolNode::Kind::conj;
    node.kids.push_back(std::move(first));
    while (accept_word("and")) node.kids.push_back(parse_primary(scope));
    return node;
  }

  detail::BoolNode parse_primary(const Scope& scope) {
    if (peek().is_symbol("(")) {
      if (peek(1).is_word("select")) unsupported("subquery on left side of comparison");
      next();
      auto inner = parse_or(scope);
      expect_symbol(")");
      return inner;
    }
    detail::BoolNode node;
    node.leaf = parse_predicate(scope);
    return node;
  }

  Condition parse_exists(const Scope& scope, bool negated) {
    Condition c;
    c.op = negated ? CompareOp::not_exists : CompareOp::exists;
    expect_symbol("(");
    if (!peek().is_word("select")) fail("expected subquery after EXISTS");
    auto sub = parse_query(&scope);
    expect_symbol(")");
    c.right.push_back(Subquery{std::make_shared<const CanonicalQuery>(std::move(sub))});
    return c;
  }

  Condition parse_predicate(const Scope& scope) {
    if (accept_word("exists")) return parse_exists(scope, false);
    if (peek().is_word("not")) {
      if (peek(1).is_word("exists")) {
        next();
        next();
        return parse_exists(scope, true);
      }
      unsupported("NOT expression");
    }

    Condition c;
    const Token& lead = peek();
    if (lead.kind == TokenKind::number || lead.kind == TokenKind::string)
      unsupported("literal on left side of comparison");
    ValueUnit left = parse_value_unit();
    resolve(left, scope);
    c.left = left;

    bool negated = false;
    if (accept_word("not")) {
      negated = true;
      if (!(peek().is_word("in") || peek().is_word("like") || peek().is_word("between")))
        fail("expected IN, LIKE or BETWEEN after NOT");
    }
    if (peek().is_word("is")) unsupported("IS [NOT] NULL");

    if (accept_word("in")) {
      c.op = negated ? CompareOp::not_in : CompareOp::in;
      if (!peek().is_symbol("(")) fail("expected '(' after IN");
      if (peek(1).is_word("select")) {
        c.right.push_back(parse_operand(scope));
      } else {
        next();
        std::vector<Literal> items;
        do {
          Operand o = parse_operand(scope);
          if (!std::holds_alternative<Literal>(o)) unsupported("non-literal IN list");
          items.push_back(std::get<Literal>(std::move(o)));
        } while (accept_symbol(","));
        expect_symbol(")");
        detail::sort_unique(items);
        for (auto& lit : items) c.right.emplace_back(std::move(lit));
      }
      return c;
    }
    if (accept_word("like")) {
      c.op = negated ? CompareOp::not_like : CompareOp::like;
      c.right.push_back(parse_operand(scope));
      return c;
    }
    if (accept_word("between")) {
      c.op = negated ? CompareOp::not_between : CompareOp::between;
      c.right.push_back(parse_operand(scope));
      expect_word("and");
      c.right.push_back(parse_operand(scope));
      return c;
    }

    const Token& t = peek();
    if (t.kind != TokenKind::symbol) fail("expected comparison operator");
    if (t.text == "=") c.op = CompareOp::eq;
    else if (t.text == "!=") c.op = CompareOp::ne;
    else if (t.text == "<") c.op = CompareOp::lt;
    else if (t.text == "<=") c.op = CompareOp::le;
    else if (t.text == ">") c.op = CompareOp::gt;
    else if (t.text == ">=") c.op = CompareOp::ge;
    else fail("expected comparison operator");
    next();
    c.right.push_back(parse_operand(scope));

    // Column-to-column comparisons are stored with the smaller side on the left.
    if (auto* rhs = std::get_if<ValueUnit>(&c.right.front()); rhs && *rhs < *c.left) {
      std::swap(*rhs, *c.left);
      c.op = detail::mirror(c.op);
    }
    return c;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

// Parses SQL text into its canonical clause-component form.
// Throws ParseError (with byte offset) or UnsupportedConstruct.
inline CanonicalQuery parse_sql(std::string_view text) { return Parser(text).parse_statement(); }

}  // namespace beamjudge::sql
