#pragma once

#include <cstddef>
#include <optional>
#include <string_view>

#include "beamjudge/sql/canonical.hpp"

namespace beamjudge::sql {

enum class HardnessLevel { easy, medium, hard, extra };

// Version tag of the rule table below; reported alongside every result.
inline constexpr std::string_view kHardnessRuleSet = "hardness-rules/v1";

inline constexpr std::string_view to_string(HardnessLevel h) {
  switch (h) {
    case HardnessLevel::easy: return "easy";
    case HardnessLevel::medium: return "medium";
    case HardnessLevel::hard: return "hard";
    case HardnessLevel::extra: return "extra";
  }
  return "";
}

inline std::optional<HardnessLevel> hardness_from_string(std::string_view s) {
  if (s == "easy") return HardnessLevel::easy;
  if (s == "medium") return HardnessLevel::medium;
  if (s == "hard") return HardnessLevel::hard;
  if (s == "extra") return HardnessLevel::extra;
  return std::nullopt;
}

// Feature counts summed over a query and everything nested inside it.
//
//   component1 = #where conjuncts + [group by] + [order by] + [limit]
//              + #join conditions + #OR + #LIKE + #aggregates + (#select items - 1)
//   component2 = #nested subqueries + #set operators
struct HardnessCounts {
  std::size_t component1 = 0;
  std::size_t component2 = 0;
};

namespace detail {

class HardnessCounter {
 public:
  HardnessCounts counts;

  void query(const CanonicalQuery& q) {
    auto& c1 = counts.component1;
    c1 += q.where_conjuncts.size();
    c1 += q.group_by.empty() ? 0 : 1;
    c1 += q.order_by.empty() ? 0 : 1;
    c1 += q.limit ? 1 : 0;
    c1 += q.join_conditions.size();
    c1 += q.select_items.empty() ? 0 : q.select_items.size() - 1;

    for (const auto& item : q.select_items) value(item);
    for (const auto& o : q.order_by) value(o.expr);
    for (const auto& c : q.where_conjuncts) condition(c);
    for (const auto& c : q.having) condition(c);

    if (q.set_op) {
      ++counts.component2;
      query(*q.set_op->right.query);
    }
  }

 private:
  void unit(const ColumnUnit& u) {
    if (u.aggregate != Aggregate::none) ++counts.component1;
  }

  void value(const ValueUnit& v) {
    unit(v.lhs);
    if (v.rhs) unit(*v.rhs);
  }

  void condition(const Condition& c) {
    if (c.kind == ConditionKind::disjunction) {
      counts.component1 += c.branches.size() - 1;
      for (const auto& branch : c.branches)
        for (const auto& inner : branch) condition(inner);
      return;
    }
    if (c.op == CompareOp::like || c.op == CompareOp::not_like) ++counts.component1;
    if (c.left) value(*c.left);
    for (const auto& o : c.right) {
      if (auto* v = std::get_if<ValueUnit>(&o)) {
        value(*v);
      } else if (auto* sub = std::get_if<Subquery>(&o)) {
        ++counts.component2;
        query(*sub->query);
      }
    }
  }
};

}  // namespace detail

inline HardnessCounts hardness_counts(const CanonicalQuery& q) {
  detail::HardnessCounter counter;
  counter.query(q);
  return counter.counts;
}

inline HardnessLevel classify(const HardnessCounts& c) {
  if (c.component2 == 0) {
    if (c.component1 <= 1) return HardnessLevel::easy;
    if (c.component1 <= 3) return HardnessLevel::medium;
    return HardnessLevel::hard;
  }
  if (c.component2 == 1 && c.component1 <= 1) return HardnessLevel::hard;
  return HardnessLevel::extra;
}

inline HardnessLevel hardness(const CanonicalQuery& q) { return classify(hardness_counts(q)); }

}  // namespace beamjudge::sql
