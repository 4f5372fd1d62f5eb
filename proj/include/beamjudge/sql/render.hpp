#pragma once

#include <sstream>
#include <string>

#include "beamjudge/sql/canonical.hpp"
#include "beamjudge/sql/parser.hpp"

namespace beamjudge::sql {

namespace detail {

inline std::string render_identifier(const std::string& name) {
  bool plain = !name.empty() && ident_start(name.front());
  for (char c : name) plain = plain && ident_char(c);
  if (plain && !is_reserved(name)) return name;
  return "`" + name + "`";
}

inline std::string render(const ColumnRef& c) {
  std::string col = c.column == "*" ? "*" : render_identifier(c.column);
  if (c.table.empty()) return col;
  return render_identifier(c.table) + "." + col;
}

inline std::string render(const ColumnUnit& u) {
  if (u.aggregate == Aggregate::none) return render(u.column);
  return std::string(to_string(u.aggregate)) + "(" + (u.distinct ? "DISTINCT " : "") +
         render(u.column) + ")";
}

inline std::string render(const ValueUnit& v) {
  std::string s = render(v.lhs);
  if (v.rhs) s += std::string(" ") + to_string(v.op) + " " + render(*v.rhs);
  return s;
}

inline std::string render(const Literal& lit) {
  if (!lit.quoted) return lit.text;
  std::string s = "'";
  for (char c : lit.text) {
    if (c == '\'') s += '\'';
    s += c;
  }
  return s + "'";
}

std::string render_query(const CanonicalQuery& q);

inline std::string render(const Operand& o) {
  if (auto* lit = std::get_if<Literal>(&o)) return render(*lit);
  if (auto* v = std::get_if<ValueUnit>(&o)) return render(*v);
  return "(" + render_query(*std::get<Subquery>(o).query) + ")";
}

inline std::string render(const Condition& c);

inline std::string render_conjuncts(const std::vector<Condition>& cs) {
  std::string s;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i) s += " AND ";
    s += render(cs[i]);
  }
  return s;
}

inline std::string render(const Condition& c) {
  if (c.kind == ConditionKind::disjunction) {
    std::string s = "(";
    for (std::size_t i = 0; i < c.branches.size(); ++i) {
      if (i) s += " OR ";
      s += render_conjuncts(c.branches[i]);
    }
    return s + ")";
  }
  switch (c.op) {
    case CompareOp::exists:
    case CompareOp::not_exists:
      return std::string(to_string(c.op)) + " " + render(c.right.front());
    case CompareOp::between:
    case CompareOp::not_between:
      return render(*c.left) + " " + to_string(c.op) + " " + render(c.right[0]) + " AND " +
             render(c.right[1]);
    case CompareOp::in:
    case CompareOp::not_in: {
      std::string s = render(*c.left) + " " + to_string(c.op) + " ";
      if (c.right.size() == 1 && is_subquery(c.right.front())) return s + render(c.right.front());
      s += "(";
      for (std::size_t i = 0; i < c.right.size(); ++i) {
        if (i) s += ", ";
        s += render(c.right[i]);
      }
      return s + ")";
    }
    default:
      return render(*c.left) + " " + to_string(c.op) + " " + render(c.right.front());
  }
}

template <class Set>
std::string render_conditions(const Set& cs) {
  std::string s;
  bool first = true;
  for (const auto& c : cs) {
    if (!first) s += " AND ";
    first = false;
    s += render(c);
  }
  return s;
}

inline std::string render_query(const CanonicalQuery& q) {
  std::string s = "SELECT ";
  if (q.distinct) s += "DISTINCT ";
  bool first = true;
  for (const auto& item : q.select_items) {
    if (!first) s += ", ";
    first = false;
    s += render(item);
  }
  s += " FROM ";
  first = true;
  for (const auto& t : q.from_tables) {
    if (!first) s += " JOIN ";
    first = false;
    s += render_identifier(t);
  }
  if (!q.join_conditions.empty()) {
    s += " ON ";
    first = true;
    for (const auto& j : q.join_conditions) {
      if (!first) s += " AND ";
      first = false;
      s += render(j.left) + " = " + render(j.right);
    }
  }
  if (!q.where_conjuncts.empty()) s += " WHERE " + render_conditions(q.where_conjuncts);
  if (!q.group_by.empty()) {
    s += " GROUP BY ";
    first = true;
    for (const auto& g : q.group_by) {
      if (!first) s += ", ";
      first = false;
      s += render(g);
    }
  }
  if (!q.having.empty()) s += " HAVING " + render_conditions(q.having);
  if (!q.order_by.empty()) {
    s += " ORDER BY ";
    for (std::size_t i = 0; i < q.order_by.size(); ++i) {
      if (i) s += ", ";
      s += render(q.order_by[i].expr) + " " + to_string(q.order_by[i].direction);
    }
  }
  if (q.limit) s += " LIMIT " + std::to_string(*q.limit);
  if (q.set_op) s += std::string(" ") + to_string(q.set_op->op) + " " + render_query(*q.set_op->right.query);
  return s;
}

inline void tree(std::ostream& os, const CanonicalQuery& q, int depth);

inline void indent(std::ostream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "  ";
}

inline void tree(std::ostream& os, const Condition& c, int depth) {
  indent(os, depth);
  if (c.kind == ConditionKind::disjunction) {
    os << "or\n";
    for (const auto& branch : c.branches) {
      indent(os, depth + 1);
      os << "and\n";
      for (const auto& inner : branch) tree(os, inner, depth + 2);
    }
    return;
  }
  os << (c.left ? render(*c.left) + " " : std::string()) << to_string(c.op);
  bool nested = false;
  for (const auto& o : c.right) {
    if (is_subquery(o)) {
      nested = true;
    } else {
      os << " " << render(o);
    }
  }
  os << "\n";
  if (nested) {
    for (const auto& o : c.right)
      if (auto* sub = std::get_if<Subquery>(&o)) tree(os, *sub->query, depth + 1);
  }
}

inline void tree(std::ostream& os, const CanonicalQuery& q, int depth) {
  indent(os, depth);
  os << "query" << (q.distinct ? " distinct" : "") << "\n";
  indent(os, depth + 1);
  os << "select\n";
  for (const auto& item : q.select_items) {
    indent(os, depth + 2);
    os << render(item) << "\n";
  }
  indent(os, depth + 1);
  os << "from\n";
  for (const auto& t : q.from_tables) {
    indent(os, depth + 2);
    os << t << "\n";
  }
  if (!q.join_conditions.empty()) {
    indent(os, depth + 1);
    os << "join\n";
    for (const auto& j : q.join_conditions) {
      indent(os, depth + 2);
      os << render(j.left) << " = " << render(j.right) << "\n";
    }
  }
  if (!q.where_conjuncts.empty()) {
    indent(os, depth + 1);
    os << "where\n";
    for (const auto& c : q.where_conjuncts) tree(os, c, depth + 2);
  }
  if (!q.group_by.empty()) {
    indent(os, depth + 1);
    os << "group_by\n";
    for (const auto& g : q.group_by) {
      indent(os, depth + 2);
      os << render(g) << "\n";
    }
  }
  if (!q.having.empty()) {
    indent(os, depth + 1);
    os << "having\n";
    for (const auto& c : q.having) tree(os, c, depth + 2);
  }
  if (!q.order_by.empty()) {
    indent(os, depth + 1);
    os << "order_by\n";
    for (const auto& o : q.order_by) {
      indent(os, depth + 2);
      os << render(o.expr) << " " << to_string(o.direction) << "\n";
    }
  }
  if (q.limit) {
    indent(os, depth + 1);
    os << "limit " << *q.limit << "\n";
  }
  if (q.set_op) {
    indent(os, depth + 1);
    os << to_string(q.set_op->op) << "\n";
    tree(os, *q.set_op->right.query, depth + 2);
  }
}

}  // namespace detail

// Renders a canonical query back to SQL. The output re-parses to the same
// canonical form.
inline std::string to_sql(const CanonicalQuery& q) { return detail::render_query(q); }

// Indented text tree of the canonical form, for debugging.
inline std::string to_tree(const CanonicalQuery& q) {
  std::ostringstream os;
  detail::tree(os, q, 0);
  return os.str();
}

}  // namespace beamjudge::sql
