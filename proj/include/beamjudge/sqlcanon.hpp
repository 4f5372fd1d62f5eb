#pragma once

#include <string_view>

#include "beamjudge/sql/canonical.hpp"
#include "beamjudge/sql/hardness.hpp"
#include "beamjudge/sql/lexer.hpp"
#include "beamjudge/sql/parser.hpp"
#include "beamjudge/sql/render.hpp"

namespace beamjudge::sql {

// Logical-form equivalence: both sides are parsed and their canonical forms
// compared component-wise (sets for select/from/join/where/group/having,
// ordered list for ORDER BY, exact literal values). Throws if either side
// fails to parse.
inline bool equivalent(std::string_view a, std::string_view b) {
  return parse_sql(a) == parse_sql(b);
}

inline HardnessLevel hardness(std::string_view sql) { return hardness(parse_sql(sql)); }

}  // namespace beamjudge::sql
