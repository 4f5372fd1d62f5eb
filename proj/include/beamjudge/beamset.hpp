#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "beamjudge/error.hpp"
#include "beamjudge/sqlcanon.hpp"

namespace beamjudge {

struct TableSchema {
  std::string table;
  std::vector<std::string> columns;

  bool operator==(const TableSchema&) const = default;
};

// One beam hypothesis. Log-probabilities are natural logs.
struct Candidate {
  std::string sql;
  std::optional<std::vector<double>> token_log_probs;
  double generation_log_prob = 0.0;
  std::optional<double> score;    // re-ranker probability in [0,1]
  std::optional<bool> is_gold;

  bool operator==(const Candidate&) const = default;
};

struct BeamEntry {
  std::string id;
  std::string utterance;
  std::string schema_id;
  std::optional<std::vector<TableSchema>> schema_tables;
  std::string gold_sql;
  std::vector<Candidate> candidates;  // non-increasing generation_log_prob

  bool operator==(const BeamEntry&) const = default;
};

struct BeamSet {
  std::vector<BeamEntry> entries;
  std::string generator_name;
  std::size_t beam_size = 1;
};

// Collects non-fatal warnings (re-sorted beams, fallback labeling, ...).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
};

// Sum of per-token log-probabilities, i.e. the log of the sequence
// probability. Compensated summation keeps long beams accurate.
inline double generation_log_prob(std::span<const double> token_log_probs) {
  if (token_log_probs.empty()) throw InvalidInput("token_log_probs is empty");
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t i = 0; i < token_log_probs.size(); ++i) {
    const double x = token_log_probs[i];
    if (!(x <= 0.0)) {
      throw InvalidInput("token log-probability " + std::to_string(i) +
                         " is not <= 0: " + std::to_string(x));
    }
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      compensation += (sum - t) + x;
    } else {
      compensation += (x - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

inline const Candidate& top_candidate(const BeamEntry& entry) {
  if (entry.candidates.empty()) throw InvalidInput("entry " + entry.id + " has no candidates");
  return entry.candidates.front();
}

// ---- labeling ---------------------------------------------------------------

struct LabelOutcome {
  BeamEntry entry;
  bool labeled = false;             // false when the gold query does not parse
  std::size_t parse_failures = 0;   // candidates that failed to parse
  std::string error;                // gold parse error, when !labeled
};

// Marks each candidate is_gold = equiv(candidate.sql, gold_sql). equiv may
// throw for unparseable candidates; those are labeled not-gold and counted.
// If the gold query itself does not parse the entry is returned unlabeled.
template <class Equivalence>
LabelOutcome label_candidates(const BeamEntry& entry, Equivalence&& equiv) {
  LabelOutcome out{entry, false, 0, {}};
  try {
    (void)sql::parse_sql(entry.gold_sql);
  } catch (const Error& e) {
    out.error = "gold query of entry " + entry.id + " does not parse: " + e.what();
    return out;
  }
  for (auto& c : out.entry.candidates) {
    try {
      c.is_gold = static_cast<bool>(equiv(c.sql, entry.gold_sql));
    } catch (const Error&) {
      c.is_gold = false;
      ++out.parse_failures;
    }
  }
  out.labeled = true;
  return out;
}

// Labels with logical-form equivalence, parsing the gold query once.
inline LabelOutcome label_candidates(const BeamEntry& entry) {
  std::optional<sql::CanonicalQuery> gold;
  try {
    gold = sql::parse_sql(entry.gold_sql);
  } catch (const Error&) {
  }
  return label_candidates(entry, [&gold](std::string_view candidate, std::string_view) {
    return sql::parse_sql(candidate) == *gold;
  });
}

// Whitespace- and case-insensitive string comparison, used to label entries
// whose gold query cannot be parsed.
inline std::string normalize_sql_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  while (!out.empty() && out.back() == ';') out.pop_back();
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline BeamEntry label_by_exact_match(const BeamEntry& entry) {
  BeamEntry out = entry;
  const std::string gold = normalize_sql_text(entry.gold_sql);
  for (auto& c : out.candidates) c.is_gold = normalize_sql_text(c.sql) == gold;
  return out;
}

inline bool is_labeled(const BeamEntry& entry) {
  return std::all_of(entry.candidates.begin(), entry.candidates.end(),
                     [](const Candidate& c) { return c.is_gold.has_value(); });
}

// ---- interchange format -------------------------------------------------------

namespace detail {

using ojson = nlohmann::ordered_json;

inline const ojson& require(const ojson& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) throw LoadError(std::string("missing field ") + field, line);
  return *it;
}

inline std::string require_string(const ojson& obj, const char* field, std::size_t line) {
  const auto& v = require(obj, field, line);
  if (!v.is_string()) throw LoadError(std::string("field ") + field + " must be a string", line);
  return v.get<std::string>();
}

inline double as_number(const ojson& v, const char* field, std::size_t line) {
  if (!v.is_number()) throw LoadError(std::string("field ") + field + " must be a number", line);
  return v.get<double>();
}

inline Candidate parse_candidate(const ojson& obj, std::size_t index, std::size_t line) {
  const std::string where = " (candidate " + std::to_string(index) + ")";
  if (!obj.is_object()) throw LoadError("candidate " + std::to_string(index) + " is not an object", line);
  Candidate c;
  auto sql = obj.find("sql");
  if (sql == obj.end()) throw LoadError("missing field sql" + where, line);
  if (!sql->is_string()) throw LoadError("field sql must be a string" + where, line);
  c.sql = sql->get<std::string>();
  auto log_prob = obj.find("log_prob");
  if (log_prob == obj.end()) throw LoadError("missing field log_prob" + where, line);
  c.generation_log_prob = as_number(*log_prob, "log_prob", line);
  if (!(c.generation_log_prob <= 0.0))
    throw LoadError("log_prob must be <= 0" + where, line);

  if (auto it = obj.find("token_log_probs"); it != obj.end()) {
    if (!it->is_array()) throw LoadError("token_log_probs must be a list" + where, line);
    std::vector<double> tokens;
    for (const auto& t : *it) tokens.push_back(as_number(t, "token_log_probs", line));
    double sum = 0.0;
    try {
      sum = generation_log_prob(tokens);
    } catch (const InvalidInput& e) {
      throw LoadError(std::string(e.what()) + where, line);
    }
    if (std::abs(sum - c.generation_log_prob) > 1e-9)
      throw LoadError("log_prob does not equal the sum of token_log_probs" + where, line);
    c.token_log_probs = std::move(tokens);
  }
  if (auto it = obj.find("score"); it != obj.end()) {
    const double s = as_number(*it, "score", line);
    if (!(s >= 0.0 && s <= 1.0)) throw LoadError("score outside [0,1]" + where, line);
    c.score = s;
  }
  if (auto it = obj.find("is_gold"); it != obj.end()) {
    if (!it->is_boolean()) throw LoadError("field is_gold must be a boolean" + where, line);
    c.is_gold = it->get<bool>();
  }
  return c;
}

inline bool is_sorted_by_log_prob(const std::vector<Candidate>& cs) {
  return std::is_sorted(cs.begin(), cs.end(), [](const Candidate& a, const Candidate& b) {
    return a.generation_log_prob > b.generation_log_prob;
  });
}

}  // namespace detail

// Parses one interchange record. line is used for error messages only.
inline BeamEntry parse_entry(std::string_view text, std::size_t line, Diagnostics* diag = nullptr) {
  detail::ojson obj;
  try {
    obj = detail::ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(std::string("malformed record: ") + e.what(), line);
  }
  if (!obj.is_object()) throw LoadError("malformed record: not a JSON object", line);

  BeamEntry entry;
  entry.id = detail::require_string(obj, "id", line);
  entry.utterance = detail::require_string(obj, "utterance", line);
  entry.schema_id = detail::require_string(obj, "schema_id", line);
  entry.gold_sql = detail::require_string(obj, "gold_sql", line);

  if (auto it = obj.find("schema_tables"); it != obj.end()) {
    if (!it->is_array()) throw LoadError("schema_tables must be a list", line);
    std::vector<TableSchema> tables;
    for (const auto& t : *it) {
      if (!t.is_object()) throw LoadError("schema_tables entries must be objects", line);
      TableSchema ts;
      ts.table = detail::require_string(t, "table", line);
      const auto& cols = detail::require(t, "columns", line);
      if (!cols.is_array()) throw LoadError("columns must be a list", line);
      for (const auto& c : cols) {
        if (!c.is_string()) throw LoadError("column names must be strings", line);
        ts.columns.push_back(c.get<std::string>());
      }
      tables.push_back(std::move(ts));
    }
    entry.schema_tables = std::move(tables);
  }

  const auto& cands = detail::require(obj, "candidates", line);
  if (!cands.is_array()) throw LoadError("candidates must be a list", line);
  for (std::size_t i = 0; i < cands.size(); ++i)
    entry.candidates.push_back(detail::parse_candidate(cands[i], i, line));
  if (entry.candidates.empty()) throw LoadError("entry " + entry.id + " has no candidates", line);

  if (!detail::is_sorted_by_log_prob(entry.candidates)) {
    std::stable_sort(entry.candidates.begin(), entry.candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                       return a.generation_log_prob > b.generation_log_prob;
                     });
    if (diag) {
      diag->warn("entry " + entry.id + " at line " + std::to_string(line) +
                 ": candidates re-sorted by log_prob");
    }
  }
  return entry;
}

// Canonical single-line JSON form of an entry (no trailing newline).
inline std::string serialize_entry(const BeamEntry& entry) {
  detail::ojson obj;
  obj["id"] = entry.id;
  obj["utterance"] = entry.utterance;
  obj["schema_id"] = entry.schema_id;
  if (entry.schema_tables) {
    auto tables = detail::ojson::array();
    for (const auto& t : *entry.schema_tables) {
      detail::ojson to;
      to["table"] = t.table;
      to["columns"] = t.columns;
      tables.push_back(std::move(to));
    }
    obj["schema_tables"] = std::move(tables);
  }
  obj["gold_sql"] = entry.gold_sql;
  auto cands = detail::ojson::array();
  for (const auto& c : entry.candidates) {
    detail::ojson co;
    co["sql"] = c.sql;
    if (c.token_log_probs) co["token_log_probs"] = *c.token_log_probs;
    co["log_prob"] = c.generation_log_prob;
    if (c.score) co["score"] = *c.score;
    if (c.is_gold) co["is_gold"] = *c.is_gold;
    cands.push_back(std::move(co));
  }
  obj["candidates"] = std::move(cands);
  return obj.dump();
}

struct LoadOptions {
  std::string generator_name;
  std::size_t beam_size = 0;  // 0: infer from the longest candidate list
};

inline BeamSet read_beamset(std::istream& in, const LoadOptions& options = {},
                            Diagnostics* diag = nullptr) {
  BeamSet set;
  set.generator_name = options.generator_name;
  std::string line;
  std::size_t line_no = 0;
  std::size_t longest = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    BeamEntry entry = parse_entry(line, line_no, diag);
    if (options.beam_size != 0 && entry.candidates.size() > options.beam_size) {
      throw LoadError("entry " + entry.id + " has " + std::to_string(entry.candidates.size()) +
                          " candidates, more than beam size " + std::to_string(options.beam_size),
                      line_no);
    }
    longest = std::max(longest, entry.candidates.size());
    set.entries.push_back(std::move(entry));
  }
  set.beam_size = options.beam_size != 0 ? options.beam_size : std::max<std::size_t>(longest, 1);
  return set;
}

inline BeamSet load_beamset(const std::string& path, const LoadOptions& options = {},
                            Diagnostics* diag = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_beamset(in, options, diag);
}

inline void write_beamset(std::ostream& out, const BeamSet& set) {
  for (const auto& e : set.entries) out << serialize_entry(e) << '\n';
}

inline void save_beamset(const BeamSet& set, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  write_beamset(out, set);
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

// ---- splitting --------------------------------------------------------------

// Seeded Fisher-Yates shuffle, then the first ceil(ratio * n) entries go to
// the tuning split and the rest to the evaluation split. The shuffle draws
// from mt19937_64 with rejection sampling so results do not depend on the
// standard library's distribution implementations.
inline std::pair<BeamSet, BeamSet> split_for_tuning(const BeamSet& set, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidInput("split ratio must lie in (0,1)");
  if (set.entries.empty()) throw InvalidInput("cannot split an empty beamset");

  const std::size_t n = set.entries.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    const std::uint64_t bound = i + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(order[i], order[static_cast<std::size_t>(r % bound)]);
  }

  const auto tune_count = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-12));
  BeamSet tune{{}, set.generator_name, set.beam_size};
  BeamSet eval{{}, set.generator_name, set.beam_size};
  for (std::size_t k = 0; k < n; ++k)
    (k < tune_count ? tune : eval).entries.push_back(set.entries[order[k]]);
  return {std::move(tune), std::move(eval)};
}

}  // namespace beamjudge
