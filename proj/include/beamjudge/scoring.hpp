#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beamjudge/beamset.hpp"
#include "beamjudge/detail/parallel.hpp"
#include "beamjudge/error.hpp"

namespace beamjudge {

// One (utterance, query) pair to be judged. schema is only sent when the
// schema-inclusion ablation is enabled.
struct ScoreRequest {
  std::string utterance;
  std::string sql;
  std::optional<std::string> schema;
};

// Probability in [0,1] that the query is correct for the utterance.
struct ScoreResponse {
  double score = 0.0;
};

// Scoring contract: responses are positionally aligned with requests and
// every score lies in [0,1]. Implementations must tolerate concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> batch) = 0;
  virtual std::string name() const = 0;
};

inline constexpr std::string_view kLexicalKeywordSet = "lexical-keywords/v1";

// Reserved words removed from the SQL side before comparing token sets.
inline const std::set<std::string, std::less<>>& lexical_keywords() {
  static const std::set<std::string, std::less<>> kKeywords = {
      "select", "from",  "where",  "group",   "by",    "order", "having",   "limit",
      "union",  "except", "intersect", "join", "inner", "on",    "as",       "and",
      "or",     "not",   "in",     "like",    "between", "exists", "distinct", "asc",
      "desc",   "count", "sum",    "avg",     "min",   "max",   "is",       "null",
      "all",    "left",  "right",  "outer",   "cross", "natural",
  };
  return kKeywords;
}

// Lower-cased maximal runs of ASCII letters and digits.
inline std::set<std::string> alnum_tokens(std::string_view text) {
  std::set<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.insert(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.insert(std::move(cur));
  return out;
}

// Jaccard similarity of the utterance tokens and the non-keyword SQL tokens.
// 0 when both sets are empty.
inline double lexical_overlap_score(std::string_view utterance, std::string_view sql) {
  const auto a = alnum_tokens(utterance);
  auto b = alnum_tokens(sql);
  std::erase_if(b, [](const std::string& t) { return lexical_keywords().count(t) > 0; });

  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  const std::size_t unioned = a.size() + b.size() - common;
  if (unioned == 0) return 0.0;
  return static_cast<double>(common) / static_cast<double>(unioned);
}

class LexicalScorer final : public Scorer {
 public:
  std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> batch) override {
    std::vector<ScoreResponse> out;
    out.reserve(batch.size());
    for (const auto& r : batch) out.push_back({lexical_overlap_score(r.utterance, r.sql)});
    return out;
  }
  std::string name() const override { return std::string("lexical:") + std::string(kLexicalKeywordSet); }
};

// "singer: singer_id, name | concert: concert_id, year"
inline std::string serialize_schema(const std::vector<TableSchema>& tables) {
  std::string out;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (i) out += " | ";
    out += tables[i].table + ":";
    for (std::size_t j = 0; j < tables[i].columns.size(); ++j) {
      out += j ? ", " : " ";
      out += tables[i].columns[j];
    }
  }
  return out;
}

struct ScoringOptions {
  bool include_schema = false;
  std::size_t parallelism = 1;  // entries scored concurrently
};

inline std::vector<ScoreRequest> score_requests(const BeamEntry& entry, bool include_schema) {
  std::optional<std::string> schema;
  if (include_schema && entry.schema_tables) schema = serialize_schema(*entry.schema_tables);
  std::vector<ScoreRequest> batch;
  batch.reserve(entry.candidates.size());
  for (const auto& c : entry.candidates) batch.push_back({entry.utterance, c.sql, schema});
  return batch;
}

// Scores every candidate, one batch per entry. All-or-nothing: on any
// failure a ScoringError naming the entry (and candidate, when known) is
// thrown and no partial result escapes.
inline BeamSet attach_scores(const BeamSet& set, Scorer& scorer, const ScoringOptions& options = {}) {
  BeamSet out = set;
  detail::parallel_for(out.entries.size(), options.parallelism, [&](std::size_t e) {
    BeamEntry& entry = out.entries[e];
    if (entry.candidates.empty()) throw ScoringError(entry.id, std::nullopt, "no candidates", false);
    const auto batch = score_requests(entry, options.include_schema);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].utterance.empty() || batch[i].sql.empty())
        throw ScoringError(entry.id, i, "utterance and sql must be non-empty", false);
    }

    std::vector<ScoreResponse> responses;
    try {
      responses = scorer.score_batch(batch);
    } catch (const TransportError& err) {
      throw ScoringError(entry.id, std::nullopt, err.what(), true);
    } catch (const ProtocolError& err) {
      throw ScoringError(entry.id, std::nullopt, err.what(), true);
    } catch (const Error& err) {
      throw ScoringError(entry.id, std::nullopt, err.what(), false);
    }
    if (responses.size() != batch.size()) {
      throw ScoringError(entry.id, std::nullopt,
                         "scorer returned " + std::to_string(responses.size()) + " scores for " +
                             std::to_string(batch.size()) + " candidates",
                         true);
    }
    for (std::size_t i = 0; i < responses.size(); ++i) {
      const double s = responses[i].score;
      if (!(s >= 0.0 && s <= 1.0))
        throw ScoringError(entry.id, i, "score out of range: " + std::to_string(s), true);
      entry.candidates[i].score = s;
    }
  });
  return out;
}

}  // namespace beamjudge
