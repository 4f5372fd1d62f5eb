#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "beamjudge/beamset.hpp"
#include "beamjudge/detail/parallel.hpp"
#include "beamjudge/error.hpp"
#include "beamjudge/rerank.hpp"
#include "beamjudge/sqlcanon.hpp"

namespace beamjudge {

using sql::HardnessLevel;

// ---- per-entry primitives -------------------------------------------------------

inline void require_labeled(const BeamEntry& entry) {
  if (entry.candidates.empty()) throw InvalidInput("entry " + entry.id + " has no candidates");
  if (!is_labeled(entry)) throw InvalidInput("entry " + entry.id + " is not labeled");
}

inline bool is_beam_hit(const BeamEntry& entry) {
  require_labeled(entry);
  return std::any_of(entry.candidates.begin(), entry.candidates.end(),
                     [](const Candidate& c) { return *c.is_gold; });
}

// Whether the candidate selected after re-ranking at threshold t is gold.
// t = +inf selects the generator's own top candidate and needs no scores.
inline bool is_correct(const BeamEntry& entry, Threshold t) {
  require_labeled(entry);
  if (t.is_infinite()) return *entry.candidates.front().is_gold;
  std::vector<double> scores;
  scores.reserve(entry.candidates.size());
  for (std::size_t i = 0; i < entry.candidates.size(); ++i) {
    const auto& s = entry.candidates[i].score;
    if (!s) throw InvalidInput("entry " + entry.id + ": candidate " + std::to_string(i) + " has no score");
    scores.push_back(*s);
  }
  const auto order = rerank(scores, t);
  return *entry.candidates[order.front()].is_gold;
}

// ---- set-level metrics ----------------------------------------------------------

inline double beam_hit_rate(const BeamSet& set) {
  if (set.entries.empty()) throw InvalidInput("beam-hit rate of an empty beamset");
  std::size_t hits = 0;
  for (const auto& e : set.entries) hits += is_beam_hit(e) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(set.entries.size());
}

inline std::size_t correct_count(const BeamSet& set, Threshold t) {
  std::size_t correct = 0;
  for (const auto& e : set.entries) correct += is_correct(e, t) ? 1 : 0;
  return correct;
}

inline double accuracy(const BeamSet& set, Threshold t) {
  if (set.entries.empty()) throw InvalidInput("accuracy of an empty beamset");
  return static_cast<double>(correct_count(set, t)) / static_cast<double>(set.entries.size());
}

// Hardness of each entry's gold query; nullopt where the gold does not parse.
inline std::vector<std::optional<HardnessLevel>> gold_hardness(const BeamSet& set) {
  std::vector<std::optional<HardnessLevel>> out;
  out.reserve(set.entries.size());
  for (const auto& e : set.entries) {
    try {
      out.push_back(sql::hardness(sql::parse_sql(e.gold_sql)));
    } catch (const Error&) {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

struct HardnessBucket {
  std::size_t count = 0;
  std::size_t correct = 0;

  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(count); }
};

// Only non-empty buckets appear. Entries whose gold query does not parse are
// excluded and listed.
struct HardnessBreakdown {
  std::map<HardnessLevel, HardnessBucket> buckets;
  std::vector<std::string> excluded_ids;

  std::map<HardnessLevel, double> accuracy() const {
    std::map<HardnessLevel, double> out;
    for (const auto& [level, bucket] : buckets) out[level] = bucket.accuracy();
    return out;
  }
};

inline HardnessBreakdown accuracy_by_hardness(const BeamSet& set, Threshold t,
                                              Diagnostics* diag = nullptr) {
  HardnessBreakdown out;
  const auto levels = gold_hardness(set);
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    const auto& e = set.entries[i];
    if (!levels[i]) {
      out.excluded_ids.push_back(e.id);
      if (diag) diag->warn("entry " + e.id + ": gold query does not parse; excluded from hardness buckets");
      continue;
    }
    auto& bucket = out.buckets[*levels[i]];
    ++bucket.count;
    bucket.correct += is_correct(e, t) ? 1 : 0;
  }
  return out;
}

// ---- reports -----------------------------------------------------------------------

inline constexpr std::string_view kReportSchemaVersion = "beamjudge-report/v1";

struct EvalReport {
  double overall_accuracy = 0.0;
  std::map<HardnessLevel, double> per_hardness_accuracy;
  std::map<HardnessLevel, std::size_t> per_hardness_count;
  double beam_hit_rate = 0.0;
  std::size_t entry_count = 0;
  std::size_t correct_count = 0;
  std::size_t excluded_from_hardness = 0;
  Threshold threshold_used;
  std::string rule_set_version{sql::kHardnessRuleSet};
  std::string value_matching = "exact";
};

inline EvalReport evaluate(const BeamSet& set, Threshold t, Diagnostics* diag = nullptr) {
  EvalReport r;
  r.entry_count = set.entries.size();
  r.correct_count = correct_count(set, t);
  r.overall_accuracy = accuracy(set, t);
  r.beam_hit_rate = beam_hit_rate(set);
  r.threshold_used = t;
  const auto breakdown = accuracy_by_hardness(set, t, diag);
  for (const auto& [level, bucket] : breakdown.buckets) {
    r.per_hardness_accuracy[level] = bucket.accuracy();
    r.per_hardness_count[level] = bucket.count;
  }
  r.excluded_from_hardness = breakdown.excluded_ids.size();
  return r;
}

// ---- threshold tuning ------------------------------------------------------------

struct ThresholdPoint {
  Threshold threshold;
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const { return static_cast<double>(correct) / static_cast<double>(total); }
};

struct ThresholdCurve {
  std::vector<ThresholdPoint> points;  // strictly increasing thresholds
  Threshold best_threshold;
};

inline void validate_grid(const std::vector<Threshold>& grid) {
  if (grid.empty()) throw InvalidInput("threshold grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i - 1] < grid[i])) throw InvalidInput("threshold grid must be strictly increasing");
  }
  if (!grid.back().is_infinite()) throw InvalidInput("threshold grid must include +inf");
}

// Best point by accuracy; ties go to the larger threshold.
inline Threshold best_of(const std::vector<ThresholdPoint>& points) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].correct >= points[best].correct) best = i;
  }
  return points[best].threshold;
}

// Evaluates accuracy at every grid point on the tuning split only.
inline ThresholdCurve tune_threshold(const BeamSet& tune_set, const std::vector<Threshold>& grid,
                                     std::size_t parallelism = 1) {
  validate_grid(grid);
  if (tune_set.entries.empty()) throw InvalidInput("tuning split is empty");
  ThresholdCurve curve;
  curve.points.resize(grid.size());
  detail::parallel_for(grid.size(), parallelism, [&](std::size_t i) {
    curve.points[i] = {grid[i], correct_count(tune_set, grid[i]), tune_set.entries.size()};
  });
  curve.best_threshold = best_of(curve.points);
  return curve;
}

// One curve per non-empty hardness bucket, computed over the same grid.
inline std::map<HardnessLevel, ThresholdCurve> tune_by_hardness(const BeamSet& set,
                                                                const std::vector<Threshold>& grid,
                                                                Diagnostics* diag = nullptr) {
  validate_grid(grid);
  const auto levels = gold_hardness(set);
  std::map<HardnessLevel, BeamSet> split;
  for (std::size_t i = 0; i < set.entries.size(); ++i) {
    if (!levels[i]) {
      if (diag) diag->warn("entry " + set.entries[i].id + ": gold query does not parse; excluded from hardness curves");
      continue;
    }
    split[*levels[i]].entries.push_back(set.entries[i]);
  }
  std::map<HardnessLevel, ThresholdCurve> out;
  for (const auto& [level, subset] : split) out[level] = tune_threshold(subset, grid);
  return out;
}

// Thresholds from 0.00 to 1.00 in steps of 0.01, then +inf.
inline std::vector<Threshold> default_grid() {
  std::vector<Threshold> grid;
  for (int i = 0; i <= 100; ++i) grid.emplace_back(i / 100.0);
  grid.push_back(Threshold::infinity());
  return grid;
}

// Parses a comma-separated list of `start:stop:step` ranges, single values
// and the literal `inf`. The result is sorted, duplicate-free and always ends
// with +inf.
inline std::vector<Threshold> parse_grid(std::string_view text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw InvalidInput("bad number in threshold grid: '" + s + "'");
    }
  };
  auto snap = [](double v) { return std::round(v * 1e9) / 1e9; };

  std::vector<double> values;
  std::stringstream ss{std::string(text)};
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    piece.erase(0, piece.find_first_not_of(" \t"));
    piece.erase(piece.find_last_not_of(" \t") + 1);
    if (piece.empty()) continue;
    if (piece == "inf" || piece == "+inf") {
      values.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    const auto c1 = piece.find(':');
    if (c1 == std::string::npos) {
      values.push_back(snap(number(piece)));
      continue;
    }
    const auto c2 = piece.find(':', c1 + 1);
    if (c2 == std::string::npos || piece.find(':', c2 + 1) != std::string::npos)
      throw InvalidInput("threshold range must be start:stop:step, got '" + piece + "'");
    const double start = number(piece.substr(0, c1));
    const double stop = number(piece.substr(c1 + 1, c2 - c1 - 1));
    const double step = number(piece.substr(c2 + 1));
    if (!(step > 0.0) || stop < start) throw InvalidInput("empty or invalid threshold range '" + piece + "'");
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    if (count > 1000000) throw InvalidInput("threshold range '" + piece + "' is too large");
    for (long k = 0; k <= count; ++k) values.push_back(snap(start + static_cast<double>(k) * step));
  }
  values.push_back(std::numeric_limits<double>::infinity());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<Threshold> grid;
  grid.reserve(values.size());
  for (double v : values) grid.emplace_back(v);  // rejects negatives
  return grid;
}

}  // namespace beamjudge
