#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beamjudge/beamset.hpp"
#include "beamjudge/error.hpp"

namespace beamjudge {

// Minimum score margin a candidate needs over the one directly above it to be
// promoted. Non-negative; +infinity disables re-ranking entirely.
class Threshold {
 public:
  constexpr Threshold() = default;
  explicit Threshold(double value) : value_(value) {
    if (std::isnan(value) || value < 0.0)
      throw InvalidInput("threshold must be >= 0 or +inf, got " + std::to_string(value));
  }

  static Threshold infinity() { return Threshold(std::numeric_limits<double>::infinity()); }

  double value() const noexcept { return value_; }
  bool is_infinite() const noexcept { return std::isinf(value_); }

  friend bool operator==(Threshold a, Threshold b) { return a.value_ == b.value_; }
  friend auto operator<=>(Threshold a, Threshold b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

enum class RerankMode {
  single_pass,     // exactly one backward pass
  until_fixpoint,  // repeat passes until nothing moves (bounded by list length)
};

struct RerankConfig {
  Threshold threshold;
  RerankMode mode = RerankMode::single_pass;
};

namespace detail {

inline void validate_scores(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("cannot re-rank an empty candidate list");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i]))
      throw InvalidInput("score " + std::to_string(i) + " is not finite");
  }
}

// One backward pass over positions len-1 .. 1 (top of beam at 0). Returns
// whether anything moved.
inline bool backward_pass(std::span<const double> scores, std::vector<std::size_t>& order, double t) {
  bool moved = false;
  for (std::size_t i = order.size() - 1; i >= 1; --i) {
    if (scores[order[i]] >= scores[order[i - 1]] + t) {
      std::swap(order[i], order[i - 1]);
      moved = true;
    }
  }
  return moved;
}

}  // namespace detail

// Threshold-gated promotion pass. For i from len-1 down to 1 the candidate at
// position i swaps with the one above it when score[i] >= score[i-1] + t; a
// promoted candidate keeps being compared upward as the pass continues.
// Returns original indices in their new order.
inline std::vector<std::size_t> rerank(std::span<const double> scores, Threshold t,
                                       RerankMode mode = RerankMode::single_pass) {
  detail::validate_scores(scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (t.is_infinite() || order.size() == 1) return order;

  if (mode == RerankMode::single_pass) {
    detail::backward_pass(scores, order, t.value());
    return order;
  }
  // With t = 0 equal scores swap forever, so the number of passes is capped.
  for (std::size_t pass = 0; pass < order.size(); ++pass) {
    if (!detail::backward_pass(scores, order, t.value())) break;
  }
  return order;
}

inline BeamEntry rerank_entry(const BeamEntry& entry, const RerankConfig& config) {
  if (entry.candidates.empty()) throw InvalidInput("entry " + entry.id + " has no candidates");
  std::vector<double> scores;
  scores.reserve(entry.candidates.size());
  for (std::size_t i = 0; i < entry.candidates.size(); ++i) {
    const auto& score = entry.candidates[i].score;
    if (!score) {
      throw InvalidInput("entry " + entry.id + ": candidate " + std::to_string(i) + " has no score");
    }
    scores.push_back(*score);
  }
  const auto order = rerank(scores, config.threshold, config.mode);
  BeamEntry out = entry;
  for (std::size_t k = 0; k < order.size(); ++k) out.candidates[k] = entry.candidates[order[k]];
  return out;
}

}  // namespace beamjudge
