// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "beamjudge/beamset.hpp"
#include "beamjudge/cli.hpp"
#include "beamjudge/evaltune.hpp"
#include "beamjudge/rerank.hpp"
#include "beamjudge/scoring.hpp"
#include "beamjudge/sqlcanon.hpp"
#include "support/oracles.hpp"
#include "support/query_gen.hpp"
#include "support/synthetic.hpp"

namespace bj = beamjudge;
namespace fs = std::filesystem;
using bj::Threshold;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pinned tolerances and budgets.
constexpr int kRerankInstances = 1000;
constexpr double kRerankBudgetSeconds = 5.0;
constexpr int kShiftInstances = 500;
constexpr int kUpperBoundSets = 100;
constexpr double kOracleThreshold = 0.01;
constexpr std::size_t kGainEntries = 200;
constexpr double kGainFloor = 0.60;
constexpr int kFuzzCases = 1000;
constexpr int kLogProbSequences = 1000;
constexpr double kLogProbRelTol = 1e-12;
constexpr int kTunerFixtures = 100;

const std::string kData = BEAMJUDGE_TEST_DATA;

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

int failures = 0;

void report(const char* name, const Check& c, const std::string& summary) {
  std::printf("%s  %-34s %s\n", c.ok ? "PASS" : "FAIL", name, c.ok ? summary.c_str() : c.detail.c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

Threshold threshold_of(double t) { return std::isinf(t) ? Threshold::infinity() : Threshold(t); }

std::vector<double> scores_of(const bj::BeamEntry& e) {
  std::vector<double> s;
  for (const auto& c : e.candidates) s.push_back(*c.score);
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_tsv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, '\t')) {
      std::string unescaped;
      for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] == '\\' && i + 1 < col.size() && (col[i + 1] == 'n' || col[i + 1] == 't')) {
          unescaped += col[++i] == 'n' ? '\n' : '\t';
        } else {
          unescaped += col[i];
        }
      }
      cols.push_back(unescaped);
    }
    rows.push_back(cols);
  }
  return rows;
}

// Upper-cases and re-spaces everything outside string literals.
std::string surface_variant(const std::string& sql) {
  std::string out;
  char quote = 0;
  for (char c : sql) {
    if (quote) {
      out += c;
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
      out += c;
    } else if (c == ' ') {
      out += "\n   ";
    } else {
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void rerank_oracle() {
  Check c;
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ts[] = {0.0, kInf, 0.01, 0.05, 0.1, 0.25, 0.5, 0.68, 1.0};
  const auto start = std::chrono::steady_clock::now();
  for (int k = 0; k < kRerankInstances && c.ok; ++k) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& x : s) x = k % 4 == 0 ? std::round(u(rng) * 5) / 5 : u(rng);
    const double t = ts[k % 9];
    if (bj::rerank(s, threshold_of(t)) != bj::testing::step_simulator(s, t))
      c.fail("instance " + std::to_string(k) + " differs from the step simulator");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= kRerankBudgetSeconds) c.fail("took " + std::to_string(secs) + " s");
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d instances, %.3f s", kRerankInstances, secs);
  report("rerank-oracle-equivalence", c, buf);
}

void threshold_semantics() {
  Check c;
  const std::vector<std::vector<double>> fixtures = {
      {0.2, 0.9, 0.5}, {0.1, 0.2, 0.95}, {0.5, 0.0, 0.4, 0.45}, {0.4, 0.4, 0.4, 0.4}, {0.7}};
  for (const auto& f : fixtures) {
    std::vector<std::size_t> id(f.size());
    for (std::size_t i = 0; i < id.size(); ++i) id[i] = i;
    if (bj::rerank(f, Threshold::infinity()) != id) c.fail("t=inf is not the identity on a fixture");
  }
  std::mt19937_64 rng(2002);
  for (int k = 0; k < 50; ++k) {
    const auto set = bj::testing::random_scored_set(rng, 40, 10);
    std::size_t top = 0;
    for (const auto& e : set.entries) {
      top += *e.candidates.front().is_gold;
      const auto s = scores_of(e);
      const auto order = bj::rerank(s, Threshold::infinity());
      for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] != i) c.fail("t=inf moved a candidate");
    }
    if (bj::accuracy(set, Threshold::infinity()) != static_cast<double>(top) / 40.0)
      c.fail("accuracy at t=inf differs from base top-1 accuracy");
  }
  // Dyadic scores, thresholds and shifts keep the arithmetic exact.
  std::uniform_int_distribution<int> len(1, 40), step(0, 128), tstep(0, 32), shift(-256, 256);
  for (int k = 0; k < kShiftInstances; ++k) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& x : s) x = step(rng) / 128.0;
    const Threshold t(tstep(rng) / 128.0);
    const double d = shift(rng) / 128.0;
    auto moved = s;
    for (auto& x : moved) x += d;
    if (bj::rerank(s, t) != bj::rerank(moved, t)) c.fail("shift changed the permutation at instance " + std::to_string(k));
  }
  report("threshold-semantics", c, "identity at inf, base accuracy at inf, " + std::to_string(kShiftInstances) + " shift instances");
}

void upper_bound_law() {
  Check c;
  std::mt19937_64 rng(3003);
  const auto grid = bj::default_grid();
  std::size_t comparisons = 0;
  for (int k = 0; k < kUpperBoundSets; ++k) {
    const auto set = bj::testing::random_scored_set(rng, 30, 12);
    const double hit = bj::beam_hit_rate(set);
    for (const auto& t : grid) {
      ++comparisons;
      if (bj::accuracy(set, t) > hit) c.fail("accuracy above beam-hit rate in set " + std::to_string(k));
    }
    // Oracle scorer: gold candidates get 1.0, everything else stays below 1 - t.
    auto oracle = set;
    std::uniform_real_distribution<double> low(0.0, 1.0 - kOracleThreshold - 1e-6);
    for (auto& e : oracle.entries)
      for (auto& cand : e.candidates) cand.score = *cand.is_gold ? 1.0 : low(rng);
    if (bj::accuracy(oracle, Threshold(kOracleThreshold)) != bj::beam_hit_rate(oracle))
      c.fail("oracle scorer accuracy differs from beam-hit rate in set " + std::to_string(k));
  }
  report("upper-bound-law", c, std::to_string(comparisons) + " grid comparisons, oracle scorer exact");
}

void synthetic_gain() {
  Check c;
  auto scenario = bj::testing::gain_scenario(kGainEntries, 4004);
  bj::BeamSet labeled = scenario.unlabeled;
  for (auto& e : labeled.entries) {
    auto out = bj::label_candidates(e);
    if (!out.labeled) c.fail("gold of " + e.id + " did not parse");
    e = out.entry;
  }
  const auto scored = bj::attach_scores(labeled, scenario.scorer);
  const double all_base = bj::accuracy(scored, Threshold::infinity());
  const double all_hit = bj::beam_hit_rate(scored);
  if (std::abs(all_base - 0.5) > 1e-12 || std::abs(all_hit - 0.75) > 1e-12)
    c.fail("fixture composition is off: base " + std::to_string(all_base) + ", beam-hit " + std::to_string(all_hit));

  auto [tune, eval] = bj::split_for_tuning(scored, 0.5, 7);
  const auto curve = bj::tune_threshold(tune, bj::default_grid());
  const double base = bj::accuracy(eval, Threshold::infinity());
  const double tuned = bj::accuracy(eval, curve.best_threshold);
  if (!(tuned > base)) c.fail("tuned accuracy " + std::to_string(tuned) + " not above base " + std::to_string(base));
  if (tuned < kGainFloor) c.fail("tuned accuracy " + std::to_string(tuned) + " below floor");
  char buf[160];
  std::snprintf(buf, sizeof buf, "eval base %.3f -> %.3f at t=%s (floor %.2f)", base, tuned,
                bj::format_threshold(curve.best_threshold).c_str(), kGainFloor);
  report("synthetic-reranking-gain", c, buf);
}

void equivalence_suite() {
  Check c;
  const auto rows = read_tsv(kData + "/equivalence_pairs.tsv");
  if (rows.size() != 40) c.fail("expected 40 annotated pairs, found " + std::to_string(rows.size()));
  std::size_t agree = 0;
  for (const auto& r : rows) {
    bool got = false;
    try {
      got = bj::sql::equivalent(r[2], r[3]);
    } catch (const bj::Error& e) {
      c.fail("pair did not parse: " + r[2] + " | " + r[3] + ": " + e.what());
      continue;
    }
    if (got == (r[0] == "1")) {
      ++agree;
    } else {
      c.fail("disagreement (" + r[1] + "): " + r[2] + " | " + r[3]);
    }
  }

  bj::testing::QueryGenerator gen(5005);
  std::vector<std::string> pool;
  std::size_t violations = 0;
  for (int k = 0; k < kFuzzCases; ++k) {
    const auto q = gen.query();
    const std::string a = gen.render(q, {});
    const std::string b = gen.render(q, {true, true, true, gen.pick(2) == 0});
    const bool ab = bj::sql::equivalent(a, b);
    const bool ba = bj::sql::equivalent(b, a);
    if (!bj::sql::equivalent(a, a) || !bj::sql::equivalent(b, b)) ++violations;
    if (ab != ba || !ab) ++violations;
    if (!pool.empty()) {
      const auto& other = pool[static_cast<std::size_t>(gen.pick(static_cast<int>(pool.size())))];
      if (bj::sql::equivalent(a, other) != bj::sql::equivalent(other, a)) ++violations;
    }
    pool.push_back(a);
  }
  if (violations) c.fail(std::to_string(violations) + " reflexivity/symmetry violations");
  report("sql-equivalence-suite", c,
         std::to_string(agree) + "/" + std::to_string(rows.size()) + " pairs, " + std::to_string(kFuzzCases) +
             " fuzz cases, 0 violations");
}

void hardness_table() {
  Check c;
  using bj::sql::HardnessLevel;
  const std::vector<std::pair<std::string, HardnessLevel>> worked = {
      {"SELECT count(*) FROM singer", HardnessLevel::easy},
      {"SELECT name FROM singer WHERE age > 20 ORDER BY age LIMIT 1", HardnessLevel::medium},
      {"SELECT a FROM t WHERE x IN (SELECT x FROM s)", HardnessLevel::hard},
      {"SELECT name FROM t WHERE id IN (SELECT id FROM s WHERE x=1 AND y=2)", HardnessLevel::extra},
  };
  for (const auto& [sql, level] : worked)
    if (bj::sql::hardness(sql) != level) c.fail("worked example misclassified: " + sql);

  const auto rows = read_tsv(kData + "/hardness_fixture.tsv");
  if (rows.size() != 20) c.fail("expected 20 fixture queries, found " + std::to_string(rows.size()));
  for (const auto& r : rows) {
    const auto q = bj::sql::parse_sql(r[3]);
    const auto counts = bj::sql::hardness_counts(q);
    if (std::to_string(counts.component1) != r[1] || std::to_string(counts.component2) != r[2])
      c.fail("component counts differ for: " + r[3]);
    if (bj::sql::to_string(bj::sql::classify(counts)) != r[0]) c.fail("misclassified: " + r[3]);
    const std::string variant = surface_variant(r[3]);
    if (!bj::sql::equivalent(variant, r[3]) || bj::sql::hardness(variant) != bj::sql::hardness(q))
      c.fail("surface variant classified differently: " + r[3]);
  }
  bj::testing::QueryGenerator gen(6006);
  for (int k = 0; k < 300; ++k) {
    const auto q = gen.query();
    const std::string a = gen.render(q, {}), b = gen.render(q, {true, true, true, true});
    if (bj::sql::hardness(a) != bj::sql::hardness(b)) c.fail("equivalent strings classified differently: " + a);
  }
  report("hardness-rule-table", c, "4 worked examples, " + std::to_string(rows.size()) + " fixture queries");
}

void log_prob_bookkeeping() {
  Check c;
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> p(0.01, 1.0);
  std::uniform_int_distribution<int> len(1, 100);
  double worst = 0.0;
  for (int k = 0; k < kLogProbSequences; ++k) {
    std::vector<double> probs(static_cast<std::size_t>(len(rng)));
    for (auto& x : probs) x = p(rng);
    std::vector<double> logs;
    for (double x : probs) logs.push_back(std::log(x));
    const double direct = bj::testing::direct_product(probs);
    const double rel = std::abs(std::exp(bj::generation_log_prob(logs)) - direct) / direct;
    worst = std::max(worst, rel);
  }
  if (worst > kLogProbRelTol) c.fail("worst relative error " + std::to_string(worst));
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d sequences, worst relative error %.2e", kLogProbSequences, worst);
  report("generation-log-prob", c, buf);
}

void tuner_oracle() {
  Check c;
  std::mt19937_64 rng(8008);
  const auto grid = bj::parse_grid("0:1:0.02");
  for (int k = 0; k < kTunerFixtures; ++k) {
    const auto set = bj::testing::random_scored_set(rng, 30, 8);
    auto [tune, eval] = bj::split_for_tuning(set, 0.5, static_cast<std::uint64_t>(k));
    try {
      bj::cli::verify_partition(set, tune, eval);
    } catch (const bj::Error& e) {
      c.fail(e.what());
    }
    std::set<std::string> tune_ids;
    for (const auto& e : tune.entries) tune_ids.insert(e.id);
    for (const auto& e : eval.entries)
      if (tune_ids.count(e.id)) c.fail("entry " + e.id + " is in both splits");

    std::vector<std::size_t> correct;
    for (const auto& t : grid) {
      std::size_t n = 0;
      for (const auto& e : tune.entries)
        n += *e.candidates[bj::testing::step_simulator(scores_of(e), t.value()).front()].is_gold;
      correct.push_back(n);
    }
    const auto curve = bj::tune_threshold(tune, grid, 1 + k % 4);
    if (curve.best_threshold != grid[bj::testing::argmax_largest_tie(correct)])
      c.fail("fixture " + std::to_string(k) + ": best threshold differs from exhaustive argmax");
  }
  report("tuner-oracle", c, std::to_string(kTunerFixtures) + " fixtures, splits disjoint");
}

void pipeline_determinism() {
  Check c;
  const fs::path root = fs::temp_directory_path() / "beamjudge_acceptance";
  fs::remove_all(root);
  {
    fs::create_directories(root);
    bj::save_beamset(bj::testing::gain_scenario(120, 9009).unlabeled, (root / "synthetic.jsonl").string());
  }
  const std::vector<std::string> inputs = {kData + "/dev.beams.jsonl", (root / "synthetic.jsonl").string()};
  std::size_t files = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = root / ("in" + std::to_string(i) + "_run" + std::to_string(rep));
      fs::create_directories(dir);
      auto p = [&](const char* name) { return (dir / name).string(); };
      std::ostringstream out, err;
      const std::vector<std::vector<std::string>> steps = {
          {"label", "--in", inputs[i], "--out", p("labeled.jsonl")},
          {"score", "--in", p("labeled.jsonl"), "--out", p("scored.jsonl"), "--scorer", "lexical", "--parallelism", "4"},
          {"tune", "--in", p("scored.jsonl"), "--split", "0.5", "--seed", "7", "--grid", "0:1:0.01", "--curve",
           p("curve.csv"), "--tune-out", p("tune.jsonl"), "--eval-out", p("eval.jsonl"), "--parallelism", "4"},
      };
      for (const auto& args : steps)
        if (bj::cli::dispatch(args, out, err) != 0) c.fail("step " + args[0] + " failed: " + err.str());
      const std::string best = out.str().substr(out.str().rfind("best_threshold=") + 15);
      const std::string t = best.substr(0, best.find('\n'));
      if (bj::cli::dispatch({"eval", "--in", p("eval.jsonl"), "--threshold", t, "--out", p("report.json")}, out, err))
        c.fail("eval failed: " + err.str());
      std::map<std::string, std::string> contents;
      for (const auto& entry : fs::directory_iterator(dir)) contents[entry.path().filename().string()] = slurp(entry.path());
      contents["stdout"] = out.str();
      runs.push_back(contents);
    }
    if (runs[0] != runs[1]) c.fail("outputs differ between runs for " + inputs[i]);
    files += runs[0].size() - 1;
  }
  fs::remove_all(root);
  report("pipeline-determinism", c, std::to_string(files) + " data files byte-identical across two runs");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria = {
      {"rerank-oracle-equivalence", rerank_oracle},
      {"threshold-semantics", threshold_semantics},
      {"upper-bound-law", upper_bound_law},
      {"synthetic-reranking-gain", synthetic_gain},
      {"sql-equivalence-suite", equivalence_suite},
      {"hardness-rule-table", hardness_table},
      {"generation-log-prob", log_prob_bookkeeping},
      {"tuner-oracle", tuner_oracle},
      {"pipeline-determinism", pipeline_determinism},
  };
  for (const auto& [name, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      Check c;
      c.fail(std::string("exception: ") + e.what());
      report(name, c, "");
    }
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
  return failures == 0 ? 0 : 1;
}
