#pragma once

// Command-line pipeline: label -> score -> rerank / tune / eval / report.
// Every stage reads a beamset file and writes a beamset or report file.
// Exit codes: 0 success, 1 validation error (including usage errors),
// 2 I/O or transport error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "beamjudge/beamset.hpp"
#include "beamjudge/error.hpp"
#include "beamjudge/evaltune.hpp"
#include "beamjudge/remote_scorer.hpp"
#include "beamjudge/report.hpp"
#include "beamjudge/rerank.hpp"
#include "beamjudge/scoring.hpp"
#include "beamjudge/sqlcanon.hpp"

namespace beamjudge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

inline constexpr const char* kScorerUrlEnv = "BEAMJUDGE_SCORER_URL";

inline Threshold parse_threshold(const std::string& text) {
  if (text == "inf" || text == "+inf") return Threshold::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return Threshold(v);
  } catch (const InvalidInput&) {
    throw;
  } catch (const std::exception&) {
    throw InvalidInput("bad threshold '" + text + "'");
  }
}

// FNV-1a over the resolved configuration, logged so runs can be matched to
// their settings.
inline std::string config_digest(const std::vector<std::pair<std::string, std::string>>& config) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& [k, v] : config) {
    mix(k);
    mix(v);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Multiset check that the two splits partition the input.
inline void verify_partition(const BeamSet& whole, const BeamSet& tune, const BeamSet& eval) {
  std::map<std::string, long> balance;
  for (const auto& e : whole.entries) ++balance[e.id];
  for (const auto& e : tune.entries) --balance[e.id];
  for (const auto& e : eval.entries) --balance[e.id];
  for (const auto& [id, n] : balance) {
    if (n != 0) throw Error("tune/eval split is not a partition of the input (entry " + id + ")");
  }
}

struct Options {
  std::string in, out;
  // label
  bool no_fallback = false;
  // score
  std::string scorer = "lexical";
  std::string endpoint;
  bool include_schema = false;
  int retries = 3;
  std::size_t parallelism = 1;
  // rerank / eval
  std::string threshold;
  bool fixpoint = false;
  // tune
  double split = 0.5;
  std::uint64_t seed = 0;
  std::string grid = "0:1:0.01";
  std::string curve;
  std::string tune_out, eval_out;
  // report
  std::string out_prefix;
  // canon
  std::string sql_text;
  bool show_hardness = false;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::string& command, const Options& o) {
    log_header(command, o);
    if (command == "label") return label(o);
    if (command == "score") return score(o);
    if (command == "rerank") return rerank_cmd(o);
    if (command == "tune") return tune(o);
    if (command == "eval") return eval(o);
    if (command == "tune-eval") return tune_eval(o);
    if (command == "report") return report(o);
    if (command == "canon") return canon(o);
    throw InvalidInput("unknown command " + command);
  }

 private:
  void log(const std::string& msg) { err_ << "[beamjudge] " << msg << "\n"; }

  void log_header(const std::string& command, const Options& o) {
    std::vector<std::pair<std::string, std::string>> cfg = {
        {"command", command},     {"in", o.in},
        {"out", o.out},           {"scorer", o.scorer},
        {"endpoint", o.endpoint}, {"include_schema", o.include_schema ? "1" : "0"},
        {"threshold", o.threshold}, {"fixpoint", o.fixpoint ? "1" : "0"},
        {"split", fixed6(o.split)}, {"seed", std::to_string(o.seed)},
        {"grid", o.grid},         {"no_fallback", o.no_fallback ? "1" : "0"},
    };
    log(command + " rules=" + std::string(sql::kHardnessRuleSet) + " config=" + config_digest(cfg));
  }

  BeamSet load(const std::string& path) {
    Diagnostics diag;
    BeamSet set = load_beamset(path, {}, &diag);
    for (const auto& w : diag.warnings) log("warning: " + w);
    log("loaded " + std::to_string(set.entries.size()) + " entries from " + path);
    return set;
  }

  int label(const Options& o) {
    BeamSet set = load(o.in);
    std::size_t unlabeled = 0, failures = 0;
    for (auto& entry : set.entries) {
      auto outcome = label_candidates(entry);
      failures += outcome.parse_failures;
      if (outcome.labeled) {
        entry = std::move(outcome.entry);
        continue;
      }
      ++unlabeled;
      log("warning: " + outcome.error);
      if (!o.no_fallback) {
        entry = label_by_exact_match(entry);
        log("warning: entry " + entry.id + " labeled by exact string match");
      }
    }
    save_beamset(set, o.out);
    log("labeled " + std::to_string(set.entries.size() - unlabeled) + " entries, " +
        std::to_string(unlabeled) + " with unparseable gold, " + std::to_string(failures) +
        " candidate parse failures");
    return kExitOk;
  }

  int score(const Options& o) {
    std::unique_ptr<Scorer> scorer;
    if (o.scorer == "lexical") {
      scorer = std::make_unique<LexicalScorer>();
    } else if (o.scorer == "remote") {
      std::string endpoint = o.endpoint;
      if (endpoint.empty()) {
        if (const char* env = std::getenv(kScorerUrlEnv)) endpoint = env;
      }
      if (endpoint.empty())
        throw InvalidInput(std::string("remote scorer needs --endpoint or ") + kScorerUrlEnv);
      RemoteScorerOptions ropts;
      ropts.retries = o.retries;
      health_check(endpoint, ropts);
      scorer = std::make_unique<RemoteScorer>(endpoint, ropts);
    } else {
      throw InvalidInput("unknown scorer '" + o.scorer + "' (expected lexical or remote)");
    }
    const BeamSet set = load(o.in);
    log("scoring with " + scorer->name());
    const BeamSet scored = attach_scores(set, *scorer, {o.include_schema, o.parallelism});
    save_beamset(scored, o.out);
    return kExitOk;
  }

  int rerank_cmd(const Options& o) {
    const RerankConfig cfg{parse_threshold(o.threshold),
                           o.fixpoint ? RerankMode::until_fixpoint : RerankMode::single_pass};
    BeamSet set = load(o.in);
    for (auto& e : set.entries) e = rerank_entry(e, cfg);
    save_beamset(set, o.out);
    return kExitOk;
  }

  std::pair<BeamSet, BeamSet> split(const BeamSet& set, const Options& o) {
    auto parts = split_for_tuning(set, o.split, o.seed);
    verify_partition(set, parts.first, parts.second);
    log("split " + std::to_string(set.entries.size()) + " entries into " +
        std::to_string(parts.first.entries.size()) + " tune / " +
        std::to_string(parts.second.entries.size()) + " eval (seed " + std::to_string(o.seed) + ")");
    return parts;
  }

  int tune(const Options& o) {
    const auto grid = parse_grid(o.grid);
    const BeamSet set = load(o.in);
    auto [tune_set, eval_set] = split(set, o);
    const ThresholdCurve curve = tune_threshold(tune_set, grid, o.parallelism);
    emit_curve(curve, o.curve);
    if (!o.tune_out.empty()) save_beamset(tune_set, o.tune_out);
    if (!o.eval_out.empty()) save_beamset(eval_set, o.eval_out);
    out_ << "best_threshold=" << format_threshold(curve.best_threshold) << "\n";
    return kExitOk;
  }

  int eval(const Options& o) {
    const Threshold t = parse_threshold(o.threshold);
    const BeamSet set = load(o.in);
    Diagnostics diag;
    const EvalReport r = evaluate(set, t, &diag);
    for (const auto& w : diag.warnings) log("warning: " + w);
    emit_report(r, o.out);
    out_ << "accuracy=" << fixed6(r.overall_accuracy) << " beam_hit_rate=" << fixed6(r.beam_hit_rate) << "\n";
    return kExitOk;
  }

  int tune_eval(const Options& o) {
    const auto grid = parse_grid(o.grid);
    const BeamSet set = load(o.in);
    auto [tune_set, eval_set] = split(set, o);
    const ThresholdCurve curve = tune_threshold(tune_set, grid, o.parallelism);
    if (!o.curve.empty()) emit_curve(curve, o.curve);
    Diagnostics diag;
    const EvalReport r = evaluate(eval_set, curve.best_threshold, &diag);
    for (const auto& w : diag.warnings) log("warning: " + w);
    emit_report(r, o.out);
    out_ << "best_threshold=" << format_threshold(curve.best_threshold)
         << " eval_accuracy=" << fixed6(r.overall_accuracy) << "\n";
    return kExitOk;
  }

  int report(const Options& o) {
    const auto grid = parse_grid(o.grid);
    const BeamSet set = load(o.in);
    Diagnostics diag;
    const auto overall = tune_threshold(set, grid, o.parallelism);
    const auto by_level = tune_by_hardness(set, grid, &diag);
    for (const auto& w : diag.warnings) log("warning: " + w);
    for (const auto& path : emit_curve_bundle(overall, by_level, o.out_prefix)) log("wrote " + path);
    return kExitOk;
  }

  int canon(const Options& o) {
    const auto q = sql::parse_sql(o.sql_text);
    out_ << sql::to_tree(q);
    if (o.show_hardness) {
      const auto counts = sql::hardness_counts(q);
      out_ << "hardness " << sql::to_string(sql::classify(counts)) << " (component1=" << counts.component1
           << ", component2=" << counts.component2 << ", " << sql::kHardnessRuleSet << ")\n";
    }
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
};

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"beamjudge: re-rank text-to-SQL beam outputs and evaluate them"};
  app.require_subcommand(1);
  Options o;

  auto add_io = [&o](CLI::App* sub, bool needs_out) {
    sub->add_option("--in", o.in, "input beamset (JSONL)")->required();
    if (needs_out) sub->add_option("--out", o.out, "output file")->required();
  };
  auto add_split = [&o](CLI::App* sub) {
    sub->add_option("--split", o.split, "fraction of entries used for tuning")->capture_default_str();
    sub->add_option("--seed", o.seed, "shuffle seed")->capture_default_str();
    sub->add_option("--grid", o.grid, "thresholds: start:stop:step[,value...][,inf]")->capture_default_str();
    sub->add_option("--parallelism", o.parallelism, "grid points evaluated concurrently")->capture_default_str();
  };

  auto* label = app.add_subcommand("label", "mark candidates equivalent to the gold query");
  add_io(label, true);
  label->add_flag("--no-fallback", o.no_fallback, "leave entries with unparseable gold unlabeled");

  auto* score = app.add_subcommand("score", "attach re-ranker scores to every candidate");
  add_io(score, true);
  score->add_option("--scorer", o.scorer, "lexical | remote")
      ->check(CLI::IsMember({"lexical", "remote"}))
      ->capture_default_str();
  score->add_option("--endpoint", o.endpoint, std::string("scorer service URL (default $") + kScorerUrlEnv + ")");
  score->add_flag("--include-schema", o.include_schema, "send schema text with each pair");
  score->add_option("--retries", o.retries, "connection retries")->capture_default_str();
  score->add_option("--parallelism", o.parallelism, "entries scored concurrently")->capture_default_str();

  auto* rerank = app.add_subcommand("rerank", "reorder candidates with the threshold-gated pass");
  add_io(rerank, true);
  rerank->add_option("--threshold", o.threshold, "promotion margin, or inf")->required();
  rerank->add_flag("--fixpoint", o.fixpoint, "repeat passes until stable (experimental)");

  auto* tune = app.add_subcommand("tune", "pick the threshold on a held-out split");
  add_io(tune, false);
  add_split(tune);
  tune->add_option("--curve", o.curve, "threshold curve CSV")->required();
  tune->add_option("--tune-out", o.tune_out, "write the tuning split");
  tune->add_option("--eval-out", o.eval_out, "write the evaluation split");

  auto* eval = app.add_subcommand("eval", "accuracy, beam-hit rate and per-hardness report");
  add_io(eval, true);
  eval->add_option("--threshold", o.threshold, "promotion margin, or inf")->required();

  auto* tune_eval = app.add_subcommand("tune-eval", "tune on one split, report on the other");
  add_io(tune_eval, true);
  add_split(tune_eval);
  tune_eval->add_option("--curve", o.curve, "threshold curve CSV");

  auto* report = app.add_subcommand("report", "threshold curves overall and per hardness level");
  report->add_option("--in", o.in, "input beamset (JSONL)")->required();
  report->add_option("--grid", o.grid, "thresholds")->capture_default_str();
  report->add_option("--out-prefix", o.out_prefix, "output path prefix")->required();
  report->add_option("--parallelism", o.parallelism, "grid points evaluated concurrently")->capture_default_str();

  auto* canon = app.add_subcommand("canon", "print the canonical form of a SQL query");
  canon->add_option("--sql", o.sql_text, "SQL text")->required();
  canon->add_flag("--hardness", o.show_hardness, "also print the hardness level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Runner runner(out, err);
  try {
    return runner.run(command, o);
  } catch (const ScoringError& e) {
    err << "error: " << e.what() << "\n";
    return e.transport_failure() ? kExitIo : kExitValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const TransportError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ProtocolError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("beamjudge");
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace beamjudge::cli
