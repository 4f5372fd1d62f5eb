#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamjudge/error.hpp"
#include "beamjudge/evaltune.hpp"

namespace beamjudge {

// All floats are written with exactly six decimals so reports diff cleanly.
inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string format_threshold(Threshold t) { return t.is_infinite() ? "inf" : fixed6(t.value()); }

// `threshold,accuracy` with one row per grid point; +inf is written as `inf`.
inline std::string curve_csv(const ThresholdCurve& curve) {
  std::string out = "threshold,accuracy\n";
  for (const auto& p : curve.points) out += format_threshold(p.threshold) + "," + fixed6(p.accuracy()) + "\n";
  return out;
}

// Report JSON, schema beamjudge-report/v1:
//
//   {
//     "schema_version": "beamjudge-report/v1",
//     "rule_set_version": "hardness-rules/v1",
//     "value_matching": "exact",
//     "threshold_used": <number> | "inf",
//     "entry_count": <int>,
//     "correct_count": <int>,
//     "overall_accuracy": <number>,
//     "beam_hit_rate": <number>,
//     "per_hardness_accuracy": {"easy": <number>, ...},   // non-empty buckets only
//     "per_hardness_count": {"easy": <int>, ...},
//     "excluded_from_hardness": <int>
//   }
inline std::string report_json(const EvalReport& r) {
  std::ostringstream os;
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  os << "{\n";
  os << "  \"schema_version\": " << str(std::string(kReportSchemaVersion)) << ",\n";
  os << "  \"rule_set_version\": " << str(r.rule_set_version) << ",\n";
  os << "  \"value_matching\": " << str(r.value_matching) << ",\n";
  os << "  \"threshold_used\": "
     << (r.threshold_used.is_infinite() ? std::string("\"inf\"") : fixed6(r.threshold_used.value())) << ",\n";
  os << "  \"entry_count\": " << r.entry_count << ",\n";
  os << "  \"correct_count\": " << r.correct_count << ",\n";
  os << "  \"overall_accuracy\": " << fixed6(r.overall_accuracy) << ",\n";
  os << "  \"beam_hit_rate\": " << fixed6(r.beam_hit_rate) << ",\n";
  os << "  \"per_hardness_accuracy\": {";
  bool first = true;
  for (const auto& [level, acc] : r.per_hardness_accuracy) {
    os << (first ? "" : ", ") << "\"" << sql::to_string(level) << "\": " << fixed6(acc);
    first = false;
  }
  os << "},\n";
  os << "  \"per_hardness_count\": {";
  first = true;
  for (const auto& [level, n] : r.per_hardness_count) {
    os << (first ? "" : ", ") << "\"" << sql::to_string(level) << "\": " << n;
    first = false;
  }
  os << "},\n";
  os << "  \"excluded_from_hardness\": " << r.excluded_from_hardness << "\n";
  os << "}\n";
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

inline void emit_curve(const ThresholdCurve& curve, const std::string& path) {
  write_text_file(path, curve_csv(curve));
}

inline void emit_report(const EvalReport& report, const std::string& path) {
  write_text_file(path, report_json(report));
}

// Writes <prefix>.overall.csv plus <prefix>.<level>.csv for every non-empty
// hardness bucket. Returns the written paths.
inline std::vector<std::string> emit_curve_bundle(const ThresholdCurve& overall,
                                                  const std::map<HardnessLevel, ThresholdCurve>& by_level,
                                                  const std::string& prefix) {
  std::vector<std::string> paths;
  paths.push_back(prefix + ".overall.csv");
  emit_curve(overall, paths.back());
  for (const auto& [level, curve] : by_level) {
    paths.push_back(prefix + "." + std::string(sql::to_string(level)) + ".csv");
    emit_curve(curve, paths.back());
  }
  return paths;
}

}  // namespace beamjudge
