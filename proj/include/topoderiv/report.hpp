#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"  // vendored nlohmann/json

#include "topoderiv/error.hpp"

namespace topoderiv {

using Json = nlohmann::ordered_json;

enum class Verdict { pass, fail, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

inline Verdict parse_verdict(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "inconclusive") return Verdict::inconclusive;
  throw Error(ErrorCode::SchemaViolation, "unknown verdict '" + s + "'");
}

/// Non-finite doubles have no JSON literal; they are written as strings.
inline Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

struct CheckRecord {
  std::string id;
  std::string anchor;
  Verdict verdict = Verdict::pass;
  Json witness = Json::object();
  std::uint64_t seed = 0;
  std::uint64_t samples = 0;

  friend bool operator==(const CheckRecord&, const CheckRecord&) = default;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> samples;  // overrides suite defaults
  double tol = 1e-9;
  bool improper_filters = false;
  unsigned threads = 1;  // not part of the report: results do not depend on it
  std::string out;

  void validate() const {
    if (samples && *samples < 1) throw Error(ErrorCode::ConfigInvalid, "samples must be >= 1");
    if (!(tol > 0.0)) throw Error(ErrorCode::ConfigInvalid, "tol must be > 0");
    if (threads < 1) throw Error(ErrorCode::ConfigInvalid, "threads must be >= 1");
  }
  std::uint64_t budget(std::uint64_t fallback) const { return samples.value_or(fallback); }
};

struct Summary {
  std::size_t pass = 0, fail = 0, inconclusive = 0;
  std::size_t total() const { return pass + fail + inconclusive; }
};

struct SuiteReport {
  std::string suite;
  RunConfig config;
  std::vector<CheckRecord> records;

  Summary summary() const {
    Summary s;
    for (const auto& r : records) {
      if (r.verdict == Verdict::pass) ++s.pass;
      if (r.verdict == Verdict::fail) ++s.fail;
      if (r.verdict == Verdict::inconclusive) ++s.inconclusive;
    }
    return s;
  }
  bool ok() const { return summary().fail == 0; }
  int exit_status() const { return ok() ? 0 : 1; }

  void add(CheckRecord r) {
    if (r.verdict == Verdict::fail && (r.witness.is_null() || r.witness.empty()))
      throw Error(ErrorCode::SchemaViolation, "fail record " + r.id + " has no witness");
    records.push_back(std::move(r));
  }
};

inline Json to_json(const CheckRecord& r) {
  return Json{{"id", r.id},         {"anchor", r.anchor}, {"verdict", to_string(r.verdict)},
              {"witness", r.witness}, {"seed", r.seed},     {"samples", r.samples}};
}

inline Json to_json(const SuiteReport& rep) {
  Json cfg{{"seed", rep.config.seed},
           {"samples", rep.config.samples ? Json(*rep.config.samples) : Json(nullptr)},
           {"tol", rep.config.tol},
           {"improper_filters", rep.config.improper_filters}};
  Json records = Json::array();
  for (const auto& r : rep.records) records.push_back(to_json(r));
  const auto s = rep.summary();
  return Json{{"suite", rep.suite},
              {"config", cfg},
              {"records", records},
              {"summary", {{"total", s.total()}, {"pass", s.pass}, {"fail", s.fail}, {"inconclusive", s.inconclusive}}}};
}

namespace detail {
template <typename T>
T field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::SchemaViolation, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::SchemaViolation, where + "/" + key + ": wrong type");
  }
}
}  // namespace detail

inline CheckRecord record_from_json(const Json& j, const std::string& where) {
  CheckRecord r;
  r.id = detail::field<std::string>(j, "id", where);
  r.anchor = detail::field<std::string>(j, "anchor", where);
  r.verdict = parse_verdict(detail::field<std::string>(j, "verdict", where));
  if (!j.contains("witness")) throw Error(ErrorCode::SchemaViolation, where + ": missing field 'witness'");
  r.witness = j.at("witness");
  r.seed = detail::field<std::uint64_t>(j, "seed", where);
  r.samples = detail::field<std::uint64_t>(j, "samples", where);
  return r;
}

inline SuiteReport report_from_json(const Json& j) {
  SuiteReport rep;
  rep.suite = detail::field<std::string>(j, "suite", "");
  const Json cfg = detail::field<Json>(j, "config", "");
  rep.config.seed = detail::field<std::uint64_t>(cfg, "seed", "/config");
  if (cfg.contains("samples") && !cfg.at("samples").is_null())
    rep.config.samples = detail::field<std::uint64_t>(cfg, "samples", "/config");
  rep.config.tol = detail::field<double>(cfg, "tol", "/config");
  rep.config.improper_filters = detail::field<bool>(cfg, "improper_filters", "/config");
  const Json recs = detail::field<Json>(j, "records", "");
  if (!recs.is_array()) throw Error(ErrorCode::SchemaViolation, "/records: not an array");
  for (std::size_t i = 0; i < recs.size(); ++i)
    rep.add(record_from_json(recs[i], "/records/" + std::to_string(i)));
  return rep;
}

/// Canonical text form; byte-identical for equal reports.
inline std::string serialize(const SuiteReport& rep) { return to_json(rep).dump(2) + "\n"; }

inline SuiteReport parse_report(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return report_from_json(j);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace topoderiv
