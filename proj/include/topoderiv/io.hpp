#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "topoderiv/catalog.hpp"
#include "topoderiv/filter_algebra.hpp"
#include "topoderiv/finite_topology.hpp"
#include "topoderiv/flows.hpp"
#include "topoderiv/metric_filters.hpp"
#include "topoderiv/pair_calculus.hpp"
#include "topoderiv/report.hpp"

namespace topoderiv {

// File ingestion. Every input file is a JSON object with a "kind" field.
// Errors name their location: line:column for syntax errors, a JSON pointer
// for schema and domain errors.

struct RelationInput {
  int points = 0;
  Mask relation = 0;
};

struct FlowInput {
  Flow flow;
  Region region;
};

struct SequenceInput {
  Point base;
  Point direction;
  std::vector<Point> terms;
  std::string label;  // construction label when generated, empty otherwise
};

using Ingested = std::variant<TopologyRef, PointMap, IndicatorFilter, Refinement, RelationInput, FlowInput, SequenceInput>;

namespace io_detail {

inline std::string message_of(const Error& e) {
  const std::string what = e.what();
  const std::size_t skip = to_string(e.code()).size() + 2;
  return what.size() >= skip ? what.substr(skip) : what;
}

[[noreturn]] inline void schema(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::SchemaViolation, (where.empty() ? "/" : where) + ": " + msg);
}

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline const Json& at(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema(where, "expected an object");
  if (!j.contains(key)) schema(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline long long integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) schema(where, "expected an integer");
  return j.get<long long>();
}

inline double real(const Json& j, const std::string& where) {
  if (!j.is_number()) schema(where, "expected a number");
  return j.get<double>();
}

inline const Json& array(const Json& j, const std::string& where) {
  if (!j.is_array()) schema(where, "expected an array");
  return j;
}

/// Indices into 0..n-1 as a mask; out-of-range indices are domain errors.
inline Mask index_set(const Json& j, int n, const std::string& where) {
  Mask m = 0;
  const auto& a = array(j, where);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto k = integer(a[i], where + "/" + std::to_string(i));
    if (k < 0 || k >= n)
      throw Error(ErrorCode::IndexOutOfRange,
                  where + "/" + std::to_string(i) + ": index " + std::to_string(k) + " outside 0.." + std::to_string(n - 1),
                  {static_cast<std::uint64_t>(k)});
    m |= Mask{1} << k;
  }
  return m;
}

inline Point point(const Json& j, const std::string& where) {
  const auto& a = array(j, where);
  if (a.empty()) schema(where, "empty vector");
  Point p(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) p[static_cast<Eigen::Index>(i)] = real(a[i], where + "/" + std::to_string(i));
  return p;
}

/// Runs fn; library errors get the location prefixed, code and witness kept.
template <typename Fn>
auto located(const std::string& where, Fn fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaViolation || e.code() == ErrorCode::ParseError || e.code() == ErrorCode::IoError) throw;
    throw Error(e.code(), (where.empty() ? "/" : where) + ": " + message_of(e), e.witness());
  }
}

struct Context {
  std::filesystem::path dir;  // relative paths resolve against the including file
  FilterMode mode;
};

inline Json load(const std::filesystem::path& path) {
  const std::string text = read_text(path.string());
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                                           std::string(e.what()));
  }
}

inline TopologyRef topology(const Json& j, const std::string& where, const Context& ctx);

/// A topology given inline or as a path to a topology file.
inline TopologyRef topology_ref(const Json& j, const std::string& where, const Context& ctx) {
  if (j.is_string()) {
    const auto path = ctx.dir / j.get<std::string>();
    const Json inner = load(path);
    return topology(inner, "", Context{path.parent_path(), ctx.mode});
  }
  return topology(j, where, ctx);
}

inline TopologyRef topology(const Json& j, const std::string& where, const Context&) {
  if (!j.is_object()) schema(where, "expected a topology object");
  if (j.contains("kind") && j.at("kind") != "topology") schema(where + "/kind", "expected \"topology\"");
  if (j.contains("builtin")) {
    const auto name = j.at("builtin");
    if (!name.is_string()) schema(where + "/builtin", "expected a string");
    if (name == "sierpinski") return share(sierpinski());
    const auto n = integer(at(j, "points", where), where + "/points");
    return located(where, [&] {
      if (n < 0 || n > kMaxPoints) throw Error(ErrorCode::IndexOutOfRange, "points must be in 0..64");
      if (name == "discrete") return share(discrete_topology(static_cast<int>(n)));
      if (name == "indiscrete") return share(indiscrete_topology(static_cast<int>(n)));
      schema(where + "/builtin", "unknown builtin '" + name.get<std::string>() + "'");
    });
  }
  const auto n = integer(at(j, "points", where), where + "/points");
  if (n < 0 || n > kMaxPoints)
    throw Error(ErrorCode::IndexOutOfRange, where + "/points: " + std::to_string(n) + " outside 0..64");
  const auto& opens = array(at(j, "opens", where), where + "/opens");
  std::vector<Mask> family;
  for (std::size_t i = 0; i < opens.size(); ++i)
    family.push_back(index_set(opens[i], static_cast<int>(n), where + "/opens/" + std::to_string(i)));
  return located(where + "/opens", [&] { return share(validate_topology(static_cast<int>(n), std::move(family))); });
}

inline IndicatorFilter filter(const Json& j, const TopologyRef& t, const std::string& where, const Context& ctx) {
  if (!j.is_object()) schema(where, "expected a filter object");
  std::vector<std::uint8_t> values(t->open_count(), 0);
  if (j.contains("values")) {
    const auto& a = array(j.at("values"), where + "/values");
    if (a.size() != t->open_count())
      schema(where + "/values", "expected " + std::to_string(t->open_count()) + " entries, one per open set");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const auto v = integer(a[i], where + "/values/" + std::to_string(i));
      if (v != 0 && v != 1)
        throw Error(ErrorCode::NotIndicator, where + "/values/" + std::to_string(i) + ": value must be 0 or 1");
      values[i] = static_cast<std::uint8_t>(v);
    }
  } else if (j.contains("support")) {
    const auto& a = array(j.at("support"), where + "/support");
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string w = where + "/support/" + std::to_string(i);
      const Mask m = index_set(a[i], t->size(), w);
      const auto idx = t->index_of(m);
      if (!idx) throw Error(ErrorCode::IndexOutOfRange, w + ": " + mask_to_string(m) + " is not open", {m});
      values[*idx] = 1;
    }
  } else if (j.contains("kernel")) {
    const Mask k = index_set(j.at("kernel"), t->size(), where + "/kernel");
    const auto principal = IndicatorFilter::from_kernel(t, k);
    values.assign(principal.values().begin(), principal.values().end());
  } else {
    schema(where, "filter needs one of 'values', 'support' or 'kernel'");
  }
  return located(where, [&] { return check_filter_axioms(t, std::move(values), ctx.mode); });
}

inline PlaneMap plane_map(const Json& j, const std::string& where) {
  if (j.is_string()) return located(where, [&] { return find_plane_map(j.get<std::string>()); });
  if (j.is_object() && j.contains("matrix")) {
    const auto& rows = array(j.at("matrix"), where + "/matrix");
    if (rows.size() != 2) schema(where + "/matrix", "expected a 2x2 matrix");
    Eigen::MatrixXd A(2, 2);
    for (int r = 0; r < 2; ++r) {
      const Point row = point(rows[r], where + "/matrix/" + std::to_string(r));
      if (row.size() != 2) schema(where + "/matrix/" + std::to_string(r), "expected 2 entries");
      A.row(r) = row.transpose();
    }
    return located(where, [&] { return linear_plane_map(A, "matrix"); });
  }
  schema(where, "expected a map name or {\"matrix\": [[a,b],[c,d]]}");
}

inline FlowInput flow(const Json& j, const std::string& where) {
  const auto& b = at(j, "builtin", where);
  if (!b.is_string()) schema(where + "/builtin", "expected a string");
  const std::string name = b.get<std::string>();
  const Json params = j.value("params", Json::object());
  double lo = -1, hi = 1;
  if (j.contains("domain")) {
    const Point d = point(j.at("domain"), where + "/domain");
    if (d.size() != 2) schema(where + "/domain", "expected [a, b]");
    lo = d[0];
    hi = d[1];
    if (!(lo < 0 && 0 < hi)) throw Error(ErrorCode::DomainViolation, where + "/domain: need a < 0 < b");
  }
  FlowInput out{translation_flow(vec({1, 0}), lo, hi), annulus(0.0, 2.0)};
  auto param = [&](const char* key, double fallback) {
    return params.contains(key) ? real(params.at(key), where + "/params/" + key) : fallback;
  };
  out.flow = located(where, [&]() -> Flow {
    if (name == "translation") {
      const Point u = params.contains("direction") ? point(params.at("direction"), where + "/params/direction") : vec({1, 0});
      if (u.size() != 2) schema(where + "/params/direction", "expected a planar vector");
      return translation_flow(u, lo, hi);
    }
    if (name == "rotation") return rotation_flow(param("omega", 1.0), lo, hi);
    if (name == "scaling") return scaling_flow(param("rate", 1.0), lo, hi);
    if (name == "linear") {
      const auto& rows = array(at(params, "generator", where + "/params"), where + "/params/generator");
      if (rows.size() != 2) schema(where + "/params/generator", "expected a 2x2 matrix");
      Eigen::MatrixXd G(2, 2);
      for (int r = 0; r < 2; ++r) G.row(r) = point(rows[r], where + "/params/generator/" + std::to_string(r)).transpose();
      return linear_flow(G, lo, hi);
    }
    schema(where + "/builtin", "unknown flow '" + name + "'");
  });
  if (name != "translation") out.region = annulus(0.5, 2.0);
  if (j.contains("region")) {
    const auto& r = j.at("region");
    out.region = annulus(real(at(r, "inner", where + "/region"), where + "/region/inner"),
                         real(at(r, "outer", where + "/region"), where + "/region/outer"));
  }
  if (j.contains("conjugate")) {
    const PlaneMap m = plane_map(j.at("conjugate"), where + "/conjugate");
    const Region base = out.region;
    out.flow = located(where + "/conjugate", [&] { return pushforward_flow(m, out.flow, base); });
    out.region = mapped(base, m);
  }
  return out;
}

inline SequenceKind sequence_kind(const std::string& s, const std::string& where) {
  if (s == "with-direction") return SequenceKind::with_direction;
  if (s == "without-direction") return SequenceKind::without_direction;
  if (s == "divergent") return SequenceKind::divergent;
  schema(where, "unknown sequence kind '" + s + "'");
}

inline SequenceInput sequence(const Json& j, const std::string& where) {
  SequenceInput s;
  s.base = point(at(j, "base", where), where + "/base");
  s.direction = point(at(j, "direction", where), where + "/direction");
  if (s.direction.size() != s.base.size()) schema(where + "/direction", "dimension differs from base");
  located(where + "/direction", [&] {
    require_unit(s.direction);
    return 0;
  });
  if (j.contains("terms")) {
    const auto& a = array(j.at("terms"), where + "/terms");
    for (std::size_t i = 0; i < a.size(); ++i) {
      s.terms.push_back(point(a[i], where + "/terms/" + std::to_string(i)));
      if (s.terms.back().size() != s.base.size()) schema(where + "/terms/" + std::to_string(i), "dimension differs from base");
    }
    if (s.terms.empty()) schema(where + "/terms", "empty sequence");
  } else if (j.contains("generate")) {
    const auto& g = j.at("generate");
    const auto& k = at(g, "kind", where + "/generate");
    if (!k.is_string()) schema(where + "/generate/kind", "expected a string");
    s.label = k.get<std::string>();
    const auto kind = sequence_kind(s.label, where + "/generate/kind");
    const auto length = integer(at(g, "length", where + "/generate"), where + "/generate/length");
    if (length < 1) schema(where + "/generate/length", "must be >= 1");
    Rng rng(static_cast<std::uint64_t>(g.contains("seed") ? integer(g.at("seed"), where + "/generate/seed") : 1));
    s.terms = located(where + "/generate", [&] { return labeled_sequence(rng, kind, s.base, s.direction, static_cast<std::size_t>(length)); });
  } else {
    schema(where, "sequence needs 'terms' or 'generate'");
  }
  return s;
}

}  // namespace io_detail

/// Parses an already loaded document; dir resolves relative file references.
inline Ingested ingest_json(const Json& j, const std::filesystem::path& dir = ".", FilterMode mode = {}) {
  using namespace io_detail;
  const Context ctx{dir, mode};
  const auto& k = at(j, "kind", "");
  if (!k.is_string()) schema("/kind", "expected a string");
  const std::string kind = k.get<std::string>();
  if (kind == "topology") return topology(j, "", ctx);
  if (kind == "map") {
    auto s = topology_ref(at(j, "source", ""), "/source", ctx);
    auto t = topology_ref(at(j, "target", ""), "/target", ctx);
    const auto& img = array(at(j, "image", ""), "/image");
    std::vector<int> image;
    for (std::size_t i = 0; i < img.size(); ++i) image.push_back(static_cast<int>(integer(img[i], "/image/" + std::to_string(i))));
    return located("/image", [&] { return make_point_map(s, t, image); });
  }
  if (kind == "filter") {
    auto t = topology_ref(at(j, "topology", ""), "/topology", ctx);
    return filter(j, t, "", ctx);
  }
  if (kind == "refinement") {
    Refinement r{topology_ref(at(j, "topology", ""), "/topology", ctx), {}};
    const auto& a = array(at(j, "assignment", ""), "/assignment");
    if (static_cast<int>(a.size()) != r.topology->size())
      schema("/assignment", "expected one entry per point (" + std::to_string(r.topology->size()) + ")");
    for (std::size_t x = 0; x < a.size(); ++x) {
      const std::string w = "/assignment/" + std::to_string(x);
      std::vector<IndicatorFilter> members;
      const auto& m = array(a[x], w);
      for (std::size_t i = 0; i < m.size(); ++i) members.push_back(filter(m[i], r.topology, w + "/" + std::to_string(i), ctx));
      r.assignment.push_back(std::move(members));
    }
    return r;
  }
  if (kind == "relation") {
    RelationInput r;
    const auto n = integer(at(j, "points", ""), "/points");
    if (n < 1 || n > 8) throw Error(ErrorCode::SizeLimitExceeded, "/points: relations need 1..8 points");
    r.points = static_cast<int>(n);
    const auto& pairs = array(at(j, "pairs", ""), "/pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string w = "/pairs/" + std::to_string(i);
      const auto& p = array(pairs[i], w);
      if (p.size() != 2) schema(w, "expected [x, y]");
      const auto x = integer(p[0], w + "/0"), y = integer(p[1], w + "/1");
      if (x < 0 || x >= n || y < 0 || y >= n)
        throw Error(ErrorCode::IndexOutOfRange, w + ": pair outside 0.." + std::to_string(n - 1));
      r.relation |= pair_mask(r.points, static_cast<int>(x), static_cast<int>(y));
    }
    return r;
  }
  if (kind == "flow") return flow(j, "");
  if (kind == "sequence") return sequence(j, "");
  schema("/kind", "unknown kind '" + kind + "'");
}

inline Ingested ingest(const std::filesystem::path& path, FilterMode mode = {}) {
  const Json j = io_detail::load(path);
  try {
    return ingest_json(j, path.parent_path(), mode);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + io_detail::message_of(e), e.witness());
  }
}

/// ingest() that insists on one kind.
template <typename T>
T ingest_as(const std::filesystem::path& path, FilterMode mode = {}) {
  auto v = ingest(path, mode);
  if (auto* p = std::get_if<T>(&v)) return std::move(*p);
  throw Error(ErrorCode::SchemaViolation, path.string() + ": /kind: file holds another kind of object");
}

}  // namespace topoderiv
