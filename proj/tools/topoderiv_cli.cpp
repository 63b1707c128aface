// topoderiv: command-line workbench over the library.
//
// Exit status: 0 when the report has no fail record, 1 when it has one,
// 2 for unusable input (bad flags, unreadable or malformed files).

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "topoderiv/topoderiv.hpp"

namespace td = topoderiv;
using td::Json;

namespace {

constexpr int kInputError = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::uint64_t samples = 0;  // 0: suite defaults
  double tol = 1e-9;
  std::string out;
  bool improper = false;
  unsigned threads = 1;

  td::RunConfig config() const {
    td::RunConfig c;
    c.seed = seed;
    if (samples) c.samples = samples;
    c.tol = tol;
    c.improper_filters = improper;
    c.threads = threads;
    c.out = out;
    return c;
  }
  td::FilterMode mode() const { return td::FilterMode{!improper}; }
  std::size_t budget(std::size_t fallback) const { return samples ? samples : fallback; }
};

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
  } else {
    td::write_text(g.out, text);
  }
}

/// A one-record report for the check-style commands.
int finish(const Globals& g, const std::string& name, td::CheckRecord rec) {
  td::SuiteReport rep;
  rep.suite = name;
  rep.config = g.config();
  rep.add(std::move(rec));
  emit(g, td::serialize(rep));
  return rep.exit_status();
}

td::CheckRecord record(std::string id, std::string anchor, bool ok, Json witness, std::uint64_t seed = 0,
                       std::uint64_t samples = 1) {
  return {std::move(id), std::move(anchor), ok ? td::Verdict::pass : td::Verdict::fail, std::move(witness), seed, samples};
}

bool is_input_error(td::ErrorCode c) {
  using td::ErrorCode;
  return c == ErrorCode::ParseError || c == ErrorCode::SchemaViolation || c == ErrorCode::IoError ||
         c == ErrorCode::ConfigInvalid || c == ErrorCode::UnknownSuite;
}

/// Domain errors in a checked object are findings, not crashes: they become a
/// fail record whose witness is the error.
template <typename Fn>
int checked(const Globals& g, const std::string& name, const std::string& anchor, Fn fn) {
  try {
    return fn();
  } catch (const td::Error& e) {
    if (is_input_error(e.code())) throw;
    Json w{{"error", std::string(td::to_string(e.code()))}, {"message", e.what()}};
    if (!e.witness().empty()) w["witness"] = e.witness();
    return finish(g, name, record(name, anchor, false, w));
  }
}

td::Rational parse_rational(const std::string& s) {
  auto number = [&](std::string_view v) {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size())
      throw td::Error(td::ErrorCode::ConfigInvalid, "not a rational number: '" + s + "'");
    return x;
  };
  const auto slash = s.find('/');
  if (slash == std::string::npos) return td::Rational(number(s));
  const auto den = number(std::string_view(s).substr(slash + 1));
  if (den == 0) throw td::Error(td::ErrorCode::ConfigInvalid, "zero denominator in '" + s + "'");
  return td::Rational(number(std::string_view(s).substr(0, slash)), den);
}

td::Polynomial parse_polynomial(const std::vector<std::string>& coeffs) {
  td::Polynomial p;
  for (const auto& c : coeffs) p.coeffs.push_back(parse_rational(c));
  return p;
}

td::Point to_point(const std::vector<double>& v) {
  if (v.empty()) throw td::Error(td::ErrorCode::ConfigInvalid, "empty vector");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json opens_of(const td::FiniteTopology& t) { return td::opens_json(t); }

// ---------------------------------------------------------------- check

int check_topology(const Globals& g, const std::string& path) {
  return checked(g, "check/topology", "topology-axioms", [&] {
    const auto t = td::ingest_as<td::TopologyRef>(path);
    const auto t0 = td::is_T0(*t);
    Json w{{"points", t->size()}, {"opens", opens_of(*t)}, {"T0", t0.ok}};
    if (!t0) w["indistinguishable"] = {t0.witness->first, t0.witness->second};
    return finish(g, "check/topology", record("check/topology", "topology-axioms", true, w));
  });
}

int check_map(const Globals& g, const std::string& path) {
  return checked(g, "check/map", "continuity", [&] {
    const auto f = td::ingest_as<td::PointMap>(path);
    const auto c = td::is_continuous(f);
    Json w{{"image", f.image}, {"continuous", c.ok}};
    if (!c) {
      w["open"] = td::mask_json(*c.witness);
      w["preimage"] = td::mask_json(f.preimage(*c.witness));
      return finish(g, "check/map", record("check/map", "continuity", false, w));
    }
    // continuous maps: the pushforward must be continuous for the filter topology
    if (f.source->open_count() <= td::kMaxEnumeratedOpens && f.target->open_count() <= td::kMaxEnumeratedOpens) {
      const auto pc = td::check_pushforward_continuity(f, g.mode());
      w["pushforward_continuous"] = pc.ok;
      if (!pc) w["filter_open_set"] = *pc.witness;
      return finish(g, "check/map", record("check/map", "pushforward-continuity", pc.ok, w));
    }
    return finish(g, "check/map", record("check/map", "continuity", true, w));
  });
}

int check_filter(const Globals& g, const std::string& path) {
  return checked(g, "check/filter", "filter-axioms", [&] {
    const auto mu = td::ingest_as<td::IndicatorFilter>(path, g.mode());
    const auto supp = td::support(mu);
    const auto c = td::check_support_properties(*mu.topology(), supp);
    Json w{{"values", td::values_json(mu)}, {"kernel", td::mask_json(mu.kernel())}, {"proper", mu.is_proper()}};
    if (!c) {
      w["property"] = std::string(1, c.witness->property);
      Json sets = Json::array();
      for (auto m : c.witness->opens) sets.push_back(td::mask_json(m));
      w["sets"] = sets;
    }
    return finish(g, "check/filter", record("check/filter", "support-filter-properties", c.ok, w));
  });
}

int check_refinement(const Globals& g, const std::string& path) {
  return checked(g, "check/refinement", "refinement", [&] {
    const auto r = td::ingest_as<td::Refinement>(path, g.mode());
    const auto c = td::check_refinement(r);
    Json w = Json::object();
    if (!c) {
      w = {{"violation", td::to_string(c.witness->kind)}, {"point", c.witness->point}, {"member", c.witness->member}};
      if (c.witness->open) w["open"] = td::mask_json(c.witness->open);
    } else {
      w["points"] = r.topology->size();
    }
    return finish(g, "check/refinement", record("check/refinement", "refinement", c.ok, w));
  });
}

int check_uniformity(const Globals& g, const std::string& path, const std::string& base_path) {
  return checked(g, "check/uniformity", "uniformity", [&] {
    const auto rel = td::ingest_as<td::RelationInput>(path);
    const auto base = base_path.empty() ? td::share(td::discrete_topology(rel.points)) : td::ingest_as<td::TopologyRef>(base_path);
    if (base->size() != rel.points)
      throw td::Error(td::ErrorCode::ConfigInvalid, "relation and base topology differ in point count");
    const auto square = td::share(td::product_topology(*base));
    const auto omega = td::principal_filter(square, rel.relation);
    const auto r = td::check_uniformity(omega);
    auto part = [](const td::Check<td::Mask>& c) {
      Json j{{"ok", c.ok}};
      if (!c) j["open"] = td::mask_json(*c.witness);
      return j;
    };
    Json w{{"relation", td::mask_json(rel.relation)},
           {"kernel", td::mask_json(omega.kernel())},
           {"finer_than_diagonal", part(r.finer_than_diagonal)},
           {"half_composition", part(r.half_composition)},
           {"symmetric", part(r.symmetric)},
           {"square_finer", part(r.square_finer)}};
    return finish(g, "check/uniformity", record("check/uniformity", "uniformity", r.ok(), w));
  });
}

// ---------------------------------------------------------------- enumerate

int enumerate_topologies(const Globals& g, int n, bool t0) {
  const auto all = td::enumerate_topologies(n, t0);
  Json list = Json::array();
  for (const auto& t : all) list.push_back(opens_of(t));
  emit(g, Json{{"points", n}, {"t0_only", t0}, {"count", all.size()}, {"topologies", list}}.dump(2) + "\n");
  return 0;
}

int enumerate_filters(const Globals& g, const std::string& path) {
  const auto t = td::ingest_as<td::TopologyRef>(path);
  const auto filters = td::enumerate_filters(t, g.mode());
  Json list = Json::array();
  for (const auto& f : filters) list.push_back(Json{{"values", td::values_json(f)}, {"kernel", td::mask_json(f.kernel())}});
  emit(g, Json{{"opens", opens_of(*t)}, {"proper", !g.improper}, {"count", filters.size()}, {"filters", list}}.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- geom

int geom_classify(const Globals& g, const std::string& path) {
  return checked(g, "geom/classify", "sequence-characterization", [&] {
    const auto s = td::ingest_as<td::SequenceInput>(path);
    const auto v = td::classify_sequence(s.terms, s.base, s.direction);
    Json w{{"terms", s.terms.size()},
           {"converges", v.converges_to_point},
           {"direct_match", v.direct_match},
           {"generator_match", v.generator_match},
           {"matches_filter", v.matches_filter},
           {"disagreement", v.disagreement}};
    if (v.direction_limit) w["direction_limit"] = td::point_json(*v.direction_limit);
    bool ok = !v.disagreement;
    if (!s.label.empty()) {
      w["label"] = s.label;
      const bool want_match = s.label == "with-direction", want_conv = s.label != "divergent";
      ok = ok && v.matches_filter == want_match && v.converges_to_point == want_conv;
    }
    return finish(g, "geom/classify", record("geom/classify", "sequence-characterization", ok, w, 0, s.terms.size()));
  });
}

int geom_cone(const Globals& g, const std::vector<double>& x, const std::vector<double>& u, double eps, double sigma,
              const std::vector<double>& y) {
  return checked(g, "geom/cone", "cone-membership", [&] {
    const auto cone = td::make_cone(to_point(x), to_point(u), eps, sigma);
    const td::Point q = to_point(y);
    if (q.size() != cone.x.size()) throw td::Error(td::ErrorCode::ConfigInvalid, "query point has the wrong dimension");
    const bool inside = td::v_plus_contains(cone, q);
    Json w{{"inside", inside}, {"envelope_radius", td::cone_envelope_radius(eps, sigma)}};
    bool ok = true;
    if (inside) {
      // the bound holds with the closest arc point as c(lambda)
      const double lambda = td::project_to_segment(q, cone.x, cone.u, eps).parameter;
      const td::Point c = cone.x + lambda * cone.u;
      const auto b = td::check_bound(cone.x, c, q, sigma);
      w["bound"] = {{"lower", b.lower}, {"distance", b.distance}, {"upper", b.upper}, {"ok", b.ok}};
      ok = b.ok;
    }
    return finish(g, "geom/cone", record("geom/cone", "bound-inequality", ok, w));
  });
}

int geom_transport(const Globals& g, const std::string& map_name, const std::vector<double>& matrix,
                   const std::vector<double>& x, const std::vector<double>& u) {
  return checked(g, "geom/transport", "derivative-transport", [&] {
    td::SmoothMap map;
    if (!matrix.empty()) {
      const int dim = static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.size()))));
      if (dim * dim != static_cast<int>(matrix.size()))
        throw td::Error(td::ErrorCode::ConfigInvalid, "--matrix needs a square number of entries");
      Eigen::MatrixXd A(dim, dim);
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) A(i, j) = matrix[static_cast<std::size_t>(i * dim + j)];
      map = td::linear_map(A);
    } else {
      map = td::find_smooth_map(map_name);
    }
    const td::Point p = to_point(x), dir = to_point(u);
    if (p.size() != map.dim || dir.size() != map.dim)
      throw td::Error(td::ErrorCode::ConfigInvalid, "point and direction need dimension " + std::to_string(map.dim));
    const auto seed = td::derive_seed(g.seed, "geom/transport");
    const auto t = td::transport_via_sequences(map, p, dir, g.budget(4), seed);
    const bool ok = t.angle_error <= 1e-6 && t.mismatches == 0;
    Json w{{"map", map.name},
           {"direction", td::point_json(t.direction)},
           {"expected", td::point_json(t.expected)},
           {"angle", td::num(t.angle_error)},
           {"mismatches", t.mismatches}};
    return finish(g, "geom/transport", record("geom/transport", "derivative-transport", ok, w, seed, t.trials));
  });
}

// ---------------------------------------------------------------- snowflake

int snowflake_separate(const Globals& g, int m, const std::vector<std::string>& p1s, const std::vector<std::string>& p2s) {
  return checked(g, "snowflake/separate", "snowflake-separation", [&] {
    const auto p1 = parse_polynomial(p1s), p2 = parse_polynomial(p2s);
    const auto r = td::separate_polynomials(p1, p2, m);
    Json w{{"m", m}, {"p1", td::describe(p1)}, {"p2", td::describe(p2)}, {"verdict", td::to_string(r.verdict)}};
    if (r.witness) {
      w["along"] = r.witness->along_first ? "p1" : "p2";
      w["eps"] = r.witness->eps;
      w["lambda"] = r.witness->lambda;
      w["verified"] = r.witness->verified;
    }
    auto ratios = [](const std::vector<double>& v) {
      Json a = Json::array();
      for (double x : v) a.push_back(td::num(x));
      return a;
    };
    w["ratios_along_p1"] = ratios(r.ratios_along_p1);
    w["ratios_along_p2"] = ratios(r.ratios_along_p2);
    const bool ok = r.verdict == td::SeparationVerdict::equal ||
                    (r.verdict == td::SeparationVerdict::separated && r.witness && r.witness->verified);
    return finish(g, "snowflake/separate", record("snowflake/separate", "snowflake-separation", ok, w));
  });
}

int snowflake_derive(const Globals& g, const std::string& function, const std::vector<double>& params, double x,
                     int m, const std::vector<std::string>& ps) {
  return checked(g, "snowflake/derive", "polynomial-derivability", [&] {
    td::ScalarFunction f;
    if (function == "polynomial") {
      f = td::polynomial_function(params);
    } else if (function == "exp") {
      f = td::exp_function(params.empty() ? 1.0 : params[0]);
    } else if (function == "sin") {
      f = td::sin_function(params.empty() ? 1.0 : params[0], params.size() > 1 ? params[1] : 0.0);
    } else {
      throw td::Error(td::ErrorCode::ConfigInvalid, "unknown function '" + function + "' (polynomial, exp, sin)");
    }
    const auto p = parse_polynomial(ps);
    const auto v = td::check_poly_derivable(f, x, p, m);
    auto arr = [](const std::vector<double>& c) {
      Json a = Json::array();
      for (double q : c) a.push_back(td::num(q));
      return a;
    };
    Json w{{"function", f.name},
           {"expected", arr(v.expected)},
           {"empirical", arr(v.empirical)},
           {"max_coefficient_error", td::num(v.max_coefficient_error)},
           {"tail_checked", v.tail_checked},
           {"tail_outside", v.tail_outside}};
    return finish(g, "snowflake/derive", record("snowflake/derive", "polynomial-derivability", v.match, w));
  });
}

// ---------------------------------------------------------------- flow

td::FlowCheckOptions flow_options(const Globals& g, const std::string& id) {
  td::FlowCheckOptions o;
  o.seed = td::derive_seed(g.seed, id);
  o.threads = g.threads;
  if (g.samples) o.samples = g.samples;
  return o;
}

td::CheckRecord recipe_record(const std::string& id, const std::string& anchor, const td::RecipeReport& r,
                              std::uint64_t seed) {
  return {id, anchor, td::recipe_verdict(r), td::recipe_json(r), seed, r.samples};
}

int flow_command(const Globals& g, const std::string& which, const std::string& path, double eps, double mu,
                 const std::string& map_name) {
  const std::string id = "flow/" + which;
  return checked(g, id, "flow-" + which, [&] {
    const auto in = td::ingest_as<td::FlowInput>(path);
    const auto opt = flow_options(g, id + "/conditions");
    if (which == "transport") {
      const auto map = td::find_plane_map(map_name);
      const auto seed = td::derive_seed(g.seed, id);
      const auto t = td::check_flow_transport(map, in.flow, in.region, eps, mu, g.budget(10000), seed, g.threads);
      const td::Verdict v = t.verdict == td::Commutation::commute       ? td::Verdict::pass
                            : t.verdict == td::Commutation::inconclusive ? td::Verdict::inconclusive
                                                                          : td::Verdict::fail;
      Json w{{"map", map.name},        {"verdict", std::string(td::to_string(t.verdict))}, {"L", td::num(t.L)},
             {"mu_prime", td::num(t.mu_prime)}, {"violations", t.violations}, {"inconclusive", t.inconclusive}};
      return finish(g, id, {id, "flow-transport", v, w, seed, t.samples});
    }
    const auto rep = td::check_flow_conditions(in.flow, in.region, opt);
    if (which == "conditions")
      return finish(g, id, {id, "flow-conditions", rep.ok() ? td::Verdict::pass : td::Verdict::fail, td::conditions_json(rep),
                            opt.seed, opt.samples});
    const auto seed = td::derive_seed(g.seed, id);
    const std::size_t n = g.budget(100000);
    if (which == "lemacon")
      return finish(g, id,
                    recipe_record(id, "flow-reversal-construction",
                                  td::lemacon_construct(in.flow, rep, in.region, eps, mu, n, seed, g.threads), seed));
    return finish(g, id,
                  recipe_record(id, "flow-composition-step",
                                td::step3_composition_check(in.flow, rep, in.region, eps, mu, n, seed, g.threads), seed));
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workbench for filter derivatives on finite and metric spaces"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--samples", g.samples, "Sample budget per check (default: per-check)")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "Numerical tolerance")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Write the report here instead of stdout");
  app.add_flag("--improper-filters", g.improper, "Admit the improper filter");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")->check(CLI::Range(1u, 256u));

  int status = 0;
  std::string path, base, map_name = "linear-shear", suite_name, function = "polynomial";
  int points = 0, m = 2;
  bool t0 = false;
  double eps = 0.1, mu = 0.5, sigma = 0.5, xs = 0.0;
  std::vector<double> x, u, y, matrix, params;
  std::vector<std::string> p1, p2, q;

  auto* check = app.add_subcommand("check", "Validate an input file")->require_subcommand(1);
  auto file_cmd = [&](CLI::App* parent, const char* name, const char* help, auto fn) {
    auto* c = parent->add_subcommand(name, help);
    c->add_option("file", path, "Input file")->required()->check(CLI::ExistingFile);
    c->callback([&, fn] { status = fn(); });
    return c;
  };
  file_cmd(check, "topology", "Topology axioms and T0", [&] { return check_topology(g, path); });
  file_cmd(check, "map", "Continuity and pushforward continuity", [&] { return check_map(g, path); });
  file_cmd(check, "filter", "Filter axioms and support properties", [&] { return check_filter(g, path); });
  file_cmd(check, "refinement", "Refinement conditions", [&] { return check_refinement(g, path); });
  file_cmd(check, "uniformity", "Uniformity axioms of a principal relation filter",
           [&] { return check_uniformity(g, path, base); })
      ->add_option("--base", base, "Base topology file (default: discrete)")
      ->check(CLI::ExistingFile);

  auto* enumerate = app.add_subcommand("enumerate", "List topologies or filters")->require_subcommand(1);
  auto* en_top = enumerate->add_subcommand("topologies", "All topologies on n points (n <= 4)");
  en_top->add_option("--points,-n", points, "Number of points")->required()->check(CLI::Range(0, 4));
  en_top->add_flag("--t0", t0, "Only T0 topologies");
  en_top->callback([&] { status = enumerate_topologies(g, points, t0); });
  file_cmd(enumerate, "filters", "All filters on a topology file", [&] { return enumerate_filters(g, path); });

  auto* suite = app.add_subcommand("suite", "Run a named verification suite");
  suite->add_option("name", suite_name, "finite-axioms, finite-pushforward, pair-composition, cones, derivative, "
                                        "snowflake, flows, trad2 or all")
      ->required();
  suite->callback([&] {
    const auto rep = td::run_suite(suite_name, g.config(), [](const std::string& s, double secs) {
      std::cerr << s << ": " << secs << " s\n";
    });
    emit(g, td::serialize(rep));
    const auto s = rep.summary();
    std::cerr << "pass " << s.pass << ", fail " << s.fail << ", inconclusive " << s.inconclusive << "\n";
    status = rep.exit_status();
  });

  auto* geom = app.add_subcommand("geom", "Metric filters on Euclidean space")->require_subcommand(1);
  file_cmd(geom, "classify", "Classify a sequence file", [&] { return geom_classify(g, path); });
  auto* cone = geom->add_subcommand("cone", "Membership of a point in a cone generator");
  cone->add_option("--x", x, "Base point")->required();
  cone->add_option("--u", u, "Unit direction")->required();
  cone->add_option("--eps", eps, "Segment length");
  cone->add_option("--sigma", sigma, "Aperture in (0,1)");
  cone->add_option("--y", y, "Query point")->required();
  cone->callback([&] { status = geom_cone(g, x, u, eps, sigma, y); });
  auto* transport = geom->add_subcommand("transport", "Transport a direction through a smooth map");
  transport->add_option("--map", map_name, "Catalog map name");
  transport->add_option("--matrix", matrix, "Row-major square matrix (linear map)");
  transport->add_option("--x", x, "Base point")->required();
  transport->add_option("--u", u, "Unit direction")->required();
  transport->callback([&] { status = geom_transport(g, map_name, matrix, x, u); });

  auto* snow = app.add_subcommand("snowflake", "Polynomial filters on snowflake products")->require_subcommand(1);
  auto* sep = snow->add_subcommand("separate", "Separate two polynomial filters");
  sep->add_option("--m", m, "Snowflake exponent")->check(CLI::Range(2, 16));
  sep->add_option("--p1", p1, "Coefficients, constant first (rationals like 1/2)")->required();
  sep->add_option("--p2", p2, "Coefficients, constant first")->required();
  sep->callback([&] { status = snowflake_separate(g, m, p1, p2); });
  auto* derive = snow->add_subcommand("derive", "Order-m development of f at x against q");
  derive->add_option("--function", function, "polynomial, exp or sin");
  derive->add_option("--params", params, "Function parameters");
  derive->add_option("--x", xs, "Base point");
  derive->add_option("--m", m, "Snowflake exponent")->check(CLI::Range(2, 16));
  derive->add_option("--q", q, "Expected development coefficients")->required();
  derive->callback([&] { status = snowflake_derive(g, function, params, xs, m, q); });

  auto* flow = app.add_subcommand("flow", "Flows on the plane")->require_subcommand(1);
  for (const char* which : {"conditions", "lemacon", "step3", "transport"}) {
    auto* c = file_cmd(flow, which, "Flow check", [&, w = std::string(which)] {
      return flow_command(g, w, path, eps, mu, map_name);
    });
    c->add_option("--eps", eps, "Target generator length");
    c->add_option("--mu", mu, "Target aperture");
    if (std::string(which) == "transport") c->add_option("--map", map_name, "Bi-Lipschitz plane map");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  } catch (const td::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return status;
}
