#pragma once

// Scenario configuration (TOML), the expected-verdict registry, the full
// pipeline, and JSON/CSV report emission.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "specbound/bounds.hpp"
#include "specbound/core.hpp"
#include "specbound/discrete.hpp"
#include "specbound/gauge.hpp"
#include "specbound/kernel.hpp"
#include "specbound/space.hpp"

namespace specbound {

enum class ScenarioKind { polynomial, exponential, coeffgrowth, timechange, outype, custom };
enum class ModelKind { euclidean, profile, sampled };
enum class MomentBackend { continuum, radial, lattice };

struct GridSpec {
  double min = 0.0, max = 0.0;
  std::size_t n = 0;
  std::vector<double> values() const { return log_grid(min, max, n); }
};

struct SpaceSpec {
  Layout layout = Layout::lattice;
  int dim = 1;
  long extent = 100;
  double spacing = 1.0;
  double extent_length = 1e4;  // graded line half-length
  int branching = 2;
  int depth = 10;
  double edge = 1.0;
  // graded 1-D line (cloud layout)
  double inner_spacing = 0.5, inner_extent = 20.0;
  std::size_t points = 400;

  SampledSpace build() const {
    if (layout == Layout::tree) return make_exponential_tree_space(branching, depth, edge);
    if (layout == Layout::cloud) return make_graded_line(inner_spacing, inner_extent, extent_length, points);
    return make_lattice_space(dim, extent, spacing);
  }
};

struct OracleSpec {
  SpaceSpec space;
  double cutoff = kInf;
  std::vector<double> R0{2.0, 4.0, 8.0};
  std::vector<double> Rn;  // empty: fractions of the usable gauge range
  std::optional<double> r;  // empty: argmin of the curve below r_cap
  std::optional<double> alpha;  // empty: growth/2 + alpha_margin
  double alpha_margin = 0.25;
  double r_cap_fraction = 0.8;
  SolverOptions solver;
  std::size_t memory_mib = 1024;
  bool export_form = false;
};

struct LyapunovSpec {
  bool enabled = false;
  std::vector<double> delta{0.1, 0.2, 0.3, 0.4, 0.5};
  double R0 = 5.0;
  double t_max = 200.0;
  std::size_t n_t = 40;
};

struct RatioSpec {
  bool certified = false;
  double delta = 1.0;
  double C2 = 1.0;
  double t_min = 1e-3, t_max = 1e12;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::custom;
  std::string name = "custom";
  std::uint64_t seed = 1;
  Theorem theorem = Theorem::infinite_volume;
  bool recurrent = false;
  bool run_oracles = false;

  ModelKind model_kind = ModelKind::euclidean;
  int dim = 1;
  std::optional<RadialProfile> profile;
  SpaceSpec sampled;

  std::optional<JumpKernel> kernel;
  Modifier modifier = Modifier::none;
  double time_change_p = 1.0;
  std::optional<Potential> potential;
  RatioSpec ratio;

  AdaptedGauge gauge;

  MomentBackend backend = MomentBackend::continuum;
  ContinuumOptions continuum;
  bool completion = true;
  std::size_t sample_points = 64;

  GridSpec r_grid, R_grid;
  OracleSpec oracle;
  LyapunovSpec lyapunov;

  nlohmann::json echo;

  JumpModel model() const {
    switch (modifier) {
      case Modifier::time_change:
        return JumpModel::time_changed(*kernel, {time_change_p});
      case Modifier::tilted:
        return JumpModel::tilted(*kernel, *potential);
      case Modifier::none:
        break;
    }
    return JumpModel(*kernel);
  }

  /// Volume profile of the analytic model (Lebesgue balls for euclidean).
  RadialProfile volume_profile() const {
    if (model_kind == ModelKind::profile) return *profile;
    return RadialProfile::polynomial(unit_ball_volume(dim), dim);
  }

  /// Volume exponent η and jump index β used by the registry.
  double eta() const { return model_kind == ModelKind::profile ? profile->eta() : dim; }
  double beta() const {
    const auto& k = kernel->params();
    switch (kernel->family()) {
      case KernelFamily::fractional:
      case KernelFamily::hyperbolic:
        return k.alpha;
      case KernelFamily::two_regime:
      case KernelFamily::exp_tilted:
        return k.beta1;
      case KernelFamily::coeff_growth:
        return k.beta;
    }
    return k.alpha;
  }
};

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::polynomial:
      return "polynomial";
    case ScenarioKind::exponential:
      return "exponential";
    case ScenarioKind::coeffgrowth:
      return "coeffgrowth";
    case ScenarioKind::timechange:
      return "timechange";
    case ScenarioKind::outype:
      return "outype";
    case ScenarioKind::custom:
      return "custom";
  }
  return "custom";
}

// ---------------------------------------------------------------------------
// TOML parsing

namespace detail {

inline nlohmann::json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    nlohmann::json j = nlohmann::json::object();
    for (auto&& [k, v] : *t) j[std::string(k.str())] = toml_to_json(v);
    return j;
  }
  if (auto a = node.as_array()) {
    nlohmann::json j = nlohmann::json::array();
    for (auto&& v : *a) j.push_back(toml_to_json(v));
    return j;
  }
  if (auto v = node.as_string()) return v->get();
  if (auto v = node.as_integer()) return v->get();
  if (auto v = node.as_floating_point()) {
    const double d = v->get();
    if (std::isfinite(d)) return d;
    return d > 0 ? "inf" : (d < 0 ? "-inf" : "nan");
  }
  if (auto v = node.as_boolean()) return v->get();
  return nullptr;
}

/// Typed reader over one TOML table that rejects unknown keys.
class Reader {
 public:
  Reader(const toml::table* t, std::string path) : t_(t), path_(std::move(path)) {}

  bool has(const std::string& key) const { return t_ && t_->contains(key); }

  double num(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const toml::node* n = get(key);
    if (!n) return required(key, fallback);
    if (auto v = n->as_floating_point()) return v->get();
    if (auto v = n->as_integer()) return static_cast<double>(v->get());
    throw InvalidArgument("config: " + where(key) + " must be a number");
  }

  long integer(const std::string& key, std::optional<long> fallback = std::nullopt) {
    const toml::node* n = get(key);
    if (!n) {
      if (!fallback) throw InvalidArgument("config: missing required key " + where(key));
      return *fallback;
    }
    if (auto v = n->as_integer()) return static_cast<long>(v->get());
    throw InvalidArgument("config: " + where(key) + " must be an integer");
  }

  bool boolean(const std::string& key, bool fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    if (auto v = n->as_boolean()) return v->get();
    throw InvalidArgument("config: " + where(key) + " must be a boolean");
  }

  std::string str(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const toml::node* n = get(key);
    if (!n) {
      if (!fallback) throw InvalidArgument("config: missing required key " + where(key));
      return *fallback;
    }
    if (auto v = n->as_string()) return v->get();
    throw InvalidArgument("config: " + where(key) + " must be a string");
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const toml::node* n = get(key);
    if (!n) return fallback;
    auto a = n->as_array();
    if (!a) throw InvalidArgument("config: " + where(key) + " must be an array of numbers");
    std::vector<double> out;
    for (auto&& e : *a) {
      if (auto v = e.as_floating_point()) out.push_back(v->get());
      else if (auto v = e.as_integer()) out.push_back(static_cast<double>(v->get()));
      else throw InvalidArgument("config: " + where(key) + " must be an array of numbers");
    }
    return out;
  }

  Reader sub(const std::string& key, bool required_table = false) {
    const toml::node* n = get(key);
    if (!n) {
      if (required_table) throw InvalidArgument("config: missing required table [" + where(key) + "]");
      return Reader(nullptr, where(key));
    }
    auto t = n->as_table();
    if (!t) throw InvalidArgument("config: " + where(key) + " must be a table");
    return Reader(t, where(key));
  }

  bool present() const { return t_ != nullptr; }

  void finish() const {
    if (!t_) return;
    for (auto&& [k, v] : *t_) {
      const std::string key(k.str());
      if (!used_.count(key)) throw InvalidArgument("config: unknown key " + where(key));
    }
  }

 private:
  const toml::node* get(const std::string& key) {
    used_.insert(key);
    if (!t_) return nullptr;
    return t_->get(key);
  }
  double required(const std::string& key, std::optional<double> fallback) const {
    if (!fallback) throw InvalidArgument("config: missing required key " + where(key));
    return *fallback;
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const toml::table* t_;
  std::string path_;
  std::set<std::string> used_;
};

template <class E>
E pick(const std::string& what, const std::string& value, std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [n, e] : options) {
    if (value == n) return e;
    names += names.empty() ? n : std::string(", ") + n;
  }
  throw InvalidArgument("config: " + what + " = '" + value + "' is not one of {" + names + "}");
}

inline GridSpec read_grid(Reader r, const std::string& name) {
  GridSpec g;
  g.min = r.num("min");
  g.max = r.num("max");
  g.n = static_cast<std::size_t>(r.integer("n"));
  r.finish();
  require(g.min > 0.0 && g.max > g.min, "config: grids." + name + " needs 0 < min < max");
  require(g.n >= 2, "config: grids." + name + ".n must be at least 2");
  return g;
}

inline SpaceSpec read_space(Reader& r, const std::string& layout_key) {
  SpaceSpec s;
  s.layout = pick<Layout>(layout_key, r.str(layout_key, "lattice"),
                          {{"lattice", Layout::lattice}, {"tree", Layout::tree}, {"graded", Layout::cloud}});
  if (s.layout == Layout::cloud) {
    s.dim = 1;
    s.inner_spacing = r.num("inner_spacing", 0.5);
    s.inner_extent = r.num("inner_extent", 20.0);
    s.extent_length = r.num("extent");
    s.points = static_cast<std::size_t>(r.integer("points", 400));
    require(s.inner_spacing > 0.0 && s.inner_extent >= s.inner_spacing,
            "config: graded space needs 0 < inner_spacing <= inner_extent");
    require(s.extent_length > s.inner_extent, "config: graded space needs extent > inner_extent");
    require(s.points >= 2 && s.points <= 20000, "config: graded space needs points in [2, 20000]");
  } else if (s.layout == Layout::lattice) {
    s.dim = static_cast<int>(r.integer("dim", 1));
    s.extent = r.integer("extent");
    s.spacing = r.num("spacing", 1.0);
    require(s.dim == 1 || s.dim == 2, "config: lattice dim must be 1 or 2");
    require(s.extent >= 2, "config: lattice extent must be at least 2");
    require(s.spacing > 0.0, "config: lattice spacing must be positive");
  } else {
    s.branching = static_cast<int>(r.integer("branching", 2));
    s.depth = static_cast<int>(r.integer("depth"));
    s.edge = r.num("edge", 1.0);
    require(s.branching >= 2, "config: tree branching must be at least 2");
    require(s.depth >= 1 && s.depth <= 22, "config: tree depth must lie in [1, 22]");
    require(s.edge > 0.0, "config: tree edge length must be positive");
  }
  return s;
}

}  // namespace detail

/// Parses and validates a scenario; every rejected parameter names its constraint.
inline ScenarioConfig parse_config(const toml::table& root) {
  using detail::pick;
  ScenarioConfig c;
  c.echo = detail::toml_to_json(root);
  detail::Reader top(&root, "");
  c.name = top.str("scenario");
  c.kind = pick<ScenarioKind>("scenario", c.name,
                              {{"polynomial", ScenarioKind::polynomial},
                               {"exponential", ScenarioKind::exponential},
                               {"coeffgrowth", ScenarioKind::coeffgrowth},
                               {"timechange", ScenarioKind::timechange},
                               {"outype", ScenarioKind::outype},
                               {"custom", ScenarioKind::custom}});
  const long seed = top.integer("seed", 1);
  require(seed >= 0, "config: seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  c.theorem = pick<Theorem>("theorem", top.str("theorem", "infinite_volume"),
                            {{"infinite_volume", Theorem::infinite_volume}, {"finite_volume", Theorem::finite_volume}});
  c.recurrent = top.boolean("recurrent", false);
  c.run_oracles = top.boolean("run_oracles", false);

  {  // [space]
    auto s = top.sub("space", true);
    c.model_kind = pick<ModelKind>("space.model", s.str("model"),
                                   {{"euclidean", ModelKind::euclidean},
                                    {"profile", ModelKind::profile},
                                    {"sampled", ModelKind::sampled}});
    if (c.model_kind == ModelKind::euclidean) {
      c.dim = static_cast<int>(s.integer("dim", 1));
      require(c.dim == 1 || c.dim == 2, "config: space.dim must be 1 or 2");
    } else if (c.model_kind == ModelKind::profile) {
      const auto kind = s.str("profile");
      if (kind == "polynomial") {
        c.profile = RadialProfile::polynomial(s.num("C1", 1.0), s.num("eta"));
      } else if (kind == "two_regime") {
        c.profile = RadialProfile::two_regime(s.num("C1", 1.0), s.num("eta"), s.num("C2", 0.0), s.num("kappa"));
      } else if (kind == "exponential") {
        c.profile = RadialProfile::exponential(s.num("C", 1.0), s.num("kappa"));
      } else if (kind == "hyperbolic") {
        c.profile = RadialProfile::hyperbolic(static_cast<int>(s.integer("n")));
      } else {
        throw InvalidArgument("config: space.profile = '" + kind +
                              "' is not one of {polynomial, two_regime, exponential, hyperbolic}");
      }
    } else {
      c.sampled = detail::read_space(s, "layout");
      c.dim = c.sampled.dim;
    }
    s.finish();
  }

  {  // [kernel]
    auto k = top.sub("kernel", true);
    const auto family = k.str("family");
    if (family == "fractional") {
      c.kernel = JumpKernel::fractional(k.num("eta"), k.num("alpha"), k.num("C", 1.0));
      require(c.kernel->params().alpha < 2.0, "config: fractional kernel needs alpha < 2");
    } else if (family == "two_regime") {
      c.kernel = JumpKernel::two_regime(k.num("eta"), k.num("beta1"), k.num("beta2"), k.num("C2", 1.0),
                                        k.num("C3", 1.0));
    } else if (family == "exp_tilted") {
      c.kernel = JumpKernel::exp_tilted(k.num("eta"), k.num("beta1"), k.num("beta2"), k.num("lambda"),
                                        k.num("C3", 1.0), k.num("C4", 1.0));
    } else if (family == "coeff_growth") {
      c.kernel = JumpKernel::coeff_growth(k.num("eta"), k.num("beta"), k.num("p"), k.num("q"), k.num("C2", 1.0));
    } else if (family == "hyperbolic") {
      c.kernel = JumpKernel::hyperbolic(static_cast<int>(k.integer("n")), k.num("alpha"), k.num("upper", 1.0),
                                        k.num("lower", 1.0), k.boolean("use_lower", false));
    } else {
      throw InvalidArgument("config: kernel.family = '" + family +
                            "' is not one of {fractional, two_regime, exp_tilted, coeff_growth, hyperbolic}");
    }
    k.finish();
  }

  {  // [modifier]
    auto m = top.sub("modifier");
    c.modifier = pick<Modifier>("modifier.kind", m.str("kind", "none"),
                                {{"none", Modifier::none}, {"time_change", Modifier::time_change}, {"tilted", Modifier::tilted}});
    if (c.modifier == Modifier::time_change) {
      c.time_change_p = m.num("p");
      require(c.time_change_p > 0.0, "config: modifier.p must be positive");
    }
    if (c.modifier == Modifier::tilted) {
      auto v = m.sub("potential", true);
      const auto kind = v.str("kind");
      if (kind == "power") c.potential = Potential::power(v.num("a"), v.num("gamma"));
      else if (kind == "log_power") c.potential = Potential::log_power(v.num("theta"));
      else if (kind == "log_loglog") c.potential = Potential::log_loglog(v.num("theta"), v.num("kappa"));
      else if (kind == "custom")
        c.potential = Potential::custom(v.numbers("t", {}), v.numbers("values", {}));
      else
        throw InvalidArgument("config: modifier.potential.kind = '" + kind +
                              "' is not one of {power, log_power, log_loglog, custom}");
      v.finish();
      auto r = m.sub("ratio");
      if (r.present()) {
        c.ratio.certified = true;
        c.ratio.delta = r.num("delta");
        c.ratio.C2 = r.num("C2");
        c.ratio.t_min = r.num("t_min", 1e-3);
        c.ratio.t_max = r.num("t_max", 1e12);
        require(c.ratio.delta > 0.0 && c.ratio.C2 > 0.0, "config: modifier.ratio needs delta, C2 > 0");
        require(c.ratio.t_min > 0.0 && c.ratio.t_max > c.ratio.t_min, "config: modifier.ratio needs 0 < t_min < t_max");
      }
      r.finish();
      require(c.potential->nondecreasing_on(1e3), "config: potential must be nondecreasing");
    }
    m.finish();
  }

  {  // [gauge]
    auto g = top.sub("gauge");
    c.gauge.rho_kind = pick<RhoKind>("gauge.rho", g.str("rho", "identity"),
                                     {{"identity", RhoKind::identity},
                                      {"power_shift", RhoKind::power_shift},
                                      {"log_shift", RhoKind::log_shift}});
    c.gauge.f_kind = pick<FKind>("gauge.F", g.str("F", "constant"),
                                 {{"constant", FKind::constant}, {"power_max", FKind::power_max}, {"linear_max", FKind::linear_max}});
    c.gauge.delta = g.num("delta", 0.5);
    c.gauge.offset = g.num("offset", 1.0);
    c.gauge.c_star = g.num("c_star", 0.5);
    c.gauge.gamma_sup = g.num("gamma_sup", 0.0);
    g.finish();
    c.gauge.validate();
  }

  {  // [moments]
    auto m = top.sub("moments");
    c.backend = pick<MomentBackend>("moments.backend", m.str("backend", "continuum"),
                                    {{"continuum", MomentBackend::continuum},
                                     {"radial", MomentBackend::radial},
                                     {"lattice", MomentBackend::lattice}});
    c.continuum.dim = c.dim;
    c.continuum.probes = static_cast<std::size_t>(m.integer("probes", 24));
    c.continuum.t_min_factor = m.num("t_min_factor", 1e-2);
    c.continuum.t_max_factor = m.num("t_max_factor", 1e4);
    c.continuum.refine_iters = static_cast<int>(m.integer("refine", 10));
    c.completion = m.boolean("completion", true);
    c.sample_points = static_cast<std::size_t>(m.integer("sample_points", 64));
    m.finish();
    require(c.continuum.probes >= 2, "config: moments.probes must be at least 2");
    require(c.continuum.t_min_factor > 0.0 && c.continuum.t_max_factor > c.continuum.t_min_factor,
            "config: moments needs 0 < t_min_factor < t_max_factor");
    require(c.sample_points >= 1, "config: moments.sample_points must be positive");
  }

  {  // [grids]
    auto g = top.sub("grids", true);
    c.r_grid = detail::read_grid(g.sub("r", true), "r");
    c.R_grid = detail::read_grid(g.sub("R", true), "R");
    g.finish();
    require(c.r_grid.n >= 16, "config: grids.r.n must be at least 16");
    require(c.R_grid.n >= 8, "config: grids.R.n must be at least 8");
  }

  {  // [oracle]
    auto o = top.sub("oracle");
    if (o.present()) {
      c.oracle.space = detail::read_space(o, "space");
      c.oracle.cutoff = o.num("cutoff", kInf);
      c.oracle.R0 = o.numbers("R0", c.oracle.R0);
      c.oracle.Rn = o.numbers("Rn", {});
      if (o.has("r")) c.oracle.r = o.num("r");
      if (o.has("alpha")) c.oracle.alpha = o.num("alpha");
      c.oracle.alpha_margin = o.num("alpha_margin", 0.25);
      c.oracle.r_cap_fraction = o.num("r_cap_fraction", 0.8);
      c.oracle.solver.tol = o.num("solver_tol", 1e-8);
      c.oracle.solver.budget = static_cast<std::size_t>(o.integer("budget", 10000));
      c.oracle.memory_mib = static_cast<std::size_t>(o.integer("memory_mib", 1024));
      c.oracle.export_form = o.boolean("export_form", false);
      c.oracle.solver.seed = c.seed;
      require(c.oracle.cutoff > 0.0, "config: oracle.cutoff must be positive");
      require(!c.oracle.R0.empty(), "config: oracle.R0 ladder must not be empty");
      for (std::size_t i = 0; i < c.oracle.R0.size(); ++i) {
        require(c.oracle.R0[i] >= 0.0, "config: oracle.R0 entries must be nonnegative");
        if (i) require(c.oracle.R0[i] > c.oracle.R0[i - 1], "config: oracle.R0 ladder must increase");
      }
      for (std::size_t i = 0; i < c.oracle.Rn.size(); ++i) {
        require(c.oracle.Rn[i] > 0.0, "config: oracle.Rn entries must be positive");
        if (i) require(c.oracle.Rn[i] > c.oracle.Rn[i - 1], "config: oracle.Rn ladder must increase");
      }
      require(c.oracle.alpha_margin > 0.0, "config: oracle.alpha_margin must be positive");
      require(c.oracle.r_cap_fraction > 0.0 && c.oracle.r_cap_fraction <= 1.0,
              "config: oracle.r_cap_fraction must lie in (0, 1]");
      require(c.oracle.solver.tol > 0.0 && c.oracle.solver.tol < 1e-2, "config: oracle.solver_tol must lie in (0, 1e-2)");
      if (c.oracle.r) require(*c.oracle.r > 0.0, "config: oracle.r must be positive");
    } else if (c.run_oracles) {
      throw InvalidArgument("config: run_oracles = true needs an [oracle] table");
    }
    o.finish();
  }

  {  // [lyapunov]
    auto l = top.sub("lyapunov");
    c.lyapunov.enabled = l.present() && l.boolean("enabled", true);
    c.lyapunov.delta = l.numbers("delta", c.lyapunov.delta);
    c.lyapunov.R0 = l.num("R0", 5.0);
    c.lyapunov.t_max = l.num("t_max", 200.0);
    c.lyapunov.n_t = static_cast<std::size_t>(l.integer("n_t", 40));
    l.finish();
    if (c.lyapunov.enabled) {
      require(c.modifier == Modifier::time_change && c.kernel->family() == KernelFamily::fractional,
              "config: lyapunov needs a time-changed fractional kernel");
      require(c.dim > c.kernel->params().alpha, "config: lyapunov needs d > alpha");
      require(std::abs(c.time_change_p - c.kernel->params().alpha) <= 1e-12, "config: lyapunov needs p = alpha");
      require(c.lyapunov.R0 > 0.0 && c.lyapunov.t_max > c.lyapunov.R0, "config: lyapunov needs 0 < R0 < t_max");
    }
  }
  top.finish();

  // cross-field constraints
  if (c.theorem == Theorem::finite_volume)
    require(c.recurrent, "config: the finite-volume theorem needs recurrent = true");
  if (c.backend == MomentBackend::continuum)
    require(c.model_kind == ModelKind::euclidean, "config: moments.backend = continuum needs space.model = euclidean");
  if (c.backend == MomentBackend::radial) {
    require(c.model_kind != ModelKind::sampled, "config: moments.backend = radial needs an analytic volume model");
    require(c.modifier == Modifier::none && c.kernel->is_radial(),
            "config: moments.backend = radial needs a radial kernel without measure change");
    require(c.gauge.rho_kind == RhoKind::identity && c.gauge.constant_threshold(),
            "config: moments.backend = radial needs gauge.rho = identity and gauge.F = constant");
  }
  if (c.backend == MomentBackend::lattice)
    require(c.model_kind == ModelKind::sampled && c.sampled.layout == Layout::lattice,
            "config: moments.backend = lattice needs a sampled lattice space");
  if (c.model_kind == ModelKind::sampled && c.backend != MomentBackend::lattice)
    throw InvalidArgument("config: a sampled space needs moments.backend = lattice");

  const auto& kp = c.kernel->params();
  switch (c.kind) {
    case ScenarioKind::polynomial:
      require(c.kernel->family() == KernelFamily::fractional || c.kernel->family() == KernelFamily::two_regime,
              "config: polynomial needs a fractional or two_regime kernel");
      require(c.model_kind != ModelKind::profile || c.profile->kind() == ProfileKind::polynomial,
              "config: polynomial needs a polynomial volume profile");
      break;
    case ScenarioKind::exponential:
      require(c.kernel->family() == KernelFamily::exp_tilted, "config: exponential needs an exp_tilted kernel");
      require(c.model_kind == ModelKind::profile && c.profile->kind() == ProfileKind::two_regime,
              "config: exponential needs a two_regime volume profile");
      require(kp.lambda >= c.profile->kappa(), "config: exponential needs lambda >= kappa");
      require(kp.lambda > c.profile->kappa() || kp.beta2 > 1.0,
              "config: exponential with lambda = kappa needs beta2 > 1");
      break;
    case ScenarioKind::coeffgrowth:
      require(c.kernel->family() == KernelFamily::coeff_growth, "config: coeffgrowth needs a coeff_growth kernel");
      require(kp.p >= 0.0 && kp.p <= 2.0, "config: coeffgrowth needs p in [0,2]");
      require(kp.q < kp.beta && kp.beta < 2.0, "config: coeffgrowth needs q < beta < 2");
      break;
    case ScenarioKind::timechange:
      require(c.modifier == Modifier::time_change, "config: timechange needs modifier.kind = time_change");
      break;
    case ScenarioKind::outype:
      require(c.modifier == Modifier::tilted, "config: outype needs modifier.kind = tilted");
      require(c.ratio.certified, "config: outype needs a [modifier.ratio] table");
      require(c.potential->ratio_holds(c.ratio.delta, c.ratio.C2, log_grid(c.ratio.t_min, c.ratio.t_max, 200)),
              "config: outype needs a potential satisfying the ratio condition e^{V(r)-V(s)} <= C2 (r/s)^delta");
      require(c.theorem == Theorem::finite_volume, "config: outype needs theorem = finite_volume");
      break;
    case ScenarioKind::custom:
      break;
  }
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  toml::table root;
  try {
    root = toml::parse_file(path.string());
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: cannot parse " << path.string() << ": " << e.description() << " at line "
       << e.source().begin.line;
    throw IoError(os.str());
  }
  return parse_config(root);
}

// ---------------------------------------------------------------------------
// Expected verdicts

struct Expectation {
  Verdict verdict = Verdict::inconclusive;
  std::string rationale;
};

/// Verdicts the theory predicts for the named scenarios at the configured parameters.
inline std::optional<Expectation> expected_verdict(const ScenarioConfig& c) {
  const auto& kp = c.kernel->params();
  switch (c.kind) {
    case ScenarioKind::polynomial:
      return Expectation{Verdict::zero,
                         "polynomial volume growth: growth exponent 0 and big-jump rate decaying like r^-beta"};
    case ScenarioKind::exponential:
      return Expectation{Verdict::finite,
                         "exponential volume growth with lambda = kappa: bound minimized at finite r, "
                         "kappa^2/4 M1 + 2 M2 balances r^(3-beta2) against r^(1-beta2)"};
    case ScenarioKind::coeffgrowth:
      if (kp.p < 2.0)
        return Expectation{Verdict::zero, "coefficient exponent p < 2: power gauge gives growth 0 and M1, M2 -> 0"};
      return Expectation{Verdict::finite, "coefficient exponent p = 2: log gauge gives growth eta and bounded M1, M2"};
    case ScenarioKind::timechange: {
      const double p = c.time_change_p, eta = c.eta(), beta = c.beta();
      const double tol = 1e-12;
      if (p < beta - tol) {
        if (p <= eta + tol) return Expectation{Verdict::zero, "time change p < beta, p <= eta: growth 0, M1, M2 -> 0"};
        return Expectation{Verdict::zero, "time change eta < p < beta: finite volume, complement decay rate 0"};
      }
      if (std::abs(p - beta) <= tol) {
        if (p < eta - tol)
          return Expectation{Verdict::finite, "time change p = beta < eta: log gauge, growth eta - p, M2 bounded"};
        if (std::abs(p - eta) <= tol)
          return Expectation{Verdict::zero, "time change p = beta = eta: log gauge volume grows linearly in R"};
        return Expectation{Verdict::finite, "time change p = beta > eta: finite volume, complement decays like e^-(p-eta)R"};
      }
      return std::nullopt;
    }
    case ScenarioKind::outype: {
      // classify r^{-(eta+beta)} e^{V(r)} by its trend between 1e6 and 1e12
      const double s = c.eta() + c.beta();
      auto h = [&](double r) { return (*c.potential)(r) - s * std::log(r); };
      const double drift = h(1e12) - h(1e6);
      if (drift < std::log(0.75))
        return Expectation{Verdict::zero, "OU type: r^-(eta+beta) e^V(r) -> 0 and the complement decay rate is 0"};
      if (drift > -std::log(0.75))
        return Expectation{Verdict::unbounded, "OU type: r^-(eta+beta) e^V(r) -> infinity"};
      return Expectation{Verdict::finite, "OU type: r^-(eta+beta) e^V(r) stays bounded"};
    }
    case ScenarioKind::custom:
      return std::nullopt;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Pipeline

inline GrowthEstimate scenario_growth(const ScenarioConfig& c, double r) {
  const auto model = c.model();
  const auto R = c.R_grid.values();
  if (c.model_kind == ModelKind::sampled) {
    const auto space = c.sampled.build();
    return c.theorem == Theorem::infinite_volume ? estimate_mu(space, model, c.gauge, r, R)
                                                 : estimate_nu(space, model, c.gauge, r, R);
  }
  const auto profile = c.volume_profile();
  return c.theorem == Theorem::infinite_volume ? estimate_mu(profile, model, c.gauge, r, R)
                                               : estimate_nu(profile, model, c.gauge, r, R);
}

inline std::vector<JumpMoments> scenario_moments(const ScenarioConfig& c, unsigned threads) {
  const auto model = c.model();
  const auto rs = c.r_grid.values();
  std::vector<JumpMoments> out;
  out.reserve(rs.size());
  std::optional<SampledSpace> space;
  if (c.backend == MomentBackend::lattice) space = c.sampled.build();
  const auto profile = c.volume_profile();
  for (double r : rs) {
    switch (c.backend) {
      case MomentBackend::continuum: {
        auto opt = c.continuum;
        opt.threads = threads;
        out.push_back(compute_moments_continuum(model, c.gauge, r, opt));
        break;
      }
      case MomentBackend::radial:
        out.push_back(compute_moments_radial(profile, model, c.gauge, r));
        break;
      case MomentBackend::lattice: {
        const auto xs = core_sample(*space, c.gauge, r, c.sample_points);
        out.push_back(compute_moments(*space, model, c.gauge, r, xs, {c.completion, threads}));
        break;
      }
    }
  }
  return out;
}

struct OracleReport {
  std::string space;
  Index points = 0;
  std::size_t pairs = 0;
  double cutoff = kInf;
  double dropped_mass_bound = 0.0;
  double inscribed_radius = 0.0;
  double r_cap = 0.0;
  double r = 0.0;
  double alpha = 0.0;
  double growth = 0.0;
  Variant variant = Variant::infinite_volume;
  std::optional<double> best_bound;  // curve minimum over r ≤ r_cap
  std::optional<double> best_r;
  std::vector<PerssonResult> ladder;
  PerssonResult persson_zero;
  std::vector<LadderRung> rungs;
  JumpMoments form_moments;
  LemmaReport lemma;
  bool ratio_increasing = false;
  std::optional<bool> persson_within_bound;  // ladder top ≤ 1.05·(global best bound)
  // Persson value at the largest ladder R0 whose ball lies in the zero set
  // of the top-rung test function (R0 = 0 when there is none)
  PerssonResult persson_matched;
  bool rayleigh_above_persson = false;
  std::optional<DiscreteForm> form;  // kept only for export
  std::optional<SampledSpace> sampled;
};

struct LyapunovReport {
  std::optional<LyapunovCertificate> certificate;
  std::optional<double> persson_top;
  std::optional<bool> persson_above_half_C0;
};

struct RunReport {
  ScenarioConfig config;
  bool oracle_only = false;
  GrowthEstimate growth;
  std::optional<BoundReport> bound;
  std::optional<Expectation> expected;
  std::optional<bool> match;
  std::optional<OracleReport> oracle;
  std::optional<LyapunovReport> lyapunov;
  std::vector<std::string> warnings;
};

inline OracleReport run_oracles(const ScenarioConfig& c, const GrowthEstimate& growth,
                                const std::optional<BoundReport>& bound, unsigned threads) {
  const auto& o = c.oracle;
  OracleReport rep;
  auto space = o.space.build();
  switch (o.space.layout) {
    case Layout::tree:
      rep.space = "tree(b=" + std::to_string(o.space.branching) + ", depth=" + std::to_string(o.space.depth) + ")";
      break;
    case Layout::cloud:
      rep.space = "graded line(points=" + std::to_string(space.size()) + ")";
      break;
    case Layout::lattice:
      rep.space = "lattice(dim=" + std::to_string(o.space.dim) + ", extent=" + std::to_string(o.space.extent) + ")";
      break;
  }
  rep.points = space.size();
  rep.inscribed_radius = space.inscribed_radius();
  rep.r_cap = o.r_cap_fraction * rep.inscribed_radius;
  rep.growth = growth.value;
  rep.variant = c.theorem == Theorem::infinite_volume ? Variant::infinite_volume : Variant::finite_volume;
  rep.alpha = o.alpha ? *o.alpha : 0.5 * growth.value + o.alpha_margin;
  require(rep.alpha > 0.5 * growth.value, "oracle: alpha must exceed growth/2");

  if (bound) {
    for (const auto& p : bound->curve)
      if (p.r <= rep.r_cap && (!rep.best_bound || p.bound < *rep.best_bound)) {
        rep.best_bound = p.bound;
        rep.best_r = p.r;
      }
  }
  if (o.r) rep.r = *o.r;
  else if (rep.best_r) rep.r = *rep.best_r;
  else {
    rep.r = c.r_grid.min;
    for (double r : c.r_grid.values())
      if (r <= rep.r_cap) rep.r = r;
  }

  const auto model = c.model();
  AssemblyOptions ao;
  ao.cutoff = o.cutoff;
  ao.memory_budget = o.memory_mib * std::size_t{1048576};
  ao.threads = threads;
  auto form = assemble(space, model, ao);
  rep.pairs = form.pairs().size();
  rep.cutoff = form.cutoff();
  rep.dropped_mass_bound = form.dropped_mass_bound();

  rep.ladder = persson_ladder(form, o.R0, o.solver);
  rep.persson_zero = persson_exterior_lambda(form, 0.0, o.solver);

  std::vector<double> Rn = o.Rn;
  if (Rn.empty()) {
    // spread the ladder over the range of ρ_r actually present in the box
    // capped so that e^{αRₙ} stays well inside double range
    const double lo = c.gauge.rho(rep.r, 0.0);
    const double hi = std::min(c.gauge.rho(rep.r, rep.inscribed_radius), lo + 200.0 / rep.alpha);
    for (double q : {0.4, 0.6, 0.8, 1.0})
      Rn.push_back(rep.variant == Variant::infinite_volume ? 2.0 * (lo + 0.5 * q * (hi - lo)) : lo + q * (hi - lo));
  }
  std::vector<double> probe(space.size(), 0.0);
  probe[space.origin()] = 1.0 / std::sqrt(form.measure()[space.origin()]);
  rep.rungs = test_function_ladder(form, rep.variant, c.gauge, rep.r, rep.alpha, Rn, growth.value, probe);
  rep.ratio_increasing = true;
  for (std::size_t i = 1; i < rep.rungs.size(); ++i)
    if (!(rep.rungs[i].norm_ratio > rep.rungs[i - 1].norm_ratio)) rep.ratio_increasing = false;

  rep.form_moments = moments_from_form(form, c.gauge, rep.r);
  const auto tf = build_test_function(rep.variant, c.gauge, rep.r, rep.alpha, Rn.back(), space, growth.value);
  rep.lemma = lemma_check(form, tf, rep.form_moments, c.gauge);

  double support_d0 = kInf;
  for (Index i = 0; i < space.size(); ++i)
    if (tf.f[i] != 0.0) support_d0 = std::min(support_d0, space.d0(i));
  rep.persson_matched = rep.persson_zero;
  for (const auto& p : rep.ladder)
    if (p.R0 < support_d0) rep.persson_matched = p;
  const double slack = 1.0 + 10.0 * o.solver.tol;
  rep.rayleigh_above_persson = rep.rungs.back().rayleigh * slack >= rep.persson_matched.lambda;
  if (bound && std::isfinite(bound->best_bound))
    rep.persson_within_bound = rep.ladder.back().lambda <= 1.05 * bound->best_bound;
  if (o.export_form) rep.form = std::move(form);
  rep.sampled = std::move(space);
  return rep;
}

/// Runs the configured pipeline. `oracle_only` skips the bound curve.
inline RunReport run_scenario(const ScenarioConfig& c, unsigned threads = 1, bool oracle_only = false) {
  RunReport rep;
  rep.config = c;
  rep.oracle_only = oracle_only;
  const double r0 = c.r_grid.min;
  rep.growth = scenario_growth(c, r0);
  if (!oracle_only) {
    const auto moments = scenario_moments(c, threads);
    rep.bound = optimize_bound(c.theorem, rep.growth, moments, c.recurrent);
    rep.expected = expected_verdict(c);
    if (rep.expected) rep.match = rep.expected->verdict == rep.bound->verdict;
  }
  if (c.run_oracles || oracle_only) {
    try {
      rep.oracle = run_oracles(c, rep.growth, rep.bound, threads);
    } catch (const std::exception& e) {
      rep.warnings.push_back(std::string("oracle failed: ") + e.what());
    }
  }
  if (c.lyapunov.enabled) {
    LyapunovReport ly;
    ly.certificate = lyapunov_lower_bound(c.dim, c.kernel->params().alpha, c.time_change_p, c.lyapunov.delta,
                                          c.lyapunov.R0, c.lyapunov.t_max, c.lyapunov.n_t);
    if (rep.oracle) {
      ly.persson_top = rep.oracle->ladder.back().lambda;
      if (ly.certificate) ly.persson_above_half_C0 = *ly.persson_top >= 0.5 * ly.certificate->C0;
      if (rep.oracle->ladder.back().R0 < c.lyapunov.R0)
        rep.warnings.push_back("lyapunov: the R0 ladder top lies inside the certified exterior radius");
    }
    if (!ly.certificate) rep.warnings.push_back("lyapunov: no delta in the grid certifies a positive constant");
    rep.lyapunov = ly;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {
inline nlohmann::json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline nlohmann::json moments_json(const JumpMoments& m) {
  nlohmann::json j{{"r", num(m.r)}, {"M1", num(m.M1)}, {"M2", num(m.M2)}, {"M1_d0", num(m.M1_d0)},
                   {"M2_d0", num(m.M2_d0)}};
  if (m.M1_point != kNoPoint) j["M1_point"] = m.M1_point;
  if (m.M2_point != kNoPoint) j["M2_point"] = m.M2_point;
  if (!m.diagnostic.empty()) j["diagnostic"] = m.diagnostic;
  return j;
}

inline nlohmann::json persson_json(const PerssonResult& p) {
  return {{"R0", num(p.R0)},
          {"lambda", num(p.lambda)},
          {"residual", num(p.residual)},
          {"iterations", p.iterations},
          {"exterior_size", p.exterior_size}};
}
}  // namespace detail

inline nlohmann::json report_json(const RunReport& rep) {
  using detail::num;
  nlohmann::json j;
  j["scenario"] = rep.config.name;
  j["config"] = rep.config.echo;
  j["mode"] = rep.oracle_only ? "oracle" : "run";
  j["theorem"] = to_string(rep.config.theorem);
  const auto& g = rep.growth;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& [R, lv] : g.samples) samples.push_back({num(R), num(lv)});
  j["growth"] = {{"kind", g.kind == GrowthKind::mu ? "mu" : "nu"},
                 {"value", num(g.value)},
                 {"regression", num(g.regression)},
                 {"window", {num(g.R_lo), num(g.R_hi)}},
                 {"method", "tail-min"},
                 {"skipped", g.skipped},
                 {"samples", samples}};
  if (rep.bound) {
    const auto& b = *rep.bound;
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : b.curve)
      curve.push_back({{"r", num(p.r)}, {"M1", num(p.M1)}, {"M2", num(p.M2)}, {"bound", num(p.bound)}});
    j["curve"] = curve;
    j["best_r"] = num(b.best_r);
    j["best_bound"] = num(b.best_bound);
    j["top_decade_slope"] = num(b.top_decade_slope);
    j["top_decade_monotone"] = b.top_decade_monotone;
    j["verdict"] = to_string(b.verdict);
    j["verdict_reason"] = b.reason;
  }
  if (rep.expected) {
    j["expected"] = {{"verdict", to_string(rep.expected->verdict)}, {"rationale", rep.expected->rationale}};
  } else {
    j["expected"] = nullptr;
  }
  j["match"] = rep.match ? nlohmann::json(*rep.match) : nlohmann::json(nullptr);
  if (rep.oracle) {
    const auto& o = *rep.oracle;
    nlohmann::json ladder = nlohmann::json::array(), rungs = nlohmann::json::array();
    for (const auto& p : o.ladder) ladder.push_back(detail::persson_json(p));
    for (const auto& r : o.rungs)
      rungs.push_back({{"Rn", num(r.Rn)},
                       {"norm_ratio", num(r.norm_ratio)},
                       {"rayleigh", num(r.rayleigh)},
                       {"overlap", num(r.overlap)}});
    j["oracles"] = {
        {"space", o.space},
        {"points", o.points},
        {"pairs", o.pairs},
        {"cutoff", num(o.cutoff)},
        {"dropped_mass_bound", num(o.dropped_mass_bound)},
        {"inscribed_radius", num(o.inscribed_radius)},
        {"r_cap", num(o.r_cap)},
        {"r", num(o.r)},
        {"alpha", num(o.alpha)},
        {"variant", to_string(o.variant)},
        {"best_bound_within_cap", o.best_bound ? num(*o.best_bound) : nlohmann::json(nullptr)},
        {"best_r_within_cap", o.best_r ? num(*o.best_r) : nlohmann::json(nullptr)},
        {"persson_ladder", ladder},
        {"persson_R0_zero", detail::persson_json(o.persson_zero)},
        {"test_function_ladder", rungs},
        {"norm_ratio_increasing", o.ratio_increasing},
        {"form_moments", detail::moments_json(o.form_moments)},
        {"lemma",
         {{"pairs_checked", o.lemma.pairs_checked},
          {"pairs_failed", o.lemma.pairs_failed},
          {"worst_pointwise_slack", num(o.lemma.worst_pointwise_slack)},
          {"energy", num(o.lemma.energy)},
          {"integrated_rhs", num(o.lemma.integrated_rhs)},
          {"integrated_margin", num(o.lemma.integrated_margin)},
          {"pointwise_ok", o.lemma.pointwise_ok},
          {"integrated_ok", o.lemma.integrated_ok}}},
        {"persson_within_bound", o.persson_within_bound ? nlohmann::json(*o.persson_within_bound) : nlohmann::json(nullptr)},
        {"persson_matched", detail::persson_json(o.persson_matched)},
        {"rayleigh_above_persson", o.rayleigh_above_persson}};
  } else {
    j["oracles"] = nullptr;
  }
  if (rep.lyapunov) {
    const auto& l = *rep.lyapunov;
    nlohmann::json lj;
    if (l.certificate)
      lj["certificate"] = {{"delta", num(l.certificate->delta)},
                           {"C0", num(l.certificate->C0)},
                           {"R0", num(l.certificate->R0)},
                           {"t_max", num(l.certificate->t_max)},
                           {"worst_t", num(l.certificate->worst_t)}};
    else
      lj["certificate"] = nullptr;
    lj["persson_top"] = l.persson_top ? num(*l.persson_top) : nlohmann::json(nullptr);
    lj["persson_above_half_C0"] =
        l.persson_above_half_C0 ? nlohmann::json(*l.persson_above_half_C0) : nlohmann::json(nullptr);
    j["lyapunov"] = lj;
  }
  j["warnings"] = rep.warnings;
  return j;
}

inline void write_curve_csv(std::ostream& os, const BoundReport& b) {
  os << "r,M1,M2,bound\n";
  for (const auto& p : b.curve)
    os << detail::fmt(p.r) << ',' << detail::fmt(p.M1) << ',' << detail::fmt(p.M2) << ',' << detail::fmt(p.bound)
       << '\n';
}

/// Writes report.json, curve.csv, and (with oracles) points.csv, ladder.csv
/// and optionally form.coo into `dir`.
inline std::vector<std::filesystem::path> emit_report(const RunReport& rep, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("emit_report: cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    const auto path = dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("emit_report: cannot write " + path.string());
    written.push_back(path);
    return os;
  };
  {
    auto os = open("report.json");
    os << report_json(rep).dump(2) << '\n';
  }
  if (rep.bound) {
    auto os = open("curve.csv");
    write_curve_csv(os, *rep.bound);
  }
  if (rep.oracle) {
    {
      auto os = open("ladder.csv");
      write_ladder_csv(os, rep.oracle->ladder);
    }
    if (rep.oracle->sampled) {
      auto os = open("points.csv");
      rep.oracle->sampled->write_csv(os);
    }
    if (rep.oracle->form) {
      auto os = open("form.coo");
      rep.oracle->form->write_coo(os);
    }
  }
  for (const auto& p : written)
    if (!std::filesystem::exists(p)) throw IoError("emit_report: failed to write " + p.string());
  return written;
}

}  // namespace specbound
