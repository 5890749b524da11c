// skewdiff command-line front end.

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/version.hpp>
#include <json.hpp>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/censoring_selection.hpp"
#include "skewdiff/densities.hpp"
#include "skewdiff/fokker_planck.hpp"
#include "skewdiff/io_util.hpp"
#include "skewdiff/json_util.hpp"
#include "skewdiff/ou_skew.hpp"
#include "skewdiff/quadrature.hpp"
#include "skewdiff/sde_engine.hpp"
#include "skewdiff/skew_family.hpp"
#include "skewdiff/validation.hpp"

#ifndef SKEWDIFF_VERSION
#define SKEWDIFF_VERSION "0.0.0"
#endif

namespace {

namespace fs = std::filesystem;
namespace sd = skewdiff;
using json = nlohmann::json;

enum class PType { Real, Int, Str, Bool, RealList, Range };

struct Param {
  std::string key;
  PType type;
  json def;
  std::string help;
  std::vector<std::string> choices = {};
};

std::string type_name(PType t) {
  switch (t) {
    case PType::Real: return "real";
    case PType::Int: return "integer";
    case PType::Str: return "string";
    case PType::Bool: return "flag";
    case PType::RealList: return "list a,b,...";
    case PType::Range: return "range lo:hi:step";
  }
  return "?";
}

double parse_real(const std::string& s, const std::string& key) {
  if (s == "inf") return sd::kInf;
  if (s == "-inf") return -sd::kInf;
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  sd::require(r.ec == std::errc{} && r.ptr == e && !std::isnan(v), "parameter '" + key + "': '" + s + "' is not a number");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// Brings a flag string or a config value into canonical JSON for its type.
json coerce(const Param& p, const json& v) {
  const std::string& k = p.key;
  auto real_of = [&](const json& x) {
    if (x.is_string()) return parse_real(x.get<std::string>(), k);
    sd::require(x.is_number(), "parameter '" + k + "' must be a number");
    return x.get<double>();
  };
  switch (p.type) {
    case PType::Real: {
      const double r = real_of(v);
      return sd::json_real(r);
    }
    case PType::Int: {
      if (v.is_string()) {
        const auto s = v.get<std::string>();
        long long n = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), n);
        sd::require(r.ec == std::errc{} && r.ptr == s.data() + s.size(), "parameter '" + k + "' must be an integer");
        return n;
      }
      sd::require(v.is_number_integer(), "parameter '" + k + "' must be an integer");
      return v;
    }
    case PType::Bool:
      sd::require(v.is_boolean(), "parameter '" + k + "' must be true or false");
      return v;
    case PType::Str: {
      sd::require(v.is_string(), "parameter '" + k + "' must be a string");
      const auto s = v.get<std::string>();
      if (!p.choices.empty()) {
        bool ok = false;
        for (const auto& c : p.choices) ok = ok || c == s;
        std::string all;
        for (const auto& c : p.choices) all += (all.empty() ? "" : "|") + c;
        sd::require(ok, "parameter '" + k + "' must be one of " + all + ", got '" + s + "'");
      }
      return s;
    }
    case PType::RealList: {
      json out = json::array();
      if (v.is_array()) {
        for (const auto& x : v) out.push_back(real_of(x));
      } else if (v.is_number()) {
        out.push_back(v.get<double>());
      } else {
        sd::require(v.is_string(), "parameter '" + k + "' must be a list of numbers");
        for (const auto& s : split(v.get<std::string>(), ',')) out.push_back(parse_real(s, k));
      }
      return out;
    }
    case PType::Range: {
      std::vector<double> r;
      if (v.is_array()) {
        for (const auto& x : v) r.push_back(real_of(x));
      } else {
        sd::require(v.is_string(), "parameter '" + k + "' must be lo:hi:step");
        for (const auto& s : split(v.get<std::string>(), ':')) r.push_back(parse_real(s, k));
      }
      sd::require(r.size() == 3, "parameter '" + k + "' must have the form lo:hi:step");
      sd::require(r[0] < r[1] && r[2] > 0.0, "parameter '" + k + "' needs lo < hi and step > 0");
      return json{r[0], r[1], r[2]};
    }
  }
  return v;
}

struct Context {
  json params;
  std::uint64_t seed = 1;
  std::string format;
  fs::path out;
  std::vector<std::string> artifacts;

  double real(const std::string& k) const { return sd::real_from_json(params.at(k)); }
  long long integer(const std::string& k) const { return params.at(k).get<long long>(); }
  std::size_t count(const std::string& k) const {
    const auto v = integer(k);
    sd::require(v >= 0, "parameter '" + k + "' must be >= 0");
    return static_cast<std::size_t>(v);
  }
  std::string str(const std::string& k) const { return params.at(k).get<std::string>(); }
  bool flag(const std::string& k) const { return params.at(k).get<bool>(); }
  std::vector<double> list(const std::string& k) const { return params.at(k).get<std::vector<double>>(); }
  std::vector<double> range(const std::string& k) const {
    const auto r = list(k);
    return sd::linspace_step(r[0], r[1], r[2]);
  }
  sd::Chirality chirality() const { return sd::chirality_from_int(static_cast<int>(integer("chirality"))); }

  std::ofstream open(const std::string& name, bool binary = false) {
    artifacts.push_back(name);
    std::ofstream os(out / name, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot write " + (out / name).string());
    os.precision(17);
    return os;
  }
  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::string default_format;
  std::function<int(Context&)> run;
};

// ---------------------------------------------------------------------------
// Shared parameter blocks

std::vector<Param> drift_params(const std::string& default_kind) {
  return {
      {"kind", PType::Str, default_kind, "drift family",
       {"theorem1", "theorem2", "constant_correlation", "psi_table", "ou_h", "linear"}},
      {"T", PType::Real, 1.0, "horizon of the finite-horizon family"},
      {"alpha", PType::Real, 1.0, "constant skewness of the theorem2 family"},
      {"C", PType::Real, 1.0 / std::sqrt(2.0), "family constant (constant_correlation, psi_table)"},
      {"psi_t", PType::RealList, json::array(), "psi_table: time nodes"},
      {"psi_values", PType::RealList, json::array(), "psi_table: psi at the nodes"},
      {"lambda", PType::Real, 1.0, "OU rate for ou_h"},
      {"slope", PType::Real, 0.0, "drift slope for linear (mu = slope x)"},
      {"chirality", PType::Int, 1, "+1 right-skewed, -1 left-skewed"},
      {"sigma", PType::Real, 1.0, "diffusion coefficient"},
      {"shift", PType::Real, 0.0, "location shift of the family drift"},
  };
}

std::vector<Param> operator+(std::vector<Param> a, const std::vector<Param>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

sd::SkewFamily family_from(const Context& c) {
  const auto kind = c.str("kind");
  const auto ch = c.chirality();
  if (kind == "theorem1") return sd::SkewFamily::theorem1(c.real("T"), ch);
  if (kind == "theorem2") return sd::SkewFamily::theorem2(c.real("alpha"), ch);
  if (kind == "constant_correlation") return sd::SkewFamily::constant_correlation(c.real("C"), ch);
  if (kind == "psi_table") {
    const auto t = c.list("psi_t");
    const auto v = c.list("psi_values");
    sd::require(t.size() >= 2 && t.size() == v.size(), "psi_table needs psi_t and psi_values of equal length >= 2");
    const double tmax = t.back();
    return sd::solve_family_from_psi(sd::psi_from_table(t, v), c.real("C"), ch, sd::linspace(tmax / 400.0, tmax, 400));
  }
  throw sd::DomainError("kind '" + kind + "' is not a skew family");
}

sd::DriftSpec drift_from(const Context& c) {
  const auto kind = c.str("kind");
  if (kind == "ou_h") return sd::DriftSpec::ou_h_transform(c.real("lambda"), c.chirality());
  if (kind == "linear") return sd::DriftSpec::linear(c.real("slope"), c.real("sigma"));
  return sd::DriftSpec::from_family(family_from(c), c.real("shift"), c.real("sigma"));
}

// t_end NaN/absent means "up to the horizon" (finite horizon) or 1.
sd::TimeGrid grid_from(const Context& c, double horizon) {
  sd::TimeGrid g;
  g.t_start = c.real("t_start");
  g.n_steps = c.count("steps");
  const double t_end = c.real("t_end");
  if (t_end > 0.0) {
    g.t_end = t_end;
  } else {
    g.t_end = std::isfinite(horizon) ? horizon : 1.0;
  }
  if (std::isfinite(horizon) && g.t_end >= horizon) {
    g.t_end = horizon;
    g.terminal_cutoff_epsilon = c.real("eps") * horizon;
  }
  g.validate();
  return g;
}

std::vector<Param> sim_params() {
  return {
      {"x0", PType::Real, 0.0, "initial state"},
      {"t_start", PType::Real, 0.0, "start time"},
      {"t_end", PType::Real, 0.0, "end time (0: the family's horizon, or 1 if unbounded)"},
      {"eps", PType::Real, 1e-4, "terminal cutoff relative to a finite horizon"},
      {"steps", PType::Int, 1000, "Euler-Maruyama steps"},
      {"paths", PType::Int, 10000, "number of paths"},
      {"record_every", PType::Int, 0, "keep every k-th step (0: at most 101 columns)"},
      {"antithetic", PType::Bool, false, "pair paths with opposite noise"},
      {"clamp", PType::Real, 10.0, "bound on |mu dt| per step"},
  };
}

sd::SimConfig sim_config(const Context& c, std::size_t steps) {
  sd::SimConfig s;
  s.n_paths = c.count("paths");
  s.seed = c.seed;
  s.antithetic = c.flag("antithetic");
  s.drift_clamp = c.real("clamp");
  s.record_every = c.count("record_every");
  if (s.record_every == 0) s.record_every = std::max<std::size_t>(1, steps / 100);
  s.validate();
  return s;
}

json column_stats(const sd::PathEnsemble& e) {
  auto rows = json::array();
  for (std::size_t col = 0; col < e.n_columns(); ++col) {
    const auto v = e.column(col);
    const double n = static_cast<double>(v.size());
    double m = 0.0;
    for (double x : v) m += x;
    m /= n;
    double m2 = 0.0, m3 = 0.0, lo = v[0], hi = v[0], neg = 0.0;
    for (double x : v) {
      m2 += (x - m) * (x - m);
      m3 += (x - m) * (x - m) * (x - m);
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      neg += x < 0.0;
    }
    m2 /= n;
    m3 /= n;
    rows.push_back({{"t", e.time_of(col)},
                    {"mean", m},
                    {"sd", std::sqrt(m2)},
                    {"skewness", m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0},
                    {"min", lo},
                    {"max", hi},
                    {"fraction_negative", neg / n}});
  }
  return rows;
}

void write_ensemble(Context& c, const std::string& stem, const sd::PathEnsemble& e) {
  if (c.format == "binary") {
    auto os = c.open(stem + ".bin", true);
    sd::write_binary(os, e);
  } else if (c.format == "csv") {
    auto os = c.open(stem + ".csv");
    sd::write_csv(os, e);
  } else {
    json times = json::array();
    for (std::size_t col = 0; col < e.n_columns(); ++col) times.push_back(e.time_of(col));
    json paths = json::array();
    for (std::size_t i = 0; i < e.n_paths; ++i) {
      const auto p = e.path(i);
      paths.push_back(std::vector<double>(p.begin(), p.end()));
    }
    json j{{"metadata", e.metadata()}, {"times", times}, {"paths", paths}};
    if (!e.labels.empty()) j["labels"] = e.labels;
    c.write_json(stem + ".json", j);
  }
}

void write_grid(Context& c, const std::string& stem, const sd::DensityGrid& g) {
  if (c.format == "json") {
    json rows = json::array();
    for (std::size_t it = 0; it < g.t_nodes.size(); ++it) {
      const auto r = g.row(it);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    c.write_json(stem + ".json", {{"x", g.x_nodes}, {"t", g.t_nodes}, {"q", rows}});
  } else {
    sd::require(c.format == "csv", "density grids are written as csv or json");
    auto os = c.open(stem + ".csv");
    sd::write_csv(os, g);
  }
}

json ks_entry(const std::vector<double>& samples, const std::function<double(double)>& cdf) {
  const double ks = sd::ks_statistic(samples, cdf);
  const double thr = sd::ks_threshold_99(samples.size());
  return {{"ks", ks}, {"threshold_99", thr}, {"n", samples.size()}, {"below_threshold", ks <= thr}};
}

// ---------------------------------------------------------------------------
// Commands

int run_family(Context& c) {
  const auto f = family_from(c);
  const auto ts = c.range("t_range");
  json rows = json::array();
  std::ostringstream csv;
  csv << "t,psi,alpha,alpha_dot,gamma,lambda,ode_residual\n";
  for (double t : ts) {
    if (!(t > 0.0 && t < f.validity_horizon())) continue;
    const double r = sd::alpha_ode_residual(f, t);
    const double vals[] = {t, f.psi(t), f.alpha(t), f.alpha_dot(t), f.gamma(t), f.lambda(t), r};
    rows.push_back({{"t", vals[0]}, {"psi", vals[1]}, {"alpha", vals[2]}, {"alpha_dot", vals[3]},
                    {"gamma", vals[4]}, {"lambda", vals[5]}, {"ode_residual", vals[6]}});
    for (std::size_t i = 0; i < 7; ++i) csv << (i ? "," : "") << sd::format_real(vals[i]);
    csv << '\n';
  }
  sd::require(!rows.empty(), "t_range contains no time inside (0, horizon)");
  if (c.format == "csv") {
    c.open("family.csv") << csv.str();
    c.write_json("family.json", {{"family", f.to_json()}});
  } else {
    sd::require(c.format == "json", "family tables are written as csv or json");
    c.write_json("family.json", {{"family", f.to_json()}, {"table", rows}});
  }
  return 0;
}

int run_simulate(Context& c) {
  const auto d = drift_from(c);
  const auto grid = grid_from(c, d.horizon());
  const auto e = sd::simulate(d, c.real("x0"), grid, sim_config(c, grid.n_steps));
  write_ensemble(c, "ensemble", e);
  c.write_json("summary.json", {{"drift", d.to_json()},
                                {"ensemble", e.metadata()},
                                {"clamp_fraction", e.clamp_fraction()},
                                {"per_column", column_stats(e)}});
  return 0;
}

int run_density(Context& c) {
  const auto kind = c.str("kind");
  const auto ch = c.chirality();
  const double x0 = c.real("x0");
  const bool unshifted = c.flag("unshifted");
  std::function<double(double, double)> q;
  if (kind == "theorem1") {
    const double T = c.real("T");
    q = [=](double x, double t) { return sd::q_theorem1(x, t, x0, T, ch); };
  } else if (kind == "theorem2" || kind == "constant_correlation") {
    const auto f = kind == "theorem2" ? sd::SkewFamily::theorem2(c.real("alpha"), ch)
                                      : sd::SkewFamily::constant_correlation(c.real("C"), ch);
    const double a = c.real("alpha");
    if (kind == "theorem2" && x0 == 0.0) {
      q = [=](double x, double t) { return sd::q_theorem2(x, t, a, ch); };
    } else if (unshifted) {
      q = [=](double x, double t) { return sd::q_class_unshifted(x, t, f, x0); };
    } else {
      q = [=](double x, double t) { return sd::q_class(x, t, f, x0); };
    }
  } else if (kind == "censored") {
    const double rho = c.real("rho");
    q = [=](double x, double t) { return sd::censored_posterior(x, t, rho); };
  } else if (kind == "esn_ou") {
    const double lam = c.real("lambda");
    q = [=](double x, double t) { return sd::q_esn_ou(x, t, lam, x0, ch); };
  } else if (kind == "ou_sknoise") {
    const double lam = c.real("lambda"), T = c.real("T");
    q = [=](double x, double t) { return sd::p_marginal_ou_sknoise(x, t, lam, x0, T); };
  } else if (kind == "ou_repulsive") {
    const double lam = c.real("lambda");
    q = [=](double x, double t) { return sd::ou_repulsive_tpd(x, t, x0, lam); };
  } else {
    const double lam = c.real("lambda");
    q = [=](double x, double t) { return sd::ou_stationary_tpd(x, t, x0, lam); };
  }
  const auto g = sd::tabulate(q, c.range("x"), c.list("t"));
  write_grid(c, "density", g);
  c.write_json("summary.json", g.summary());
  return 0;
}

int run_fokker_planck(Context& c) {
  const auto d = drift_from(c);
  sd::FpConfig cfg;
  cfg.x_min = c.real("x_min");
  cfg.x_max = c.real("x_max");
  cfg.n_x = c.count("n_x");
  cfg.n_t = c.count("n_t");
  cfg.theta = c.real("theta");
  cfg.init_width = c.real("init_width");
  const double t_end = c.real("t_end");
  const double dt = c.real("dt");
  sd::require(dt > 0.0 && t_end > 0.0, "fokker-planck needs dt > 0 and t_end > 0");
  const sd::TimeGrid grid{0.0, t_end, static_cast<std::size_t>(std::max(1.0, std::round(t_end / dt))), 0.0};
  const double x0 = c.real("x0");
  sd::FpDiagnostics diag;
  const auto g = sd::solve_kfe(d, d.sigma(), x0, grid, cfg, &diag);
  write_grid(c, "fokker_planck", g);

  // Closed forms for the cases that have one.
  std::function<double(double, double)> exact;
  const auto kind = c.str("kind");
  const auto ch = c.chirality();
  const double s2 = d.sigma() * d.sigma();
  if (kind == "linear" && c.real("slope") == 0.0) {
    exact = [=](double x, double t) { return sd::gaussian_pdf(x, x0, s2 * t); };
  } else if (kind == "linear" && c.real("slope") < 0.0 && d.sigma() == 1.0) {
    const double lam = -c.real("slope");
    exact = [=](double x, double t) { return sd::ou_stationary_tpd(x, t, x0, lam); };
  } else if (kind == "theorem2" && x0 == 0.0 && d.sigma() == 1.0 && c.real("shift") == 0.0) {
    const double a = c.real("alpha");
    exact = [=](double x, double t) { return sd::q_theorem2(x, t, a, ch); };
  } else if (kind == "theorem1" && d.sigma() == 1.0 && c.real("shift") == 0.0) {
    const double T = c.real("T");
    exact = [=](double x, double t) { return sd::q_theorem1(x, t, x0, T, ch); };
  } else if (kind == "ou_h") {
    const double lam = c.real("lambda");
    exact = [=](double x, double t) { return sd::q_esn_ou(x, t, lam, x0, ch); };
  }
  json s = g.summary();
  s["diagnostics"] = {{"max_mass_drift", diag.max_mass_drift},
                      {"min_value", diag.min_value},
                      {"upwind_faces", diag.upwind_faces},
                      {"steps", diag.steps}};
  if (exact) {
    json l1 = json::array();
    for (std::size_t it = 0; it < g.t_nodes.size(); ++it) {
      std::vector<double> ref(g.x_nodes.size());
      for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = exact(g.x_nodes[i], g.t_nodes[it]);
      l1.push_back({{"t", g.t_nodes[it]}, {"l1_vs_closed_form", sd::l1_distance(g.x_nodes, g.row(it), ref)}});
    }
    s["closed_form"] = l1;
  }
  c.write_json("summary.json", s);
  return 0;
}

int run_censor(Context& c) {
  const double T = c.real("T");
  const auto kind = c.str("rho_kind");
  const double rho_c = c.real("rho");
  sd::require(T > 0.0, "censor needs T > 0");
  std::function<double(double)> rho;
  if (kind == "sqrt") {
    rho = [T](double t) { return std::sqrt(std::min(1.0, t / T)); };
  } else {
    sd::require(std::abs(rho_c) <= 1.0, "censor needs |rho| <= 1");
    rho = [rho_c](double) { return rho_c; };
  }
  const sd::TimeGrid grid{0.0, c.real("t_end"), c.count("steps"), 0.0};
  grid.validate();
  sd::SimConfig cfg;
  cfg.n_paths = c.count("paths");
  cfg.seed = c.seed;
  cfg.validate();
  const auto [ex, ey] = sd::simulate_bivariate_censoring(rho, grid, cfg);
  const auto xs = c.range("x");
  auto per_t = json::array();
  std::ostringstream csv;
  csv << "t,x,kde,posterior\n";
  for (double tq : c.list("t")) {
    const std::size_t col = ex.column_at(tq);
    const double t = ex.time_of(col);
    sd::require(t > 0.0, "censor: report times must be > 0");
    double cov = 0.0;
    for (std::size_t k = 0; k < ex.steps[col]; ++k) cov += rho(grid.time(k)) * grid.dt();
    const double r_eff = cov / t;
    auto post = sd::posterior_from_censored_sim(ex, ey, col, c.real("bandwidth"), xs, 100);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      csv << sd::format_real(t) << ',' << sd::format_real(xs[i]) << ',' << sd::format_real(post.density[i]) << ','
          << sd::format_real(sd::censored_posterior(xs[i], t, r_eff)) << '\n';
    }
    json e = post.to_json();
    e["t"] = t;
    e["correlation_simulated"] = r_eff;
    e["rho_t"] = rho(t);
    const sd::TabulatedCdf cdf([&](double x) { return sd::censored_posterior(x, t, r_eff); }, -12.0 * std::sqrt(t),
                               12.0 * std::sqrt(t), 8000);
    if (post.survivors.size() >= 100) e["ks"] = ks_entry(post.survivors, [&](double x) { return cdf(x); });
    per_t.push_back(e);
  }
  if (c.format == "json") {
    c.write_json("summary.json", {{"per_t", per_t}});
  } else {
    c.open("posterior.csv") << csv.str();
    c.write_json("summary.json", {{"per_t", per_t}});
  }
  return 0;
}

int run_mixture(Context& c) {
  const auto base = c.str("base");
  const double x0 = c.real("x0");
  sd::DriftSpec plus;
  double p_plus = 0.0;
  if (base == "theorem1") {
    plus = sd::DriftSpec::from_family(sd::SkewFamily::theorem1(c.real("T"), sd::Chirality::Right));
    p_plus = sd::mixture_probability(x0, c.real("T")).p_plus;
  } else {
    plus = sd::DriftSpec::ou_h_transform(c.real("lambda"), sd::Chirality::Right);
    p_plus = sd::ou_mixture_probability(c.real("lambda"), x0).p_plus;
  }
  const auto grid = grid_from(c, plus.horizon());
  const auto e = sd::simulate_mixture(plus, plus.mirrored(), p_plus, x0, grid, sim_config(c, grid.n_steps));
  write_ensemble(c, "ensemble", e);
  const double t = e.time_of(e.n_columns() - 1) - grid.t_start;
  double m = x0, sdv = std::sqrt(t);
  std::string target = "N(x0, t)";
  if (base == "ou") {
    const double lam = c.real("lambda");
    m = x0 * std::exp(lam * t);
    sdv = std::sqrt(std::expm1(2.0 * lam * t) / (2.0 * lam));
    target = "N(x0 e^{lambda t}, (e^{2 lambda t} - 1)/(2 lambda))";
  }
  double frac_plus = 0.0;
  for (int l : e.labels) frac_plus += l > 0;
  frac_plus /= static_cast<double>(e.labels.size());
  c.write_json("summary.json", {{"p_plus", p_plus},
                                {"fraction_plus", frac_plus},
                                {"target", target},
                                {"terminal_ks", ks_entry(e.terminal(), [&](double x) { return sd::std_normal_cdf((x - m) / sdv); })},
                                {"per_column", column_stats(e)}});
  return 0;
}

int run_ou(Context& c) {
  const double lam = c.real("lambda"), T = c.real("T"), x0 = c.real("x0");
  const auto grid = grid_from(c, T);
  const auto [ex, ez] = sd::simulate_ou_skew_noise(lam, x0, T, grid, sim_config(c, grid.n_steps));
  write_ensemble(c, "ensemble", ex);
  if (c.flag("write_noise")) write_ensemble(c, "noise", ez);
  const double t = ex.time_of(ex.n_columns() - 1);
  const sd::TabulatedCdf cdf([&](double x) { return sd::p_marginal_ou_sknoise(x, t, lam, x0, T); }, x0 - 12.0 - 12.0 * std::sqrt(T),
                             x0 + 12.0 + 12.0 * std::sqrt(T), 8000);
  c.write_json("summary.json", {{"t", t},
                                {"terminal_ks_vs_marginal", ks_entry(ex.terminal(), [&](double x) { return cdf(x); })},
                                {"per_column", column_stats(ex)}});
  return 0;
}

int run_validate(Context& c) {
  const auto scale = c.str("suite") == "full" ? sd::SuiteScale::Full : sd::SuiteScale::Core;
  const auto report = sd::run_suite(scale, c.seed, [](const sd::Check& k) {
    std::cerr << (k.pass ? "PASS " : "FAIL ") << k.name << " (" << k.wall_time_s << " s)\n";
  });
  const json j = report.to_json();
  c.write_json("report.json", j);
  std::cout << j.dump(2) << '\n';
  return report.all_pass() ? 0 : 1;
}

std::vector<Command> commands() {
  return {
      {"family", "tabulate psi, alpha, Gamma and Lambda of a skew family",
       drift_params("theorem1") + std::vector<Param>{{"t_range", PType::Range, json{0.05, 0.95, 0.05}, "times lo:hi:step"}},
       "csv", run_family},
      {"simulate", "Euler-Maruyama ensemble of a skew diffusion", drift_params("theorem1") + sim_params(), "binary",
       run_simulate},
      {"density", "closed-form densities on an (x, t) grid",
       {{"kind", PType::Str, "theorem2", "density",
         {"theorem1", "theorem2", "constant_correlation", "censored", "esn_ou", "ou_sknoise", "ou_repulsive", "ou_stationary"}},
        {"T", PType::Real, 1.0, "finite horizon (theorem1, ou_sknoise)"},
        {"alpha", PType::Real, 1.0, "theorem2 skewness"},
        {"C", PType::Real, 1.0 / std::sqrt(2.0), "constant_correlation constant"},
        {"rho", PType::Real, 0.5, "censored: correlation"},
        {"lambda", PType::Real, 1.0, "OU rate"},
        {"x0", PType::Real, 0.0, "initial state"},
        {"chirality", PType::Int, 1, "+1 or -1"},
        {"unshifted", PType::Bool, false, "use Phi(alpha x) instead of Phi(alpha (x - x0))"},
        {"x", PType::Range, json{-5.0, 5.0, 0.01}, "x grid lo:hi:step"},
        {"t", PType::RealList, json{1.0}, "times"}},
       "csv", run_density},
      {"fokker-planck", "finite-volume forward-equation solve",
       drift_params("theorem2") + std::vector<Param>{{"x0", PType::Real, 0.0, "initial state"},
                                                     {"x_min", PType::Real, -10.0, "left boundary"},
                                                     {"x_max", PType::Real, 10.0, "right boundary"},
                                                     {"n_x", PType::Int, 2001, "grid points"},
                                                     {"dt", PType::Real, 1e-3, "time step"},
                                                     {"t_end", PType::Real, 1.0, "end time"},
                                                     {"n_t", PType::Int, 11, "stored snapshots"},
                                                     {"theta", PType::Real, 0.5, "0 explicit, 0.5 Crank-Nicolson, 1 implicit"},
                                                     {"init_width", PType::Real, 0.0, "initial Gaussian width (0: 4 dx)"}},
       "csv", run_fokker_planck},
      {"censor", "bivariate censoring simulation and survivor posterior",
       {{"rho_kind", PType::Str, "sqrt", "rho_t = sqrt(t/T) or a constant", {"sqrt", "constant"}},
        {"rho", PType::Real, 0.5, "constant correlation"},
        {"T", PType::Real, 1.0, "scale of rho_t = sqrt(t/T)"},
        {"t_end", PType::Real, 0.5, "end time"},
        {"steps", PType::Int, 500, "steps"},
        {"paths", PType::Int, 100000, "pairs"},
        {"t", PType::RealList, json{0.25, 0.5}, "report times"},
        {"x", PType::Range, json{-3.0, 3.0, 0.05}, "KDE grid"},
        {"bandwidth", PType::Real, 0.0, "KDE bandwidth (0: rule of thumb)"}},
       "csv", run_censor},
      {"mixture", "random-chirality mixture of skew diffusions",
       std::vector<Param>{{"base", PType::Str, "theorem1", "mixed family", {"theorem1", "ou"}},
                          {"T", PType::Real, 1.0, "theorem1 horizon"},
                          {"lambda", PType::Real, 1.0, "ou rate"}} +
           sim_params(),
       "binary", run_mixture},
      {"ou", "OU process driven by the finite-horizon skew diffusion",
       std::vector<Param>{{"lambda", PType::Real, 1.0, "mean-reversion rate (>= 0)"},
                          {"T", PType::Real, 2.0, "horizon of the driving noise"},
                          {"write_noise", PType::Bool, false, "also write the driving ensemble"}} +
           sim_params(),
       "binary", run_ou},
      {"validate", "run the validation suite", {{"suite", PType::Str, "core", "suite size", {"core", "full"}}}, "json",
       run_validate},
  };
}

json versions() {
  return {{"skewdiff", SKEWDIFF_VERSION},
          {"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                                "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skewdiff: skew diffusions, their densities and validation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SKEWDIFF_VERSION);

  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::map<std::string, std::string> raw;
    std::map<std::string, bool> flags;
    std::string output_dir = "out";
    std::string config;
    std::string format;
    std::uint64_t seed = 1;
  };
  const auto cmds = commands();
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : cmds) {
    auto b = std::make_unique<Bound>();
    b->cmd = &cmd;
    b->sub = app.add_subcommand(cmd.name, cmd.help);
    b->sub->add_option("--output-dir,-o", b->output_dir, "artifact directory")->capture_default_str();
    b->sub->add_option("--seed", b->seed, "RNG seed")->capture_default_str();
    b->sub->add_option("--format", b->format, "csv|json|binary (default " + cmd.default_format + ")")
        ->check(CLI::IsMember({"csv", "json", "binary"}));
    b->sub->add_option("--config", b->config, "JSON file; its keys override flags");
    for (const auto& p : cmd.params) {
      std::string help = "[" + type_name(p.type) + ", default " + p.def.dump() + "] " + p.help;
      if (!p.choices.empty()) {
        help += " {";
        for (std::size_t i = 0; i < p.choices.size(); ++i) help += (i ? "|" : "") + p.choices[i];
        help += "}";
      }
      if (p.type == PType::Bool) {
        b->sub->add_flag(flag_name(p.key), b->flags[p.key], help);
      } else {
        b->sub->add_option(flag_name(p.key), b->raw[p.key], help)->allow_extra_args(false);
      }
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Bound* b = nullptr;
  for (auto& x : bound) {
    if (x->sub->parsed()) b = x.get();
  }
  const Command& cmd = *b->cmd;
  Context ctx;
  ctx.seed = b->seed;
  ctx.format = b->format.empty() ? cmd.default_format : b->format;
  ctx.out = b->output_dir;

  // Schema validation happens before any computation.
  try {
    json params = json::object();
    for (const auto& p : cmd.params) {
      if (p.type == PType::Bool) {
        params[p.key] = b->sub->count(flag_name(p.key)) > 0 ? json(b->flags[p.key]) : p.def;
      } else if (b->sub->count(flag_name(p.key)) > 0) {
        params[p.key] = coerce(p, b->raw[p.key]);
      } else {
        params[p.key] = coerce(p, p.def);
      }
    }
    if (!b->config.empty()) {
      std::ifstream is(b->config);
      sd::require(static_cast<bool>(is), "cannot read config file " + b->config);
      json cfg;
      try {
        cfg = json::parse(is);
      } catch (const json::parse_error& e) {
        throw sd::DomainError(std::string("config file is not valid JSON: ") + e.what());
      }
      sd::require(cfg.is_object(), "config file must hold a JSON object");
      for (const auto& [key, value] : cfg.items()) {
        if (key == "seed") {
          sd::require(value.is_number_unsigned(), "config key 'seed' must be a non-negative integer");
          ctx.seed = value.get<std::uint64_t>();
        } else if (key == "format") {
          ctx.format = coerce({"format", PType::Str, "", "", {"csv", "json", "binary"}}, value).get<std::string>();
        } else if (key == "output_dir") {
          sd::require(value.is_string(), "config key 'output_dir' must be a string");
          ctx.out = value.get<std::string>();
        } else {
          const Param* p = nullptr;
          for (const auto& q : cmd.params) {
            if (q.key == key) p = &q;
          }
          sd::require(p != nullptr, "unknown config key '" + key + "' for command " + cmd.name);
          params[key] = coerce(*p, value);
        }
      }
    }
    if (params.contains("chirality")) {
      const auto ch = params["chirality"].get<long long>();
      sd::require(ch == 1 || ch == -1, "chirality must be +1 or -1");
    }
    ctx.params = params;
    fs::create_directories(ctx.out);
    std::ofstream probe(ctx.out / ".write_test");
    sd::require(static_cast<bool>(probe), "output directory " + ctx.out.string() + " is not writable");
    probe.close();
    fs::remove(ctx.out / ".write_test");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int status = 0;
  json error;
  try {
    status = cmd.run(ctx);
  } catch (const sd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    error = e.what();
    status = 3;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json manifest{{"schema", "skewdiff.manifest/1"},
                {"command", cmd.name},
                {"parameters", ctx.params},
                {"seed", ctx.seed},
                {"format", ctx.format},
                {"output_dir", ctx.out.string()},
                {"threads", sd::worker_count()},
                {"versions", versions()},
                {"exit_status", status},
                {"wall_time_s", wall}};
  if (status == 3) {
    std::ofstream os(ctx.out / "diagnostics.json");
    os << json{{"command", cmd.name}, {"parameters", ctx.params}, {"seed", ctx.seed}, {"error", error}}.dump(2) << '\n';
    ctx.artifacts.push_back("diagnostics.json");
  }
  manifest["artifacts"] = ctx.artifacts;
  std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << '\n';
  return status;
}
