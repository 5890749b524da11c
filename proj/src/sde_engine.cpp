#include "skewdiff/sde_engine.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "skewdiff/analytic_dists.hpp"
#include "skewdiff/io_util.hpp"
#include "skewdiff/json_util.hpp"
#include "skewdiff/rng.hpp"

namespace skewdiff {

void TimeGrid::validate() const {
  require(std::isfinite(t_start) && t_start >= 0.0, "time grid: t_start must be >= 0");
  require(std::isfinite(t_end), "time grid: t_end must be finite");
  require(n_steps >= 1, "time grid: n_steps must be >= 1");
  require(terminal_cutoff_epsilon >= 0.0, "time grid: epsilon must be >= 0");
  require(t_end - terminal_cutoff_epsilon > t_start, "time grid: t_end - epsilon must exceed t_start");
}

TimeGrid TimeGrid::up_to_horizon(double T, std::size_t n_steps, double eps_rel) {
  TimeGrid g{0.0, T, n_steps, eps_rel * T};
  g.validate();
  return g;
}

nlohmann::json TimeGrid::to_json() const {
  return {{"t_start", t_start},
          {"t_end", t_end},
          {"n_steps", n_steps},
          {"terminal_cutoff_epsilon", terminal_cutoff_epsilon}};
}

TimeGrid TimeGrid::from_json(const nlohmann::json& j) {
  expect_keys(j, {"t_start", "t_end", "n_steps", "terminal_cutoff_epsilon"}, "time grid");
  TimeGrid g;
  g.t_start = j.value("t_start", 0.0);
  g.t_end = j.at("t_end").get<double>();
  g.n_steps = j.at("n_steps").get<std::size_t>();
  g.terminal_cutoff_epsilon = j.value("terminal_cutoff_epsilon", 0.0);
  g.validate();
  return g;
}

void SimConfig::validate() const {
  require(n_paths >= 1, "n_paths must be >= 1");
  require(std::isfinite(drift_clamp) && drift_clamp > 0.0, "drift_clamp must be finite and > 0");
  require(record_every >= 1, "record_every must be >= 1");
  require(!antithetic || n_paths % 2 == 0, "antithetic sampling needs an even n_paths");
}

std::string to_string(Scheme) { return "euler_maruyama"; }

std::vector<double> PathEnsemble::column(std::size_t col) const {
  std::vector<double> out(n_paths);
  const std::size_t m = steps.size();
  for (std::size_t i = 0; i < n_paths; ++i) out[i] = values[i * m + col];
  return out;
}

std::size_t PathEnsemble::column_at(double t) const {
  std::size_t best = 0;
  for (std::size_t c = 1; c < steps.size(); ++c) {
    if (std::abs(time_of(c) - t) < std::abs(time_of(best) - t)) best = c;
  }
  return best;
}

nlohmann::json PathEnsemble::metadata() const {
  nlohmann::json j{{"grid", grid.to_json()},
                   {"seed", seed},
                   {"scheme", to_string(scheme)},
                   {"n_paths", n_paths},
                   {"steps", steps},
                   {"clamp_events", clamp_events},
                   {"total_steps", total_steps},
                   {"has_labels", !labels.empty()}};
  return j;
}

unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SKEWDIFF_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first;
  std::mutex m;
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        body(b, e);
      } catch (...) {
        std::lock_guard lock(m);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

namespace {

constexpr std::uint32_t kLabelStream = 0x80000000u;

std::vector<std::size_t> recorded_steps(std::size_t n_steps, std::size_t every) {
  std::vector<std::size_t> s;
  for (std::size_t k = 0; k < n_steps; k += every) s.push_back(k);
  s.push_back(n_steps);
  return s;
}

PathEnsemble make_ensemble(const TimeGrid& grid, const SimConfig& cfg) {
  grid.validate();
  cfg.validate();
  PathEnsemble e;
  e.grid = grid;
  e.seed = cfg.seed;
  e.n_paths = cfg.n_paths;
  e.steps = recorded_steps(grid.n_steps, cfg.record_every);
  e.values.assign(e.n_paths * e.steps.size(), 0.0);
  return e;
}

void check_horizon(const DriftSpec& d, const TimeGrid& grid) {
  const double last = grid.time(grid.n_steps - 1);
  if (!(last < d.horizon())) {
    std::ostringstream os;
    os << "time grid reaches t = " << last << " but the drift is only valid before "
       << d.horizon() << "; use a terminal cutoff";
    throw DomainError(os.str());
  }
}

std::vector<DriftSlice> slices_for(const DriftSpec& d, const TimeGrid& grid) {
  check_horizon(d, grid);
  std::vector<DriftSlice> s(grid.n_steps);
  for (std::size_t k = 0; k < grid.n_steps; ++k) s[k] = d.at(grid.time(k));
  return s;
}

[[noreturn]] void non_finite(std::size_t path, std::size_t step, double x) {
  std::ostringstream os;
  os << "non-finite state " << x << " on path " << path << " at step " << step;
  throw NumericalError(os.str());
}

// One Euler-Maruyama path. drift(k, x) -> mu.
template <class Drift>
std::uint64_t run_path(PathEnsemble& e, std::size_t i, double x0, double sigma, const SimConfig& cfg,
                       Drift&& drift) {
  const TimeGrid& g = e.grid;
  const double dt = g.dt();
  const double sdt = sigma * std::sqrt(dt);
  const std::uint64_t noise_path = cfg.antithetic ? i / 2 : i;
  double z_sign = (cfg.antithetic && (i & 1)) ? -1.0 : 1.0;
  if (cfg.negate_noise) z_sign = -z_sign;
  PathNoise noise(cfg.seed, noise_path, cfg.stream);
  const std::size_t m = e.steps.size();
  double* row = e.values.data() + i * m;
  row[0] = x0;
  std::size_t col = 1;
  std::uint64_t clamps = 0;
  double x = x0;
  for (std::size_t k = 0; k < g.n_steps; ++k) {
    double inc = drift(k, x) * dt;
    if (std::abs(inc) > cfg.drift_clamp) {
      inc = std::copysign(cfg.drift_clamp, inc);
      ++clamps;
    }
    x += inc + sdt * z_sign * noise.normal(k);
    if (!std::isfinite(x)) non_finite(i, k, x);
    if (col < m && e.steps[col] == k + 1) row[col++] = x;
  }
  return clamps;
}

template <class PerPath>
void run_all(PathEnsemble& e, PerPath&& per_path) {
  std::atomic<std::uint64_t> clamps{0};
  parallel_for(e.n_paths, [&](std::size_t b, std::size_t end) {
    std::uint64_t local = 0;
    for (std::size_t i = b; i < end; ++i) local += per_path(i);
    clamps += local;
  });
  e.clamp_events = clamps.load();
  e.total_steps = static_cast<std::uint64_t>(e.n_paths) * e.grid.n_steps;
}

}  // namespace

PathEnsemble simulate(const DriftSpec& drift, double x0, const TimeGrid& grid, const SimConfig& cfg) {
  require(std::isfinite(x0), "initial value must be finite");
  PathEnsemble e = make_ensemble(grid, cfg);
  const auto slices = slices_for(drift, grid);
  const double sigma = drift.sigma();
  run_all(e, [&](std::size_t i) {
    return run_path(e, i, x0, sigma, cfg, [&](std::size_t k, double x) { return slices[k](x); });
  });
  return e;
}

std::pair<PathEnsemble, PathEnsemble> simulate_bivariate_censoring(
    const std::function<double(double)>& rho, const TimeGrid& grid, const SimConfig& cfg) {
  PathEnsemble ex = make_ensemble(grid, cfg);
  PathEnsemble ey = make_ensemble(grid, cfg);
  const std::size_t n = grid.n_steps;
  std::vector<double> r(n), rc(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = rho(grid.time(k));
    if (!(std::abs(r[k]) <= 1.0)) {
      std::ostringstream os;
      os << "correlation " << r[k] << " at t = " << grid.time(k) << " is outside [-1, 1]";
      throw DomainError(os.str());
    }
    rc[k] = std::sqrt(1.0 - r[k] * r[k]);
  }
  const double sdt = std::sqrt(grid.dt());
  const std::size_t m = ex.steps.size();
  parallel_for(cfg.n_paths, [&](std::size_t b, std::size_t end) {
    for (std::size_t i = b; i < end; ++i) {
      const std::uint64_t noise_path = cfg.antithetic ? i / 2 : i;
      double z_sign = (cfg.antithetic && (i & 1)) ? -1.0 : 1.0;
      if (cfg.negate_noise) z_sign = -z_sign;
      PathNoise noise(cfg.seed, noise_path, cfg.stream);
      double* rx = ex.values.data() + i * m;
      double* ry = ey.values.data() + i * m;
      double x = 0.0, y = 0.0;
      rx[0] = ry[0] = 0.0;
      std::size_t col = 1;
      for (std::size_t k = 0; k < n; ++k) {
        const auto z = noise.normal_pair(k);
        const double dx = sdt * z_sign * z[0];
        x += dx;
        y += r[k] * dx + rc[k] * sdt * z_sign * z[1];
        if (col < m && ex.steps[col] == k + 1) {
          rx[col] = x;
          ry[col] = y;
          ++col;
        }
      }
    }
  });
  ex.total_steps = ey.total_steps = static_cast<std::uint64_t>(cfg.n_paths) * n;
  return {std::move(ex), std::move(ey)};
}

PathEnsemble simulate_mixture(const DriftSpec& plus, const DriftSpec& minus, double p_plus,
                              double x0, const TimeGrid& grid, const SimConfig& cfg) {
  require(p_plus >= 0.0 && p_plus <= 1.0, "mixture probability must lie in [0, 1]");
  require(plus.sigma() == minus.sigma(), "mixture components must share sigma");
  PathEnsemble e = make_ensemble(grid, cfg);
  const auto sp = slices_for(plus, grid);
  const auto sm = slices_for(minus, grid);
  e.labels.assign(e.n_paths, 1);
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    const double u = PathNoise(cfg.seed, i, cfg.stream | kLabelStream).uniform(0);
    e.labels[i] = u < p_plus ? 1 : -1;
  }
  const double sigma = plus.sigma();
  run_all(e, [&](std::size_t i) {
    const auto& s = e.labels[i] > 0 ? sp : sm;
    return run_path(e, i, x0, sigma, cfg, [&](std::size_t k, double x) { return s[k](x); });
  });
  return e;
}

MixtureProbability mixture_probability(double x0, double T) {
  require(T > 0.0, "mixture probability needs T > 0");
  const double a = x0 / std::sqrt(T);
  if (a >= 0.0) {
    const double pm = std_normal_cdf(-a);
    return {pm, 1.0 - pm};
  }
  const double pp = std_normal_cdf(a);
  return {1.0 - pp, pp};
}

// ---------------------------------------------------------------------------
// Export

void write_csv(std::ostream& os, const PathEnsemble& e) {
  os << "# skewdiff ensemble v1 seed=" << e.seed << " scheme=" << to_string(e.scheme)
     << " n_paths=" << e.n_paths << " t_start=" << format_real(e.grid.t_start)
     << " t_end=" << format_real(e.grid.t_end)
     << " epsilon=" << format_real(e.grid.terminal_cutoff_epsilon) << " n_steps=" << e.grid.n_steps
     << " clamp_events=" << e.clamp_events << "\n";
  os << "path";
  if (!e.labels.empty()) os << ",label";
  for (std::size_t c = 0; c < e.n_columns(); ++c) os << ",t=" << format_real(e.time_of(c));
  os << "\n";
  for (std::size_t i = 0; i < e.n_paths; ++i) {
    os << i;
    if (!e.labels.empty()) os << "," << e.labels[i];
    for (double v : e.path(i)) os << "," << format_real(v);
    os << "\n";
  }
}

namespace {

constexpr char kMagic[4] = {'S', 'K', 'D', 'F'};
constexpr std::uint16_t kBinaryVersion = 1;

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw DomainError("binary ensemble: unexpected end of data");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace

// Layout: "SKDF", u16 version, u32 header length, JSON header, i8 labels
// (when present), then the f64 matrix row by row.
void write_binary(std::ostream& os, const PathEnsemble& e) {
  os.write(kMagic, 4);
  put_le<std::uint16_t>(os, kBinaryVersion);
  const std::string header = e.metadata().dump();
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(header.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (int l : e.labels) put_le<std::int8_t>(os, static_cast<std::int8_t>(l));
  for (double v : e.values) put_le<double>(os, v);
}

PathEnsemble read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DomainError("binary ensemble: bad magic");
  }
  const auto version = get_le<std::uint16_t>(is);
  require(version == kBinaryVersion, "binary ensemble: unsupported version " + std::to_string(version));
  const auto len = get_le<std::uint32_t>(is);
  std::string header(len, '\0');
  if (!is.read(header.data(), len)) throw DomainError("binary ensemble: truncated header");
  const auto h = nlohmann::json::parse(header);
  PathEnsemble e;
  e.grid = TimeGrid::from_json(h.at("grid"));
  e.seed = h.at("seed").get<std::uint64_t>();
  e.n_paths = h.at("n_paths").get<std::size_t>();
  e.steps = h.at("steps").get<std::vector<std::size_t>>();
  e.clamp_events = h.at("clamp_events").get<std::uint64_t>();
  e.total_steps = h.at("total_steps").get<std::uint64_t>();
  if (h.at("has_labels").get<bool>()) {
    e.labels.resize(e.n_paths);
    for (auto& l : e.labels) l = get_le<std::int8_t>(is);
  }
  e.values.resize(e.n_paths * e.steps.size());
  for (auto& v : e.values) v = get_le<double>(is);
  return e;
}

}  // namespace skewdiff
