// grazesim: command-line front end for the stochastic grazing-bifurcation
// library. Subcommands read a JSON config and write CSV/JSON outputs;
// unknown config keys are rejected. Exit codes: 0 success, 2 config
// error, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "grazesim/density.hpp"
#include "grazesim/oscillator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace grazesim;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

// Rejects keys outside the allowed set, reporting the offending key path.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& context) {
  if (!j.is_object()) throw ConfigError("config section '" + context + "' must be an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown config key '" + context + "." + item.key() + "'");
}

template <class T>
T require(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError("missing config key '" + context + "." + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + context + "." + key + "': " + e.what());
  }
}

template <class T>
T get_or(const json& j, const std::string& key, const std::string& context, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + context + "." + key + "': " + e.what());
  }
}

MapParams parse_map(const json& j, const std::string& context) {
  check_keys(j, {"tau", "delta", "chi", "mu"}, context);
  return {require<double>(j, "tau", context), require<double>(j, "delta", context),
          require<int>(j, "chi", context), get_or<double>(j, "mu", context, 0.0)};
}

SymMat2 parse_theta(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("'" + context + "' must be an array [s11, s12, s22]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

NoiseSpec parse_noise(const json& j, const std::string& context) {
  check_keys(j, {"eps", "theta"}, context);
  if (!j.contains("theta")) throw ConfigError("missing config key '" + context + ".theta'");
  return NoiseSpec(require<double>(j, "eps", context), parse_theta(j.at("theta"), context + ".theta"));
}

State2 parse_state(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError("'" + context + "' must be an array [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

OscillatorParams parse_oscillator(const json& j, const std::string& context) {
  check_keys(j, {"k_osc", "b_osc", "k_supp", "b_supp", "d", "F", "eps"}, context);
  OscillatorParams p;
  p.k_osc = get_or(j, "k_osc", context, p.k_osc);
  p.b_osc = get_or(j, "b_osc", context, p.b_osc);
  p.k_supp = get_or(j, "k_supp", context, p.k_supp);
  p.b_supp = get_or(j, "b_supp", context, p.b_supp);
  p.d = get_or(j, "d", context, p.d);
  p.F = get_or(j, "F", context, p.F);
  p.eps = get_or(j, "eps", context, p.eps);
  p.validate();
  return p;
}

std::string iso_timestamp() {
  char buf[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Accumulates rows and writes the whole file atomically (temp + rename),
// with '#' metadata comments and a header row.
class CsvWriter {
 public:
  CsvWriter(fs::path path, std::string header) : path_(std::move(path)), header_(std::move(header)) {}

  void meta(const std::string& key, const std::string& value) { meta_.emplace_back(key, value); }
  void row(const std::string& line) { rows_.push_back(line); }

  void commit() const {
    const fs::path tmp = path_.string() + ".tmp";
    {
      std::ofstream out(tmp);
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
      out << "# generated: " << iso_timestamp() << "\n";
      for (const auto& [k, v] : meta_) out << "# " << k << ": " << v << "\n";
      out << header_ << "\n";
      for (const std::string& r : rows_) out << r << "\n";
    }
    fs::rename(tmp, path_);
  }

 private:
  fs::path path_;
  std::string header_;
  std::vector<std::pair<std::string, std::string>> meta_;
  std::vector<std::string> rows_;
};

void write_json_atomic(const fs::path& path, const json& j) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << j.dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

struct Context {
  json config;
  std::string config_path;
  fs::path out_dir;
  std::uint64_t seed = 0;

  fs::path out(const std::string& name) const { return out_dir / name; }
  void stamp(CsvWriter& w, const std::string& subcommand) const {
    w.meta("subcommand", subcommand);
    w.meta("config", config_path);
    w.meta("seed", std::to_string(seed));
  }
};

std::vector<double> grid(double lo, double hi, int samples, const std::string& context) {
  if (samples < 1) throw ConfigError("'" + context + ".samples' must be >= 1");
  std::vector<double> g;
  for (int i = 0; i < samples; ++i)
    g.push_back(samples == 1 ? lo : lo + (hi - lo) * i / (samples - 1));
  return g;
}

// ---------------------------------------------------------------------------

void cmd_bifurcation(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"map", "noise", "mu", "iterates", "discard", "n_max", "s0", "prefix", "seed"},
             "config");
  const MapParams base = parse_map(c.at("map"), "map");
  const NoiseSpec noise = parse_noise(c.at("noise"), "noise");
  check_keys(c.at("mu"), {"lo", "hi", "samples"}, "mu");
  const double mu_lo = require<double>(c.at("mu"), "lo", "mu");
  const double mu_hi = require<double>(c.at("mu"), "hi", "mu");
  const int samples = require<int>(c.at("mu"), "samples", "mu");
  const auto iterates = require<std::uint64_t>(c, "iterates", "config");
  const auto discard = get_or<std::uint64_t>(c, "discard", "config", 1000);
  const int n_max = get_or<int>(c, "n_max", "config", 5);
  const State2 s0 = c.contains("s0") ? parse_state(c.at("s0"), "s0") : State2{0.0, 0.0};
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "bifurcation");

  NoiseStream parent(ctx.seed, 0);
  std::vector<NoiseStream> streams = parent.split(static_cast<size_t>(samples));

  CsvWriter scatter(ctx.out(prefix + "_scatter.csv"), "mu,x,y");
  CsvWriter branches(ctx.out(prefix + "_branches.csv"),
                     "mu,n,x_star,y_star,stable,admissible,impacting");
  CsvWriter stddev(ctx.out(prefix + "_stddev.csv"), "mu,n,point,x,y,sd_x,sd_y");
  ctx.stamp(scatter, "bifurcation");
  ctx.stamp(branches, "bifurcation");
  ctx.stamp(stddev, "bifurcation");

  const std::vector<double> mu_grid = grid(mu_lo, mu_hi, samples, "mu");
  for (int gi = 0; gi < samples; ++gi) {
    const MapParams p{base.tau, base.delta, base.chi, mu_grid[gi]};
    State2 s = s0;
    for (std::uint64_t i = 0; i < discard; ++i) s = step_stoch(p, noise, streams[gi], s);
    for (std::uint64_t i = 0; i < iterates; ++i) {
      s = step_stoch(p, noise, streams[gi], s);
      if (std::abs(s.x) > kDivergenceGuard || std::abs(s.y) > kDivergenceGuard)
        throw Diverged("bifurcation: orbit diverged at mu = " + std::to_string(p.mu));
      scatter.row(fmt(p.mu) + "," + fmt(s.x) + "," + fmt(s.y));
    }
    for (const PeriodicSolution& sol : solutions_at_mu(p, n_max)) {
      for (const State2& pt : sol.points)
        branches.row(fmt(p.mu) + "," + std::to_string(sol.n) + "," + fmt(pt.x) + "," + fmt(pt.y) +
                     "," + std::to_string(sol.stable) + "," + std::to_string(sol.admissible) + "," +
                     std::to_string(sol.impacting));
      if (sol.impacting && sol.stable && sol.admissible) {
        const CovarianceChain chain = covariance_chain(p, sol.n, sol.x_star, noise.theta());
        for (size_t i = 0; i < sol.points.size(); ++i) {
          const double sdx = noise.eps() * std::sqrt(std::max(chain.lambda[i].s11, 0.0));
          const double sdy = noise.eps() * std::sqrt(std::max(chain.lambda[i].s22, 0.0));
          stddev.row(fmt(p.mu) + "," + std::to_string(sol.n) + "," + std::to_string(i) + "," +
                     fmt(sol.points[i].x) + "," + fmt(sol.points[i].y) + "," + fmt(sdx) + "," +
                     fmt(sdy));
        }
      }
    }
  }
  scatter.commit();
  branches.commit();
  stddev.commit();
}

void cmd_density(const Context& ctx) {
  const json& c = ctx.config;
  const std::string mode = require<std::string>(c, "mode", "config");
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "density");
  NoiseStream stream(ctx.seed, 0);

  if (mode == "histogram") {
    check_keys(c, {"mode", "map", "noise", "s0", "iterates", "discard", "grid", "prefix", "seed"},
               "config");
    const MapParams p = parse_map(c.at("map"), "map");
    const NoiseSpec noise = parse_noise(c.at("noise"), "noise");
    const auto iterates = require<std::uint64_t>(c, "iterates", "config");
    const auto discard = get_or<std::uint64_t>(c, "discard", "config", 10000);
    const State2 s0 = c.contains("s0") ? parse_state(c.at("s0"), "s0") : State2{0.0, 0.0};
    const json& g = c.contains("grid") ? c.at("grid") : json::object();
    check_keys(g, {"nx", "ny", "x_lo", "x_hi", "y_lo", "y_hi"}, "grid");
    const int nx = get_or<int>(g, "nx", "grid", 512);
    const int ny = get_or<int>(g, "ny", "grid", 512);
    Histogram2D hist;
    if (g.contains("x_lo")) {
      hist = Histogram2D(require<double>(g, "x_lo", "grid"), require<double>(g, "x_hi", "grid"),
                         require<double>(g, "y_lo", "grid"), require<double>(g, "y_hi", "grid"), nx,
                         ny);
    } else {
      const AxisRanges r =
          auto_range(p, noise, stream, s0, std::min<std::uint64_t>(iterates, 100000), discard);
      hist = Histogram2D(r.x_lo, r.x_hi, r.y_lo, r.y_hi, nx, ny);
    }
    hist = estimate_density(p, noise, stream, s0, iterates, discard, std::move(hist));
    CsvWriter out(ctx.out(prefix + "_histogram.csv"), "x,y,count,probability");
    ctx.stamp(out, "density");
    out.meta("total", std::to_string(hist.total));
    out.meta("out_of_range", std::to_string(hist.out_of_range));
    out.meta("range", fmt(hist.x_lo) + " " + fmt(hist.x_hi) + " " + fmt(hist.y_lo) + " " +
                          fmt(hist.y_hi));
    out.meta("bins", std::to_string(hist.nx) + " x " + std::to_string(hist.ny));
    for (int ix = 0; ix < hist.nx; ++ix)
      for (int iy = 0; iy < hist.ny; ++iy) {
        const std::uint64_t count =
            hist.counts[static_cast<size_t>(ix) * static_cast<size_t>(hist.ny) + iy];
        if (count == 0) continue;
        out.row(fmt(hist.x_center(ix)) + "," + fmt(hist.y_center(iy)) + "," +
                std::to_string(count) + "," + fmt(hist.probability(ix, iy)));
      }
    out.commit();
    return;
  }

  if (mode == "fraction") {
    check_keys(c, {"mode", "map", "theta", "eps_list", "n", "s0", "iterates", "discard", "prefix",
                   "seed"},
               "config");
    const MapParams p = parse_map(c.at("map"), "map");
    const SymMat2 theta = parse_theta(c.at("theta"), "theta");
    const auto eps_list = require<std::vector<double>>(c, "eps_list", "config");
    const int n = require<int>(c, "n", "config");
    const auto iterates = require<std::uint64_t>(c, "iterates", "config");
    const auto discard = get_or<std::uint64_t>(c, "discard", "config", 10000);
    const State2 s0 = c.contains("s0") ? parse_state(c.at("s0"), "s0") : State2{0.0, 0.0};
    std::vector<NoiseStream> streams = stream.split(eps_list.size());
    CsvWriter out(ctx.out(prefix + "_fraction.csv"), "eps,fraction");
    ctx.stamp(out, "density");
    out.meta("n", std::to_string(n));
    for (size_t i = 0; i < eps_list.size(); ++i) {
      const NoiseSpec noise(eps_list[i], theta);
      out.row(fmt(eps_list[i]) + "," +
              fmt(period_fraction(p, noise, streams[i], s0, n, iterates, discard)));
    }
    out.commit();
    return;
  }

  if (mode == "stddev") {
    check_keys(c, {"mode", "map", "theta", "eps_list", "s0", "iterates", "discard", "prefix",
                   "seed"},
               "config");
    const MapParams p = parse_map(c.at("map"), "map");
    const SymMat2 theta = parse_theta(c.at("theta"), "theta");
    const auto eps_list = require<std::vector<double>>(c, "eps_list", "config");
    const auto iterates = require<std::uint64_t>(c, "iterates", "config");
    const auto discard = get_or<std::uint64_t>(c, "discard", "config", 10000);
    const State2 s0 = c.contains("s0") ? parse_state(c.at("s0"), "s0") : State2{0.0, 0.0};
    CsvWriter out(ctx.out(prefix + "_stddev.csv"), "eps,std_x,std_y");
    ctx.stamp(out, "density");
    for (const MarginalStd& m :
         marginal_std_sweep(p, theta, stream, eps_list, s0, iterates, discard))
      out.row(fmt(m.eps) + "," + fmt(m.std_x) + "," + fmt(m.std_y));
    out.commit();
    return;
  }

  throw ConfigError("config.mode must be one of: histogram, fraction, stddev");
}

void cmd_periodic(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"map", "n_max", "mu", "prefix", "seed"}, "config");
  const MapParams base = parse_map(c.at("map"), "map");
  const int n_max = get_or<int>(c, "n_max", "config", 5);
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "periodic");

  std::vector<BranchPoint> table;
  if (c.contains("mu")) {
    check_keys(c.at("mu"), {"lo", "hi", "samples"}, "mu");
    table = branch_sweep(base, n_max, require<double>(c.at("mu"), "lo", "mu"),
                         require<double>(c.at("mu"), "hi", "mu"),
                         require<int>(c.at("mu"), "samples", "mu"));
  } else {
    table = {{base.mu, solutions_at_mu(base, n_max)}};
  }

  CsvWriter out(ctx.out(prefix + "_solutions.csv"),
                "mu,n,x_star,y_star,stable,marginal_flagged,admissible,impacting,mult1_mod,"
                "mult2_mod");
  ctx.stamp(out, "periodic");
  for (const BranchPoint& bp : table)
    for (const PeriodicSolution& s : bp.solutions)
      out.row(fmt(bp.mu) + "," + std::to_string(s.n) + "," + fmt(s.x_star) + "," + fmt(s.y_star) +
              "," + std::to_string(s.stable) + "," + std::to_string(false) + "," +
              std::to_string(s.admissible) + "," + std::to_string(s.impacting) + "," +
              fmt(std::abs(s.multipliers[0])) + "," + fmt(std::abs(s.multipliers[1])));
  out.commit();
}

json sym_to_json(const SymMat2& s) { return json{{"s11", s.s11}, {"s12", s.s12}, {"s22", s.s22}}; }
json mat_to_json(const Mat2& m) {
  return json{{"m11", m.m11}, {"m12", m.m12}, {"m21", m.m21}, {"m22", m.m22}};
}

void cmd_covariance(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"map", "theta", "n", "prefix", "seed"}, "config");
  const MapParams p = parse_map(c.at("map"), "map");
  const SymMat2 theta = parse_theta(c.at("theta"), "theta");
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "covariance");

  std::optional<PeriodicSolution> sol;
  if (c.contains("n")) {
    const int n = require<int>(c, "n", "config");
    for (double x_star : solve_for_x(p, n)) {
      if (x_star <= 0.0) continue;
      PeriodicSolution cand = make_solution(p, n, x_star);
      if (cand.stable && cand.admissible) sol = cand;
    }
    if (!sol) throw std::runtime_error("covariance: no stable admissible period-n solution");
  } else {
    for (const PeriodicSolution& s : solutions_at_mu(p, 8))
      if (s.impacting && s.stable && s.admissible) sol = s;
    if (!sol)
      throw std::runtime_error("covariance: no stable admissible impacting solution for n <= 8");
  }

  const NthPowerData npd = nth_power_data(p, sol->n);
  const SymMat2 tn = theta_n(p.A(), theta, sol->n);
  const CovarianceChain chain = covariance_chain(p, sol->n, sol->x_star, theta);

  json out{{"map", {{"tau", p.tau}, {"delta", p.delta}, {"chi", p.chi}, {"mu", p.mu}}},
           {"theta", sym_to_json(theta)},
           {"n", sol->n},
           {"x_star", sol->x_star},
           {"y_star", sol->y_star},
           {"theta_n", sym_to_json(chain.theta_n)},
           {"det_guard", chain.det_guard},
           {"lambda_approx", sym_to_json(lambda_approx(npd, sol->x_star, tn))}};
  json lams = json::array();
  for (const SymMat2& l : chain.lambda) lams.push_back(sym_to_json(l));
  out["lambda"] = lams;
  try {
    out["theta_inf"] = sym_to_json(theta_inf(p.tau, p.delta, theta));
  } catch (const Unstable&) {
    out["theta_inf"] = nullptr;
  }
  write_json_atomic(ctx.out(prefix + ".json"), out);
}

void cmd_derive_params(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"oscillator", "prefix", "seed"}, "config");
  const OscillatorParams p = parse_oscillator(c.at("oscillator"), "oscillator");
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "derived_params");
  const DerivedNormalForm nf = derive_normal_form(p);
  json change = json::array(), change_inv = json::array();
  for (int i = 0; i < 3; ++i) {
    json row = json::array(), row_inv = json::array();
    for (int j = 0; j < 3; ++j) {
      row.push_back(nf.change(i, j));
      row_inv.push_back(nf.change_inv(i, j));
    }
    change.push_back(row);
    change_inv.push_back(row_inv);
  }
  write_json_atomic(
      ctx.out(prefix + ".json"),
      json{{"f_graz", nf.f_graz},
           {"t_graz", nf.t_graz},
           {"alpha", nf.alpha},
           {"beta", nf.beta},
           {"a_hat", mat_to_json(nf.a_hat)},
           {"b_hat", {nf.b_hat.x, nf.b_hat.y}},
           {"c", nf.c},
           {"tau", nf.tau},
           {"delta", nf.delta},
           {"chi", nf.chi},
           {"omega", {{"w11", nf.omega.w11}, {"w12", nf.omega.w12}, {"w22", nf.omega.w22}}},
           {"theta_g", sym_to_json(nf.theta_g_mat)},
           {"theta", sym_to_json(nf.theta)},
           {"change", change},
           {"change_inv", change_inv}});
}

void cmd_oscillator(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"oscillator", "sim", "prefix", "seed"}, "config");
  const OscillatorParams p = parse_oscillator(c.at("oscillator"), "oscillator");
  const json& s = c.at("sim");
  check_keys(s, {"periods", "steps_per_period", "s0", "sample_stride"}, "sim");
  const double periods = require<double>(s, "periods", "sim");
  const int steps = get_or<int>(s, "steps_per_period", "sim", 4096);
  const int stride = get_or<int>(s, "sample_stride", "sim", 1);
  if (steps < 16 || stride < 1) throw ConfigError("sim.steps_per_period >= 16, sample_stride >= 1");
  OscState st{-1.0, 0.0, 0.0};
  if (s.contains("s0")) {
    const json& j0 = s.at("s0");
    if (!j0.is_array() || j0.size() != 3) throw ConfigError("'sim.s0' must be [u, udot, t]");
    st = {j0[0].get<double>(), j0[1].get<double>(), j0[2].get<double>()};
  }
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "oscillator");
  const double h = kTwoPi / steps;

  CsvWriter path_csv(ctx.out(prefix + "_path.csv"), "t,u,udot");
  CsvWriter events_csv(ctx.out(prefix + "_events.csv"), "t,u,udot,direction");
  CsvWriter pi_csv(ctx.out(prefix + "_pi.csv"), "t,u");
  CsvWriter pip_csv(ctx.out(prefix + "_pi_prime.csv"), "u1,w1,virtual");
  for (CsvWriter* w : {&path_csv, &events_csv, &pi_csv, &pip_csv}) ctx.stamp(*w, "oscillator");

  PiCollector pi(p);
  PiPrimeCollector pip(p, p.t_graz());
  NoiseStream stream(ctx.seed, 0);
  std::uint64_t step_count = 0;
  simulate_sde(p, stream, st, periods * kTwoPi, h,
               [&](const OscState& o) {
                 pi.push(o);
                 pip.push_state(o);
                 if (step_count++ % static_cast<std::uint64_t>(stride) == 0)
                   path_csv.row(fmt(o.t) + "," + fmt(o.u) + "," + fmt(o.udot));
               },
               [&](const OscEvent& e) {
                 pip.push_event(e);
                 events_csv.row(fmt(e.t) + "," + fmt(e.u) + "," + fmt(e.udot) + "," +
                                std::to_string(e.direction));
               });
  for (const auto& pt : pi.points()) pi_csv.row(fmt(pt.t) + "," + fmt(pt.u));
  for (const auto& pt : pip.points())
    pip_csv.row(fmt(pt.u1) + "," + fmt(pt.w1) + "," + std::to_string(pt.virtual_point));
  path_csv.commit();
  events_csv.commit();
  pi_csv.commit();
  pip_csv.commit();
}

void cmd_compare(const Context& ctx) {
  const json& c = ctx.config;
  check_keys(c, {"oscillator", "d_f_list", "periods", "steps_per_period", "discard_sections",
                 "map_discard", "prefix", "seed"},
             "config");
  OscillatorParams base = parse_oscillator(c.at("oscillator"), "oscillator");
  const auto d_f_list = require<std::vector<double>>(c, "d_f_list", "config");
  const double periods = require<double>(c, "periods", "config");
  const int steps = get_or<int>(c, "steps_per_period", "config", 4096);
  const auto discard_sections = get_or<std::uint64_t>(c, "discard_sections", "config", 200);
  const auto map_discard = get_or<std::uint64_t>(c, "map_discard", "config", 2000);
  const std::string prefix = get_or<std::string>(c, "prefix", "config", "compare");

  CsvWriter sde_csv(ctx.out(prefix + "_sde_sections.csv"), "d_f,F,u1,w1,virtual");
  CsvWriter map_csv(ctx.out(prefix + "_map_sections.csv"), "d_f,F,u1,x,y");
  CsvWriter summary(ctx.out(prefix + "_summary.csv"),
                    "d_f,F,count,sde_mean,sde_std,map_mean,map_std");
  for (CsvWriter* w : {&sde_csv, &map_csv, &summary}) ctx.stamp(*w, "compare");

  for (size_t fi = 0; fi < d_f_list.size(); ++fi) {
    OscillatorParams p = base;
    p.F = p.f_graz() + d_f_list[fi];
    const DerivedNormalForm nf = derive_normal_form(p);

    PiPrimeCollector collector(p, p.t_graz());
    NoiseStream stream(ctx.seed, 2 * fi);
    simulate_sde(p, stream, OscState{-1.0, 0.0, 0.0}, periods * kTwoPi, kTwoPi / steps,
                 [&](const OscState& o) { collector.push_state(o); },
                 [&](const OscEvent& e) { collector.push_event(e); });
    const auto& pts = collector.points();
    if (pts.size() <= discard_sections)
      throw NoReturns("compare: too few section points; increase periods");
    double sum = 0.0, sum2 = 0.0;
    const size_t count = pts.size() - discard_sections;
    for (size_t i = discard_sections; i < pts.size(); ++i) {
      sde_csv.row(fmt(d_f_list[fi]) + "," + fmt(p.F) + "," + fmt(pts[i].u1) + "," +
                  fmt(pts[i].w1) + "," + std::to_string(pts[i].virtual_point));
      sum += pts[i].u1;
      sum2 += pts[i].u1 * pts[i].u1;
    }
    const double sde_mean = sum / count;
    const double sde_std = std::sqrt(std::max(0.0, sum2 / count - sde_mean * sde_mean));

    const MapParams mp = nf.map_params(d_f_list[fi]);
    const NoiseSpec noise(p.eps, nf.theta);
    NoiseStream map_stream(ctx.seed, 2 * fi + 1);
    State2 st{0.0, 0.0};
    for (std::uint64_t i = 0; i < map_discard; ++i) st = step_stoch(mp, noise, map_stream, st);
    sum = 0.0;
    sum2 = 0.0;
    for (size_t i = 0; i < count; ++i) {
      st = step_stoch(mp, noise, map_stream, st);
      const double u1 = from_normal_form(nf, st.x, st.y, mp.mu).v[0];
      map_csv.row(fmt(d_f_list[fi]) + "," + fmt(p.F) + "," + fmt(u1) + "," + fmt(st.x) + "," +
                  fmt(st.y));
      sum += u1;
      sum2 += u1 * u1;
    }
    const double map_mean = sum / count;
    const double map_std = std::sqrt(std::max(0.0, sum2 / count - map_mean * map_mean));
    summary.row(fmt(d_f_list[fi]) + "," + fmt(p.F) + "," + std::to_string(count) + "," +
                fmt(sde_mean) + "," + fmt(sde_std) + "," + fmt(map_mean) + "," + fmt(map_std));
  }
  sde_csv.commit();
  map_csv.commit();
  summary.commit();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grazesim: stochastic grazing-bifurcation toolkit"};
  app.require_subcommand(1);

  struct SubDef {
    const char* name;
    const char* help;
    void (*run)(const Context&);
  };
  const std::vector<SubDef> defs{
      {"bifurcation", "Stochastic bifurcation diagram with analytic overlays", cmd_bifurcation},
      {"density", "Invariant-density histogram / period fraction / marginal stddev", cmd_density},
      {"periodic", "Maximal periodic solutions over a mu grid", cmd_periodic},
      {"covariance", "Analytic covariance chain for a periodic solution", cmd_covariance},
      {"derive-params", "Normal-form parameters from oscillator parameters", cmd_derive_params},
      {"oscillator", "SDE simulation of the impact oscillator with sections", cmd_oscillator},
      {"compare", "Paired SDE-vs-map section statistics", cmd_compare},
  };

  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed_override = -1;
  std::vector<std::pair<CLI::App*, void (*)(const Context&)>> subs;
  for (const SubDef& d : defs) {
    CLI::App* sub = app.add_subcommand(d.name, d.help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed_override, "Override the config's seed");
    sub->add_option("--out", out_dir, "Output directory");
    subs.emplace_back(sub, d.run);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    Context ctx;
    ctx.config = load_config(config_path);
    ctx.config_path = config_path;
    ctx.out_dir = out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    ctx.seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                  : get_or<std::uint64_t>(ctx.config, "seed", "config", 0);
    // Echo the parsed config: loading and re-emitting is idempotent.
    write_json_atomic(ctx.out_dir / "config_echo.json", ctx.config);
    for (const auto& [sub, run] : subs)
      if (sub->parsed()) run(ctx);
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
