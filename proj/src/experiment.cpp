#include "mbde/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "mbde/io.hpp"
#include "mbde/rng.hpp"

namespace mbde {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto stop = comma == std::string::npos ? s.size() : comma;
    const std::string item = trim(s.substr(start, stop - start));
    if (!item.empty()) out.push_back(parse_double(item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_list_str(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ",";
    s += format_double(v[i]);
  }
  return s;
}

// Seed tags for evaluation streams; disjoint from the booster's round tags
// because they enter derive_seed with distinct first components.
enum : std::uint64_t { kEvalNll = 0xA0, kEvalKl = 0xA1, kEvalCov = 0xA2, kEvalCert = 0xA3 };

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const auto eq = stripped.find('=');
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    try {
      if (key == "domain") {
        if (value != "mix1d" && value != "ring" && value != "random1d")
          throw std::invalid_argument("must be one of mix1d|ring|random1d");
        cfg.domain = value;
      } else if (key == "eps_sweep") {
        cfg.eps_sweep = parse_double_list(value);
        if (cfg.eps_sweep.empty()) throw std::invalid_argument("empty sweep");
      } else if (key == "eps") {
        cfg.eps = parse_double(value);
      } else if (key == "T") {
        cfg.T = static_cast<int>(parse_double(value));
      } else if (key == "n_train") {
        cfg.n_train = static_cast<int>(parse_double(value));
      } else if (key == "n_eval") {
        cfg.n_eval = static_cast<int>(parse_double(value));
      } else if (key == "n_coverage") {
        cfg.n_coverage = static_cast<int>(parse_double(value));
      } else if (key == "n_mc_phi") {
        cfg.n_mc_phi = static_cast<int>(parse_double(value));
      } else if (key == "repeats") {
        cfg.repeats = static_cast<int>(parse_double(value));
        if (cfg.repeats < 1) throw std::invalid_argument("must be >= 1");
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "paper_scale") {
        cfg.paper_scale = parse_bool(value);
      } else if (key == "theory_train") {
        cfg.theory_train = parse_bool(value);
      } else if (key == "proposal_sigma") {
        cfg.mcmc.proposal_sigma = parse_double(value);
      } else if (key == "burn_in") {
        cfg.mcmc.burn_in = static_cast<int>(parse_double(value));
      } else if (key == "thinning") {
        cfg.mcmc.thinning = static_cast<int>(parse_double(value));
      } else if (key == "n_chains") {
        cfg.mcmc.n_chains = static_cast<int>(parse_double(value));
      } else if (key == "learning_rate") {
        cfg.train.learning_rate = parse_double(value);
      } else if (key == "momentum") {
        cfg.train.momentum = parse_double(value);
      } else if (key == "epochs") {
        cfg.train.epochs = static_cast<int>(parse_double(value));
      } else if (key == "batch_size") {
        cfg.train.batch_size = static_cast<int>(parse_double(value));
      } else if (key == "ring_components") {
        cfg.ring_components = static_cast<int>(parse_double(value));
      } else if (key == "ring_radius") {
        cfg.ring_radius = parse_double(value);
      } else if (key == "ring_sigma2") {
        cfg.ring_sigma2 = parse_double(value);
      } else if (key == "random_m") {
        cfg.random_m = static_cast<int>(parse_double(value));
      } else if (key == "random_target_seed") {
        cfg.random_target_seed = static_cast<std::uint64_t>(std::stoull(value));
      } else {
        throw ConfigError(where + ": unknown key '" + key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(where + ": invalid value for '" + key + "': " + e.what());
    }
  }
  if (cfg.paper_scale) apply_paper_scale(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text, path.filename().string());
}

std::string config_to_manifest(const ExperimentConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["domain"] = cfg.domain;
  kv["eps_sweep"] = double_list_str(cfg.eps_sweep);
  kv["eps"] = format_double(cfg.eps);
  kv["T"] = std::to_string(cfg.T);
  kv["n_train"] = std::to_string(cfg.n_train);
  kv["n_eval"] = std::to_string(cfg.n_eval);
  kv["n_coverage"] = std::to_string(cfg.n_coverage);
  kv["n_mc_phi"] = std::to_string(cfg.n_mc_phi);
  kv["repeats"] = std::to_string(cfg.repeats);
  kv["seed"] = std::to_string(cfg.seed);
  kv["out_dir"] = cfg.out_dir;
  kv["paper_scale"] = bool_str(cfg.paper_scale);
  kv["theory_train"] = bool_str(cfg.theory_train);
  kv["proposal_sigma"] = format_double(cfg.mcmc.proposal_sigma);
  kv["burn_in"] = std::to_string(cfg.mcmc.burn_in);
  kv["thinning"] = std::to_string(cfg.mcmc.thinning);
  kv["n_chains"] = std::to_string(cfg.mcmc.n_chains);
  kv["learning_rate"] = format_double(cfg.train.learning_rate);
  kv["momentum"] = format_double(cfg.train.momentum);
  kv["epochs"] = std::to_string(cfg.train.epochs);
  kv["batch_size"] = std::to_string(cfg.train.batch_size);
  kv["ring_components"] = std::to_string(cfg.ring_components);
  kv["ring_radius"] = format_double(cfg.ring_radius);
  kv["ring_sigma2"] = format_double(cfg.ring_sigma2);
  kv["random_m"] = std::to_string(cfg.random_m);
  kv["random_target_seed"] = std::to_string(cfg.random_target_seed);

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

void apply_paper_scale(ExperimentConfig& cfg) {
  cfg.n_train = 10000;
  cfg.train.epochs = 750;
}

TargetDensity make_domain_target(const ExperimentConfig& cfg) {
  if (cfg.domain == "mix1d") return make_1d_mixture();
  if (cfg.domain == "ring")
    return make_ring(cfg.ring_components, cfg.ring_radius, cfg.ring_sigma2);
  if (cfg.domain == "random1d")
    return make_random_gaussians(cfg.random_m, cfg.random_target_seed);
  throw ConfigError("unknown domain '" + cfg.domain + "'");
}

BoostConfig boost_config_for(const ExperimentConfig& cfg, double eps, std::uint64_t seed) {
  BoostConfig bc;
  bc.T = cfg.T;
  bc.eps = eps;
  bc.n_train = cfg.n_train;
  bc.n_mc_phi = cfg.n_mc_phi;
  bc.mcmc = cfg.mcmc;
  bc.train = cfg.train;
  bc.seed = seed;
  return bc;
}

TrainArtifacts run_train(const ExperimentConfig& cfg) {
  const TargetDensity target = make_domain_target(cfg);
  const MollifiedDensity model = boost(target, boost_config_for(cfg, cfg.eps, cfg.seed));

  std::string wla_csv = "round,theta,gamma_p,gamma_q,c_star,regime\n";
  for (std::size_t t = 0; t < model.wla_history.size(); ++t) {
    const auto& w = model.wla_history[t];
    wla_csv += std::to_string(t + 1) + "," + format_double(model.thetas.values[t]) + "," +
               format_double(w.gamma_p) + "," + format_double(w.gamma_q) + "," +
               format_double(w.c_star) + "," + regime_name(w.regime) + "\n";
  }
  return {model, config_to_manifest(cfg), wla_csv};
}

namespace {

// Per-axis plot extent of the target: [min(mu - 4 sigma), max(mu + 4 sigma)].
std::pair<Point, Point> target_extent(const TargetDensity& t) {
  Point lo(static_cast<std::size_t>(t.dim), 0.0), hi(static_cast<std::size_t>(t.dim), 0.0);
  for (int a = 0; a < t.dim; ++a) {
    double mn = std::numeric_limits<double>::infinity();
    double mx = -std::numeric_limits<double>::infinity();
    for (const auto& c : t.components) {
      const double s = std::sqrt(c.variance[static_cast<std::size_t>(a)]);
      mn = std::min(mn, c.mean[static_cast<std::size_t>(a)] - 4.0 * s);
      mx = std::max(mx, c.mean[static_cast<std::size_t>(a)] + 4.0 * s);
    }
    lo[static_cast<std::size_t>(a)] = mn;
    hi[static_cast<std::size_t>(a)] = mx;
  }
  return {lo, hi};
}

std::string density_grid_csv(const MollifiedDensity& model, const TargetDensity& target) {
  const auto [lo, hi] = target_extent(target);
  std::string csv;
  if (model.dim() == 1) {
    csv = "x,logq\n";
    const std::size_t n = 1024;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) /
                                   static_cast<double>(n - 1);
      csv += format_double(x) + "," + format_double(model.log_density({x})) + "\n";
    }
  } else {
    csv = "x,y,logq\n";
    const std::size_t side = 256;
    for (std::size_t i = 0; i < side; ++i) {
      const double x = lo[0] + (hi[0] - lo[0]) * static_cast<double>(i) /
                                   static_cast<double>(side - 1);
      for (std::size_t j = 0; j < side; ++j) {
        const double y = lo[1] + (hi[1] - lo[1]) * static_cast<double>(j) /
                                     static_cast<double>(side - 1);
        csv += format_double(x) + "," + format_double(y) + "," +
               format_double(model.log_density({x, y})) + "\n";
      }
    }
  }
  return csv;
}

json metric_record(const std::string& name, double value, double std_err, std::size_t n,
                   std::uint64_t seed, const json& params) {
  return {{"metric", name}, {"value", value},   {"stderr", std_err},
          {"n", n},         {"seed", seed},     {"params", params}};
}

}  // namespace

EvalArtifacts run_eval(const MollifiedDensity& model, const ExperimentConfig& cfg) {
  const TargetDensity target = make_domain_target(cfg);
  if (target.dim != model.dim())
    throw ConfigError("eval: config domain dimension does not match the model");

  const std::uint64_t seed = cfg.seed;
  const std::size_t n_eval = static_cast<std::size_t>(cfg.n_eval);
  const std::size_t n_cov = static_cast<std::size_t>(cfg.n_coverage);

  const Dataset held_out = sample_target(target, n_eval, derive_seed(seed, kEvalNll));
  const Estimate nll_v = nll(held_out, model);
  const Estimate kl_v = kl_mc(target, model, n_eval, derive_seed(seed, kEvalKl));
  const Coverage cov = mode_coverage(target, model, 0.95, n_cov,
                                     derive_seed(seed, kEvalCov), cfg.mcmc);

  EvalArtifacts art;
  art.nll_value = nll_v;
  art.kl_value = kl_v;
  art.coverage = cov.value;
  art.metrics = json::array();
  art.metrics.push_back(metric_record("nll", nll_v.value, nll_v.std_err, n_eval, seed,
                                      {{"eps", model.eps()}, {"T", model.rounds()}}));
  art.metrics.push_back(metric_record("kl", kl_v.value, kl_v.std_err, n_eval, seed,
                                      {{"eps", model.eps()}, {"T", model.rounds()}}));
  art.metrics.push_back(metric_record(
      "mode_coverage", cov.value, 0.0, n_cov, seed,
      {{"eps", model.eps()}, {"T", model.rounds()}, {"level", 0.95}, {"threshold", cov.threshold}}));

  art.metrics_csv = "eps,T,seed,nll,nll_stderr,coverage,kl,kl_stderr\n";
  art.metrics_csv += format_double(model.eps()) + "," + std::to_string(model.rounds()) + "," +
                     std::to_string(seed) + "," + format_double(nll_v.value) + "," +
                     format_double(nll_v.std_err) + "," + format_double(cov.value) + "," +
                     format_double(kl_v.value) + "," + format_double(kl_v.std_err) + "\n";
  art.grid_csv = density_grid_csv(model, target);
  return art;
}

ThetaSumCheck theta_sum_check(double eps, int T) {
  const ThetaSchedule s = theta_schedule(eps, T);
  long double sum = 0.0L, comp = 0.0L;
  for (double v : s.values) {
    const long double y = static_cast<long double>(v) - comp;
    const long double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  ThetaSumCheck c;
  c.sum = static_cast<double>(sum);
  c.bound = s.sum_bound();
  const double r = s.ratio();
  // Strictness holds identically: the partial sum of a geometric series with
  // ratio r in (0,1) is below r/(1-r) by exactly r^{T+1}/(1-r) > 0.
  c.strict = r > 0.0 && r < 1.0;
  c.margin_log10 =
      (static_cast<double>(T) + 1.0) * std::log10(r) - std::log10(1.0 - r);
  // Sanity: the floating sum cannot exceed the bound by more than rounding.
  c.strict = c.strict && c.sum <= c.bound * (1.0 + 1e-12);
  return c;
}

namespace {

struct CellResult {
  double eps = 0.0;
  int T = 0;
  std::uint64_t seed = 0;
  Estimate nll_v;
  Estimate kl_v;
  double coverage = 0.0;
};

std::string runs_csv_header() {
  return "eps,T,seed,nll,nll_stderr,coverage,kl,kl_stderr\n";
}

std::string cell_row(const CellResult& c) {
  return format_double(c.eps) + "," + std::to_string(c.T) + "," + std::to_string(c.seed) +
         "," + format_double(c.nll_v.value) + "," + format_double(c.nll_v.std_err) + "," +
         format_double(c.coverage) + "," + format_double(c.kl_v.value) + "," +
         format_double(c.kl_v.std_err) + "\n";
}

}  // namespace

ExperimentArtifacts run_experiment(const ExperimentConfig& cfg) {
  const TargetDensity target = make_domain_target(cfg);
  const std::size_t n_eps = cfg.eps_sweep.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.repeats);

  // Cell (e, r) for e < n_eps is a boosted model; e == n_eps is the T = 0
  // baseline, recorded with eps = 0 in the tables.
  const std::size_t cells = (n_eps + 1) * reps;
  std::vector<CellResult> results(cells);

  parallel_for(cells, [&](std::size_t idx) {
    const std::size_t e = idx / reps;
    const std::size_t r = idx % reps;
    // Repeat seeds are shared across eps so sweeps are paired by seed.
    const std::uint64_t cell_seed = derive_seed(cfg.seed, 0xCE11, r);

    CellResult out;
    out.seed = cell_seed;
    MollifiedDensity model;
    if (e < n_eps) {
      model = boost(target, boost_config_for(cfg, cfg.eps_sweep[e], cell_seed));
      out.eps = cfg.eps_sweep[e];
      out.T = static_cast<int>(model.rounds());
    } else {
      model = MollifiedDensity::base_only(target.dim, cfg.eps_sweep.front());
      out.eps = 0.0;
      out.T = 0;
    }

    const std::size_t n_eval = static_cast<std::size_t>(cfg.n_eval);
    const Dataset held_out =
        sample_target(target, n_eval, derive_seed(cell_seed, kEvalNll, e));
    out.nll_v = nll(held_out, model);
    out.kl_v = kl_mc(target, model, n_eval, derive_seed(cell_seed, kEvalKl, e));
    out.coverage = mode_coverage(target, model, 0.95,
                                 static_cast<std::size_t>(cfg.n_coverage),
                                 derive_seed(cell_seed, kEvalCov, e), cfg.mcmc)
                       .value;
    results[idx] = out;
  });

  ExperimentArtifacts art;
  art.runs_csv = runs_csv_header();
  for (const auto& c : results) art.runs_csv += cell_row(c);

  art.sweep_csv =
      "eps,T,repeats,nll_mean,nll_std,coverage_mean,coverage_std,kl_mean,kl_std\n";
  for (std::size_t e = 0; e < n_eps + 1; ++e) {
    std::vector<double> nlls, covs, kls;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& c = results[e * reps + r];
      nlls.push_back(c.nll_v.value);
      covs.push_back(c.coverage);
      kls.push_back(c.kl_v.value);
    }
    auto mean_std = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      const double sd = v.size() > 1 ? std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) : 0.0;
      return std::pair<double, double>{m, sd};
    };
    const auto [nm, ns] = mean_std(nlls);
    const auto [cm, cs] = mean_std(covs);
    const auto [km, ks] = mean_std(kls);
    const double eps_col = e < n_eps ? cfg.eps_sweep[e] : 0.0;
    const int t_col = e < n_eps ? cfg.T : 0;
    art.sweep_csv += format_double(eps_col) + "," + std::to_string(t_col) + "," +
                     std::to_string(reps) + "," + format_double(nm) + "," + format_double(ns) +
                     "," + format_double(cm) + "," + format_double(cs) + "," +
                     format_double(km) + "," + format_double(ks) + "\n";
  }
  return art;
}

TheoryArtifacts run_theory(const ExperimentConfig& cfg) {
  TheoryArtifacts art;
  art.report = json::array();
  auto record = [&](const std::string& check, const json& inputs, double bound,
                    double observed, double std_err, bool pass, bool exact) {
    art.report.push_back({{"check", check},
                          {"inputs", inputs},
                          {"bound", bound},
                          {"observed", observed},
                          {"stderr", std_err},
                          {"pass", pass},
                          {"exact", exact}});
    if (exact && !pass) art.exact_ok = false;
  };

  // Theta partial-sum bound at every sweep eps (and the canonical grid).
  std::vector<double> eps_list = cfg.eps_sweep;
  for (double e : {0.01, 0.1, 1.0, 10.0, 100.0}) eps_list.push_back(e);
  for (double e : eps_list) {
    const ThetaSumCheck c = theta_sum_check(e, 10000);
    record("theta_sum_strict", {{"eps", e}, {"T", 10000}}, c.bound, c.sum, 0.0, c.strict,
           true);
  }

  // Gamma on the high-regime interval [1/3, 1]: nonnegative, increasing and
  // bounded by z log 2 with equality only at z = 1.
  {
    bool ok = true;
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double z = (1.0 + 2.0 * static_cast<double>(i) / 1000.0) / 3.0;
      const double g = gamma_fn(z);
      ok = ok && g >= -1e-15 && g <= z * kLog2 + 1e-15 && g >= prev;
      prev = g;
    }
    ok = ok && std::abs(gamma_fn(1.0 / 3.0)) < 1e-15 &&
         std::abs(gamma_fn(1.0) - kLog2) < 1e-15;
    record("gamma_chord_bound", {{"grid", 1e-3}, {"interval", "[1/3, 1]"}}, 0.0, 0.0, 0.0,
           ok, true);
  }

  // Barrier: lower <= upper across a parameter grid.
  {
    bool ok = true;
    for (double e : eps_list)
      for (double g = 0.05; g <= 1.0; g += 0.05)
        for (int t : {1, 2, 3, 5, 10}) {
          const BarrierBounds b = barrier_bounds(e, g, g, t);
          ok = ok && b.lower <= b.upper + 1e-15;
        }
    record("barrier_order", {{"grid", "eps x gamma x T"}}, 0.0, 0.0, 0.0, ok, true);
  }

  // Mode-capture threshold: dominates the relaxed form, monotone in alpha
  // everywhere and in T wherever the average advantage exceeds one half
  // (the T-derivative has the sign of 1 - 2*gbar).
  {
    bool ok = true;
    for (double e : eps_list)
      for (double g = 0.1; g <= 1.0; g += 0.1)
        for (int t : {1, 2, 3, 5, 10}) {
          for (double a = 0.0; a <= 1.0; a += 0.25) {
            const double main_form = mode_capture_threshold(e, g, g, t, a);
            const double relaxed = mode_capture_threshold_relaxed(e, g, g, t, a);
            ok = ok && main_form >= relaxed - 1e-12;
            if (a > 0.0)
              ok = ok && main_form <= mode_capture_threshold(e, g, g, t, a - 0.25) + 1e-12;
          }
          if (t > 1 && g > 0.5)
            ok = ok && mode_capture_threshold(e, g, g, t, 0.5) <=
                           mode_capture_threshold(e, g, g, t - 1, 0.5) + 1e-12;
        }
    record("mode_capture_threshold_order", {{"grid", "eps x gamma x T x alpha"}}, 0.0, 0.0,
           0.0, ok, true);
  }

  // Drop-bound calculator vs direct transcription on random draws.
  {
    RngStream rng(derive_seed(cfg.seed, 0x7E0));
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      WlaReport w;
      w.gamma_p = 0.01 + 0.99 * rng.uniform();
      w.gamma_q = 0.01 + 0.99 * rng.uniform();
      w.c_star = 1e-3 + (kLog2 - 1e-3) * rng.uniform();
      w.regime = w.gamma_q >= 1.0 / 3.0 ? Regime::high : Regime::low;
      const double theta = rng.uniform();
      const DropBound d = kl_drop_bound(w, theta);
      const double expected =
          w.regime == Regime::high
              ? w.c_star * w.gamma_p + std::log(4.0 / (5.0 - 3.0 * w.gamma_q))
              : w.gamma_p + w.gamma_q - w.c_star * theta / 2.0;
      ok = ok && std::abs(d.lambda_t - expected) <=
                     1e-12 * std::max(1.0, std::abs(expected));
    }
    record("kl_drop_formula_transcription", {{"draws", 1000}}, 1e-12, 0.0, 0.0, ok, true);
  }

  // Privacy certificates on freshly trained models at the sweep extremes.
  if (cfg.theory_train) {
    const TargetDensity target = make_domain_target(cfg);
    const auto [mn, mx] =
        std::minmax_element(cfg.eps_sweep.begin(), cfg.eps_sweep.end());
    for (double e : {*mn, *mx}) {
      const MollifiedDensity model =
          boost(target, boost_config_for(cfg, e, derive_seed(cfg.seed, 0x7E1)));
      const Dataset eval = certificate_eval_points(
          model.dim(), static_cast<std::size_t>(cfg.n_eval), derive_seed(cfg.seed, kEvalCert));
      const CertificateResult cert = privacy_certificate(model, eval);
      record("privacy_certificate", {{"eps", e}, {"domain", cfg.domain}}, cert.bound,
             cert.max_abs, model.phi_stderr, cert.pass, true);
    }
  }

  return art;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::size_t workers = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("MBDE_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) workers = static_cast<std::size_t>(v);
  }
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mbde
