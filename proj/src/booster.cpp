#include "mbde/booster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mbde/rng.hpp"

namespace mbde {

namespace {

// Seed-stream tags for the phases of one boosting run.
enum : std::uint64_t { kTagP = 1, kTagQ = 2, kTagTrain = 3, kTagPhi = 4, kTagEval = 5 };

}  // namespace

ThetaSchedule theta_schedule(double eps, int T) {
  if (!(eps > 0.0)) throw std::invalid_argument("theta_schedule: eps must be positive");
  if (T < 0) throw std::invalid_argument("theta_schedule: T must be nonnegative");
  ThetaSchedule s;
  s.eps = eps;
  s.values.reserve(static_cast<std::size_t>(T));
  const double r = eps / (eps + 4.0 * kLog2);
  double theta = 1.0;
  for (int t = 1; t <= T; ++t) {
    theta *= r;
    s.values.push_back(theta);
  }
  return s;
}

double MollifiedDensity::unnormalized_log_density(const Point& x) const {
  double s = mbde::log_density(base, x);
  for (std::size_t t = 0; t < classifiers.size(); ++t)
    s += thetas.values[t] * classify(classifiers[t], x);
  return s;
}

double MollifiedDensity::log_density(const Point& x) const {
  return unnormalized_log_density(x) - phi_hat;
}

MollifiedDensity MollifiedDensity::prefix(std::size_t t) const {
  MollifiedDensity q;
  q.base = base;
  q.thetas.eps = thetas.eps;
  q.seed = seed;
  const std::size_t keep = std::min(t, classifiers.size());
  q.thetas.values.assign(thetas.values.begin(),
                         thetas.values.begin() + static_cast<std::ptrdiff_t>(keep));
  q.classifiers.assign(classifiers.begin(),
                       classifiers.begin() + static_cast<std::ptrdiff_t>(keep));
  q.wla_history.assign(wla_history.begin(),
                       wla_history.begin() + static_cast<std::ptrdiff_t>(
                                                 std::min(keep, wla_history.size())));
  q.phi_hat = 0.0;
  q.phi_stderr = 0.0;
  return q;
}

MollifiedDensity MollifiedDensity::base_only(int dim, double eps) {
  MollifiedDensity q;
  q.base = BaseDensity{dim};
  q.thetas = theta_schedule(eps, 0);
  return q;
}

PhiEstimate estimate_log_partition(const MollifiedDensity& q, std::size_t n_mc,
                                   std::uint64_t seed) {
  if (q.classifiers.empty()) return {0.0, 0.0};  // log integral of dQ0 is 0 exactly
  if (n_mc < 100) throw std::invalid_argument("estimate_log_partition: n_mc must be >= 100");

  const Dataset draws = sample_target(q.base, n_mc, seed);
  double mean = 0.0, m2 = 0.0;
  std::size_t count = 0;
  for (const auto& x : draws.points) {
    double s = 0.0;
    for (std::size_t t = 0; t < q.classifiers.size(); ++t)
      s += q.thetas.values[t] * classify(q.classifiers[t], x);
    const double v = std::exp(s);
    ++count;
    const double d = v - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (v - mean);
  }
  const double var = m2 / static_cast<double>(count - 1);
  const double se_mean = std::sqrt(var / static_cast<double>(count));
  // Delta method for log of the mean.
  return {std::log(mean), se_mean / mean};
}

CertificateResult privacy_certificate(const MollifiedDensity& q, const Dataset& eval) {
  if (eval.empty()) throw std::invalid_argument("privacy_certificate: empty evaluation set");
  double worst = 0.0;
  for (const auto& x : eval.points) {
    double s = 0.0;
    for (std::size_t t = 0; t < q.classifiers.size(); ++t)
      s += q.thetas.values[t] * classify(q.classifiers[t], x);
    worst = std::max(worst, std::abs(s - q.phi_hat));
  }
  const double bound = q.eps() / 2.0 + 3.0 * q.phi_stderr + 1e-9;
  return {worst, bound, worst <= bound};
}

Dataset certificate_eval_points(int dim, std::size_t n, std::uint64_t seed) {
  const std::size_t n_draws = n / 2;
  Dataset eval = sample_target(BaseDensity{dim}, n_draws, seed);
  const std::size_t n_grid = n - n_draws;
  if (dim == 1) {
    for (std::size_t i = 0; i < n_grid; ++i) {
      const double x = -8.0 + 16.0 * static_cast<double>(i) /
                                  static_cast<double>(std::max<std::size_t>(n_grid - 1, 1));
      eval.points.push_back({x});
    }
  } else {
    const std::size_t side = static_cast<std::size_t>(std::sqrt(static_cast<double>(n_grid)));
    for (std::size_t i = 0; i < side; ++i) {
      for (std::size_t j = 0; j < side; ++j) {
        const double x = -8.0 + 16.0 * static_cast<double>(i) / static_cast<double>(side - 1);
        const double y = -8.0 + 16.0 * static_cast<double>(j) / static_cast<double>(side - 1);
        if (dim == 2) {
          eval.points.push_back({x, y});
        } else {
          Point p(static_cast<std::size_t>(dim), 0.0);
          p[0] = x;
          p[1] = y;
          eval.points.push_back(std::move(p));
        }
      }
    }
  }
  return eval;
}

MollifiedDensity boost(const TargetDensity& target, const BoostConfig& cfg) {
  validate(target);
  if (cfg.T < 0) throw std::invalid_argument("boost: T must be nonnegative");
  if (!(cfg.eps > 0.0)) throw std::invalid_argument("boost: eps must be positive");
  if (cfg.n_train < 1) throw std::invalid_argument("boost: n_train must be positive");
  if (cfg.fixed_dataset && cfg.fixed_dataset->dim != target.dim)
    throw std::invalid_argument("boost: fixed dataset dimension mismatch");

  MollifiedDensity q;
  q.base = BaseDensity{target.dim};
  q.thetas = theta_schedule(cfg.eps, cfg.T);
  q.seed = cfg.seed;

  const std::size_t n_train = static_cast<std::size_t>(cfg.n_train);
  for (int t = 1; t <= cfg.T; ++t) {
    const std::uint64_t round = static_cast<std::uint64_t>(t);

    Dataset p_samples;
    if (cfg.fixed_dataset) {
      // Fixed-dataset mode: resample n_train points uniformly from D.
      RngStream rng(derive_seed(cfg.seed, kTagP, round));
      p_samples.dim = target.dim;
      p_samples.points.reserve(n_train);
      for (std::size_t i = 0; i < n_train; ++i)
        p_samples.points.push_back(cfg.fixed_dataset->points[rng.index(cfg.fixed_dataset->size())]);
    } else {
      p_samples = sample_target(target, n_train, derive_seed(cfg.seed, kTagP, round));
    }

    Dataset q_samples;
    if (q.classifiers.empty()) {
      q_samples = sample_target(q.base, n_train, derive_seed(cfg.seed, kTagQ, round));
    } else {
      McmcConfig mc = cfg.mcmc;
      mc.seed = derive_seed(cfg.seed, kTagQ, round);
      auto [samples, diag] = mh_sample(
          [&q](const Point& x) { return q.unnormalized_log_density(x); }, target.dim,
          n_train, mc);
      if (diag.low_acceptance)
        throw BoostError(t, "MH acceptance rate below 1% (" +
                                std::to_string(diag.acceptance_rate) + ")");
      q_samples = std::move(samples);
    }

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, kTagTrain, round);
    Classifier c;
    try {
      c = train_classifier(p_samples, q_samples, tc);
    } catch (const TrainingError& e) {
      throw BoostError(t, e.what());
    }

    // A failed round is recorded but the update is still applied; the
    // schedule does not adapt to the weak learner's performance.
    q.wla_history.push_back(wla_advantages(c, p_samples, q_samples));
    q.classifiers.push_back(std::move(c));
  }

  const PhiEstimate phi = estimate_log_partition(
      q, static_cast<std::size_t>(cfg.n_mc_phi), derive_seed(cfg.seed, kTagPhi, 0));
  q.phi_hat = phi.phi_hat;
  q.phi_stderr = phi.phi_stderr;
  return q;
}

}  // namespace mbde
