#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbde/sampler.hpp"
#include "mbde/targets.hpp"
#include "mbde/weak_learner.hpp"

namespace mbde {

// Geometric schedule theta_t = (eps / (eps + 4 log 2))^t, t = 1..T.
// Its infinite sum is exactly eps / (4 log 2), so every partial sum stays
// strictly below that bound.
struct ThetaSchedule {
  double eps = 1.0;
  std::vector<double> values;

  double ratio() const { return eps / (eps + 4.0 * kLog2); }
  double sum_bound() const { return eps / (4.0 * kLog2); }
};

ThetaSchedule theta_schedule(double eps, int T);

struct BoostConfig {
  int T = 3;
  double eps = 1.0;
  int n_train = 10000;
  int n_mc_phi = 100000;
  McmcConfig mcmc;
  TrainConfig train;
  std::uint64_t seed = 0;
  // When set, per-round target samples are subsampled from this dataset
  // instead of drawn fresh from the target density.
  std::optional<Dataset> fixed_dataset;
};

class BoostError : public std::runtime_error {
 public:
  BoostError(int round, const std::string& msg)
      : std::runtime_error("round " + std::to_string(round) + ": " + msg),
        round_(round) {}
  int round() const { return round_; }

 private:
  int round_;
};

// The boosted exponential-family density
//   Q_T = Q_0 * exp(<theta, c> - phi),
// with base measure Q_0 = N(0, I_d), natural parameters theta and the trained
// classifiers as sufficient statistics.
struct MollifiedDensity {
  BaseDensity base;
  ThetaSchedule thetas;
  std::vector<Classifier> classifiers;
  std::vector<WlaReport> wla_history;
  double phi_hat = 0.0;
  double phi_stderr = 0.0;
  std::uint64_t seed = 0;

  int dim() const { return base.dim; }
  double eps() const { return thetas.eps; }
  std::size_t rounds() const { return classifiers.size(); }

  // log q0(x) + sum_t theta_t * c_t(x); the log-partition cancels in MH
  // ratios so this is what the sampler consumes.
  double unnormalized_log_density(const Point& x) const;
  double log_density(const Point& x) const;

  // Model truncated to the first t rounds. phi is reset to zero; callers
  // re-estimate it before using log_density.
  MollifiedDensity prefix(std::size_t t) const;

  static MollifiedDensity base_only(int dim, double eps);
};

struct PhiEstimate {
  double phi_hat = 0.0;
  double phi_stderr = 0.0;
};

// Monte Carlo estimate of phi = log E_{Q0}[exp(<theta, c>)] with a
// delta-method standard error. The integrand lives in
// [exp(-eps/4), exp(eps/4)], so the estimator is well conditioned and the
// estimate itself always stays inside (-eps/4, eps/4).
PhiEstimate estimate_log_partition(const MollifiedDensity& q, std::size_t n_mc,
                                   std::uint64_t seed);

struct CertificateResult {
  double max_abs = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// Checks max |<theta, c(x)> - phi_hat| <= eps/2 + 3*phi_stderr + 1e-9 over
// the evaluation set; this certifies membership in the eps-mollifier.
CertificateResult privacy_certificate(const MollifiedDensity& q, const Dataset& eval);

// Standard evaluation set for certificates: half exact Q0 draws, half a
// regular grid over [-8, 8]^d.
Dataset certificate_eval_points(int dim, std::size_t n, std::uint64_t seed);

// Algorithm: for t = 1..T draw n_train samples from Q_{t-1} (exact Q0 draws
// at t = 1, MH afterwards) and from the target, train c_t, record its
// measured advantages and append (theta_t, c_t); finally estimate phi.
MollifiedDensity boost(const TargetDensity& target, const BoostConfig& cfg);

}  // namespace mbde
