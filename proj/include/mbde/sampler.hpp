#pragma once

#include <cstdint>
#include <functional>
#include <utility>

#include "mbde/targets.hpp"

namespace mbde {

struct McmcConfig {
  double proposal_sigma = 0.25;
  int burn_in = 1000;
  int thinning = 10;
  int n_chains = 4;
  std::uint64_t seed = 0;
};

// Linear integral-privacy accounting: spent = eps_per_sample * released.
struct PrivacyLedger {
  double eps_per_sample = 0.0;
  std::uint64_t released = 0;
  double spent = 0.0;

  void record(std::uint64_t k) {
    released += k;
    spent = eps_per_sample * static_cast<double>(released);
  }
};

struct MhDiagnostics {
  double acceptance_rate = 0.0;
  int chain_count = 0;
  std::uint64_t steps_total = 0;
  bool low_acceptance = false;  // acceptance below 1%
};

// Random-walk Metropolis-Hastings over an arbitrary (possibly unnormalized)
// log-density. Draws n points pooled round-robin from n_chains independent
// chains with isotropic Gaussian proposals, after burn-in and thinning.
// Chains initialize from standard Gaussian draws. Deterministic given
// cfg.seed. If a ledger is passed, the n released samples are recorded.
std::pair<Dataset, MhDiagnostics> mh_sample(const LogDensityFn& log_q, int dim,
                                            std::size_t n, const McmcConfig& cfg,
                                            PrivacyLedger* ledger = nullptr);

// Per-sample budget when releasing k samples under a total budget.
double budget_split(double eps_total, std::uint64_t k);

struct RatioCheck {
  double log_ratio = 0.0;
  double std_err = 0.0;
  bool pass = false;
};

// Post-processing fairness check: empirical acceptance frequencies of a
// deterministic decision over two sample sets, Laplace-smoothed with
// pseudo-count 1; passes iff |log ratio| <= eps + 3 * stderr.
RatioCheck postprocessing_ratio_check(const Dataset& samples_d,
                                      const Dataset& samples_dprime,
                                      const std::function<bool(const Point&)>& decision,
                                      double eps);

struct HistogramIpCheck {
  int bins_checked = 0;
  double worst_abs_log_ratio = 0.0;
  double worst_allowed = 0.0;
  bool pass = true;
};

// Empirical integral-privacy check over a fixed binning of the first
// coordinate: every well-populated bin must satisfy the exp(eps) ratio bound
// up to 3 combined binomial standard errors.
HistogramIpCheck histogram_ip_check(const Dataset& a, const Dataset& b, double eps,
                                    int n_bins = 50, double lo = -6.0,
                                    double hi = 6.0, double min_expected = 50.0);

}  // namespace mbde
