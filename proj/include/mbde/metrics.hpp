#pragma once

#include <cstdint>
#include <vector>

#include "mbde/booster.hpp"
#include "mbde/sampler.hpp"
#include "mbde/targets.hpp"

namespace mbde {

// Axis-aligned box region.
struct Region {
  Point lower;
  Point upper;

  bool contains(const Point& x) const {
    for (std::size_t a = 0; a < lower.size(); ++a)
      if (x[a] < lower[a] || x[a] > upper[a]) return false;
    return true;
  }
};

void validate(const Region& b);

struct Estimate {
  double value = 0.0;
  double std_err = 0.0;
};

// Negative log likelihood -E_P[log Q] over held-out target samples.
Estimate nll(const Dataset& p_samples, const MollifiedDensity& q);

// Monte Carlo KL(P, Q) = E_P[log p - log q] over n fresh target samples.
Estimate kl_mc(const TargetDensity& p, const MollifiedDensity& q, std::size_t n,
               std::uint64_t seed);

struct Coverage {
  double value = 0.0;
  double threshold = 0.0;  // on the unnormalized log-density scale
};

// Mass of the target under the model's high-density region: the threshold is
// the empirical (1-level) quantile of q over n model samples, coverage the
// fraction of n fresh target samples with q(x) >= threshold. Works on the
// unnormalized log-density, which shifts threshold and values identically.
Coverage mode_coverage(const TargetDensity& p, const MollifiedDensity& q,
                       double level, std::size_t n, std::uint64_t seed,
                       McmcConfig mcmc = {});

// m(B, .) estimated as the fraction of samples falling in B. The target is
// sampled exactly, the model through MH.
Estimate region_mass(const TargetDensity& p, const Region& b, std::size_t n,
                     std::uint64_t seed);
Estimate region_mass(const MollifiedDensity& q, const Region& b, std::size_t n,
                     std::uint64_t seed, McmcConfig mcmc = {});

// KL(P, Q; B) = E_P[1{x in B} (log p - log q)].
Estimate restricted_kl(const TargetDensity& p, const MollifiedDensity& q,
                       const Region& b, std::size_t n, std::uint64_t seed);

// Type-7 empirical quantile (linear interpolation between order statistics).
double quantile_type7(std::vector<double> values, double prob);

}  // namespace mbde
