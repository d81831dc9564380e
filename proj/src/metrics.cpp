#include "mbde/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbde/rng.hpp"

namespace mbde {

namespace {

Estimate mean_and_stderr(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? ss / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

Estimate binomial_estimate(std::size_t hits, std::size_t n) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

}  // namespace

void validate(const Region& b) {
  if (b.lower.size() != b.upper.size() || b.lower.empty())
    throw std::invalid_argument("region: corner dimension mismatch");
  for (std::size_t a = 0; a < b.lower.size(); ++a)
    if (!(b.lower[a] < b.upper[a]))
      throw std::invalid_argument("region: lower corner must be strictly below upper");
}

Estimate nll(const Dataset& p_samples, const MollifiedDensity& q) {
  if (p_samples.empty()) throw std::invalid_argument("nll: empty sample set");
  std::vector<double> vals;
  vals.reserve(p_samples.size());
  for (const auto& x : p_samples.points) vals.push_back(-q.log_density(x));
  return mean_and_stderr(vals);
}

Estimate kl_mc(const TargetDensity& p, const MollifiedDensity& q, std::size_t n,
               std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("kl_mc: n must be positive");
  const Dataset draws = sample_target(p, n, seed);
  std::vector<double> vals;
  vals.reserve(n);
  for (const auto& x : draws.points)
    vals.push_back(log_density(p, x) - q.log_density(x));
  return mean_and_stderr(vals);
}

Coverage mode_coverage(const TargetDensity& p, const MollifiedDensity& q,
                       double level, std::size_t n, std::uint64_t seed,
                       McmcConfig mcmc) {
  if (!(level > 0.0) || !(level < 1.0))
    throw std::invalid_argument("mode_coverage: level must be in (0,1)");
  if (n < 1) throw std::invalid_argument("mode_coverage: n must be positive");

  mcmc.seed = derive_seed(seed, 0xC0);
  const auto [q_draws, diag] = mh_sample(
      [&q](const Point& x) { return q.unnormalized_log_density(x); }, q.dim(), n, mcmc);
  (void)diag;
  std::vector<double> q_vals;
  q_vals.reserve(n);
  for (const auto& x : q_draws.points) q_vals.push_back(q.unnormalized_log_density(x));
  const double threshold = quantile_type7(std::move(q_vals), 1.0 - level);

  const Dataset p_draws = sample_target(p, n, derive_seed(seed, 0xC1));
  std::size_t hits = 0;
  for (const auto& x : p_draws.points)
    hits += q.unnormalized_log_density(x) >= threshold ? 1 : 0;
  return {static_cast<double>(hits) / static_cast<double>(n), threshold};
}

Estimate region_mass(const TargetDensity& p, const Region& b, std::size_t n,
                     std::uint64_t seed) {
  validate(b);
  if (n < 1) throw std::invalid_argument("region_mass: n must be positive");
  const Dataset draws = sample_target(p, n, seed);
  std::size_t hits = 0;
  for (const auto& x : draws.points) hits += b.contains(x) ? 1 : 0;
  return binomial_estimate(hits, n);
}

Estimate region_mass(const MollifiedDensity& q, const Region& b, std::size_t n,
                     std::uint64_t seed, McmcConfig mcmc) {
  validate(b);
  if (n < 1) throw std::invalid_argument("region_mass: n must be positive");
  mcmc.seed = derive_seed(seed, 0xC2);
  const auto [draws, diag] = mh_sample(
      [&q](const Point& x) { return q.unnormalized_log_density(x); }, q.dim(), n, mcmc);
  (void)diag;
  std::size_t hits = 0;
  for (const auto& x : draws.points) hits += b.contains(x) ? 1 : 0;
  return binomial_estimate(hits, n);
}

Estimate restricted_kl(const TargetDensity& p, const MollifiedDensity& q,
                       const Region& b, std::size_t n, std::uint64_t seed) {
  validate(b);
  if (n < 1) throw std::invalid_argument("restricted_kl: n must be positive");
  const Dataset draws = sample_target(p, n, seed);
  std::vector<double> vals;
  vals.reserve(n);
  for (const auto& x : draws.points) {
    vals.push_back(b.contains(x) ? log_density(p, x) - q.log_density(x) : 0.0);
  }
  return mean_and_stderr(vals);
}

double quantile_type7(std::vector<double> values, double prob) {
  if (values.empty()) throw std::invalid_argument("quantile: empty sample");
  prob = std::clamp(prob, 0.0, 1.0);
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace mbde
