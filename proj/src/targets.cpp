#include "mbde/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mbde/rng.hpp"

namespace mbde {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void check_dim(int expected, const Point& x, const char* what) {
  if (static_cast<int>(x.size()) != expected) {
    throw std::invalid_argument(std::string(what) + ": point has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(expected));
  }
}

}  // namespace

std::size_t FiniteGridDensity::cells() const {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

double FiniteGridDensity::box_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < lower.size(); ++a) v *= upper[a] - lower[a];
  return v;
}

double FiniteGridDensity::total_mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell_measure();
}

double FiniteGridDensity::min_value() const {
  return *std::min_element(values.begin(), values.end());
}

double FiniteGridDensity::max_value() const {
  return *std::max_element(values.begin(), values.end());
}

TargetDensity make_ring(int n_components, double radius, double sigma2) {
  if (n_components < 1) throw std::invalid_argument("make_ring: n_components must be >= 1");
  if (radius <= 0.0) throw std::invalid_argument("make_ring: radius must be positive");
  if (sigma2 <= 0.0) throw std::invalid_argument("make_ring: sigma2 must be positive");

  TargetDensity t;
  t.dim = 2;
  t.components.reserve(static_cast<std::size_t>(n_components));
  const double w = 1.0 / static_cast<double>(n_components);
  for (int j = 0; j < n_components; ++j) {
    const double angle = kTwoPi * static_cast<double>(j) / static_cast<double>(n_components);
    GaussianComponent c;
    c.weight = w;
    c.mean = {radius * std::cos(angle), radius * std::sin(angle)};
    c.variance = {sigma2, sigma2};
    t.components.push_back(std::move(c));
  }
  return t;
}

TargetDensity make_1d_mixture() {
  TargetDensity t;
  t.dim = 1;
  t.components = {
      {1.0 / 3.0, {0.3}, {0.01}},
      {1.0 / 3.0, {0.5}, {0.1}},
      {1.0 / 3.0, {0.7}, {0.1}},
  };
  return t;
}

TargetDensity make_random_gaussians(int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("make_random_gaussians: m must be >= 1");
  RngStream rng(seed);
  TargetDensity t;
  t.dim = 1;
  t.components.reserve(static_cast<std::size_t>(m));
  const double w = 1.0 / static_cast<double>(m);
  for (int j = 0; j < m; ++j) {
    t.components.push_back({w, {rng.uniform()}, {0.01}});
  }
  return t;
}

void validate(const TargetDensity& target) {
  if (target.dim < 1) throw std::invalid_argument("target: dim must be positive");
  if (target.components.empty()) throw std::invalid_argument("target: no components");
  double wsum = 0.0;
  for (const auto& c : target.components) {
    if (!(c.weight > 0.0) || c.weight > 1.0)
      throw std::invalid_argument("target: component weight outside (0,1]");
    if (static_cast<int>(c.mean.size()) != target.dim ||
        static_cast<int>(c.variance.size()) != target.dim)
      throw std::invalid_argument("target: component dimension mismatch");
    for (double v : c.variance)
      if (!(v > 0.0)) throw std::invalid_argument("target: variance must be positive");
    for (double mu : c.mean)
      if (!std::isfinite(mu)) throw std::invalid_argument("target: non-finite mean");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("target: weights sum to " + std::to_string(wsum));
}

double log_density(const TargetDensity& target, const Point& x) {
  check_dim(target.dim, x, "log_density");
  // Max-shifted log-sum-exp over component log terms.
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(target.components.size());
  for (const auto& c : target.components) {
    double t = std::log(c.weight);
    for (int a = 0; a < target.dim; ++a) {
      const double d = x[static_cast<std::size_t>(a)] - c.mean[static_cast<std::size_t>(a)];
      const double v = c.variance[static_cast<std::size_t>(a)];
      t -= 0.5 * (d * d / v + std::log(kTwoPi * v));
    }
    terms.push_back(t);
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - max_term);
  return max_term + std::log(acc);
}

double log_density(const BaseDensity& base, const Point& x) {
  check_dim(base.dim, x, "log_density");
  double q = 0.0;
  for (double xi : x) q += xi * xi;
  return -0.5 * (q + static_cast<double>(base.dim) * std::log(kTwoPi));
}

Dataset sample_target(const TargetDensity& target, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  Dataset d;
  d.dim = target.dim;
  d.points.reserve(n);
  // Cumulative weights for the categorical component pick.
  std::vector<double> cum;
  cum.reserve(target.components.size());
  double acc = 0.0;
  for (const auto& c : target.components) {
    acc += c.weight;
    cum.push_back(acc);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    const std::size_t j = static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    const auto& c = target.components[std::min(j, cum.size() - 1)];
    Point x(static_cast<std::size_t>(target.dim));
    for (int a = 0; a < target.dim; ++a) {
      x[static_cast<std::size_t>(a)] =
          c.mean[static_cast<std::size_t>(a)] +
          std::sqrt(c.variance[static_cast<std::size_t>(a)]) * rng.normal();
    }
    d.points.push_back(std::move(x));
  }
  return d;
}

Dataset sample_target(const BaseDensity& base, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  Dataset d;
  d.dim = base.dim;
  d.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point x(static_cast<std::size_t>(base.dim));
    for (auto& xi : x) xi = rng.normal();
    d.points.push_back(std::move(x));
  }
  return d;
}

double mollify_alpha(const FiniteGridDensity& f, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollify: eps must be positive");
  if (std::abs(f.box_volume() - 1.0) > 1e-9)
    throw std::invalid_argument("mollify: support must have unit total measure");
  if (std::abs(f.total_mass() - 1.0) > 1e-6)
    throw std::invalid_argument("mollify: grid density must integrate to 1");
  const double fmax = f.max_value();
  const double fmin = f.min_value();
  if (!std::isfinite(fmax) || !std::isfinite(fmin) || fmin < 0.0)
    throw std::invalid_argument("mollify: grid values must be finite and nonnegative");

  double alpha = 1.0;
  if (fmax > 1.0) alpha = std::min(alpha, (std::exp(eps / 2.0) - 1.0) / (fmax - 1.0));
  if (fmin < 1.0) alpha = std::min(alpha, (1.0 - std::exp(-eps / 2.0)) / (1.0 - fmin));
  return alpha;
}

FiniteGridDensity mollify(const FiniteGridDensity& f, double eps) {
  const double alpha = mollify_alpha(f, eps);
  FiniteGridDensity g = f;
  for (auto& v : g.values) v = alpha * v + (1.0 - alpha);
  return g;
}

MollifierCertificate mollifier_certificate(const LogDensityFn& q_log,
                                           const LogDensityFn& qprime_log,
                                           const Dataset& eval, double eps) {
  if (eval.empty()) throw std::invalid_argument("mollifier_certificate: empty evaluation set");
  double worst = 0.0;
  for (const auto& x : eval.points) {
    worst = std::max(worst, std::abs(q_log(x) - qprime_log(x)));
  }
  return {worst, worst <= eps + 1e-9};
}

}  // namespace mbde
