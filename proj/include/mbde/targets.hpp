#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace mbde {

using Point = std::vector<double>;

// Evaluation points, one per row, all of the same dimension.
struct Dataset {
  int dim = 1;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct GaussianComponent {
  double weight = 1.0;
  Point mean;
  std::vector<double> variance;  // per axis; diagonal covariance only
};

// Ground-truth mixture density with exact log-density and exact sampler.
struct TargetDensity {
  int dim = 1;
  std::vector<GaussianComponent> components;
};

// Standard Gaussian N(0, I_d), the base density of every boosted model.
struct BaseDensity {
  int dim = 1;
};

// Nonnegative density values on a regular grid over an axis-aligned box of
// unit total measure. Values are stored row-major (last axis fastest).
struct FiniteGridDensity {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t cells() const;
  double box_volume() const;
  double cell_measure() const { return box_volume() / static_cast<double>(cells()); }
  double total_mass() const;
  double min_value() const;
  double max_value() const;
};

using LogDensityFn = std::function<double(const Point&)>;

TargetDensity make_ring(int n_components, double radius, double sigma2);
TargetDensity make_1d_mixture();
TargetDensity make_random_gaussians(int m, std::uint64_t seed);

// Throws std::invalid_argument when the mixture invariants are broken.
void validate(const TargetDensity& target);

double log_density(const TargetDensity& target, const Point& x);
double log_density(const BaseDensity& base, const Point& x);

Dataset sample_target(const TargetDensity& target, std::size_t n, std::uint64_t seed);
Dataset sample_target(const BaseDensity& base, std::size_t n, std::uint64_t seed);

// Scale-and-shift mollification g = a*f + (1-a): fits f into the
// [exp(-eps/2), exp(eps/2)] range without moving its argmax and scaling all
// grid gradients by the same positive constant a.
FiniteGridDensity mollify(const FiniteGridDensity& f, double eps);

// The scaling factor used by mollify, exposed for tests and diagnostics.
double mollify_alpha(const FiniteGridDensity& f, double eps);

struct MollifierCertificate {
  double max_abs_log_ratio = 0.0;
  bool pass = false;
};

// Checks |log q - log q'| <= eps over the evaluation set (Def. of an
// eps-mollifier applied pointwise in both directions).
MollifierCertificate mollifier_certificate(const LogDensityFn& q_log,
                                           const LogDensityFn& qprime_log,
                                           const Dataset& eval, double eps);

}  // namespace mbde
