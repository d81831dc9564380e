#include "mbde/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mbde/rng.hpp"

namespace mbde {

double gamma_fn(double z) {
  if (z >= 5.0 / 3.0) throw std::domain_error("gamma_fn: z must be below 5/3");
  return std::log(4.0 / (5.0 - 3.0 * z));
}

DropBound kl_drop_bound(const WlaReport& report, double theta_t) {
  if (report.regime == Regime::failed)
    throw std::runtime_error("kl_drop_bound: failed regime, no drop guarantee");
  DropBound d;
  d.regime = report.regime;
  d.theta_t = theta_t;
  d.c_star = report.c_star;
  if (report.regime == Regime::high) {
    d.lambda_t = report.c_star * report.gamma_p + gamma_fn(report.gamma_q);
    d.lambda_guaranteed = d.lambda_t;
  } else {
    d.lambda_t = report.gamma_p + report.gamma_q - report.c_star * theta_t / 2.0;
    d.lambda_guaranteed = report.c_star * d.lambda_t;
  }
  return d;
}

BarrierBounds barrier_bounds(double eps, double gamma_p, double gamma_q, int T) {
  if (!(eps > 0.0)) throw std::invalid_argument("barrier_bounds: eps must be positive");
  if (T < 0) throw std::invalid_argument("barrier_bounds: T must be nonnegative");
  const double theta_T = T == 0 ? 1.0 : std::pow(eps / (eps + 4.0 * kLog2), T);
  BarrierBounds b;
  b.upper = eps / 2.0;
  b.lower = (eps / 2.0) * ((gamma_p + gamma_q) / 2.0) * (1.0 - theta_T);
  return b;
}

BarrierReport barrier_check(const TargetDensity& p, const MollifiedDensity& q,
                            std::size_t n, std::uint64_t seed) {
  BarrierReport r;
  r.upper = q.eps() / 2.0;

  const MollifiedDensity q0 = MollifiedDensity::base_only(q.dim(), q.eps());
  // Shared seed pairs the two estimates on the same target draws.
  const Estimate kl0 = kl_mc(p, q0, n, seed);
  const Estimate klt = kl_mc(p, q, n, seed);
  r.delta_observed = kl0.value - klt.value;
  r.std_err = std::sqrt(kl0.std_err * kl0.std_err + klt.std_err * klt.std_err);

  bool all_high = q.rounds() > 0;
  double gp = 1.0, gq = 1.0;
  for (const auto& w : q.wla_history) {
    all_high = all_high && w.regime == Regime::high;
    gp = std::min(gp, w.gamma_p);
    gq = std::min(gq, w.gamma_q);
  }
  r.lower = all_high
                ? barrier_bounds(q.eps(), gp, gq, static_cast<int>(q.rounds())).lower
                : 0.0;
  r.pass = r.delta_observed <= r.upper + 3.0 * r.std_err;
  return r;
}

double mode_capture_threshold(double eps, double gamma_p, double gamma_q, int T,
                              double alpha) {
  if (!(eps > 0.0)) throw std::invalid_argument("mode_capture_threshold: eps must be positive");
  if (T < 1) throw std::invalid_argument("mode_capture_threshold: T must be >= 1");
  if (alpha < 0.0 || alpha > 1.0)
    throw std::invalid_argument("mode_capture_threshold: alpha must be in [0,1]");
  const auto h = [eps](double x) { return eps + 2.0 * x; };
  return eps * h((2.0 - gamma_p - gamma_q) * static_cast<double>(T)) /
         (h(alpha) * h(static_cast<double>(T)));
}

double mode_capture_threshold_relaxed(double eps, double gamma_p, double gamma_q,
                                      int T, double alpha) {
  if (!(eps > 0.0)) throw std::invalid_argument("mode_capture_threshold: eps must be positive");
  if (T < 1) throw std::invalid_argument("mode_capture_threshold: T must be >= 1");
  const double k = 4.0 * kLog2;
  const double gbar = (gamma_p + gamma_q) / 2.0;
  const double tk = static_cast<double>(T) * k;
  return eps * (eps + (1.0 - gbar) * tk) / ((eps + 2.0 * alpha) * (eps + tk));
}

ModeCaptureReport mode_capture_check(const TargetDensity& p, const MollifiedDensity& q,
                                     const Region& b, double alpha, std::size_t n,
                                     std::uint64_t seed, McmcConfig mcmc) {
  if (q.rounds() == 0)
    throw std::invalid_argument("mode_capture_check: model has no boosting rounds");

  ModeCaptureReport r;
  // Conservative plug-in: the smallest measured advantages across rounds.
  bool all_high = true;
  double gp = 1.0, gq = 1.0;
  for (const auto& w : q.wla_history) {
    all_high = all_high && w.regime == Regime::high;
    gp = std::min(gp, w.gamma_p);
    gq = std::min(gq, w.gamma_q);
  }
  r.gamma_p_used = gp;
  r.gamma_q_used = gq;
  r.required_mass = all_high
                        ? mode_capture_threshold(q.eps(), gp, gq,
                                                 static_cast<int>(q.rounds()), alpha)
                        : std::numeric_limits<double>::infinity();

  r.mass_p = region_mass(p, b, n, derive_seed(seed, 0xE0));
  r.applicable = all_high && r.mass_p.value >= r.required_mass;

  r.mass_q = region_mass(q, b, n, derive_seed(seed, 0xE1), mcmc);
  const MollifiedDensity q0 = MollifiedDensity::base_only(q.dim(), q.eps());
  r.rkl_q0 = restricted_kl(p, q0, b, n, derive_seed(seed, 0xE2));

  const double combined_se = std::sqrt(r.mass_p.std_err * r.mass_p.std_err +
                                       r.mass_q.std_err * r.mass_q.std_err +
                                       r.rkl_q0.std_err * r.rkl_q0.std_err);
  r.rhs = (1.0 - alpha) * r.mass_p.value - r.rkl_q0.value - 3.0 * combined_se;
  r.pass = !r.applicable || r.mass_q.value >= r.rhs;
  return r;
}

KlTransferReport kl_transfer_check(const TargetDensity& p, const MollifiedDensity& qa,
                                   const MollifiedDensity& qb, std::size_t n,
                                   std::uint64_t seed) {
  if (qa.eps() != qb.eps())
    throw std::invalid_argument("kl_transfer_check: models must share eps");
  if (qa.dim() != qb.dim())
    throw std::invalid_argument("kl_transfer_check: models must share the base density");

  KlTransferReport r;
  // Same seed on both estimates: paired target samples cancel most MC noise.
  r.kl_a = kl_mc(p, qa, n, seed);
  r.kl_b = kl_mc(p, qb, n, seed);
  r.diff = std::abs(r.kl_a.value - r.kl_b.value);
  const double combined_se = std::sqrt(r.kl_a.std_err * r.kl_a.std_err +
                                       r.kl_b.std_err * r.kl_b.std_err);
  r.bound = qa.eps() + 3.0 * combined_se;
  r.pass = r.diff <= r.bound;
  return r;
}

}  // namespace mbde
