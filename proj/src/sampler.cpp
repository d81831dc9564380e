#include "mbde/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbde/rng.hpp"

namespace mbde {

namespace {

struct Chain {
  RngStream rng;
  Point state;
  double log_state;
};

}  // namespace

std::pair<Dataset, MhDiagnostics> mh_sample(const LogDensityFn& log_q, int dim,
                                            std::size_t n, const McmcConfig& cfg,
                                            PrivacyLedger* ledger) {
  if (dim < 1) throw std::invalid_argument("mh_sample: dim must be positive");
  if (cfg.n_chains < 1 || cfg.thinning < 1 || cfg.burn_in < 0 ||
      !(cfg.proposal_sigma > 0.0))
    throw std::invalid_argument("mh_sample: invalid config");

  Dataset out;
  out.dim = dim;
  MhDiagnostics diag;
  diag.chain_count = cfg.n_chains;
  if (n == 0) return {out, diag};

  const std::size_t n_chains = static_cast<std::size_t>(cfg.n_chains);
  const std::size_t per_chain = (n + n_chains - 1) / n_chains;

  std::vector<Chain> chains;
  chains.reserve(n_chains);
  for (std::size_t ci = 0; ci < n_chains; ++ci) {
    Chain ch{RngStream(derive_seed(cfg.seed, 0xC4A1, ci)), Point(static_cast<std::size_t>(dim)), 0.0};
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      for (auto& xi : ch.state) xi = ch.rng.normal();
      ch.log_state = log_q(ch.state);
      ok = std::isfinite(ch.log_state);
    }
    if (!ok)
      throw std::runtime_error("mh_sample: log density non-finite at all chain initializations");
    chains.push_back(std::move(ch));
  }

  std::uint64_t accepted = 0, proposed = 0;
  Point candidate(static_cast<std::size_t>(dim));
  auto step = [&](Chain& ch) {
    for (std::size_t a = 0; a < candidate.size(); ++a)
      candidate[a] = ch.state[a] + cfg.proposal_sigma * ch.rng.normal();
    const double log_cand = log_q(candidate);
    ++proposed;
    // Symmetric proposal: accept with probability exp(log_cand - log_state).
    if (std::log(1.0 - ch.rng.uniform()) < log_cand - ch.log_state) {
      ch.state.swap(candidate);
      ch.log_state = log_cand;
      ++accepted;
    }
  };

  // Samples stored per chain, then pooled in (step index, chain index) order.
  std::vector<std::vector<Point>> kept(n_chains);
  for (std::size_t ci = 0; ci < n_chains; ++ci) {
    auto& ch = chains[ci];
    kept[ci].reserve(per_chain);
    for (int b = 0; b < cfg.burn_in; ++b) step(ch);
    for (std::size_t s = 0; s < per_chain; ++s) {
      for (int t = 0; t < cfg.thinning; ++t) step(ch);
      kept[ci].push_back(ch.state);
    }
  }

  out.points.reserve(n);
  for (std::size_t s = 0; s < per_chain && out.points.size() < n; ++s)
    for (std::size_t ci = 0; ci < n_chains && out.points.size() < n; ++ci)
      out.points.push_back(kept[ci][s]);

  diag.steps_total = proposed;
  diag.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  diag.low_acceptance = proposed > 0 && diag.acceptance_rate < 0.01;

  if (ledger != nullptr) ledger->record(n);
  return {out, diag};
}

double budget_split(double eps_total, std::uint64_t k) {
  if (k < 1) throw std::invalid_argument("budget_split: k must be >= 1");
  if (!(eps_total > 0.0)) throw std::invalid_argument("budget_split: eps_total must be positive");
  return eps_total / static_cast<double>(k);
}

RatioCheck postprocessing_ratio_check(const Dataset& samples_d,
                                      const Dataset& samples_dprime,
                                      const std::function<bool(const Point&)>& decision,
                                      double eps) {
  if (samples_d.empty() || samples_dprime.empty())
    throw std::invalid_argument("postprocessing_ratio_check: empty sample set");

  auto freq = [&](const Dataset& s, double& p_hat, double& n_eff) {
    std::size_t hits = 0;
    for (const auto& x : s.points) hits += decision(x) ? 1 : 0;
    // Laplace smoothing with pseudo-count 1 on each outcome.
    n_eff = static_cast<double>(s.size()) + 2.0;
    p_hat = (static_cast<double>(hits) + 1.0) / n_eff;
  };

  double pa, na, pb, nb;
  freq(samples_d, pa, na);
  freq(samples_dprime, pb, nb);
  const double log_ratio = std::log(pa) - std::log(pb);
  // Delta-method stderr of the log frequency ratio.
  const double se = std::sqrt((1.0 - pa) / (na * pa) + (1.0 - pb) / (nb * pb));
  return {log_ratio, se, std::abs(log_ratio) <= eps + 3.0 * se};
}

HistogramIpCheck histogram_ip_check(const Dataset& a, const Dataset& b, double eps,
                                    int n_bins, double lo, double hi,
                                    double min_expected) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("histogram_ip_check: empty sample set");
  if (n_bins < 1 || !(hi > lo))
    throw std::invalid_argument("histogram_ip_check: invalid binning");

  auto histogram = [&](const Dataset& s) {
    std::vector<double> counts(static_cast<std::size_t>(n_bins), 0.0);
    const double scale = static_cast<double>(n_bins) / (hi - lo);
    for (const auto& x : s.points) {
      int bi = static_cast<int>(std::floor((x[0] - lo) * scale));
      bi = std::clamp(bi, 0, n_bins - 1);  // overflow mass goes to edge bins
      counts[static_cast<std::size_t>(bi)] += 1.0;
    }
    return counts;
  };

  const auto ca = histogram(a);
  const auto cb = histogram(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  HistogramIpCheck r;
  double worst_excess = -1.0;
  for (int bi = 0; bi < n_bins; ++bi) {
    const std::size_t k = static_cast<std::size_t>(bi);
    // Pooled expected counts decide whether the bin is well populated.
    const double pooled = (ca[k] + cb[k]) / (na + nb);
    if (std::min(na * pooled, nb * pooled) < min_expected) continue;
    ++r.bins_checked;
    const double pa = (ca[k] + 1.0) / (na + 2.0);
    const double pb = (cb[k] + 1.0) / (nb + 2.0);
    const double log_ratio = std::abs(std::log(pa) - std::log(pb));
    const double se = std::sqrt((1.0 - pa) / ((na + 2.0) * pa) +
                                (1.0 - pb) / ((nb + 2.0) * pb));
    const double allowed = eps + 3.0 * se;
    if (log_ratio > allowed) r.pass = false;
    if (log_ratio - allowed > worst_excess) {
      worst_excess = log_ratio - allowed;
      r.worst_abs_log_ratio = log_ratio;
      r.worst_allowed = allowed;
    }
  }
  return r;
}

}  // namespace mbde
