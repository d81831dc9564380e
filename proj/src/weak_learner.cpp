#include "mbde/weak_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mbde/rng.hpp"

namespace mbde {

namespace {

constexpr int kHiddenWidth = 25;
constexpr int kHiddenLayers = 3;

// Largest double t with log(2)*t < log(2); keeps classify strictly inside
// the open interval even when tanh saturates to 1.
double clamp_unit(double t) {
  const double limit = 1.0 - 2.220446049250313e-16;
  return std::clamp(t, -limit, limit);
}

struct LayerShape {
  std::size_t w_off, b_off;
  int in, out;
};

std::vector<LayerShape> shapes(const std::vector<int>& widths) {
  std::vector<LayerShape> s;
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    LayerShape ls;
    ls.in = widths[l];
    ls.out = widths[l + 1];
    ls.w_off = off;
    off += static_cast<std::size_t>(ls.in) * static_cast<std::size_t>(ls.out);
    ls.b_off = off;
    off += static_cast<std::size_t>(ls.out);
    s.push_back(ls);
  }
  return s;
}

// Forward/backward scratch for one whole batch: activations per layer are
// stored flat, sample-major.
struct BatchScratch {
  std::vector<std::vector<double>> act;  // act[l]: n x widths[l]
  std::vector<std::vector<double>> del;  // same shapes; backprop deltas
};

void forward_batch(const Classifier& c, const std::vector<LayerShape>& sh,
                   const double* flat_x, std::size_t n, BatchScratch& s) {
  const std::size_t layers = sh.size();
  s.act.resize(layers + 1);
  s.act[0].assign(flat_x, flat_x + n * static_cast<std::size_t>(sh.front().in));
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& ls = sh[l];
    s.act[l + 1].assign(n * static_cast<std::size_t>(ls.out), 0.0);
    const double* w = c.params.data() + ls.w_off;
    const double* b = c.params.data() + ls.b_off;
    const double* in = s.act[l].data();
    double* out = s.act[l + 1].data();
    const bool hidden = l + 1 < layers || layers == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = in + i * static_cast<std::size_t>(ls.in);
      double* yi = out + i * static_cast<std::size_t>(ls.out);
      for (int o = 0; o < ls.out; ++o) {
        double z = b[o];
        const double* wo = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        for (int k = 0; k < ls.in; ++k) z += wo[k] * xi[k];
        yi[o] = hidden ? std::tanh(z) : z;  // output layer stays linear (logit)
      }
    }
  }
}

// Mean BCE loss of logits in s.act.back() and, optionally, backprop into grad.
double loss_and_backprop(const Classifier& c, const std::vector<LayerShape>& sh,
                         std::size_t n, const int* labels, BatchScratch& s,
                         std::vector<double>* grad) {
  const std::size_t layers = sh.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  s.del.resize(layers + 1);
  s.del[layers].assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = s.act[layers][i];
    const double y = static_cast<double>(labels[i]);
    // Stable BCE on the logit: max(z,0) - z*y + log(1 + exp(-|z|)).
    loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    const double sig = 1.0 / (1.0 + std::exp(-z));
    s.del[layers][i] = (sig - y) * inv_n;
  }
  loss *= inv_n;
  if (grad == nullptr) return loss;

  grad->assign(c.param_count(), 0.0);
  for (std::size_t l = layers; l-- > 0;) {
    const auto& ls = sh[l];
    const double* in = s.act[l].data();
    const double* dout = s.del[l + 1].data();
    double* gw = grad->data() + ls.w_off;
    double* gb = grad->data() + ls.b_off;
    const bool need_din = l > 0;
    if (need_din) s.del[l].assign(n * static_cast<std::size_t>(ls.in), 0.0);
    const double* w = c.params.data() + ls.w_off;
    for (std::size_t i = 0; i < n; ++i) {
      const double* xi = in + i * static_cast<std::size_t>(ls.in);
      const double* di = dout + i * static_cast<std::size_t>(ls.out);
      double* din = need_din ? s.del[l].data() + i * static_cast<std::size_t>(ls.in) : nullptr;
      for (int o = 0; o < ls.out; ++o) {
        const double d = di[o];
        if (d == 0.0) continue;
        double* gwo = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        const double* wo = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
        for (int k = 0; k < ls.in; ++k) {
          gwo[k] += d * xi[k];
          if (need_din) din[k] += d * wo[k];
        }
        gb[o] += d;
      }
      if (need_din) {
        // tanh backprop: multiply by 1 - a^2 of the layer-l activation.
        for (int k = 0; k < ls.in; ++k) {
          const double a = xi[k];
          din[k] *= 1.0 - a * a;
        }
      }
    }
  }
  return loss;
}

std::vector<double> flatten(const Dataset& d) {
  std::vector<double> flat;
  flat.reserve(d.size() * static_cast<std::size_t>(d.dim));
  for (const auto& p : d.points) flat.insert(flat.end(), p.begin(), p.end());
  return flat;
}

}  // namespace

std::size_t Classifier::weight_offset(std::size_t l) const {
  return shapes(widths)[l].w_off;
}

std::size_t Classifier::bias_offset(std::size_t l) const {
  return shapes(widths)[l].b_off;
}

double Classifier::raw_logit(const Point& x) const {
  if (static_cast<int>(x.size()) != dim())
    throw std::invalid_argument("classify: point dimension mismatch");
  const auto sh = shapes(widths);
  double buf_a[kHiddenWidth], buf_b[kHiddenWidth];
  // Seed the input buffer (dim <= hidden width by construction).
  for (std::size_t k = 0; k < x.size(); ++k) buf_a[k] = x[k];
  double* in = buf_a;
  double* out = buf_b;
  double z_last = 0.0;
  for (std::size_t l = 0; l < sh.size(); ++l) {
    const auto& ls = sh[l];
    const double* w = params.data() + ls.w_off;
    const double* b = params.data() + ls.b_off;
    for (int o = 0; o < ls.out; ++o) {
      double z = b[o];
      const double* wo = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(ls.in);
      for (int k = 0; k < ls.in; ++k) z += wo[k] * in[k];
      if (l + 1 == sh.size()) {
        z_last = z;
      } else {
        out[o] = std::tanh(z);
      }
    }
    std::swap(in, out);
  }
  return z_last;
}

double classify(const Classifier& c, const Point& x) {
  // log2 * (2*sigmoid(z) - 1) == log2 * tanh(z/2), which is numerically exact
  // for large |z| where the sigmoid itself would round to 0 or 1.
  return kLog2 * clamp_unit(std::tanh(0.5 * c.raw_logit(x)));
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::high: return "high";
    case Regime::low: return "low";
    case Regime::failed: return "failed";
  }
  return "failed";
}

Regime regime_from_name(const std::string& name) {
  if (name == "high") return Regime::high;
  if (name == "low") return Regime::low;
  if (name == "failed") return Regime::failed;
  throw std::invalid_argument("unknown regime: " + name);
}

Classifier init_classifier(int dim, std::uint64_t seed) {
  if (dim < 1 || dim > kHiddenWidth)
    throw std::invalid_argument("init_classifier: dim must be in [1, 25]");
  Classifier c;
  c.widths = {dim};
  for (int l = 0; l < kHiddenLayers; ++l) c.widths.push_back(kHiddenWidth);
  c.widths.push_back(1);

  const auto sh = shapes(c.widths);
  std::size_t total = 0;
  for (const auto& ls : sh)
    total += static_cast<std::size_t>(ls.in + 1) * static_cast<std::size_t>(ls.out);
  c.params.assign(total, 0.0);

  RngStream rng(seed);
  for (const auto& ls : sh) {
    const double bound = std::sqrt(6.0 / static_cast<double>(ls.in + ls.out));
    for (std::size_t k = 0; k < static_cast<std::size_t>(ls.in) * static_cast<std::size_t>(ls.out); ++k)
      c.params[ls.w_off + k] = bound * (2.0 * rng.uniform() - 1.0);
    // biases start at zero
  }
  c.c_star = kLog2;
  return c;
}

Classifier train_classifier(const Dataset& p_samples, const Dataset& q_samples,
                            const TrainConfig& cfg) {
  if (p_samples.empty() || q_samples.empty())
    throw std::invalid_argument("train_classifier: datasets must be non-empty");
  if (p_samples.dim != q_samples.dim)
    throw std::invalid_argument("train_classifier: dataset dimension mismatch");
  if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) ||
      cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("train_classifier: invalid config");

  const std::size_t n = p_samples.size() + q_samples.size();
  Dataset all;
  all.dim = p_samples.dim;
  all.points.reserve(n);
  all.points.insert(all.points.end(), p_samples.points.begin(), p_samples.points.end());
  all.points.insert(all.points.end(), q_samples.points.begin(), q_samples.points.end());
  std::vector<int> labels(n, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(p_samples.size()), 1);

  Classifier c = init_classifier(all.dim, cfg.seed);
  const auto sh = shapes(c.widths);
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), n);
  const bool full_batch = batch == n;

  RngStream shuffle_rng(derive_seed(cfg.seed, 0xBA7C4));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> velocity(c.param_count(), 0.0);
  std::vector<double> grad;
  BatchScratch scratch;
  const std::vector<double> flat_all = flatten(all);

  std::vector<double> flat_batch;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!full_batch) {
      // Deterministic Fisher-Yates reshuffle each epoch.
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[shuffle_rng.index(i + 1)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(start + batch, n);
      const std::size_t bn = stop - start;
      const double* bx;
      const int* by;
      if (full_batch) {
        bx = flat_all.data();
        by = labels.data();
      } else {
        flat_batch.resize(bn * static_cast<std::size_t>(all.dim));
        batch_labels.resize(bn);
        for (std::size_t i = 0; i < bn; ++i) {
          const std::size_t src = order[start + i];
          std::copy_n(flat_all.data() + src * static_cast<std::size_t>(all.dim),
                      static_cast<std::size_t>(all.dim),
                      flat_batch.data() + i * static_cast<std::size_t>(all.dim));
          batch_labels[i] = labels[src];
        }
        bx = flat_batch.data();
        by = batch_labels.data();
      }

      // Nesterov lookahead: evaluate the gradient at w + mu*v.
      for (std::size_t k = 0; k < c.param_count(); ++k)
        c.params[k] += cfg.momentum * velocity[k];
      forward_batch(c, sh, bx, bn, scratch);
      const double loss = loss_and_backprop(c, sh, bn, by, scratch, &grad);
      // Undo the lookahead, then apply the velocity update.
      for (std::size_t k = 0; k < c.param_count(); ++k) {
        c.params[k] -= cfg.momentum * velocity[k];
        velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * grad[k];
        c.params[k] += velocity[k];
      }
      epoch_loss += loss * static_cast<double>(bn);
      if (!std::isfinite(loss))
        throw TrainingError(epoch, "train_classifier: non-finite loss at epoch " +
                                       std::to_string(epoch));
    }
    if (!std::isfinite(epoch_loss))
      throw TrainingError(epoch, "train_classifier: non-finite loss at epoch " +
                                     std::to_string(epoch));
  }

  // Empirical sup-norm over the data the classifier was trained on.
  double cs = 0.0;
  for (const auto& x : all.points) cs = std::max(cs, std::abs(classify(c, x)));
  c.c_star = std::max(cs, 1e-12);
  return c;
}

WlaReport wla_advantages(const Classifier& c, const Dataset& p_samples,
                         const Dataset& q_samples) {
  if (p_samples.empty() || q_samples.empty())
    throw std::invalid_argument("wla_advantages: datasets must be non-empty");
  double mean_p = 0.0, mean_q = 0.0, cs = 0.0;
  for (const auto& x : p_samples.points) {
    const double v = classify(c, x);
    mean_p += v;
    cs = std::max(cs, std::abs(v));
  }
  for (const auto& x : q_samples.points) {
    const double v = classify(c, x);
    mean_q += v;
    cs = std::max(cs, std::abs(v));
  }
  if (cs == 0.0)
    throw std::runtime_error("wla_advantages: degenerate classifier (c == 0 on all points)");
  cs = std::max(cs, 1e-12);
  mean_p /= static_cast<double>(p_samples.size());
  mean_q /= static_cast<double>(q_samples.size());

  WlaReport r;
  r.c_star = cs;
  r.gamma_p = mean_p / cs;
  r.gamma_q = -mean_q / cs;
  if (r.gamma_p <= 0.0 || r.gamma_q <= 0.0) {
    r.regime = Regime::failed;
  } else if (r.gamma_q >= 1.0 / 3.0) {
    r.regime = Regime::high;
  } else {
    r.regime = Regime::low;
  }
  return r;
}

double bce_loss(const Classifier& c, const Dataset& batch,
                const std::vector<int>& labels) {
  if (batch.empty() || batch.size() != labels.size())
    throw std::invalid_argument("bce_loss: batch/labels size mismatch");
  const auto sh = shapes(c.widths);
  BatchScratch scratch;
  const auto flat = flatten(batch);
  forward_batch(c, sh, flat.data(), batch.size(), scratch);
  return loss_and_backprop(c, sh, batch.size(), labels.data(), scratch, nullptr);
}

std::vector<double> bce_loss_gradient(const Classifier& c, const Dataset& batch,
                                      const std::vector<int>& labels) {
  if (batch.empty() || batch.size() != labels.size())
    throw std::invalid_argument("bce_loss_gradient: batch/labels size mismatch");
  const auto sh = shapes(c.widths);
  BatchScratch scratch;
  std::vector<double> grad;
  const auto flat = flatten(batch);
  forward_batch(c, sh, flat.data(), batch.size(), scratch);
  loss_and_backprop(c, sh, batch.size(), labels.data(), scratch, &grad);
  return grad;
}

double gradient_check(const Classifier& c, const Dataset& batch,
                      const std::vector<int>& labels, std::uint64_t seed) {
  if (batch.empty()) throw std::invalid_argument("gradient_check: empty batch");
  const auto analytic = bce_loss_gradient(c, batch, labels);
  const auto sh = shapes(c.widths);

  // At least 50 parameters, stratified so every weight and bias block is hit.
  const std::size_t per_block = (50 + 2 * sh.size() - 1) / (2 * sh.size()) + 1;
  RngStream rng(derive_seed(seed, 0x6C));
  std::vector<std::size_t> idx;
  for (const auto& ls : sh) {
    const std::size_t wn = static_cast<std::size_t>(ls.in) * static_cast<std::size_t>(ls.out);
    for (std::size_t k = 0; k < per_block; ++k) idx.push_back(ls.w_off + rng.index(wn));
    for (std::size_t k = 0; k < per_block; ++k)
      idx.push_back(ls.b_off + rng.index(static_cast<std::size_t>(ls.out)));
  }

  Classifier probe = c;
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k : idx) {
    const double saved = probe.params[k];
    probe.params[k] = saved + h;
    const double up = bce_loss(probe, batch, labels);
    probe.params[k] = saved - h;
    const double down = bce_loss(probe, batch, labels);
    probe.params[k] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-6});
    worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
  }
  return worst;
}

}  // namespace mbde
