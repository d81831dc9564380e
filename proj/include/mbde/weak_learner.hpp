#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbde/targets.hpp"

namespace mbde {

inline constexpr double kLog2 = 0.6931471805599453;

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  int epochs = 750;
  int batch_size = 10000;  // clamped to the dataset size; >= n means full batch
  std::uint64_t seed = 0;
};

// Bounded-output MLP classifier: widths {d, 25, 25, 25, 1}, tanh hidden
// layers, sigmoid head. The classifier value is c(x) = log(2) * (2*sigma - 1),
// computed as log(2) * tanh(z/2) and kept strictly inside (-log 2, log 2).
struct Classifier {
  std::vector<int> widths;
  std::vector<double> params;  // flat: [W0 row-major | b0 | W1 | b1 | ...]
  double c_star = kLog2;       // empirical sup-norm over training data

  int dim() const { return widths.front(); }
  std::size_t layer_count() const { return widths.size() - 1; }
  std::size_t param_count() const { return params.size(); }

  // Offset of layer l's weight block / bias block inside params.
  std::size_t weight_offset(std::size_t l) const;
  std::size_t bias_offset(std::size_t l) const;

  // Pre-sigmoid output of the network.
  double raw_logit(const Point& x) const;
};

double classify(const Classifier& c, const Point& x);

enum class Regime { high, low, failed };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

struct WlaReport {
  double gamma_p = 0.0;
  double gamma_q = 0.0;
  double c_star = 0.0;
  Regime regime = Regime::failed;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, const std::string& msg)
      : std::runtime_error(msg), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

Classifier init_classifier(int dim, std::uint64_t seed);

// Binary cross-entropy training with Nesterov momentum; labels are 1 for
// p_samples and 0 for q_samples. Deterministic given cfg.seed. Throws
// TrainingError (with the epoch index) when the loss stops being finite.
Classifier train_classifier(const Dataset& p_samples, const Dataset& q_samples,
                            const TrainConfig& cfg);

// Measured weak-learning advantages; c* is the max |c(x)| over both datasets,
// floored at 1e-12. Throws when the classifier is identically zero on them.
WlaReport wla_advantages(const Classifier& c, const Dataset& p_samples,
                         const Dataset& q_samples);

// Mean binary cross-entropy of the sigmoid head over a labelled batch.
double bce_loss(const Classifier& c, const Dataset& batch,
                const std::vector<int>& labels);

// Analytic gradient of bce_loss with respect to the flat parameter vector.
std::vector<double> bce_loss_gradient(const Classifier& c, const Dataset& batch,
                                      const std::vector<int>& labels);

// Compares the analytic gradient against central finite differences
// (step 1e-5) on a seeded sample of parameters covering every layer; returns
// the max relative error.
double gradient_check(const Classifier& c, const Dataset& batch,
                      const std::vector<int>& labels, std::uint64_t seed = 0);

}  // namespace mbde
