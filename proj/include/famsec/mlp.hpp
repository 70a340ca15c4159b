#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "famsec/rng.hpp"

namespace famsec {

/// Fully connected layer; weights are out x in, row-major.
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

/// Feed-forward regressor with ReLU hidden layers and a single linear output.
class Mlp {
 public:
  Mlp() = default;
  /// widths = {inputs, hidden..., 1}. He-normal initialisation from `seed`.
  Mlp(const std::vector<int>& widths, std::uint64_t seed);
  explicit Mlp(std::vector<DenseLayer> layers);

  double predict(std::span<const double> x) const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t input_count() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().in); }
  std::size_t parameter_count() const;

  /// Parameters flattened layer by layer, weights before biases.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> params);

 private:
  std::vector<DenseLayer> layers_;
};

struct Batch {
  std::span<const std::vector<double>> x;
  std::span<const double> y;
};

/// Mean squared error over the batch; writes d(loss)/d(params) into `grad`
/// (flat layout). Dropout with inverted scaling is applied to hidden
/// activations when `dropout_rng` is non-null and rate > 0.
double mse_and_gradient(const Mlp& net, const Batch& batch, double dropout_rate, Rng* dropout_rng,
                        std::vector<double>& grad);

double mse(const Mlp& net, const Batch& batch);

struct MlpTrainConfig {
  std::vector<int> hidden{10, 10};
  double dropout_rate = 0.3;
  int epochs = 500;
  double learning_rate = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingCurve {
  std::vector<double> train_mse;  // per epoch, dropout disabled
  std::vector<double> val_mse;    // empty when no validation rows
};

/// Mini-batch Adam on squared error. Deterministic given config.seed.
Mlp train_regressor(const std::vector<std::vector<double>>& x_train, const std::vector<double>& y_train,
                    const std::vector<std::vector<double>>& x_val, const std::vector<double>& y_val,
                    const MlpTrainConfig& config, TrainingCurve& curve);

}  // namespace famsec
