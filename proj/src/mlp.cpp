#include "famsec/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "famsec/error.hpp"

namespace famsec {

Mlp::Mlp(const std::vector<int>& widths, std::uint64_t seed) {
  if (widths.size() < 2) throw Error(ErrorKind::InvalidConfig, "network needs input and output widths");
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    if (layer.in < 1 || layer.out < 1) throw Error(ErrorKind::InvalidConfig, "layer widths must be positive");
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / layer.in));
    layer.w.resize(static_cast<std::size_t>(layer.in) * static_cast<std::size_t>(layer.out));
    for (double& w : layer.w) w = init(rng.engine());
    layer.b.assign(static_cast<std::size_t>(layer.out), 0.0);
    layers_.push_back(std::move(layer));
  }
  if (layers_.back().out != 1) throw Error(ErrorKind::InvalidConfig, "regressor must have a single output");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(ErrorKind::CorruptFile, "network has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (L.w.size() != static_cast<std::size_t>(L.in) * static_cast<std::size_t>(L.out) ||
        L.b.size() != static_cast<std::size_t>(L.out))
      throw Error(ErrorKind::CorruptFile, "layer shape is inconsistent");
    if (l > 0 && layers_[l - 1].out != L.in) throw Error(ErrorKind::CorruptFile, "layer widths do not chain");
  }
  if (layers_.back().out != 1) throw Error(ErrorKind::CorruptFile, "regressor must have a single output");
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += L.w.size() + L.b.size();
  return n;
}

std::vector<double> Mlp::flat() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& L : layers_) {
    out.insert(out.end(), L.w.begin(), L.w.end());
    out.insert(out.end(), L.b.begin(), L.b.end());
  }
  return out;
}

void Mlp::set_flat(std::span<const double> params) {
  if (params.size() != parameter_count()) throw Error(ErrorKind::InvalidArgument, "parameter vector has wrong size");
  std::size_t i = 0;
  for (auto& L : layers_) {
    for (double& w : L.w) w = params[i++];
    for (double& b : L.b) b = params[i++];
  }
}

double Mlp::predict(std::span<const double> x) const {
  if (x.size() != input_count()) throw Error(ErrorKind::SchemaMismatch, "input width does not match network");
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    z.assign(static_cast<std::size_t>(L.out), 0.0);
    for (int o = 0; o < L.out; ++o) {
      double acc = L.b[static_cast<std::size_t>(o)];
      const double* row = &L.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
      for (int i = 0; i < L.in; ++i) acc += row[i] * a[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = (l + 1 < layers_.size()) ? std::max(acc, 0.0) : acc;
    }
    a.swap(z);
  }
  return a.front();
}

double mse(const Mlp& net, const Batch& batch) {
  if (batch.x.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < batch.x.size(); ++r) {
    const double e = net.predict(batch.x[r]) - batch.y[r];
    total += e * e;
  }
  return total / static_cast<double>(batch.x.size());
}

double mse_and_gradient(const Mlp& net, const Batch& batch, double dropout_rate, Rng* dropout_rng,
                        std::vector<double>& grad) {
  const auto& layers = net.layers();
  grad.assign(net.parameter_count(), 0.0);
  if (batch.x.empty()) return 0.0;
  const bool dropout = dropout_rng != nullptr && dropout_rate > 0.0;
  const double keep_scale = dropout ? 1.0 / (1.0 - dropout_rate) : 1.0;

  // Offsets of each layer's weights inside the flat gradient.
  std::vector<std::size_t> offset(layers.size());
  for (std::size_t l = 0, at = 0; l < layers.size(); ++l) {
    offset[l] = at;
    at += layers[l].w.size() + layers[l].b.size();
  }

  const double inv_n = 1.0 / static_cast<double>(batch.x.size());
  double loss = 0.0;
  std::vector<std::vector<double>> acts(layers.size() + 1);
  std::vector<std::vector<double>> masks(layers.size());  // post-ReLU multiplier (0, 1, or keep_scale)
  for (std::size_t r = 0; r < batch.x.size(); ++r) {
    acts[0] = batch.x[r];
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& L = layers[l];
      const bool hidden = l + 1 < layers.size();
      auto& out = acts[l + 1];
      out.assign(static_cast<std::size_t>(L.out), 0.0);
      masks[l].assign(static_cast<std::size_t>(L.out), 1.0);
      for (int o = 0; o < L.out; ++o) {
        double acc = L.b[static_cast<std::size_t>(o)];
        const double* row = &L.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
        for (int i = 0; i < L.in; ++i) acc += row[i] * acts[l][static_cast<std::size_t>(i)];
        if (hidden) {
          double m = acc > 0.0 ? 1.0 : 0.0;
          if (dropout) m *= (dropout_rng->uniform() < dropout_rate) ? 0.0 : keep_scale;
          masks[l][static_cast<std::size_t>(o)] = m;
          acc = m == 0.0 ? 0.0 : acc * m;
        }
        out[static_cast<std::size_t>(o)] = acc;
      }
    }
    const double err = acts.back().front() - batch.y[r];
    loss += err * err * inv_n;

    std::vector<double> delta{2.0 * err * inv_n};  // d loss / d pre-activation of current layer
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& L = layers[l];
      double* gw = &grad[offset[l]];
      double* gb = gw + L.w.size();
      std::vector<double> back(static_cast<std::size_t>(L.in), 0.0);
      for (int o = 0; o < L.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        gb[o] += d;
        const double* row = &L.w[static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in)];
        double* grow = gw + static_cast<std::size_t>(o) * static_cast<std::size_t>(L.in);
        for (int i = 0; i < L.in; ++i) {
          grow[i] += d * acts[l][static_cast<std::size_t>(i)];
          back[static_cast<std::size_t>(i)] += d * row[i];
        }
      }
      if (l > 0)
        for (std::size_t i = 0; i < back.size(); ++i) back[i] *= masks[l - 1][i];
      delta.swap(back);
    }
  }
  return loss;
}

void MlpTrainConfig::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout must lie in [0,1)");
  if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning rate must be positive");
  for (int h : hidden)
    if (h < 1) throw Error(ErrorKind::InvalidConfig, "hidden widths must be positive");
}

Mlp train_regressor(const std::vector<std::vector<double>>& x_train, const std::vector<double>& y_train,
                    const std::vector<std::vector<double>>& x_val, const std::vector<double>& y_val,
                    const MlpTrainConfig& config, TrainingCurve& curve) {
  config.validate();
  if (x_train.empty() || x_train.size() != y_train.size())
    throw Error(ErrorKind::InvalidArgument, "training inputs and targets must be non-empty and aligned");
  if (x_val.size() != y_val.size()) throw Error(ErrorKind::InvalidArgument, "validation rows are not aligned");

  std::vector<int> widths{static_cast<int>(x_train.front().size())};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  widths.push_back(1);
  Mlp net(widths, mix_seed(config.seed, 1));
  Rng shuffle_rng(mix_seed(config.seed, 2));
  Rng dropout_rng(mix_seed(config.seed, 3));

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  std::vector<double> params = net.flat();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::int64_t step = 0;

  std::vector<std::size_t> order(x_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<double>> bx;
  std::vector<double> by;
  curve = {};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      bx.clear();
      by.clear();
      for (std::size_t i = start; i < end; ++i) {
        bx.push_back(x_train[order[i]]);
        by.push_back(y_train[order[i]]);
      }
      mse_and_gradient(net, Batch{bx, by}, config.dropout_rate, &dropout_rng, grad);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t p = 0; p < params.size(); ++p) {
        m[p] = beta1 * m[p] + (1.0 - beta1) * grad[p];
        v[p] = beta2 * v[p] + (1.0 - beta2) * grad[p] * grad[p];
        params[p] -= config.learning_rate * (m[p] / c1) / (std::sqrt(v[p] / c2) + eps);
      }
      net.set_flat(params);
    }
    curve.train_mse.push_back(mse(net, Batch{x_train, y_train}));
    if (!x_val.empty()) curve.val_mse.push_back(mse(net, Batch{x_val, y_val}));
  }
  return net;
}

}  // namespace famsec
