// Central-difference gradient check for the regressor.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "famsec/mlp.hpp"

namespace oracle {

struct GradCheck {
  double relative_error = 0.0;  // |g - n| / |g + n|, Euclidean norms
  std::size_t parameters = 0;
};

inline GradCheck gradient_check(std::uint64_t seed, int inputs, int rows) {
  famsec::Mlp net({inputs, 10, 10, 1}, seed);
  std::mt19937_64 g(seed + 1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> x(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(inputs)));
  std::vector<double> y(static_cast<std::size_t>(rows));
  for (auto& r : x)
    for (auto& v : r) v = n(g);
  for (auto& v : y) v = n(g);
  const famsec::Batch batch{x, y};
  std::vector<double> grad;
  famsec::mse_and_gradient(net, batch, 0.0, nullptr, grad);

  auto params = net.flat();
  const double h = 1e-6;
  double diff = 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    net.set_flat(params);
    const double up = famsec::mse(net, batch);
    params[i] = keep - h;
    net.set_flat(params);
    const double down = famsec::mse(net, batch);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    diff += (grad[i] - numeric) * (grad[i] - numeric);
    sum += (grad[i] + numeric) * (grad[i] + numeric);
  }
  net.set_flat(params);
  return {std::sqrt(diff) / std::sqrt(sum), params.size()};
}

}  // namespace oracle
