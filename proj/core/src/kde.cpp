// Copyright 2026 The fairmle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairmle/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fairmle/error.hpp"

namespace fairmle {

WeightedKde::WeightedKde(std::vector<double> points, Eigen::VectorXd weights,
                         int grid_size)
    : points_(std::move(points)), weights_(std::move(weights)) {
  const auto n = static_cast<Eigen::Index>(points_.size());
  if (n == 0) throw InvalidArgument("density estimate needs at least one point");
  if (grid_size < 16) throw InvalidArgument("grid too small");
  if (weights_.size() == 0) weights_ = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  if (weights_.size() != n) throw InvalidArgument("weights do not match points");
  if ((weights_.array() < 0.0).any() || !(weights_.sum() > 0.0))
    throw InvalidArgument("weights must be nonnegative with positive sum");
  weights_ /= weights_.sum();

  const Eigen::Map<const Eigen::VectorXd> x(points_.data(), n);
  const double mean = weights_.dot(x);
  const double var = weights_.dot((x.array() - mean).square().matrix());
  const double n_eff = 1.0 / weights_.squaredNorm();
  const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
  h_ = 1.06 * sd * std::pow(n_eff, -0.2);

  const auto [mn, mx] = std::minmax_element(points_.begin(), points_.end());
  lo_ = *mn - 6.0 * h_;
  const double hi = *mx + 6.0 * h_;
  step_ = (hi - lo_) / (grid_size - 1);

  std::vector<double> mass(static_cast<std::size_t>(grid_size), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = (points_[static_cast<std::size_t>(i)] - lo_) / step_;
    const auto j = std::min(static_cast<int>(t), grid_size - 2);
    const double frac = t - j;
    mass[static_cast<std::size_t>(j)] += weights_[i] * (1.0 - frac);
    mass[static_cast<std::size_t>(j + 1)] += weights_[i] * frac;
  }
  const int reach = static_cast<int>(std::ceil(8.0 * h_ / step_));
  std::vector<double> kernel(static_cast<std::size_t>(reach + 1));
  for (int d = 0; d <= reach; ++d) {
    const double z = d * step_ / h_;
    kernel[static_cast<std::size_t>(d)] =
        std::exp(-0.5 * z * z) / (h_ * std::sqrt(2.0 * std::numbers::pi));
  }
  grid_.assign(static_cast<std::size_t>(grid_size), 0.0);
  for (int k = 0; k < grid_size; ++k) {
    const double mk = mass[static_cast<std::size_t>(k)];
    if (mk == 0.0) continue;
    const int j0 = std::max(0, k - reach), j1 = std::min(grid_size - 1, k + reach);
    for (int j = j0; j <= j1; ++j)
      grid_[static_cast<std::size_t>(j)] += mk * kernel[static_cast<std::size_t>(std::abs(j - k))];
  }
}

double WeightedKde::log_density_exact(double x) const {
  double top = -std::numeric_limits<double>::infinity();
  std::vector<double> e(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const double z = (x - points_[i]) / h_;
    const double w = weights_[static_cast<Eigen::Index>(i)];
    e[i] = w > 0.0 ? std::log(w) - 0.5 * z * z : -std::numeric_limits<double>::infinity();
    top = std::max(top, e[i]);
  }
  double s = 0.0;
  for (double v : e) s += std::exp(v - top);
  return top + std::log(s) - std::log(h_ * std::sqrt(2.0 * std::numbers::pi));
}

double WeightedKde::log_density(double x) const {
  const double t = (x - lo_) / step_;
  const auto last = static_cast<double>(grid_.size() - 1);
  if (t >= 0.0 && t < last) {
    const auto j = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(j);
    const double d = grid_[j] * (1.0 - frac) + grid_[j + 1] * frac;
    if (d > 1e-200) return std::log(d);
  }
  return log_density_exact(x);
}

}  // namespace fairmle
