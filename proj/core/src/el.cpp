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

#include "fairmle/el.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fairmle/error.hpp"

namespace fairmle {
namespace {

constexpr double kResidualTol = 1e-10;
constexpr double kBracketMargin = 1e-12;
constexpr int kMaxIter = 500;

// sum_i p_i = 1 - lambda * residual / n, so the residual must also be small
// relative to n / |lambda| for the weights to sum to one.
double residual_tol(double lambda, double n) {
  return kResidualTol * std::min(1.0, n / std::max(1.0, 10.0 * std::abs(lambda)));
}

}  // namespace

double lambda_residual(const Eigen::VectorXd& m, double lambda) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) s += m[i] / (1.0 + lambda * m[i]);
  return s;
}

double solve_lambda(const Eigen::VectorXd& m) {
  if (m.size() == 0) throw InvalidArgument("empty moment vector");
  const double sum = m.sum();
  if (sum == 0.0) return 0.0;
  const auto n = static_cast<double>(m.size());
  const double lo_m = m.minCoeff();
  const double hi_m = m.maxCoeff();
  if (!(lo_m < 0.0 && hi_m > 0.0))
    throw InfeasibleError(
        "moment values do not straddle zero; no probability vector satisfies "
        "the constraint");

  // Feasible interval for lambda, pulled in from the poles.
  double lo = -1.0 / hi_m;
  double hi = -1.0 / lo_m;
  lo += kBracketMargin * std::abs(lo);
  hi -= kBracketMargin * std::abs(hi);

  double lambda = 0.0;
  double h = sum;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    if (std::abs(h) <= residual_tol(lambda, n)) return lambda;
    // The residual decreases in lambda, so a positive value means the root is
    // to the right.
    if (h > 0.0)
      lo = lambda;
    else
      hi = lambda;

    double deriv = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double d = 1.0 + lambda * m[i];
      deriv -= m[i] * m[i] / (d * d);
    }
    double next = lambda - h / deriv;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == lambda) break;
    lambda = next;
    h = lambda_residual(m, lambda);
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max(1.0, std::abs(lambda)))
      break;
  }
  if (std::abs(h) <= residual_tol(lambda, n)) return lambda;
  // Residual noise floor: rounding in the sum, plus the change caused by a
  // few ulps of lambda when the root sits close to a pole.
  double scale = 0.0, slope = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double d = 1.0 + lambda * m[i];
    scale += std::abs(m[i] / d);
    slope += m[i] * m[i] / (d * d);
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (std::abs(h) <= 1e3 * eps * scale + 8.0 * eps * std::max(1.0, std::abs(lambda)) * slope)
    return lambda;
  throw ConvergenceError("lambda root solve stalled, residual " +
                         std::to_string(h));
}

Eigen::VectorXd weights_from_lambda(const Eigen::VectorXd& m, double lambda) {
  const auto n = static_cast<double>(m.size());
  Eigen::VectorXd p(m.size());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double d = 1.0 + lambda * m[i];
    if (!(d > 0.0))
      throw InvalidArgument("nonpositive EL denominator 1 + lambda m_i");
    p[i] = 1.0 / (n * d);
  }
  return p;
}

ElState el_weights(const Eigen::VectorXd& m) {
  ElState s;
  s.lambda = solve_lambda(m);
  s.weights = weights_from_lambda(m, s.lambda);
  return s;
}

double profile_el_logterm(const Eigen::VectorXd& m) {
  const double lambda = solve_lambda(m);
  const auto n = static_cast<double>(m.size());
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) s -= std::log1p(lambda * m[i]);
  return s - n * std::log(n);
}

}  // namespace fairmle
