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


// Closed-form pieces of the simulation DGPs written out by hand, so tests do
// not lean on the library's own design machinery.

#ifndef FAIRMLE_TESTS_ORACLES_HPP_
#define FAIRMLE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fairmle/dataset.hpp"
#include "fairmle/rng.hpp"

namespace oracle {

inline double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

inline double phi(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * boost::math::constants::pi<double>());
}

// E[f(X)] for X ~ N(0, 1).
template <class F>
double normal_mean(F f) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 61>::integrate(
      [&](double x) { return f(x) * phi(x); }, -12.0, 12.0, 15, 1e-13);
}

inline double bern(int v, double p1) { return v ? p1 : 1.0 - p1; }

namespace sim1 {
inline double p_a1(double x) { return sigmoid(-0.5 - 0.5 * x); }
inline double p_m1(double a, double x) {
  return sigmoid(-0.5 - x - 0.5 * a + a * x);
}
inline double mean_y(double x, double a, double m) {
  return 1 + x + 2 * a - 2 * a * x + m + 3 * x * m + a * m + x * a * m;
}
inline double nde_at(double x) {
  double s = 0.0;
  for (int m = 0; m <= 1; ++m)
    s += (mean_y(x, 1, m) - mean_y(x, 0, m)) * bern(m, p_m1(0, x));
  return s;
}
inline double nde() { return normal_mean(nde_at); }
}  // namespace sim1

namespace sim3 {
inline double p_m1(double a, double x) { return sim1::p_m1(a, x); }
inline double p_l1(double a, double x, double m) {
  return sigmoid(-0.5 - x - 0.5 * a - 0.25 * m + a * x + 0.5 * a * m +
                 0.25 * a * x * m);
}
inline double mean_y(double x, double a, double m, double l) {
  return 1 + x + 2 * a + m + 0.5 * l - 2 * a * x + a * m + a * l + a * m * l;
}
// Contrast of Y(1, M(1), L(0, M(1))) against Y(0).
inline double pse_at(double x) {
  double s = 0.0;
  for (int m = 0; m <= 1; ++m)
    for (int l = 0; l <= 1; ++l) {
      const double pl0 = bern(l, p_l1(0, x, m));
      s += mean_y(x, 1, m, l) * pl0 * bern(m, p_m1(1, x)) -
           mean_y(x, 0, m, l) * pl0 * bern(m, p_m1(0, x));
    }
  return s;
}
inline double pse() { return normal_mean(pse_at); }
}  // namespace sim3

// Central differences with step h scaled by max(1, |x_j|).
template <class F>
Eigen::VectorXd fd_gradient(F f, Eigen::VectorXd x, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x(j)));
    const double keep = x(j);
    x(j) = keep + step;
    const double up = f(x);
    x(j) = keep - step;
    const double down = f(x);
    x(j) = keep;
    g(j) = (up - down) / (2.0 * step);
  }
  return g;
}

inline double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline fairmle::Dataset make_one(const std::vector<double>& x,
                                 const std::vector<int>& a,
                                 const std::vector<int>& m,
                                 const std::vector<std::optional<double>>& y) {
  std::vector<std::uint8_t> av(a.begin(), a.end()), mv(m.begin(), m.end());
  return fairmle::Dataset(fairmle::Graph::kOneMediator, x, av, mv, {}, y);
}

inline fairmle::DgpSpec spec(fairmle::Graph g, std::size_t n, double missing,
                             std::uint64_t seed) {
  fairmle::DgpSpec s;
  s.variant = g;
  s.n = n;
  s.missing_fraction = missing;
  s.seed = seed;
  return s;
}

}  // namespace oracle

#endif  // FAIRMLE_TESTS_ORACLES_HPP_
