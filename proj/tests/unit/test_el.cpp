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


#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "fairmle/el.hpp"
#include "fairmle/error.hpp"

using fairmle::ElState;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// Maximises sum log p_i over {p > 0, sum p = 1, sum p m = 0} by Newton's
// method on the null space of the two equality constraints.
Eigen::VectorXd primal_el(const Eigen::VectorXd& m) {
  const Eigen::Index n = m.size();
  Eigen::MatrixXd c(2, n);
  c.row(0).setOnes();
  c.row(1) = m.transpose();
  const Eigen::MatrixXd basis = Eigen::FullPivLU<Eigen::MatrixXd>(c).kernel();

  // Feasible start: half uniform, half on the two extreme points.
  Eigen::Index lo = 0, hi = 0;
  m.minCoeff(&lo);
  m.maxCoeff(&hi);
  const double target = -m.mean();
  const double t = (target - m(lo)) / (m(hi) - m(lo));
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 0.5 / n);
  p(lo) += 0.5 * (1.0 - t);
  p(hi) += 0.5 * t;
  REQUIRE((p.array() > 0.0).all());

  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd inv = p.cwiseInverse();
    const Eigen::VectorXd g = basis.transpose() * inv;
    if (g.norm() < 1e-13) break;
    const Eigen::MatrixXd h =
        basis.transpose() * inv.cwiseAbs2().asDiagonal() * basis;
    const Eigen::VectorXd dz = h.ldlt().solve(g);
    double step = 1.0;
    const double f0 = p.array().log().sum();
    while (true) {
      const Eigen::VectorXd q = p + step * (basis * dz);
      if ((q.array() > 0.0).all() && q.array().log().sum() >= f0) {
        p = q;
        break;
      }
      step *= 0.5;
      REQUIRE(step > 1e-20);
    }
  }
  return p;
}

}  // namespace

TEST_SUITE("el") {

TEST_CASE("two-point closed forms") {
  CHECK(fairmle::solve_lambda(vec({1, -1})) == 0.0);
  const double lambda = fairmle::solve_lambda(vec({2, -1}));
  CHECK(lambda == doctest::Approx(0.25).epsilon(1e-12));
  const Eigen::VectorXd p = fairmle::weights_from_lambda(vec({2, -1}), lambda);
  CHECK(p(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(2 * p(0) - p(1)) < 1e-12);
  CHECK(fairmle::profile_el_logterm(vec({2, -1})) ==
        doctest::Approx(std::log(1.0 / 3.0) + std::log(2.0 / 3.0)).epsilon(1e-12));
  CHECK(fairmle::solve_lambda(vec({0.5, -0.5, 3, -3, 1.25, -1.25})) == 0.0);
}

TEST_CASE("degenerate inputs") {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(7);
  CHECK(fairmle::solve_lambda(zero) == 0.0);
  CHECK(fairmle::profile_el_logterm(zero) == doctest::Approx(-7.0 * std::log(7.0)));
  const Eigen::VectorXd u = fairmle::weights_from_lambda(vec({3, -1, 2}), 0.0);
  CHECK((u.array() == 1.0 / 3.0).all());
  CHECK_THROWS_AS(fairmle::solve_lambda(vec({1, 2, 0})), fairmle::InfeasibleError);
  CHECK_THROWS_AS(fairmle::solve_lambda(vec({-1, -2})), fairmle::InfeasibleError);
  CHECK_THROWS_AS(fairmle::profile_el_logterm(vec({0.5, 0.1})), fairmle::InfeasibleError);
  CHECK_THROWS_AS(fairmle::weights_from_lambda(vec({2, -1}), 1.0), fairmle::InvalidArgument);
}

TEST_CASE("random feasible moments satisfy the weight invariants") {
  std::mt19937_64 eng(2024);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> size(2, 400);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = size(eng);
    Eigen::VectorXd m(n);
    const double shift = 1.5 * normal(eng);
    for (int i = 0; i < n; ++i) m(i) = normal(eng) + shift;
    if (!(m.minCoeff() < 0.0 && m.maxCoeff() > 0.0)) continue;
    const ElState s = fairmle::el_weights(m);
    CHECK((s.weights.array() > 0.0).all());
    CHECK(std::abs(s.weights.sum() - 1.0) < 1e-10);
    CHECK(std::abs(s.weights.dot(m)) < 1e-8);
    CHECK(std::abs(fairmle::lambda_residual(m, s.lambda)) <= 1e-10);

    // The residual decreases across the bracket.
    const double lo = -1.0 / m.maxCoeff(), hi = -1.0 / m.minCoeff();
    CHECK(fairmle::lambda_residual(m, lo + 1e-9 * (hi - lo)) > 0.0);
    CHECK(fairmle::lambda_residual(m, hi - 1e-9 * (hi - lo)) < 0.0);

    // Scale equivariance.
    const double c = 0.1 + 5.0 * std::abs(normal(eng));
    const ElState t = fairmle::el_weights(c * m);
    CHECK(t.lambda * c == doctest::Approx(s.lambda).epsilon(1e-8));
    CHECK((t.weights - s.weights).lpNorm<Eigen::Infinity>() < 1e-9);

    CHECK(fairmle::profile_el_logterm(m) ==
          doctest::Approx(s.weights.array().log().sum()).epsilon(1e-10));
  }
}

TEST_CASE("dual value equals the primal optimum") {
  for (const Eigen::VectorXd& m :
       {vec({1.2, -0.4, 0.3, -2.0, 0.7}), vec({0.1, 0.2, 0.3, -0.5, 0.15}),
        vec({-1, -1, -1, 4, 0.5})}) {
    const Eigen::VectorXd p = primal_el(m);
    CHECK(std::abs(p.dot(m)) < 1e-12);
    CHECK(fairmle::profile_el_logterm(m) ==
          doctest::Approx(p.array().log().sum()).epsilon(1e-10));
    CHECK((fairmle::el_weights(m).weights - p).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

}  // TEST_SUITE
