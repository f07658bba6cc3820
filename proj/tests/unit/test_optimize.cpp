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
#include <limits>

#include <Eigen/Dense>

#include "doctest.h"
#include "fairmle/optimize.hpp"

using fairmle::MaximizeResult;

TEST_SUITE("optimize") {

TEST_CASE("concave quadratic") {
  Eigen::Matrix3d h;
  h << 4, 1, 0, 1, 3, -1, 0, -1, 2;
  const Eigen::Vector3d b(1.0, -2.0, 0.5);
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = b - h * x;
    return b.dot(x) - 0.5 * x.dot(h * x);
  };
  const MaximizeResult r = fairmle::maximize(f, Eigen::Vector3d::Zero());
  CHECK(r.converged);
  CHECK((r.x - h.ldlt().solve(b)).norm() < 1e-7);
  CHECK(r.grad_norm <= 1e-6);
}

TEST_CASE("negated Rosenbrock") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    if (g) {
      g->resize(2);
      (*g)(0) = 2.0 * a + 400.0 * x(0) * b;
      (*g)(1) = -200.0 * b;
    }
    return -(a * a + 100.0 * b * b);
  };
  const MaximizeResult r = fairmle::maximize(f, Eigen::Vector2d(-1.2, 1.0));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("points outside the domain are rejected") {
  // log x - x on x > 0, undefined elsewhere.
  int bad = 0;
  auto f = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (!(x(0) > 0.0)) {
      ++bad;
      return std::numeric_limits<double>::quiet_NaN();
    }
    if (g) *g = Eigen::VectorXd::Constant(1, 1.0 / x(0) - 1.0);
    return std::log(x(0)) - x(0);
  };
  const MaximizeResult r = fairmle::maximize(f, Eigen::VectorXd::Constant(1, 0.01));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.value == doctest::Approx(-1.0));
}

TEST_CASE("numeric gradient") {
  auto f = [](const Eigen::VectorXd& x, Eigen::VectorXd*) {
    return std::sin(x(0)) * std::exp(0.5 * x(1));
  };
  const Eigen::Vector2d x(0.3, -1.1);
  const Eigen::VectorXd g = fairmle::numeric_gradient(f, x);
  CHECK(g(0) == doctest::Approx(std::cos(0.3) * std::exp(-0.55)).epsilon(1e-8));
  CHECK(g(1) == doctest::Approx(0.5 * std::sin(0.3) * std::exp(-0.55)).epsilon(1e-8));
}

}  // TEST_SUITE
