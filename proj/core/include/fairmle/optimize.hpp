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

#ifndef FAIRMLE_OPTIMIZE_HPP_
#define FAIRMLE_OPTIMIZE_HPP_

#include <functional>

#include <Eigen/Core>

namespace fairmle {

// Objective value at x; fills the gradient when `grad` is non-null. A
// non-finite value marks x as outside the domain.
using Objective = std::function<double(const Eigen::VectorXd& x,
                                       Eigen::VectorXd* grad)>;

struct MaximizeOptions {
  double grad_tol = 1e-6;  // on the infinity norm of the gradient
  int max_iter = 500;
  int newton_iter = 20;    // Newton refinement steps after quasi-Newton
  double fd_step = 1e-5;   // relative step of the finite-difference Hessian
};

struct MaximizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Local maximum of a smooth objective starting from a point inside its
// domain: BFGS with backtracking line search, then Newton steps on a
// finite-difference Hessian of the analytic gradient.
MaximizeResult maximize(const Objective& f, const Eigen::VectorXd& x0,
                        const MaximizeOptions& opts = {});

// Central finite-difference gradient, for checks.
Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x,
                                 double h = 1e-6);

}  // namespace fairmle

#endif  // FAIRMLE_OPTIMIZE_HPP_
