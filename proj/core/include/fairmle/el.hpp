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

#ifndef FAIRMLE_EL_HPP_
#define FAIRMLE_EL_HPP_

#include <Eigen/Core>

namespace fairmle {

// Empirical-likelihood weights for a single moment constraint
//   max sum_i log p_i  s.t.  sum_i p_i = 1,  sum_i p_i m_i = 0.
// The normalisation multiplier is eliminated analytically, leaving
//   p_i = 1 / (n (1 + lambda m_i)),  sum_i m_i / (1 + lambda m_i) = 0.
struct ElState {
  double lambda = 0.0;
  Eigen::VectorXd weights;  // p_i > 0, sum to one
};

// Root of sum_i m_i / (1 + lambda m_i) on the interval where every
// 1 + lambda m_i > 0. Returns 0 without iterating when sum_i m_i == 0
// (including m == 0). Throws InfeasibleError when m does not take both signs.
double solve_lambda(const Eigen::VectorXd& m);

// Residual sum_i m_i / (1 + lambda m_i); strictly decreasing in lambda.
double lambda_residual(const Eigen::VectorXd& m, double lambda);

// p_i = (1/n) / (1 + lambda m_i). Throws InvalidArgument on a nonpositive
// denominator.
Eigen::VectorXd weights_from_lambda(const Eigen::VectorXd& m, double lambda);

// Solves for lambda and returns the weights with it.
ElState el_weights(const Eigen::VectorXd& m);

// Dual form of the profile log EL: -sum_i log(1 + lambda* m_i) - n log n,
// equal to sum_i log p_i at the optimum.
double profile_el_logterm(const Eigen::VectorXd& m);

}  // namespace fairmle

#endif  // FAIRMLE_EL_HPP_
