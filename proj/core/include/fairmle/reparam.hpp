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

#ifndef FAIRMLE_REPARAM_HPP_
#define FAIRMLE_REPARAM_HPP_

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/effects.hpp"
#include "fairmle/glm.hpp"

namespace fairmle {

// Outcome regression written so that the path-specific effect pi is a single
// coefficient:
//   E[Y | Z] = alpha_f . (f(Z) - C(A)) + w0 + wa A,
// where f(Z) holds the outcome-design terms that vanish at X = M = L = 0 and
//   C(a) = sum_i p_i sum_med f(X_i, a, med) p(med | arms(a), X_i)
// with arms(1) the pi-arms and arms(0) the reference arm.
struct ReparamOutcomeModel {
  PseFunctional pi;
  DesignSpec y_design;  // the ordinary outcome design; contains 1 and A
  DesignSpec f_design;  // y_design without its pure-A terms
  Eigen::VectorXd alpha_f;
  double w0 = 0.0;
  double wa = 0.0;
  double sigma_y = 1.0;
  GlmParams nuisance;          // mediator models entering C; alpha_y unused
  std::vector<double> xs;      // support of the empirical X distribution
  Eigen::VectorXd x_weights;   // p_i over xs, summing to one
  // Row a holds C(a) over the f_design columns.
  Eigen::Matrix<double, 2, Eigen::Dynamic> correction;

  // Terms of `y` that are not 1 or A. Throws InvalidArgument unless `y`
  // contains both 1 and A.
  static DesignSpec f_design_from(const DesignSpec& y);

  // Recomputes `correction` from nuisance, xs and x_weights.
  void refresh_correction();

  // Ordinary GLM parameters with the same conditional mean.
  GlmParams induced() const;

  // Throws InvalidArgument on dimension mismatches.
  void validate() const;
};

// E[Y | Z] under the model.
double reparam_mean(const ReparamOutcomeModel& model, const Covariates& z);

// The pi-specific effect of the model, which is wa by construction.
inline double pse_of(const ReparamOutcomeModel& model) { return model.wa; }

// Builds a model with zero coefficients and its correction table.
ReparamOutcomeModel make_reparam(const GlmParams& nuisance,
                                 const PseFunctional& pi,
                                 std::vector<double> xs,
                                 Eigen::VectorXd x_weights);

// Gaussian MLE of (alpha_f, w0[, wa]) on the R = 1 rows with the correction
// held at the nuisance fit and `x_weights` (uniform when empty). wa is held at
// `wa_fixed` when given.
ReparamOutcomeModel fit_reparam_outcome(const Dataset& ds,
                                        const GlmParams& nuisance,
                                        const PseFunctional& pi,
                                        Eigen::VectorXd x_weights = {},
                                        std::optional<double> wa_fixed = 0.0);

}  // namespace fairmle

#endif  // FAIRMLE_REPARAM_HPP_
