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

#ifndef FAIRMLE_TRAIN_HPP_
#define FAIRMLE_TRAIN_HPP_

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/effects.hpp"
#include "fairmle/el.hpp"
#include "fairmle/glm.hpp"
#include "fairmle/optimize.hpp"
#include "fairmle/reparam.hpp"

namespace fairmle {

enum class Method {
  kUnconstrained,          // M0
  kConstrainedStandard,    // M1
  kReparam,                // M2
  kHybrid,                 // M3
  kHybridReparam,          // M4
};

std::string_view to_string(Method m);  // "m0" .. "m4"
Method parse_method(std::string_view text);
std::string_view describe(Method m);

struct TrainConfig {
  Method method = Method::kUnconstrained;
  Estimator estimator = Estimator::kGFormula;  // used by M0 and M1
  double epsilon_lo = -0.05;
  double epsilon_hi = 0.05;
  Graph graph = Graph::kOneMediator;
  std::optional<ModelDesigns> designs;  // correct(graph) when unset
  MaximizeOptions optimizer;
  double feasibility_tol = 1e-6;  // M1
  int max_penalty_rounds = 30;    // M1
  int max_outer_iters = 200;      // M4
  double outer_tol = 1e-6;        // M4

  ModelDesigns model_designs() const;
  // The constrained effect: the NDE on the one-mediator graph, the
  // A -> Y plus A -> M path effect on the two-mediator graph.
  PseFunctional functional() const;
  void validate() const;
};

struct Diagnostics {
  int iterations = 0;
  bool converged = true;
  double constraint_residual = 0.0;
  std::vector<double> trace;
};

struct FitResult {
  Method method = Method::kUnconstrained;
  Estimator estimator = Estimator::kGFormula;
  // The fitted density; for M2 and M4 the ordinary parameters induced by the
  // reparameterised outcome model.
  GlmParams params;
  std::optional<ReparamOutcomeModel> reparam;
  std::optional<ElState> el;
  double loglik = 0.0;      // parametric observed-data log-likelihood
  double el_logterm = 0.0;  // sum_i log p_i when EL weights are fitted
  double effect_at_fit = 0.0;
  // One entry per row; NaN on rows with an observed outcome.
  Eigen::VectorXd predictions;
  Diagnostics diagnostics;
};

FitResult fit_unconstrained(const Dataset& ds, const TrainConfig& cfg);
FitResult fit_constrained_standard(const Dataset& ds, const TrainConfig& cfg);
FitResult fit_reparam(const Dataset& ds, const TrainConfig& cfg);
FitResult fit_hybrid(const Dataset& ds, const TrainConfig& cfg);
FitResult fit_hybrid_reparam(const Dataset& ds, const TrainConfig& cfg);
// Dispatches on cfg.method.
FitResult fit(const Dataset& ds, const TrainConfig& cfg);

// Predictions for the R = 0 rows (NaN elsewhere) by the rule that belongs to
// the fitted method.
Eigen::VectorXd predict(const Dataset& ds, const FitResult& fit,
                        const TrainConfig& cfg);

}  // namespace fairmle

#endif  // FAIRMLE_TRAIN_HPP_
