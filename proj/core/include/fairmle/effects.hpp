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

#ifndef FAIRMLE_EFFECTS_HPP_
#define FAIRMLE_EFFECTS_HPP_

#include <array>
#include <string_view>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/glm.hpp"

namespace fairmle {

enum class Estimator { kGFormula, kIpw, kMixed, kAipw };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view text);  // gformula|ipw|mixed|aipw

// A path-specific effect of A on Y contrasting a = 1 against a' = 0. The
// direct edge A -> Y is always in pi; `via_m` / `via_l` say whether the edge
// from A into that mediator is in pi as well. Mediators whose A-edge is not
// in pi see a' in both terms of the contrast.
struct PseFunctional {
  Graph graph = Graph::kOneMediator;
  bool direct = true;
  bool via_m = false;
  bool via_l = false;
  Estimator estimator = Estimator::kGFormula;

  // NDE on the one-mediator graph.
  static PseFunctional nde(Estimator e = Estimator::kGFormula);
  // The constrained effect used for each graph: the NDE, or
  // pi = {A -> Y, A -> M -> ... -> Y} on the two-mediator graph.
  static PseFunctional unfair_default(Graph g);
  // pi = every proper path (total effect).
  static PseFunctional total(Graph g);

  bool is_nde() const {
    return graph == Graph::kOneMediator && direct && !via_m;
  }
  // Throws InvalidArgument unless pi contains A -> Y and the estimator is
  // defined for pi (only g-formula outside the NDE).
  void validate() const;
};

struct EffectEstimate {
  double value = 0.0;
  // Per-row contributions; value == sum_i w_i per_unit_m[i] with w_i = 1/n
  // or the supplied EL weights.
  Eigen::VectorXd per_unit_m;
  Estimator estimator = Estimator::kGFormula;
};

// One configuration of the binary mediators and its probability
// p(m | arm_m, x) [p(l | arm_l, m, x)].
struct MediatorConfig {
  double m = 0.0;
  double l = 0.0;
  double prob = 0.0;
};

struct MediatorConfigs {
  std::array<MediatorConfig, 4> items{};
  int count = 0;
  const MediatorConfig* begin() const { return items.data(); }
  const MediatorConfig* end() const { return items.data() + count; }
};

MediatorConfigs mediator_configs(const GlmParams& p, double x, double arm_m,
                                 double arm_l);

// Adds scale * d prob / d(alpha_m, alpha_l) of configuration `cfg` to grad.
void add_mediator_config_gradient(const GlmParams& p, double x, double arm_m,
                                  double arm_l, const MediatorConfig& cfg,
                                  double scale, Coefs& grad);

// Per-unit g-formula integrand m(x; alpha):
//   sum_med E[Y | 1, med, x] p(med | pi-arms, x) - E[Y | 0, med, x] p(med | 0, x).
// For the NDE this is sum_m {E[Y|1,m,x] - E[Y|0,m,x]} p(m | A=0, x).
double m_of_x(const GlmParams& p, double x, const PseFunctional& f);
// Same; adds d m / d alpha to `grad` (scaled by `scale`).
double m_of_x(const GlmParams& p, double x, const PseFunctional& f, Coefs& grad,
              double scale = 1.0);

// eta(a, a', x) = sum_m E[Y | a, m, x] p(m | a', x).
double eta(const GlmParams& p, double a, double a_prime, double x);

// Plug-in g-formula: weighted average of m_of_x over rows. Uses 1/n unless
// `weights` is non-null.
EffectEstimate pse_gformula(const Dataset& ds, const GlmParams& p,
                            const PseFunctional& f,
                            const Eigen::VectorXd* weights = nullptr);

EffectEstimate nde_gformula(const Dataset& ds, const GlmParams& p,
                            const Eigen::VectorXd* weights = nullptr);
// IPW: Y-bearing terms average over R = 1 rows only.
EffectEstimate nde_ipw(const Dataset& ds, const GlmParams& p);
// P_n[ I(A=0)/p(A=0|X) (E[Y|1,M,X] - E[Y|0,M,X]) ].
EffectEstimate nde_mixed(const Dataset& ds, const GlmParams& p);
// Augmented IPW using the A, M and Y models.
EffectEstimate nde_aipw(const Dataset& ds, const GlmParams& p);
// Edge g-formula for an ordered mediation graph (two-mediator default pi).
EffectEstimate pse_edge_gformula(const Dataset& ds, const GlmParams& p,
                                 const PseFunctional& f);

// Dispatches on f.estimator.
EffectEstimate estimate_effect(const Dataset& ds, const GlmParams& p,
                               const PseFunctional& f,
                               const Eigen::VectorXd* weights = nullptr);

// Unweighted estimate and its gradient w.r.t. every coefficient block.
double effect_with_gradient(const Dataset& ds, const GlmParams& p,
                            const PseFunctional& f, Coefs& grad);

// Blocks an estimator depends on.
unsigned estimator_blocks(const PseFunctional& f);

inline constexpr double kPositivityFloor = 1e-6;

}  // namespace fairmle

#endif  // FAIRMLE_EFFECTS_HPP_
