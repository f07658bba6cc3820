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

#ifndef FAIRMLE_CACHE_HPP_
#define FAIRMLE_CACHE_HPP_

#include <array>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/effects.hpp"
#include "fairmle/glm.hpp"

namespace fairmle {

// Design matrices of one dataset, observed and counterfactual, so that the
// likelihoods and effect functionals used inside optimisers reduce to
// matrix-vector products. Immutable after construction.
class DesignCache {
 public:
  DesignCache(const Dataset& ds, const ModelDesigns& designs,
              bool counterfactuals = true);

  const ModelDesigns& designs() const { return designs_; }
  Eigen::Index size() const { return n_; }
  Eigen::Index observed_count() const { return n1_; }

  // Sum of the selected factor log-likelihoods; the outcome factor has
  // sigma_y profiled out. Gradient blocks outside `blocks` are left alone.
  double profile_loglik(const GlmParams& p, unsigned blocks,
                        Coefs* grad = nullptr) const;
  // sigma_y implied by profiling at p.alpha_y.
  double profile_sigma(const GlmParams& p) const;

  // log p(A, M, [L], [Y] | X) per row with sigma_y as given; Y only where
  // observed.
  Eigen::VectorXd row_loglik(const GlmParams& p) const;

  // m(X_i) of the g-formula for every row.
  Eigen::VectorXd gformula_terms(const GlmParams& p,
                                 const PseFunctional& f) const;
  // grad += sum_i s_i d m(X_i) / d alpha.
  void add_gformula_gradient(const GlmParams& p, const PseFunctional& f,
                             const Eigen::VectorXd& s, Coefs& grad) const;

  // Unweighted estimate of f; if grad is non-null it is overwritten with the
  // gradient of the estimate.
  double effect(const GlmParams& p, const PseFunctional& f,
                Coefs* grad = nullptr) const;

  // sum_i w_i sum_med phi_Y(X_i, a, med) p(med | arms, X_i) where the arms
  // are the pi-arms for a = 1 and the reference arm for a = 0.
  Eigen::VectorXd mediator_average(const GlmParams& p, const PseFunctional& f,
                                   int a, const Eigen::VectorXd& w) const;

  const Eigen::MatrixXd& y_design_observed() const { return phi_y_obs_; }
  const Eigen::VectorXd& y_observed() const { return y_obs_; }
  const Eigen::VectorXd& a_column() const { return a_; }

 private:
  const Eigen::MatrixXd& y_at(int a, int m, int l) const {
    return phi_y_at_[static_cast<std::size_t>(a * 4 + m * 2 + l)];
  }
  const Eigen::MatrixXd& l_at(int a, int m) const {
    return phi_l_at_[static_cast<std::size_t>(a * 2 + m)];
  }
  void require_counterfactuals() const;
  void accumulate_arm(const GlmParams& p, int a, int arm_m, int arm_l,
                      double sign, const Eigen::VectorXd* s,
                      Eigen::VectorXd* terms, Coefs* grad) const;
  double ipw(const GlmParams& p, Coefs* grad) const;
  double mixed(const GlmParams& p, Coefs* grad) const;
  double aipw(const GlmParams& p, Coefs* grad) const;

  ModelDesigns designs_;
  bool has_l_ = false;
  bool counterfactuals_ = false;
  Eigen::Index n_ = 0, n1_ = 0;
  Eigen::VectorXd a_, m_, l_, r_, y_full_;
  Eigen::MatrixXd phi_a_, phi_m_obs_, phi_l_obs_, phi_y_obs_;
  Eigen::VectorXd y_obs_;
  Eigen::MatrixXd phi_y_full_;  // Y design at observed covariates, every row
  std::array<Eigen::MatrixXd, 2> phi_y_a_obs_;  // A set to 0/1, rest observed
  std::array<Eigen::MatrixXd, 2> phi_m_at_;
  std::array<Eigen::MatrixXd, 4> phi_l_at_;
  std::array<Eigen::MatrixXd, 8> phi_y_at_;
};

}  // namespace fairmle

#endif  // FAIRMLE_CACHE_HPP_
