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

#ifndef FAIRMLE_GLM_HPP_
#define FAIRMLE_GLM_HPP_

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/design.hpp"
#include "fairmle/el.hpp"

namespace fairmle {

inline double expit(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t))
                  : std::exp(t) / (1.0 + std::exp(t));
}

// Parameters of the factorisation p(A|X) p(M|A,X) [p(L|A,M,X)] p(Y|...).
// The binary factors are logistic, the outcome is Gaussian with a common
// standard deviation.
struct GlmParams {
  ModelDesigns designs;
  Eigen::VectorXd alpha_a, alpha_m, alpha_l, alpha_y;
  double sigma_y = 1.0;

  static GlmParams from_truth(const DgpCoefficients& c);

  // Throws InvalidArgument when a coefficient vector does not match its
  // design or sigma_y <= 0.
  void validate() const;

  double p_a1(const Covariates& c) const {
    return expit(designs.a.dot(alpha_a, c));
  }
  double p_m1(const Covariates& c) const {
    return expit(designs.m.dot(alpha_m, c));
  }
  double p_l1(const Covariates& c) const {
    return expit(designs.l.dot(alpha_l, c));
  }
  double mean_y(const Covariates& c) const { return designs.y.dot(alpha_y, c); }
};

// Parameter blocks, used to select which factors an optimiser may move.
enum Block : unsigned { kBlockA = 1, kBlockM = 2, kBlockL = 4, kBlockY = 8 };

// Gradient (or any other quantity) shaped like the coefficient vectors.
struct Coefs {
  Eigen::VectorXd a, m, l, y;

  static Coefs zeros_like(const GlmParams& p);
  Coefs& operator+=(const Coefs& o);
  Coefs& operator*=(double s);
};

Eigen::VectorXd pack(const GlmParams& p, unsigned blocks);
Eigen::VectorXd pack(const Coefs& c, unsigned blocks);
void unpack(const Eigen::VectorXd& v, unsigned blocks, GlmParams& p);

struct NewtonOptions {
  double grad_tol = 1e-8;
  int max_iter = 100;
  // |coefficient| beyond this while the log-likelihood keeps rising is
  // treated as divergence to infinity.
  double divergence_bound = 30.0;
};

struct LogisticFit {
  Eigen::VectorXd coef;
  double loglik = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
};

// Logistic-regression MLE by Newton's method with step halving.
// Throws SeparationError when the MLE does not exist, SingularError when the
// information matrix is singular.
LogisticFit fit_logistic(const DesignSpec& design,
                         const std::vector<Covariates>& rows,
                         const std::vector<double>& response,
                         const NewtonOptions& opts = {});

struct LinearFit {
  Eigen::VectorXd coef;
  double sigma = 0.0;  // MLE: sqrt(RSS / n)
};

// Least squares (Gaussian MLE). Throws SingularError on rank deficiency.
LinearFit fit_linear(const DesignSpec& design,
                     const std::vector<Covariates>& rows,
                     const std::vector<double>& response);
// Same, on an explicit design matrix.
LinearFit fit_linear(const Eigen::MatrixXd& design_matrix,
                     const Eigen::VectorXd& response);

// Factor-wise MLE of every model on `ds`; the outcome model uses the R = 1
// rows only.
GlmParams fit_mle(const Dataset& ds, const ModelDesigns& designs);

// Per-factor log-likelihood contributions summed over rows.
struct LoglikParts {
  double a = 0.0, m = 0.0, l = 0.0, y = 0.0;
  double total() const { return a + m + l + y; }
};
LoglikParts loglik_parts(const Dataset& ds, const GlmParams& params);

// sum_i [log p(A_i|X_i) + log p(M_i|A_i,X_i) + log p(L_i|...) +
//        R_i log p(Y_i|...)], plus sum_i log p_i when EL weights are given.
double observed_data_loglik(const Dataset& ds, const GlmParams& params,
                            const std::optional<ElState>& x_weights = {});

// Same with sigma_y held fixed; fills the gradient w.r.t. every coefficient
// block (and d/d sigma_y when `dsigma` is non-null).
double observed_data_loglik(const Dataset& ds, const GlmParams& params,
                            Coefs* grad, double* dsigma = nullptr);

// Outcome log-likelihood with sigma profiled out:
//   -(n1/2) (log(2 pi RSS / n1) + 1).
// Fills d/d alpha_y when `grad` is non-null. Also returns the implied sigma.
double profile_outcome_loglik(const Dataset& ds, const DesignSpec& design,
                              const Eigen::VectorXd& alpha_y,
                              Eigen::VectorXd* grad = nullptr,
                              double* sigma = nullptr);

// Log-likelihood of the binary factors only (A, M, L) with gradient.
double binary_factors_loglik(const Dataset& ds, const GlmParams& params,
                             unsigned blocks, Coefs* grad = nullptr);

}  // namespace fairmle

#endif  // FAIRMLE_GLM_HPP_
