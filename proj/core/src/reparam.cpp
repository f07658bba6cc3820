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

#include "fairmle/reparam.hpp"

#include <cmath>
#include <string>

#include "fairmle/error.hpp"

namespace fairmle {

DesignSpec ReparamOutcomeModel::f_design_from(const DesignSpec& y) {
  if (y.index_of(Term()) < 0 || y.index_of(Term(Term::kA)) < 0)
    throw InvalidArgument("outcome design must contain 1 and A, got " +
                          y.to_string());
  std::vector<Term> terms;
  for (Term t : y.terms())
    if (!t.is_pure_a()) terms.push_back(t);
  return DesignSpec(std::move(terms));
}

void ReparamOutcomeModel::validate() const {
  if (alpha_f.size() != f_design.size())
    throw InvalidArgument("alpha_f does not match f_design");
  if (x_weights.size() != static_cast<Eigen::Index>(xs.size()))
    throw InvalidArgument("x_weights do not match the X support");
  if (correction.cols() != f_design.size())
    throw InvalidArgument("correction table is stale");
  if (!(sigma_y > 0.0)) throw InvalidArgument("sigma_y must be positive");
}

void ReparamOutcomeModel::refresh_correction() {
  if (x_weights.size() != static_cast<Eigen::Index>(xs.size()))
    throw InvalidArgument("x_weights do not match the X support");
  correction.setZero(2, f_design.size());
  Eigen::VectorXd phi(f_design.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double w = x_weights[static_cast<Eigen::Index>(i)];
    for (int a = 0; a < 2; ++a) {
      const double arm_m = a == 1 && pi.via_m ? 1.0 : 0.0;
      const double arm_l = a == 1 && pi.via_l ? 1.0 : 0.0;
      for (const MediatorConfig& cfg : mediator_configs(nuisance, xs[i], arm_m, arm_l)) {
        f_design.features({xs[i], double(a), cfg.m, cfg.l}, phi);
        correction.row(a) += (w * cfg.prob) * phi.transpose();
      }
    }
  }
}

GlmParams ReparamOutcomeModel::induced() const {
  validate();
  GlmParams p = nuisance;
  p.designs.y = y_design;
  p.alpha_y.resize(y_design.size());
  const double c0 = correction.row(0).dot(alpha_f);
  const double c1 = correction.row(1).dot(alpha_f);
  for (Eigen::Index j = 0; j < y_design.size(); ++j) {
    const Term t = y_design.terms()[static_cast<std::size_t>(j)];
    if (t.is_intercept())
      p.alpha_y[j] = w0 - c0;
    else if (t == Term(Term::kA))
      p.alpha_y[j] = wa - (c1 - c0);
    else
      p.alpha_y[j] = alpha_f[f_design.index_of(t)];
  }
  p.sigma_y = sigma_y;
  return p;
}

double reparam_mean(const ReparamOutcomeModel& model, const Covariates& z) {
  model.validate();
  const int a = z.a == 1.0 ? 1 : 0;
  return model.f_design.dot(model.alpha_f, z) -
         model.correction.row(a).dot(model.alpha_f) + model.w0 + model.wa * z.a;
}

ReparamOutcomeModel make_reparam(const GlmParams& nuisance,
                                 const PseFunctional& pi,
                                 std::vector<double> xs,
                                 Eigen::VectorXd x_weights) {
  pi.validate();
  ReparamOutcomeModel model;
  model.pi = pi;
  model.nuisance = nuisance;
  model.y_design = nuisance.designs.y;
  model.f_design = ReparamOutcomeModel::f_design_from(model.y_design);
  model.alpha_f = Eigen::VectorXd::Zero(model.f_design.size());
  model.xs = std::move(xs);
  if (x_weights.size() == 0)
    x_weights = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(model.xs.size()),
                                          1.0 / static_cast<double>(model.xs.size()));
  model.x_weights = std::move(x_weights);
  model.refresh_correction();
  return model;
}

ReparamOutcomeModel fit_reparam_outcome(const Dataset& ds,
                                        const GlmParams& nuisance,
                                        const PseFunctional& pi,
                                        Eigen::VectorXd x_weights,
                                        std::optional<double> wa_fixed) {
  ReparamOutcomeModel model = make_reparam(nuisance, pi, ds.xs(), std::move(x_weights));
  const Eigen::Index pf = model.f_design.size();
  const Eigen::Index cols = pf + (wa_fixed ? 1 : 2);
  const auto n1 = static_cast<Eigen::Index>(ds.observed_count());
  if (n1 <= cols) throw SingularError("too few observed outcomes for the outcome model");
  Eigen::MatrixXd X(n1, cols);
  Eigen::VectorXd y(n1);
  Eigen::VectorXd phi(pf);
  Eigen::Index k = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.r(i)) continue;
    const Covariates z = ds.covariates(i);
    model.f_design.features(z, phi);
    X.row(k).head(pf) = phi.transpose() - model.correction.row(ds.a(i));
    X(k, pf) = 1.0;
    y[k] = *ds.y(i);
    if (wa_fixed)
      y[k] -= *wa_fixed * z.a;
    else
      X(k, pf + 1) = z.a;
    ++k;
  }
  const LinearFit fit = fit_linear(X, y);
  model.alpha_f = fit.coef.head(pf);
  model.w0 = fit.coef[pf];
  model.wa = wa_fixed ? *wa_fixed : fit.coef[pf + 1];
  model.sigma_y = fit.sigma;
  return model;
}

}  // namespace fairmle
