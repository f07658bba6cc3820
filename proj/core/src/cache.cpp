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

#include "fairmle/cache.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "fairmle/error.hpp"

namespace fairmle {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// 1 / (1 + e^-t), vectorised; saturates cleanly at 0 and 1.
VectorXd expit_of(const VectorXd& eta) {
  return (1.0 + (-eta.array()).exp()).inverse().matrix();
}

// Bernoulli log-likelihood per row: y eta - log(1 + e^eta).
VectorXd bernoulli_rows(const VectorXd& y, const VectorXd& eta) {
  const Eigen::ArrayXd e = eta.array();
  return (y.array() * e - e.max(0.0) - (-e.abs()).exp().log1p()).matrix();
}

double logistic(const MatrixXd& X, const VectorXd& y, const VectorXd& beta,
                VectorXd* grad) {
  const VectorXd eta = X * beta;
  if (grad) *grad = X.transpose() * (y - expit_of(eta));
  return bernoulli_rows(y, eta).sum();
}

MatrixXd build(const DesignSpec& d, Eigen::Index n,
               const std::function<Covariates(Eigen::Index)>& row) {
  MatrixXd out(n, d.size());
  VectorXd phi(d.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    d.features(row(i), phi);
    out.row(i) = phi.transpose();
  }
  return out;
}

// p(m | q) elementwise for the observed binary column m.
VectorXd prob_of(const VectorXd& m, const VectorXd& q) {
  return (m.array() * q.array() + (1.0 - m.array()) * (1.0 - q.array())).matrix();
}

void check_positive(const VectorXd& p, const char* what) {
  const double lo = p.minCoeff(), hi = p.maxCoeff();
  if (!(lo >= kPositivityFloor && hi <= 1.0 - kPositivityFloor))
    throw PositivityError(std::string("positivity violated: ") + what +
                          " reaches " +
                          std::to_string(lo < kPositivityFloor ? lo : hi));
}

}  // namespace

DesignCache::DesignCache(const Dataset& ds, const ModelDesigns& designs,
                         bool counterfactuals)
    : designs_(designs),
      has_l_(designs.graph == Graph::kTwoMediator),
      counterfactuals_(counterfactuals) {
  designs_.validate();
  if (ds.graph() != designs.graph)
    throw InvalidArgument("designs and dataset use different graphs");
  n_ = static_cast<Eigen::Index>(ds.size());
  n1_ = static_cast<Eigen::Index>(ds.observed_count());
  a_.resize(n_);
  m_.resize(n_);
  l_.resize(n_);
  r_.resize(n_);
  y_full_.resize(n_);
  y_obs_.resize(n1_);
  std::vector<Covariates> rows(ds.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    const auto u = static_cast<std::size_t>(i);
    rows[u] = ds.covariates(u);
    a_[i] = ds.a(u);
    m_[i] = ds.m(u);
    l_[i] = ds.l(u);
    r_[i] = ds.r(u) ? 1.0 : 0.0;
    y_full_[i] = ds.r(u) ? *ds.y(u) : 0.0;
    if (ds.r(u)) y_obs_[k++] = *ds.y(u);
  }
  auto obs = [&](Eigen::Index i) { return rows[static_cast<std::size_t>(i)]; };
  phi_a_ = build(designs_.a, n_, obs);
  phi_m_obs_ = build(designs_.m, n_, obs);
  if (has_l_) phi_l_obs_ = build(designs_.l, n_, obs);
  phi_y_full_ = build(designs_.y, n_, obs);
  phi_y_obs_.resize(n1_, designs_.y.size());
  k = 0;
  for (Eigen::Index i = 0; i < n_; ++i)
    if (r_[i] == 1.0) phi_y_obs_.row(k++) = phi_y_full_.row(i);

  if (!counterfactuals_) return;
  for (int a = 0; a < 2; ++a) {
    phi_m_at_[static_cast<std::size_t>(a)] = build(designs_.m, n_, [&](Eigen::Index i) {
      Covariates c = obs(i);
      c.a = a;
      return c;
    });
    phi_y_a_obs_[static_cast<std::size_t>(a)] = build(designs_.y, n_, [&](Eigen::Index i) {
      Covariates c = obs(i);
      c.a = a;
      return c;
    });
    for (int m = 0; m < 2; ++m) {
      if (has_l_)
        phi_l_at_[static_cast<std::size_t>(a * 2 + m)] =
            build(designs_.l, n_, [&](Eigen::Index i) {
              return Covariates{obs(i).x, double(a), double(m), 0.0};
            });
      for (int l = 0; l < (has_l_ ? 2 : 1); ++l)
        phi_y_at_[static_cast<std::size_t>(a * 4 + m * 2 + l)] =
            build(designs_.y, n_, [&](Eigen::Index i) {
              return Covariates{obs(i).x, double(a), double(m), double(l)};
            });
    }
  }
}

void DesignCache::require_counterfactuals() const {
  if (!counterfactuals_)
    throw InvalidArgument("cache was built without counterfactual designs");
}

double DesignCache::profile_loglik(const GlmParams& p, unsigned blocks,
                                   Coefs* grad) const {
  double ll = 0.0;
  if (blocks & kBlockA) ll += logistic(phi_a_, a_, p.alpha_a, grad ? &grad->a : nullptr);
  if (blocks & kBlockM) ll += logistic(phi_m_obs_, m_, p.alpha_m, grad ? &grad->m : nullptr);
  if ((blocks & kBlockL) && has_l_)
    ll += logistic(phi_l_obs_, l_, p.alpha_l, grad ? &grad->l : nullptr);
  if (blocks & kBlockY) {
    const VectorXd resid = y_obs_ - phi_y_obs_ * p.alpha_y;
    const double rss = resid.squaredNorm();
    const double n1 = static_cast<double>(n1_);
    if (!(rss > 0.0)) throw SingularError("outcome model fits exactly");
    ll += -0.5 * n1 * (std::log(2.0 * std::numbers::pi * rss / n1) + 1.0);
    if (grad) grad->y = phi_y_obs_.transpose() * resid * (n1 / rss);
  }
  return ll;
}

double DesignCache::profile_sigma(const GlmParams& p) const {
  return std::sqrt((y_obs_ - phi_y_obs_ * p.alpha_y).squaredNorm() /
                   static_cast<double>(n1_));
}

VectorXd DesignCache::row_loglik(const GlmParams& p) const {
  VectorXd out = bernoulli_rows(a_, phi_a_ * p.alpha_a) +
                 bernoulli_rows(m_, phi_m_obs_ * p.alpha_m);
  if (has_l_) out += bernoulli_rows(l_, phi_l_obs_ * p.alpha_l);
  const double s = p.sigma_y;
  const double c = -0.5 * std::log(2.0 * std::numbers::pi * s * s);
  const VectorXd z = (y_full_ - phi_y_full_ * p.alpha_y) / s;
  out.array() += r_.array() * (c - 0.5 * z.array().square());
  return out;
}

void DesignCache::accumulate_arm(const GlmParams& p, int a, int arm_m,
                                 int arm_l, double sign, const VectorXd* s,
                                 VectorXd* terms, Coefs* grad) const {
  const MatrixXd& pm_design = phi_m_at_[static_cast<std::size_t>(arm_m)];
  const VectorXd qm = expit_of(pm_design * p.alpha_m);
  for (int m = 0; m < 2; ++m) {
    const VectorXd pm = m ? qm : (1.0 - qm.array()).matrix();
    VectorXd ql;
    if (has_l_) ql = expit_of(l_at(arm_l, m) * p.alpha_l);
    for (int l = 0; l < (has_l_ ? 2 : 1); ++l) {
      VectorXd prob = pm;
      if (has_l_) prob.array() *= l ? ql.array() : (1.0 - ql.array()).eval();
      const MatrixXd& Y = y_at(a, m, l);
      const VectorXd mu = Y * p.alpha_y;
      if (terms) terms->array() += sign * mu.array() * prob.array();
      if (grad) {
        const VectorXd w = sign * (s->array() * prob.array()).matrix();
        grad->y += Y.transpose() * w;
        const VectorXd wm = (w.array() * mu.array()).matrix();
        grad->m += pm_design.transpose() * (wm.array() * (m - qm.array())).matrix();
        if (has_l_)
          grad->l += l_at(arm_l, m).transpose() *
                     (wm.array() * (l - ql.array())).matrix();
      }
    }
  }
}

VectorXd DesignCache::gformula_terms(const GlmParams& p,
                                     const PseFunctional& f) const {
  require_counterfactuals();
  VectorXd active = VectorXd::Zero(n_), reference = VectorXd::Zero(n_);
  accumulate_arm(p, 1, f.via_m, f.via_l, 1.0, nullptr, &active, nullptr);
  accumulate_arm(p, 0, 0, 0, 1.0, nullptr, &reference, nullptr);
  return active - reference;
}

void DesignCache::add_gformula_gradient(const GlmParams& p,
                                        const PseFunctional& f,
                                        const VectorXd& s, Coefs& grad) const {
  require_counterfactuals();
  accumulate_arm(p, 1, f.via_m, f.via_l, 1.0, &s, nullptr, &grad);
  accumulate_arm(p, 0, 0, 0, -1.0, &s, nullptr, &grad);
}

VectorXd DesignCache::mediator_average(const GlmParams& p,
                                       const PseFunctional& f, int a,
                                       const VectorXd& w) const {
  require_counterfactuals();
  const int arm_m = a == 1 && f.via_m;
  const int arm_l = a == 1 && f.via_l;
  const VectorXd qm = expit_of(phi_m_at_[static_cast<std::size_t>(arm_m)] * p.alpha_m);
  VectorXd out = VectorXd::Zero(designs_.y.size());
  for (int m = 0; m < 2; ++m) {
    const VectorXd pm = m ? qm : (1.0 - qm.array()).matrix();
    VectorXd ql;
    if (has_l_) ql = expit_of(l_at(arm_l, m) * p.alpha_l);
    for (int l = 0; l < (has_l_ ? 2 : 1); ++l) {
      VectorXd wp = (w.array() * pm.array()).matrix();
      if (has_l_) wp.array() *= l ? ql.array() : (1.0 - ql.array()).eval();
      out += y_at(a, m, l).transpose() * wp;
    }
  }
  return out;
}

double DesignCache::effect(const GlmParams& p, const PseFunctional& f,
                           Coefs* grad) const {
  f.validate();
  require_counterfactuals();
  if (grad) *grad = Coefs::zeros_like(p);
  if (f.estimator == Estimator::kGFormula) {
    if (grad)
      add_gformula_gradient(p, f, VectorXd::Constant(n_, 1.0 / double(n_)), *grad);
    return gformula_terms(p, f).mean();
  }
  if (has_l_) throw InvalidArgument("NDE estimators need the one-mediator graph");
  if (n1_ == 0) throw InvalidArgument("estimator needs observed outcomes");
  switch (f.estimator) {
    case Estimator::kIpw: return ipw(p, grad);
    case Estimator::kMixed: return mixed(p, grad);
    default: return aipw(p, grad);
  }
}

double DesignCache::ipw(const GlmParams& p, Coefs* grad) const {
  const double n = static_cast<double>(n_);
  const double obs_scale = n / static_cast<double>(n1_);
  const VectorXd pi = expit_of(phi_a_ * p.alpha_a);
  check_positive(pi, "p(A=1|X)");
  const VectorXd q0 = expit_of(phi_m_at_[0] * p.alpha_m);
  const VectorXd q1 = expit_of(phi_m_at_[1] * p.alpha_m);
  check_positive(q1, "p(M=1|A=1,X)");
  const VectorXd pm0 = prob_of(m_, q0), pm1 = prob_of(m_, q1);
  const auto ar = (a_.array() * r_.array());
  const auto a0r = ((1.0 - a_.array()) * r_.array());
  const VectorXd t1 = (ar * pm0.array() / pm1.array() * y_full_.array() / pi.array()).matrix();
  const VectorXd t0 = (-a0r * y_full_.array() / (1.0 - pi.array())).matrix();
  if (grad) {
    const double s = obs_scale / n;
    grad->a = phi_a_.transpose() *
              (s * (-t1.array() * (1.0 - pi.array()) + t0.array() * pi.array())).matrix();
    grad->m = phi_m_at_[0].transpose() * (s * t1.array() * (m_.array() - q0.array())).matrix() -
              phi_m_at_[1].transpose() * (s * t1.array() * (m_.array() - q1.array())).matrix();
  }
  return obs_scale * (t1.sum() + t0.sum()) / n;
}

double DesignCache::mixed(const GlmParams& p, Coefs* grad) const {
  const double n = static_cast<double>(n_);
  const VectorXd pi = expit_of(phi_a_ * p.alpha_a);
  check_positive(pi, "p(A=1|X)");
  const VectorXd w = ((1.0 - a_.array()) / (1.0 - pi.array())).matrix();
  const VectorXd delta = (phi_y_a_obs_[1] - phi_y_a_obs_[0]) * p.alpha_y;
  const VectorXd term = (w.array() * delta.array()).matrix();
  if (grad) {
    grad->y = (phi_y_a_obs_[1] - phi_y_a_obs_[0]).transpose() * (w / n);
    grad->a = phi_a_.transpose() * (term.array() * pi.array() / n).matrix();
  }
  return term.sum() / n;
}

double DesignCache::aipw(const GlmParams& p, Coefs* grad) const {
  const double n = static_cast<double>(n_);
  const double obs_scale = n / static_cast<double>(n1_);
  const VectorXd pi = expit_of(phi_a_ * p.alpha_a);
  check_positive(pi, "p(A=1|X)");
  const VectorXd q0 = expit_of(phi_m_at_[0] * p.alpha_m);
  const VectorXd q1 = expit_of(phi_m_at_[1] * p.alpha_m);
  check_positive(q1, "p(M=1|A=1,X)");
  const std::array<const VectorXd*, 2> q{&q0, &q1};
  std::array<VectorXd, 4> mu;  // mu[a * 2 + m]
  for (int a = 0; a < 2; ++a)
    for (int m = 0; m < 2; ++m) mu[a * 2 + m] = y_at(a, m, 0) * p.alpha_y;
  auto eta = [&](int a, int ap) -> VectorXd {
    return (mu[a * 2 + 1].array() * q[ap]->array() +
            mu[a * 2].array() * (1.0 - q[ap]->array())).matrix();
  };
  auto add_eta_grad = [&](int a, int ap, const VectorXd& c) {
    const VectorXd& qa = *q[ap];
    grad->y += y_at(a, 1, 0).transpose() * (c.array() * qa.array()).matrix() +
               y_at(a, 0, 0).transpose() * (c.array() * (1.0 - qa.array())).matrix();
    grad->m += phi_m_at_[ap].transpose() *
               (c.array() * (mu[a * 2 + 1] - mu[a * 2]).array() * qa.array() *
                (1.0 - qa.array())).matrix();
  };

  const VectorXd mu1m = phi_y_a_obs_[1] * p.alpha_y;
  const VectorXd eta10 = eta(1, 0), eta00 = eta(0, 0);
  const VectorXd w0 = ((1.0 - a_.array()) / (1.0 - pi.array())).matrix();
  const VectorXd pm0 = prob_of(m_, q0), pm1 = prob_of(m_, q1);
  const VectorXd w1 =
      (a_.array() * r_.array() * pm0.array() / pm1.array() / pi.array()).matrix();
  const VectorXd t2 = (w0.array() * (mu1m - eta10).array() + eta10.array()).matrix();
  const VectorXd t1 = (w1.array() * (y_full_ - mu1m).array()).matrix();
  const VectorXd t3 =
      (r_.array() * (-w0.array() * (y_full_ - eta00).array() - eta00.array())).matrix();

  if (grad) {
    const double s = 1.0 / n, s1 = obs_scale / n;
    grad->a = phi_a_.transpose() *
              (s * w0.array() * pi.array() * (mu1m - eta10).array() -
               s1 * t1.array() * (1.0 - pi.array()) -
               s1 * r_.array() * w0.array() * pi.array() * (y_full_ - eta00).array())
                  .matrix();
    grad->y = phi_y_a_obs_[1].transpose() * (s * w0.array() - s1 * w1.array()).matrix();
    grad->m = phi_m_at_[0].transpose() * (s1 * t1.array() * (m_.array() - q0.array())).matrix() -
              phi_m_at_[1].transpose() * (s1 * t1.array() * (m_.array() - q1.array())).matrix();
    add_eta_grad(1, 0, (s * (1.0 - w0.array())).matrix());
    add_eta_grad(0, 0, (s1 * r_.array() * (w0.array() - 1.0)).matrix());
  }
  return (t2.sum() + obs_scale * (t1.sum() + t3.sum())) / n;
}

}  // namespace fairmle
