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

#include "fairmle/effects.hpp"

#include <string>

#include "fairmle/error.hpp"

namespace fairmle {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kGFormula: return "gformula";
    case Estimator::kIpw: return "ipw";
    case Estimator::kMixed: return "mixed";
    case Estimator::kAipw: return "aipw";
  }
  return "?";
}

Estimator parse_estimator(std::string_view text) {
  if (text == "gformula" || text == "g-formula") return Estimator::kGFormula;
  if (text == "ipw") return Estimator::kIpw;
  if (text == "mixed") return Estimator::kMixed;
  if (text == "aipw") return Estimator::kAipw;
  throw InvalidArgument("unknown estimator '" + std::string(text) + "'");
}

PseFunctional PseFunctional::nde(Estimator e) {
  PseFunctional f;
  f.estimator = e;
  return f;
}

PseFunctional PseFunctional::unfair_default(Graph g) {
  PseFunctional f;
  f.graph = g;
  f.via_m = g == Graph::kTwoMediator;
  return f;
}

PseFunctional PseFunctional::total(Graph g) {
  PseFunctional f;
  f.graph = g;
  f.via_m = true;
  f.via_l = g == Graph::kTwoMediator;
  return f;
}

void PseFunctional::validate() const {
  if (!direct)
    throw InvalidArgument("pi must contain the direct edge A -> Y");
  if (graph == Graph::kOneMediator && via_l)
    throw InvalidArgument("one-mediator graph has no L");
  if (estimator != Estimator::kGFormula && !is_nde())
    throw InvalidArgument("IPW, mixed and AIPW estimators are only defined "
                          "for the natural direct effect");
}

namespace {

Covariates at(double x, double a, double m, double l) { return {x, a, m, l}; }

void check_positive(double p, const char* what) {
  if (!(p >= kPositivityFloor && p <= 1.0 - kPositivityFloor))
    throw PositivityError(std::string("positivity violated: ") + what + " = " +
                          std::to_string(p));
}

// p(M = m | a, x) for binary m.
double p_m(const GlmParams& p, double m, double a, double x) {
  const double q = p.p_m1(at(x, a, 0, 0));
  return m == 1.0 ? q : 1.0 - q;
}

// d log p(M = m | a, x) / d alpha_m = (m - q) phi_M(a, x).
void add_dlog_p_m(const GlmParams& p, double m, double a, double x, double scale,
                  Eigen::VectorXd& g) {
  const Covariates c = at(x, a, 0, 0);
  const double q = p.p_m1(c);
  g += (scale * (m - q)) * p.designs.m.features(c);
}

double observed_fraction_scale(const Dataset& ds) {
  if (ds.observed_count() == 0)
    throw InvalidArgument("estimator needs observed outcomes");
  return static_cast<double>(ds.size()) / static_cast<double>(ds.observed_count());
}

EffectEstimate finish(Eigen::VectorXd per_unit, Estimator e,
                      const Eigen::VectorXd* weights) {
  EffectEstimate est;
  est.estimator = e;
  if (weights) {
    if (weights->size() != per_unit.size())
      throw InvalidArgument("weights do not match the dataset");
    est.value = weights->dot(per_unit);
  } else {
    est.value = per_unit.mean();
  }
  est.per_unit_m = std::move(per_unit);
  return est;
}

}  // namespace

MediatorConfigs mediator_configs(const GlmParams& p, double x, double arm_m,
                                 double arm_l) {
  MediatorConfigs out;
  const double qm = p.p_m1(at(x, arm_m, 0, 0));
  if (p.designs.graph == Graph::kOneMediator) {
    out.items[0] = {0.0, 0.0, 1.0 - qm};
    out.items[1] = {1.0, 0.0, qm};
    out.count = 2;
    return out;
  }
  for (int m = 0; m < 2; ++m) {
    const double pm = m ? qm : 1.0 - qm;
    const double ql = p.p_l1(at(x, arm_l, m, 0));
    out.items[out.count++] = {double(m), 0.0, pm * (1.0 - ql)};
    out.items[out.count++] = {double(m), 1.0, pm * ql};
  }
  return out;
}

void add_mediator_config_gradient(const GlmParams& p, double x, double arm_m,
                                  double arm_l, const MediatorConfig& cfg,
                                  double scale, Coefs& grad) {
  const double s = scale * cfg.prob;
  if (s == 0.0) return;
  add_dlog_p_m(p, cfg.m, arm_m, x, s, grad.m);
  if (p.designs.graph == Graph::kTwoMediator) {
    const Covariates c = at(x, arm_l, cfg.m, 0);
    const double ql = p.p_l1(c);
    grad.l += (s * (cfg.l - ql)) * p.designs.l.features(c);
  }
}

namespace {

template <bool kWithGrad>
double m_of_x_impl(const GlmParams& p, double x, const PseFunctional& f,
                   Coefs* grad, double scale) {
  const double arm_m = f.via_m ? 1.0 : 0.0;
  const double arm_l = f.via_l ? 1.0 : 0.0;
  double value = 0.0, base = 0.0;
  const MediatorConfigs active = mediator_configs(p, x, arm_m, arm_l);
  for (const MediatorConfig& cfg : active) {
    const Covariates c = at(x, 1.0, cfg.m, cfg.l);
    const double mu = p.mean_y(c);
    value += mu * cfg.prob;
    if constexpr (kWithGrad) {
      grad->y += (scale * cfg.prob) * p.designs.y.features(c);
      add_mediator_config_gradient(p, x, arm_m, arm_l, cfg, scale * mu, *grad);
    }
  }
  const MediatorConfigs reference = mediator_configs(p, x, 0.0, 0.0);
  for (const MediatorConfig& cfg : reference) {
    const Covariates c = at(x, 0.0, cfg.m, cfg.l);
    const double mu = p.mean_y(c);
    base += mu * cfg.prob;
    if constexpr (kWithGrad) {
      grad->y -= (scale * cfg.prob) * p.designs.y.features(c);
      add_mediator_config_gradient(p, x, 0.0, 0.0, cfg, -scale * mu, *grad);
    }
  }
  return value - base;
}

}  // namespace

double m_of_x(const GlmParams& p, double x, const PseFunctional& f) {
  return m_of_x_impl<false>(p, x, f, nullptr, 1.0);
}

double m_of_x(const GlmParams& p, double x, const PseFunctional& f, Coefs& grad,
              double scale) {
  return m_of_x_impl<true>(p, x, f, &grad, scale);
}

double eta(const GlmParams& p, double a, double a_prime, double x) {
  double s = 0.0;
  for (double m : {0.0, 1.0})
    s += p.mean_y(at(x, a, m, 0)) * p_m(p, m, a_prime, x);
  return s;
}

namespace {

// d eta(a, a', x) added to grad with factor `scale`.
void add_eta_gradient(const GlmParams& p, double a, double a_prime, double x,
                      double scale, Coefs& grad) {
  for (double m : {0.0, 1.0})
    grad.y += (scale * p_m(p, m, a_prime, x)) *
              p.designs.y.features(at(x, a, m, 0));
  const Covariates c = at(x, a_prime, 0, 0);
  const double q = p.p_m1(c);
  const double dmu = p.mean_y(at(x, a, 1, 0)) - p.mean_y(at(x, a, 0, 0));
  grad.m += (scale * dmu * q * (1.0 - q)) * p.designs.m.features(c);
}

}  // namespace

EffectEstimate pse_gformula(const Dataset& ds, const GlmParams& p,
                            const PseFunctional& f,
                            const Eigen::VectorXd* weights) {
  f.validate();
  Eigen::VectorXd per(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i)
    per[static_cast<Eigen::Index>(i)] = m_of_x(p, ds.x(i), f);
  return finish(std::move(per), Estimator::kGFormula, weights);
}

EffectEstimate nde_gformula(const Dataset& ds, const GlmParams& p,
                            const Eigen::VectorXd* weights) {
  if (ds.graph() != Graph::kOneMediator)
    throw InvalidArgument("NDE estimators need the one-mediator graph");
  return pse_gformula(ds, p, PseFunctional::nde(), weights);
}

EffectEstimate pse_edge_gformula(const Dataset& ds, const GlmParams& p,
                                 const PseFunctional& f) {
  return pse_gformula(ds, p, f);
}

namespace {

// Shared implementation of the weighting estimators. When `grad` is non-null
// it receives the gradient of the (1/n-averaged) value.
double ipw_impl(const Dataset& ds, const GlmParams& p, Eigen::VectorXd* per,
                Coefs* grad) {
  const double obs_scale = observed_fraction_scale(ds);
  const double n = static_cast<double>(ds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double term = 0.0;
    if (ds.r(i)) {
      const double x = ds.x(i);
      const double y = *ds.y(i);
      const Covariates cx = at(x, 0, 0, 0);
      const double pi = p.p_a1(cx);
      check_positive(pi, "p(A=1|X)");
      const double s = obs_scale / n;
      if (ds.a(i) == 1) {
        const double m = ds.m(i);
        const double p1 = p_m(p, m, 1.0, x);
        check_positive(p.p_m1(at(x, 1, 0, 0)), "p(M=1|A=1,X)");
        const double ratio = p_m(p, m, 0.0, x) / p1;
        term = ratio * y / pi;
        if (grad) {
          grad->a += (-s * term * (1.0 - pi)) * p.designs.a.features(cx);
          add_dlog_p_m(p, m, 0.0, x, s * term, grad->m);
          add_dlog_p_m(p, m, 1.0, x, -s * term, grad->m);
        }
      } else {
        term = -y / (1.0 - pi);
        if (grad) grad->a += (s * term * pi) * p.designs.a.features(cx);
      }
      term *= obs_scale;
    }
    if (per) (*per)[static_cast<Eigen::Index>(i)] = term;
    total += term;
  }
  return total / n;
}

double mixed_impl(const Dataset& ds, const GlmParams& p, Eigen::VectorXd* per,
                  Coefs* grad) {
  const double n = static_cast<double>(ds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double term = 0.0;
    const Covariates cx = at(ds.x(i), 0, 0, 0);
    const double pi = p.p_a1(cx);
    check_positive(pi, "p(A=1|X)");
    if (ds.a(i) == 0) {
      const double x = ds.x(i), m = ds.m(i);
      const Covariates c1 = at(x, 1, m, 0), c0 = at(x, 0, m, 0);
      const double delta = p.mean_y(c1) - p.mean_y(c0);
      const double w = 1.0 / (1.0 - pi);
      term = w * delta;
      if (grad) {
        grad->y += (w / n) * (p.designs.y.features(c1) - p.designs.y.features(c0));
        grad->a += (term * pi / n) * p.designs.a.features(cx);
      }
    }
    if (per) (*per)[static_cast<Eigen::Index>(i)] = term;
    total += term;
  }
  return total / n;
}

double aipw_impl(const Dataset& ds, const GlmParams& p, Eigen::VectorXd* per,
                 Coefs* grad) {
  const double obs_scale = observed_fraction_scale(ds);
  const double n = static_cast<double>(ds.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double x = ds.x(i);
    const double a = ds.a(i);
    const double m = ds.m(i);
    const Covariates cx = at(x, 0, 0, 0);
    const Eigen::VectorXd phi_a = p.designs.a.features(cx);
    const double pi = p.p_a1(cx);
    check_positive(pi, "p(A=1|X)");
    check_positive(p.p_m1(at(x, 1, 0, 0)), "p(M=1|A=1,X)");
    const Covariates c1m = at(x, 1, m, 0);
    const double mu1m = p.mean_y(c1m);
    const double eta10 = eta(p, 1, 0, x);
    const double eta00 = eta(p, 0, 0, x);
    const double w0 = (1.0 - a) / (1.0 - pi);  // I(A=0)/p(A=0|X)

    // Y-free part, averaged over all rows.
    double t2 = w0 * (mu1m - eta10) + eta10;
    if (grad) {
      const double s = 1.0 / n;
      grad->a += (s * w0 * pi * (mu1m - eta10)) * phi_a;
      grad->y += (s * w0) * p.designs.y.features(c1m);
      add_eta_gradient(p, 1, 0, x, s * (1.0 - w0), *grad);
    }
    double term = t2;

    if (ds.r(i)) {
      const double y = *ds.y(i);
      const double s = obs_scale / n;
      // T1 = I(A=1)/pi * p(M|0,x)/p(M|1,x) * (Y - mu(1,M,x))
      double t1 = 0.0;
      if (a == 1.0) {
        const double w1 = p_m(p, m, 0.0, x) / p_m(p, m, 1.0, x) / pi;
        t1 = w1 * (y - mu1m);
        if (grad) {
          grad->a += (-s * t1 * (1.0 - pi)) * phi_a;
          add_dlog_p_m(p, m, 0.0, x, s * t1, grad->m);
          add_dlog_p_m(p, m, 1.0, x, -s * t1, grad->m);
          grad->y += (-s * w1) * p.designs.y.features(c1m);
        }
      }
      // T3 = -I(A=0)/(1-pi) (Y - eta00) - eta00
      const double t3 = -w0 * (y - eta00) - eta00;
      if (grad) {
        grad->a += (-s * w0 * pi * (y - eta00)) * phi_a;
        add_eta_gradient(p, 0, 0, x, s * (w0 - 1.0), *grad);
      }
      term += obs_scale * (t1 + t3);
    }
    if (per) (*per)[static_cast<Eigen::Index>(i)] = term;
    total += term;
  }
  return total / n;
}

void require_nde(const Dataset& ds) {
  if (ds.graph() != Graph::kOneMediator)
    throw InvalidArgument("NDE estimators need the one-mediator graph");
}

}  // namespace

EffectEstimate nde_ipw(const Dataset& ds, const GlmParams& p) {
  require_nde(ds);
  Eigen::VectorXd per(static_cast<Eigen::Index>(ds.size()));
  ipw_impl(ds, p, &per, nullptr);
  return finish(std::move(per), Estimator::kIpw, nullptr);
}

EffectEstimate nde_mixed(const Dataset& ds, const GlmParams& p) {
  require_nde(ds);
  Eigen::VectorXd per(static_cast<Eigen::Index>(ds.size()));
  mixed_impl(ds, p, &per, nullptr);
  return finish(std::move(per), Estimator::kMixed, nullptr);
}

EffectEstimate nde_aipw(const Dataset& ds, const GlmParams& p) {
  require_nde(ds);
  Eigen::VectorXd per(static_cast<Eigen::Index>(ds.size()));
  aipw_impl(ds, p, &per, nullptr);
  return finish(std::move(per), Estimator::kAipw, nullptr);
}

EffectEstimate estimate_effect(const Dataset& ds, const GlmParams& p,
                               const PseFunctional& f,
                               const Eigen::VectorXd* weights) {
  f.validate();
  if (f.estimator != Estimator::kGFormula && weights)
    throw InvalidArgument("EL weights are only supported by the g-formula");
  switch (f.estimator) {
    case Estimator::kGFormula: return pse_gformula(ds, p, f, weights);
    case Estimator::kIpw: return nde_ipw(ds, p);
    case Estimator::kMixed: return nde_mixed(ds, p);
    case Estimator::kAipw: return nde_aipw(ds, p);
  }
  throw InvalidArgument("unknown estimator");
}

double effect_with_gradient(const Dataset& ds, const GlmParams& p,
                            const PseFunctional& f, Coefs& grad) {
  f.validate();
  grad = Coefs::zeros_like(p);
  switch (f.estimator) {
    case Estimator::kGFormula: {
      const double s = 1.0 / static_cast<double>(ds.size());
      double v = 0.0;
      for (std::size_t i = 0; i < ds.size(); ++i) v += m_of_x(p, ds.x(i), f, grad, s);
      return v * s;
    }
    case Estimator::kIpw: require_nde(ds); return ipw_impl(ds, p, nullptr, &grad);
    case Estimator::kMixed: require_nde(ds); return mixed_impl(ds, p, nullptr, &grad);
    case Estimator::kAipw: require_nde(ds); return aipw_impl(ds, p, nullptr, &grad);
  }
  throw InvalidArgument("unknown estimator");
}

unsigned estimator_blocks(const PseFunctional& f) {
  switch (f.estimator) {
    case Estimator::kGFormula:
      return kBlockY | kBlockM | (f.graph == Graph::kTwoMediator ? kBlockL : 0u);
    case Estimator::kIpw: return kBlockA | kBlockM;
    case Estimator::kMixed: return kBlockA | kBlockY;
    case Estimator::kAipw: return kBlockA | kBlockM | kBlockY;
  }
  return 0;
}

}  // namespace fairmle
