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

#include "fairmle/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "fairmle/cache.hpp"
#include "fairmle/error.hpp"

namespace fairmle {
namespace {

constexpr unsigned kAllBlocks = kBlockA | kBlockM | kBlockL | kBlockY;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_trace(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(6);
  for (std::size_t k = 0; k < trace.size(); ++k) os << (k ? " " : "") << trace[k];
  return os.str();
}

// Inner solves stop at grad_tol; a larger gradient than this is a failure.
constexpr double kInnerFailure = 1e-3;

FitResult finish(const Dataset& ds, const DesignCache& cache, FitResult r,
                 const TrainConfig& cfg) {
  r.params.sigma_y = cache.profile_sigma(r.params);
  r.loglik = cache.profile_loglik(r.params, kAllBlocks);
  r.predictions = predict(ds, r, cfg);
  return r;
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kUnconstrained: return "m0";
    case Method::kConstrainedStandard: return "m1";
    case Method::kReparam: return "m2";
    case Method::kHybrid: return "m3";
    case Method::kHybridReparam: return "m4";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "m0" || t == "unconstrained") return Method::kUnconstrained;
  if (t == "m1" || t == "constrained") return Method::kConstrainedStandard;
  if (t == "m2" || t == "reparam") return Method::kReparam;
  if (t == "m3" || t == "hybrid") return Method::kHybrid;
  if (t == "m4" || t == "hybrid-reparam") return Method::kHybridReparam;
  throw InvalidArgument("unknown method '" + t + "'");
}

std::string_view describe(Method m) {
  switch (m) {
    case Method::kUnconstrained: return "unconstrained MLE";
    case Method::kConstrainedStandard: return "constrained MLE";
    case Method::kReparam: return "reparameterized MLE";
    case Method::kHybrid: return "hybrid likelihood";
    case Method::kHybridReparam: return "hybrid reparameterized";
  }
  return "?";
}

ModelDesigns TrainConfig::model_designs() const {
  return designs ? *designs : ModelDesigns::correct(graph);
}

PseFunctional TrainConfig::functional() const {
  PseFunctional f = PseFunctional::unfair_default(graph);
  if (method == Method::kUnconstrained || method == Method::kConstrainedStandard)
    f.estimator = estimator;
  return f;
}

void TrainConfig::validate() const {
  if (!(epsilon_lo <= epsilon_hi))
    throw InvalidArgument("epsilon interval must satisfy lo <= hi");
  const ModelDesigns d = model_designs();
  if (d.graph != graph) throw InvalidArgument("designs belong to another graph");
  d.validate();
  functional().validate();
  if (max_outer_iters < 1 || !(outer_tol > 0.0) || !(feasibility_tol > 0.0))
    throw InvalidArgument("iteration limits and tolerances must be positive");
}

FitResult fit_unconstrained(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const ModelDesigns designs = cfg.model_designs();
  const DesignCache cache(ds, designs);
  FitResult r;
  r.method = Method::kUnconstrained;
  r.estimator = cfg.estimator;
  r.params = fit_mle(ds, designs);
  r.effect_at_fit = cache.effect(r.params, cfg.functional());
  return finish(ds, cache, std::move(r), cfg);
}

FitResult fit_constrained_standard(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const ModelDesigns designs = cfg.model_designs();
  const DesignCache cache(ds, designs);
  const PseFunctional f = cfg.functional();
  const unsigned blocks = estimator_blocks(f);
  FitResult r;
  r.method = Method::kConstrainedStandard;
  r.estimator = cfg.estimator;
  r.params = fit_mle(ds, designs);
  double g = cache.effect(r.params, f);
  if (g >= cfg.epsilon_lo && g <= cfg.epsilon_hi) {
    r.effect_at_fit = g;
    return finish(ds, cache, std::move(r), cfg);
  }

  // Augmented Lagrangian for c_hi = g - hi <= 0 and c_lo = lo - g <= 0 on the
  // box shrunk by the tolerance, so the final effect lies inside the box.
  const double shrink = std::min(cfg.feasibility_tol, 0.5 * (cfg.epsilon_hi - cfg.epsilon_lo));
  const double lo = cfg.epsilon_lo + shrink, hi = cfg.epsilon_hi - shrink;
  GlmParams work = r.params;
  double mu_hi = 0.0, mu_lo = 0.0;
  double rho = static_cast<double>(ds.size());
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    unpack(x, blocks, work);
    Coefs gl = Coefs::zeros_like(work), ge;
    double ll = 0.0, eff = 0.0;
    try {
      ll = cache.profile_loglik(work, blocks, grad ? &gl : nullptr);
      eff = cache.effect(work, f, grad ? &ge : nullptr);
    } catch (const PositivityError&) {
      return kNaN;
    }
    const double t_hi = std::max(0.0, mu_hi + rho * (eff - hi));
    const double t_lo = std::max(0.0, mu_lo + rho * (lo - eff));
    if (grad) *grad = pack(gl, blocks) - (t_hi - t_lo) * pack(ge, blocks);
    return ll - (t_hi * t_hi - mu_hi * mu_hi + t_lo * t_lo - mu_lo * mu_lo) / (2.0 * rho);
  };

  Eigen::VectorXd theta = pack(r.params, blocks);
  double prev = std::numeric_limits<double>::infinity();
  double violation = prev;
  int iterations = 0;
  for (int round = 0; round < cfg.max_penalty_rounds; ++round) {
    const MaximizeResult res = maximize(objective, theta, cfg.optimizer);
    iterations += res.iterations;
    if (!res.converged && res.grad_norm > kInnerFailure)
      throw ConvergenceError("penalty subproblem did not converge",
                             format_trace(r.diagnostics.trace));
    theta = res.x;
    unpack(theta, blocks, work);
    g = cache.effect(work, f);
    mu_hi = std::max(0.0, mu_hi + rho * (g - hi));
    mu_lo = std::max(0.0, mu_lo + rho * (lo - g));
    // Feasibility plus complementary slackness: an active multiplier needs
    // its constraint to hold with equality.
    violation = std::max({0.0, g - hi, lo - g,
                          mu_hi > 0.0 ? hi - g : 0.0,
                          mu_lo > 0.0 ? g - lo : 0.0});
    r.diagnostics.trace.push_back(violation);
    if (violation <= cfg.feasibility_tol) break;
    if (violation > 0.25 * prev) rho *= 10.0;
    prev = violation;
  }
  if (violation > cfg.feasibility_tol)
    throw ConvergenceError("constrained fit did not reach feasibility",
                           format_trace(r.diagnostics.trace));
  r.params = work;
  r.effect_at_fit = g;
  r.diagnostics.iterations = iterations;
  r.diagnostics.constraint_residual = violation;
  return finish(ds, cache, std::move(r), cfg);
}

FitResult fit_reparam(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const ModelDesigns designs = cfg.model_designs();
  const DesignCache cache(ds, designs, false);
  FitResult r;
  r.method = Method::kReparam;
  r.estimator = Estimator::kGFormula;
  const GlmParams nuisance = fit_mle(ds, designs);
  r.reparam = fit_reparam_outcome(ds, nuisance, cfg.functional(), {}, 0.0);
  r.params = r.reparam->induced();
  r.effect_at_fit = pse_of(*r.reparam);
  return finish(ds, cache, std::move(r), cfg);
}

FitResult fit_hybrid(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const ModelDesigns designs = cfg.model_designs();
  const DesignCache cache(ds, designs);
  const PseFunctional f = cfg.functional();
  const unsigned blocks = estimator_blocks(f);
  FitResult r;
  r.method = Method::kHybrid;
  r.estimator = Estimator::kGFormula;
  r.params = fit_mle(ds, designs);
  const auto n = static_cast<Eigen::Index>(ds.size());
  const double g = cache.effect(r.params, f);
  if (g >= cfg.epsilon_lo && g <= cfg.epsilon_hi) {
    r.el = ElState{0.0, Eigen::VectorXd::Constant(n, 1.0 / double(n))};
    r.el_logterm = -static_cast<double>(n) * std::log(static_cast<double>(n));
    r.effect_at_fit = g;
    return finish(ds, cache, std::move(r), cfg);
  }
  const double target = std::clamp(g, cfg.epsilon_lo, cfg.epsilon_hi);
  auto straddles = [&](const GlmParams& q) {
    const Eigen::ArrayXd u = cache.gformula_terms(q, f).array() - target;
    return u.minCoeff() < 0.0 && u.maxCoeff() > 0.0;
  };
  if (!straddles(r.params)) {
    // The dual needs the target inside the hull of the per-unit terms; a
    // fit whose plug-in effect already equals the target provides one.
    TrainConfig start = cfg;
    start.method = Method::kConstrainedStandard;
    start.epsilon_lo = start.epsilon_hi = target;
    r.params = fit_constrained_standard(ds, start).params;
    if (!straddles(r.params))
      throw InfeasibleError("target effect lies outside the per-unit effect range");
  }

  GlmParams work = r.params;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    unpack(x, blocks, work);
    Coefs gl = Coefs::zeros_like(work);
    const double ll = cache.profile_loglik(work, blocks, grad ? &gl : nullptr);
    const Eigen::VectorXd u = cache.gformula_terms(work, f).array() - target;
    double lambda = 0.0;
    try {
      lambda = solve_lambda(u);
    } catch (const Error&) {
      return kNaN;
    }
    const Eigen::ArrayXd denom = 1.0 + lambda * u.array();
    if ((denom <= 0.0).any()) return kNaN;
    if (grad) {
      Coefs gm = Coefs::zeros_like(work);
      cache.add_gformula_gradient(work, f, (-lambda / denom).matrix(), gm);
      *grad = pack(gl, blocks) + pack(gm, blocks);
    }
    return ll - denom.log().sum();
  };

  const MaximizeResult res = maximize(objective, pack(r.params, blocks), cfg.optimizer);
  if (!res.converged && res.grad_norm > kInnerFailure)
    throw ConvergenceError("hybrid likelihood did not converge",
                           "gradient norm " + std::to_string(res.grad_norm));
  unpack(res.x, blocks, work);
  r.params = work;
  const Eigen::VectorXd m = cache.gformula_terms(work, f);
  r.el = el_weights((m.array() - target).matrix());
  r.el_logterm = r.el->weights.array().log().sum();
  r.effect_at_fit = r.el->weights.dot(m);
  r.diagnostics.iterations = res.iterations;
  r.diagnostics.converged = res.converged;
  r.diagnostics.constraint_residual = std::abs(r.effect_at_fit - target);
  return finish(ds, cache, std::move(r), cfg);
}

FitResult fit_hybrid_reparam(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  const ModelDesigns designs = cfg.model_designs();
  const DesignCache cache(ds, designs);
  const PseFunctional f = cfg.functional();
  FitResult r;
  r.method = Method::kHybridReparam;
  r.estimator = Estimator::kGFormula;
  const GlmParams nuisance = fit_mle(ds, designs);
  const auto n = static_cast<Eigen::Index>(ds.size());

  ReparamOutcomeModel model = fit_reparam_outcome(ds, nuisance, f, {}, 0.0);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  double lambda = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  bool converged = false;
  int k = 0;
  while (k < cfg.max_outer_iters) {
    ++k;
    const Eigen::VectorXd m = cache.gformula_terms(model.induced(), f);
    lambda = solve_lambda(m);
    Eigen::VectorXd p_next = weights_from_lambda(m, lambda);
    ReparamOutcomeModel next = fit_reparam_outcome(ds, nuisance, f, p_next, 0.0);
    const double change =
        std::max({(next.alpha_f - model.alpha_f).cwiseAbs().maxCoeff(),
                  std::abs(next.w0 - model.w0), (p_next - p).cwiseAbs().maxCoeff()});
    r.diagnostics.trace.push_back(change);
    model = std::move(next);
    p = std::move(p_next);
    if (change <= cfg.outer_tol) {
      converged = true;
      break;
    }
    if (change < best) {
      best = change;
      since_best = 0;
    } else if (++since_best >= 20) {
      throw ConvergenceError("hybrid reparameterized iteration oscillates",
                             format_trace(r.diagnostics.trace));
    }
  }
  if (!converged)
    throw ConvergenceError("hybrid reparameterized iteration hit its limit",
                           format_trace(r.diagnostics.trace));
  r.params = model.induced();
  const Eigen::VectorXd m = cache.gformula_terms(r.params, f);
  r.el = ElState{lambda, p};
  r.el_logterm = p.array().log().sum();
  r.effect_at_fit = pse_of(model);
  r.reparam = std::move(model);
  r.diagnostics.iterations = k;
  r.diagnostics.constraint_residual = std::abs(p.dot(m));
  return finish(ds, cache, std::move(r), cfg);
}

FitResult fit(const Dataset& ds, const TrainConfig& cfg) {
  switch (cfg.method) {
    case Method::kUnconstrained: return fit_unconstrained(ds, cfg);
    case Method::kConstrainedStandard: return fit_constrained_standard(ds, cfg);
    case Method::kReparam: return fit_reparam(ds, cfg);
    case Method::kHybrid: return fit_hybrid(ds, cfg);
    case Method::kHybridReparam: return fit_hybrid_reparam(ds, cfg);
  }
  throw InvalidArgument("unknown method");
}

namespace {

double p_a(const GlmParams& p, double a, double x) {
  const double q = p.p_a1({x, 0, 0, 0});
  return a == 1.0 ? q : 1.0 - q;
}

double p_m(const GlmParams& p, double m, double a, double x) {
  const double q = p.p_m1({x, a, 0, 0});
  return m == 1.0 ? q : 1.0 - q;
}

// sum_med E[Y | a, med, x] p(med | a, x).
double average_mediators(const GlmParams& p, double a, double x) {
  double s = 0.0;
  for (const MediatorConfig& cfg : mediator_configs(p, x, a, a))
    s += p.mean_y({x, a, cfg.m, cfg.l}) * cfg.prob;
  return s;
}

}  // namespace

Eigen::VectorXd predict(const Dataset& ds, const FitResult& fit,
                        const TrainConfig& /*cfg*/) {
  const GlmParams& p = fit.params;
  Eigen::VectorXd out = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(ds.size()), kNaN);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.r(i)) continue;
    const Covariates z = ds.covariates(i);
    double y = 0.0;
    switch (fit.method) {
      case Method::kUnconstrained:
      case Method::kHybrid:
      case Method::kHybridReparam:
        y = p.mean_y(z);
        break;
      case Method::kReparam:
        y = average_mediators(p, z.a, z.x);
        break;
      case Method::kConstrainedStandard:
        switch (fit.estimator) {
          case Estimator::kGFormula:
            y = average_mediators(p, z.a, z.x);
            break;
          case Estimator::kIpw:
          case Estimator::kAipw:
            for (double a : {0.0, 1.0}) y += p_a(p, a, z.x) * average_mediators(p, a, z.x);
            break;
          case Estimator::kMixed: {
            double num = 0.0, den = 0.0;
            for (double a : {0.0, 1.0}) {
              const double w = p_m(p, z.m, a, z.x) * p_a(p, a, z.x);
              num += p.mean_y({z.x, a, z.m, z.l}) * w;
              den += w;
            }
            y = num / den;
            break;
          }
        }
        break;
    }
    out[static_cast<Eigen::Index>(i)] = y;
  }
  return out;
}

}  // namespace fairmle
