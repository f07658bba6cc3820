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

#include "fairmle/glm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <numbers>
#include <string>

#include "fairmle/error.hpp"

namespace fairmle {
namespace {

// log(1 + e^t) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// y * eta - log(1 + e^eta): log p(y | eta) for a Bernoulli-logit model.
double bernoulli_loglik(double y, double eta) { return y * eta - softplus(eta); }

double logistic_loglik(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = X * beta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) s += bernoulli_loglik(y[i], eta[i]);
  return s;
}

void check_size(const Eigen::VectorXd& v, const DesignSpec& d, const char* what) {
  if (v.size() != d.size())
    throw InvalidArgument(std::string("coefficient vector for ") + what +
                          " does not match its design");
}

// Adds sum over rows of the Bernoulli log-likelihood of `response(i)` under
// `design`/`coef`, and its gradient, to the accumulators.
template <typename RowFn, typename ResponseFn>
double binary_factor(const Dataset& ds, const DesignSpec& design,
                     const Eigen::VectorXd& coef, RowFn row, ResponseFn resp,
                     Eigen::VectorXd* grad) {
  double ll = 0.0;
  Eigen::VectorXd phi(design.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Covariates c = row(i);
    design.features(c, phi);
    const double eta = phi.dot(coef);
    const double y = resp(i);
    ll += bernoulli_loglik(y, eta);
    if (grad) *grad += (y - expit(eta)) * phi;
  }
  return ll;
}

}  // namespace

GlmParams GlmParams::from_truth(const DgpCoefficients& c) {
  GlmParams p;
  p.designs = ModelDesigns::correct(c.graph);
  p.alpha_a = c.a;
  p.alpha_m = c.m;
  p.alpha_l = c.l;
  p.alpha_y = c.y;
  p.sigma_y = c.sigma_y;
  p.validate();
  return p;
}

void GlmParams::validate() const {
  designs.validate();
  check_size(alpha_a, designs.a, "A");
  check_size(alpha_m, designs.m, "M");
  check_size(alpha_l, designs.l, "L");
  check_size(alpha_y, designs.y, "Y");
  if (!(sigma_y > 0.0)) throw InvalidArgument("sigma_y must be positive");
}

Coefs Coefs::zeros_like(const GlmParams& p) {
  return {Eigen::VectorXd::Zero(p.alpha_a.size()),
          Eigen::VectorXd::Zero(p.alpha_m.size()),
          Eigen::VectorXd::Zero(p.alpha_l.size()),
          Eigen::VectorXd::Zero(p.alpha_y.size())};
}

Coefs& Coefs::operator+=(const Coefs& o) {
  a += o.a;
  m += o.m;
  l += o.l;
  y += o.y;
  return *this;
}

Coefs& Coefs::operator*=(double s) {
  a *= s;
  m *= s;
  l *= s;
  y *= s;
  return *this;
}

namespace {

template <typename F>
void for_each_block(unsigned blocks, F f) {
  if (blocks & kBlockA) f(kBlockA);
  if (blocks & kBlockM) f(kBlockM);
  if (blocks & kBlockL) f(kBlockL);
  if (blocks & kBlockY) f(kBlockY);
}

template <typename T>
auto& block_of(T& holder, Block b) {
  if constexpr (std::is_same_v<std::remove_const_t<T>, GlmParams>) {
    switch (b) {
      case kBlockA: return holder.alpha_a;
      case kBlockM: return holder.alpha_m;
      case kBlockL: return holder.alpha_l;
      default: return holder.alpha_y;
    }
  } else {
    switch (b) {
      case kBlockA: return holder.a;
      case kBlockM: return holder.m;
      case kBlockL: return holder.l;
      default: return holder.y;
    }
  }
}

template <typename T>
Eigen::VectorXd pack_impl(const T& holder, unsigned blocks) {
  Eigen::Index n = 0;
  for_each_block(blocks, [&](Block b) { n += block_of(holder, b).size(); });
  Eigen::VectorXd out(n);
  Eigen::Index k = 0;
  for_each_block(blocks, [&](Block b) {
    const auto& v = block_of(holder, b);
    out.segment(k, v.size()) = v;
    k += v.size();
  });
  return out;
}

}  // namespace

Eigen::VectorXd pack(const GlmParams& p, unsigned blocks) {
  return pack_impl(p, blocks);
}

Eigen::VectorXd pack(const Coefs& c, unsigned blocks) {
  return pack_impl(c, blocks);
}

void unpack(const Eigen::VectorXd& v, unsigned blocks, GlmParams& p) {
  Eigen::Index k = 0;
  for_each_block(blocks, [&](Block b) {
    auto& dst = block_of(p, b);
    dst = v.segment(k, dst.size());
    k += dst.size();
  });
  if (k != v.size()) throw InvalidArgument("packed vector has wrong length");
}

LogisticFit fit_logistic(const DesignSpec& design,
                         const std::vector<Covariates>& rows,
                         const std::vector<double>& response,
                         const NewtonOptions& opts) {
  if (rows.size() != response.size() || rows.empty())
    throw InvalidArgument("logistic fit needs matching, non-empty inputs");
  const Eigen::MatrixXd X = design_matrix(design, rows);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(response.data(),
                                        static_cast<Eigen::Index>(response.size()));
  const double ones = y.sum();
  if (ones == 0.0 || ones == static_cast<double>(y.size()))
    throw SeparationError("response takes a single value; logistic MLE diverges");

  LogisticFit fit;
  fit.coef = Eigen::VectorXd::Zero(design.size());
  double ll = logistic_loglik(X, y, fit.coef);
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd eta = X * fit.coef;
    Eigen::VectorXd p(eta.size()), w(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p[i] = expit(eta[i]);
      w[i] = p[i] * (1.0 - p[i]);
    }
    const Eigen::VectorXd grad = X.transpose() * (y - p);
    fit.grad_norm = grad.norm();
    fit.iterations = iter;
    if (fit.grad_norm <= opts.grad_tol) {
      // A flat gradient with every row fitted perfectly is the tail of a
      // diverging path, not an optimum.
      if ((y - p).cwiseAbs().maxCoeff() < 1e-6)
        throw SeparationError("logistic coefficients diverge (separation)");
      fit.loglik = ll;
      return fit;
    }
    const Eigen::MatrixXd info = X.transpose() * w.asDiagonal() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || !(d.minCoeff() > 1e-13 * dmax) ||
        dmax == 0.0) {
      if (fit.coef.cwiseAbs().maxCoeff() > 0.5 * opts.divergence_bound)
        throw SeparationError("logistic coefficients diverge (separation)");
      throw SingularError("singular information matrix in logistic fit");
    }
    const Eigen::VectorXd step = ldlt.solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = fit.coef + step;
    double next_ll = logistic_loglik(X, y, next);
    for (int h = 0; h < 60 && !(next_ll >= ll - 1e-12 * std::abs(ll)); ++h) {
      t *= 0.5;
      next = fit.coef + t * step;
      next_ll = logistic_loglik(X, y, next);
    }
    if (!(next_ll >= ll - 1e-12 * std::abs(ll)))
      throw ConvergenceError("logistic Newton step failed to increase the "
                             "log-likelihood");
    fit.coef = next;
    ll = next_ll;
    if (fit.coef.cwiseAbs().maxCoeff() > opts.divergence_bound)
      throw SeparationError("logistic coefficients diverge (separation)");
  }
  throw ConvergenceError("logistic Newton did not converge, gradient norm " +
                         std::to_string(fit.grad_norm));
}

LinearFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0)
    throw InvalidArgument("linear fit needs matching, non-empty inputs");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw SingularError("design matrix is rank deficient");
  LinearFit fit;
  fit.coef = qr.solve(y);
  const double rss = (y - X * fit.coef).squaredNorm();
  fit.sigma = std::sqrt(rss / static_cast<double>(X.rows()));
  return fit;
}

LinearFit fit_linear(const DesignSpec& design,
                     const std::vector<Covariates>& rows,
                     const std::vector<double>& response) {
  if (rows.size() != response.size())
    throw InvalidArgument("linear fit needs matching inputs");
  return fit_linear(design_matrix(design, rows),
                    Eigen::Map<const Eigen::VectorXd>(
                        response.data(), static_cast<Eigen::Index>(response.size())));
}

GlmParams fit_mle(const Dataset& ds, const ModelDesigns& designs) {
  designs.validate();
  if (designs.graph != ds.graph())
    throw InvalidArgument("model designs do not match the dataset graph");
  std::vector<Covariates> rows(ds.size()), observed;
  std::vector<double> a(ds.size()), m(ds.size()), l, y;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    rows[i] = ds.covariates(i);
    a[i] = rows[i].a;
    m[i] = rows[i].m;
    if (ds.has_l()) l.push_back(rows[i].l);
    if (ds.r(i)) {
      observed.push_back(rows[i]);
      y.push_back(*ds.y(i));
    }
  }
  if (observed.empty()) throw InvalidArgument("no observed outcomes");
  GlmParams p;
  p.designs = designs;
  p.alpha_a = fit_logistic(designs.a, rows, a).coef;
  p.alpha_m = fit_logistic(designs.m, rows, m).coef;
  if (ds.has_l()) p.alpha_l = fit_logistic(designs.l, rows, l).coef;
  const LinearFit lin = fit_linear(designs.y, observed, y);
  p.alpha_y = lin.coef;
  p.sigma_y = lin.sigma;
  if (!(p.sigma_y > 0.0))
    throw SingularError("outcome model interpolates the data (sigma = 0)");
  return p;
}

double binary_factors_loglik(const Dataset& ds, const GlmParams& params,
                             unsigned blocks, Coefs* grad) {
  double ll = 0.0;
  auto row = [&](std::size_t i) { return ds.covariates(i); };
  if (blocks & kBlockA)
    ll += binary_factor(ds, params.designs.a, params.alpha_a, row,
                        [&](std::size_t i) { return double(ds.a(i)); },
                        grad ? &grad->a : nullptr);
  if (blocks & kBlockM)
    ll += binary_factor(ds, params.designs.m, params.alpha_m, row,
                        [&](std::size_t i) { return double(ds.m(i)); },
                        grad ? &grad->m : nullptr);
  if ((blocks & kBlockL) && ds.has_l())
    ll += binary_factor(ds, params.designs.l, params.alpha_l, row,
                        [&](std::size_t i) { return double(ds.l(i)); },
                        grad ? &grad->l : nullptr);
  return ll;
}

LoglikParts loglik_parts(const Dataset& ds, const GlmParams& params) {
  params.validate();
  LoglikParts parts;
  parts.a = binary_factors_loglik(ds, params, kBlockA);
  parts.m = binary_factors_loglik(ds, params, kBlockM);
  parts.l = binary_factors_loglik(ds, params, kBlockL);
  const double s2 = params.sigma_y * params.sigma_y;
  const double c = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.r(i)) continue;
    const double r = *ds.y(i) - params.mean_y(ds.covariates(i));
    parts.y += c - 0.5 * r * r / s2;
  }
  return parts;
}

double observed_data_loglik(const Dataset& ds, const GlmParams& params,
                            const std::optional<ElState>& x_weights) {
  double ll = loglik_parts(ds, params).total();
  if (x_weights) {
    if (static_cast<std::size_t>(x_weights->weights.size()) != ds.size())
      throw InvalidArgument("EL weights do not match the dataset");
    ll += x_weights->weights.array().log().sum();
  }
  return ll;
}

double observed_data_loglik(const Dataset& ds, const GlmParams& params,
                            Coefs* grad, double* dsigma) {
  params.validate();
  if (grad) *grad = Coefs::zeros_like(params);
  double ll = binary_factors_loglik(ds, params, kBlockA | kBlockM | kBlockL, grad);
  const double s = params.sigma_y;
  const double s2 = s * s;
  const double c = -0.5 * std::log(2.0 * std::numbers::pi * s2);
  if (dsigma) *dsigma = 0.0;
  Eigen::VectorXd phi(params.designs.y.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.r(i)) continue;
    const Covariates cv = ds.covariates(i);
    params.designs.y.features(cv, phi);
    const double r = *ds.y(i) - phi.dot(params.alpha_y);
    ll += c - 0.5 * r * r / s2;
    if (grad) grad->y += (r / s2) * phi;
    if (dsigma) *dsigma += -1.0 / s + r * r / (s2 * s);
  }
  return ll;
}

double profile_outcome_loglik(const Dataset& ds, const DesignSpec& design,
                              const Eigen::VectorXd& alpha_y,
                              Eigen::VectorXd* grad, double* sigma) {
  if (alpha_y.size() != design.size())
    throw InvalidArgument("outcome coefficients do not match the design");
  double rss = 0.0;
  double n1 = 0.0;
  Eigen::VectorXd phi(design.size());
  if (grad) grad->setZero(design.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.r(i)) continue;
    design.features(ds.covariates(i), phi);
    const double r = *ds.y(i) - phi.dot(alpha_y);
    rss += r * r;
    n1 += 1.0;
    if (grad) *grad += r * phi;
  }
  if (n1 == 0.0) throw InvalidArgument("no observed outcomes");
  if (!(rss > 0.0)) throw SingularError("zero residual sum of squares");
  if (grad) *grad *= n1 / rss;
  if (sigma) *sigma = std::sqrt(rss / n1);
  return -0.5 * n1 * (std::log(2.0 * std::numbers::pi * rss / n1) + 1.0);
}

}  // namespace fairmle
