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

#include "fairmle/optimize.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fairmle/error.hpp"

namespace fairmle {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const VectorXd& g) {
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

struct Point {
  VectorXd x, g;
  double value = 0.0;
};

// Backtracking along `dir` from `cur`; returns false when no ascent step is
// found.
bool line_search(const Objective& f, const Point& cur, const VectorXd& dir,
                 double step, Point& next) {
  const double slope = cur.g.dot(dir);
  if (!(slope > 0.0)) return false;
  for (int k = 0; k < 60; ++k, step *= 0.5) {
    next.x = cur.x + step * dir;
    next.value = f(next.x, &next.g);
    if (std::isfinite(next.value) && next.g.allFinite() &&
        next.value >= cur.value + 1e-4 * step * slope)
      return true;
  }
  return false;
}

MatrixXd fd_hessian(const Objective& f, const Point& p, double rel) {
  const Eigen::Index d = p.x.size();
  MatrixXd H(d, d);
  VectorXd gp, gm;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = rel * std::max(1.0, std::abs(p.x[j]));
    VectorXd xp = p.x, xm = p.x;
    xp[j] += h;
    xm[j] -= h;
    const double vp = f(xp, &gp);
    const double vm = f(xm, &gm);
    if (std::isfinite(vp) && std::isfinite(vm)) {
      H.col(j) = (gp - gm) / (2.0 * h);
    } else if (std::isfinite(vm)) {
      H.col(j) = (p.g - gm) / h;
    } else {
      H.col(j) = (gp - p.g) / h;
    }
  }
  return 0.5 * (H + H.transpose());
}

}  // namespace

MaximizeResult maximize(const Objective& f, const VectorXd& x0,
                        const MaximizeOptions& opts) {
  Point cur;
  cur.x = x0;
  cur.value = f(cur.x, &cur.g);
  if (!std::isfinite(cur.value) || !cur.g.allFinite())
    throw InvalidArgument("starting point outside the objective's domain");
  const Eigen::Index d = x0.size();
  MaximizeResult res;

  // BFGS on -f with inverse-Hessian approximation Hinv.
  MatrixXd Hinv = MatrixXd::Identity(d, d) / std::max(1.0, inf_norm(cur.g));
  bool scaled = false;
  int it = 0;
  for (; it < opts.max_iter && inf_norm(cur.g) > opts.grad_tol; ++it) {
    VectorXd dir = Hinv * cur.g;
    Point next;
    if (!line_search(f, cur, dir, 1.0, next)) {
      Hinv = MatrixXd::Identity(d, d) / std::max(1.0, inf_norm(cur.g));
      dir = Hinv * cur.g;
      if (!line_search(f, cur, dir, 1.0, next)) break;
    }
    const VectorXd s = next.x - cur.x;
    const VectorXd y = cur.g - next.g;  // gradient change of -f
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        Hinv = MatrixXd::Identity(d, d) * (sy / y.squaredNorm());
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const VectorXd Hy = Hinv * y;
      Hinv += rho * ((1.0 + rho * y.dot(Hy)) * s * s.transpose() -
                     Hy * s.transpose() - s * Hy.transpose());
    }
    const bool stalled = std::abs(next.value - cur.value) <=
                             1e-15 * std::max(1.0, std::abs(cur.value)) &&
                         s.norm() <= 1e-14 * std::max(1.0, cur.x.norm());
    cur = std::move(next);
    if (stalled) break;
  }

  // Newton refinement.
  for (int k = 0; k < opts.newton_iter && inf_norm(cur.g) > opts.grad_tol; ++k, ++it) {
    const MatrixXd H = fd_hessian(f, cur, opts.fd_step);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(-H);
    VectorXd ev = eig.eigenvalues();
    const double floor = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 0; j < ev.size(); ++j) ev[j] = std::max(std::abs(ev[j]), floor);
    const VectorXd dir = eig.eigenvectors() *
                         ((eig.eigenvectors().transpose() * cur.g).array() / ev.array())
                             .matrix();
    Point next;
    if (!line_search(f, cur, dir, 1.0, next)) break;
    // Stop once the gradient no longer shrinks: rounding noise dominates.
    const bool stagnant = inf_norm(next.g) > 0.5 * inf_norm(cur.g);
    cur = std::move(next);
    if (stagnant) break;
  }

  res.x = cur.x;
  res.value = cur.value;
  res.grad_norm = inf_norm(cur.g);
  res.iterations = it;
  res.converged = res.grad_norm <= opts.grad_tol;
  return res;
}

VectorXd numeric_gradient(const Objective& f, const VectorXd& x, double h) {
  VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    VectorXd xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    g[j] = (f(xp, nullptr) - f(xm, nullptr)) / (2.0 * step);
  }
  return g;
}

}  // namespace fairmle
