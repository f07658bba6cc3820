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

#ifndef FAIRMLE_DESIGN_HPP_
#define FAIRMLE_DESIGN_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace fairmle {

// Values of one unit's covariates. Binary variables are stored as 0.0/1.0
// so that design terms are plain products.
struct Covariates {
  double x = 0.0;
  double a = 0.0;
  double m = 0.0;
  double l = 0.0;
};

// A product term over {X, A, M, L}, stored as a bit mask. The empty mask is
// the intercept.
class Term {
 public:
  enum Var : std::uint8_t { kX = 1, kA = 2, kM = 4, kL = 8 };

  constexpr Term() = default;
  constexpr explicit Term(std::uint8_t mask) : mask_(mask) {}

  // Parses "1", "X", "A*X", "x*a*m" (case-insensitive, '*' or ':' separator).
  static Term parse(std::string_view text);

  constexpr std::uint8_t mask() const { return mask_; }
  constexpr bool is_intercept() const { return mask_ == 0; }
  constexpr bool contains(Var v) const { return (mask_ & v) != 0; }
  // True when the term is 1 or A, i.e. it does not vanish at X = M = L = 0.
  constexpr bool is_pure_a() const { return (mask_ & ~kA) == 0; }

  double eval(const Covariates& c) const {
    double v = 1.0;
    if (mask_ & kX) v *= c.x;
    if (mask_ & kA) v *= c.a;
    if (mask_ & kM) v *= c.m;
    if (mask_ & kL) v *= c.l;
    return v;
  }

  std::string to_string() const;

  friend constexpr bool operator==(Term, Term) = default;

 private:
  std::uint8_t mask_ = 0;
};

// Ordered list of distinct product terms; the columns of a GLM design.
class DesignSpec {
 public:
  DesignSpec() = default;
  explicit DesignSpec(std::vector<Term> terms);

  // Comma-separated term list, e.g. "1,X,A,A*X".
  static DesignSpec parse(std::string_view text);

  const std::vector<Term>& terms() const { return terms_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(terms_.size()); }
  bool has_intercept() const;
  // Bitwise OR of all term masks.
  std::uint8_t variables() const;
  Eigen::Index index_of(Term t) const;  // -1 when absent

  void features(const Covariates& c, Eigen::Ref<Eigen::VectorXd> out) const;
  Eigen::VectorXd features(const Covariates& c) const;
  double dot(const Eigen::VectorXd& coef, const Covariates& c) const;

  std::string to_string() const;

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;

 private:
  std::vector<Term> terms_;
};

// Supported causal graphs: X -> A -> M -> Y with X a parent of everything,
// optionally with a second binary mediator L (parents X, A, M) before Y.
enum class Graph { kOneMediator, kTwoMediator };

std::string_view to_string(Graph g);
Graph parse_graph(std::string_view text);  // "one-mediator" | "two-mediator"

// Designs for the four fitted factors p(A|X), p(M|A,X), p(L|A,M,X), E[Y|...].
// `l` is empty for the one-mediator graph.
struct ModelDesigns {
  Graph graph = Graph::kOneMediator;
  DesignSpec a, m, l, y;

  // Designs matching the simulation DGPs (correct specification).
  static ModelDesigns correct(Graph g);

  // Throws InvalidArgument when a factor references a variable that is not
  // among its parents, or lacks an intercept.
  void validate() const;
};

// Evaluates `design` on every row into an n x p matrix.
Eigen::MatrixXd design_matrix(const DesignSpec& design,
                              const std::vector<Covariates>& rows);

}  // namespace fairmle

#endif  // FAIRMLE_DESIGN_HPP_
