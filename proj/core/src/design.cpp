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

#include "fairmle/design.hpp"

#include <algorithm>
#include <cctype>

#include "fairmle/error.hpp"

namespace fairmle {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace

Term Term::parse(std::string_view text) {
  text = trim(text);
  if (text == "1") return Term{};
  if (text.empty()) throw InvalidArgument("empty design term");
  std::uint8_t mask = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("*:", start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view factor = trim(text.substr(start, end - start));
    if (factor.size() != 1)
      throw InvalidArgument("bad design term '" + std::string(text) + "'");
    std::uint8_t bit = 0;
    switch (std::toupper(static_cast<unsigned char>(factor[0]))) {
      case 'X': bit = kX; break;
      case 'A': bit = kA; break;
      case 'M': bit = kM; break;
      case 'L': bit = kL; break;
      default:
        throw InvalidArgument("unknown variable in term '" + std::string(text) +
                              "'");
    }
    if (mask & bit)
      throw InvalidArgument("repeated variable in term '" + std::string(text) +
                            "'");
    mask |= bit;
    start = end + 1;
  }
  return Term{mask};
}

std::string Term::to_string() const {
  if (mask_ == 0) return "1";
  std::string out;
  auto add = [&](Var v, char c) {
    if (!(mask_ & v)) return;
    if (!out.empty()) out += '*';
    out += c;
  };
  add(kA, 'A');
  add(kX, 'X');
  add(kM, 'M');
  add(kL, 'L');
  return out;
}

DesignSpec::DesignSpec(std::vector<Term> terms) : terms_(std::move(terms)) {
  for (std::size_t i = 0; i < terms_.size(); ++i)
    for (std::size_t j = i + 1; j < terms_.size(); ++j)
      if (terms_[i] == terms_[j])
        throw InvalidArgument("duplicate design term " + terms_[i].to_string());
}

DesignSpec DesignSpec::parse(std::string_view text) {
  std::vector<Term> terms;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    terms.push_back(Term::parse(text.substr(start, end - start)));
    start = end + 1;
  }
  return DesignSpec(std::move(terms));
}

bool DesignSpec::has_intercept() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](Term t) { return t.is_intercept(); });
}

std::uint8_t DesignSpec::variables() const {
  std::uint8_t mask = 0;
  for (Term t : terms_) mask |= t.mask();
  return mask;
}

Eigen::Index DesignSpec::index_of(Term t) const {
  auto it = std::find(terms_.begin(), terms_.end(), t);
  return it == terms_.end() ? -1 : static_cast<Eigen::Index>(it - terms_.begin());
}

void DesignSpec::features(const Covariates& c,
                          Eigen::Ref<Eigen::VectorXd> out) const {
  for (std::size_t j = 0; j < terms_.size(); ++j)
    out[static_cast<Eigen::Index>(j)] = terms_[j].eval(c);
}

Eigen::VectorXd DesignSpec::features(const Covariates& c) const {
  Eigen::VectorXd out(size());
  features(c, out);
  return out;
}

double DesignSpec::dot(const Eigen::VectorXd& coef, const Covariates& c) const {
  double s = 0.0;
  for (std::size_t j = 0; j < terms_.size(); ++j)
    s += coef[static_cast<Eigen::Index>(j)] * terms_[j].eval(c);
  return s;
}

std::string DesignSpec::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < terms_.size(); ++j) {
    if (j) out += ',';
    out += terms_[j].to_string();
  }
  return out;
}

std::string_view to_string(Graph g) {
  return g == Graph::kOneMediator ? "one-mediator" : "two-mediator";
}

Graph parse_graph(std::string_view text) {
  if (text == "one-mediator" || text == "one" || text == "sim1")
    return Graph::kOneMediator;
  if (text == "two-mediator" || text == "two" || text == "sim3")
    return Graph::kTwoMediator;
  throw InvalidArgument("unknown graph variant '" + std::string(text) + "'");
}

ModelDesigns ModelDesigns::correct(Graph g) {
  ModelDesigns d;
  d.graph = g;
  d.a = DesignSpec::parse("1,X");
  d.m = DesignSpec::parse("1,X,A,A*X");
  if (g == Graph::kOneMediator) {
    d.y = DesignSpec::parse("1,X,A,M,A*X,X*M,A*M,A*X*M");
  } else {
    d.l = DesignSpec::parse("1,X,A,M,A*X,A*M,A*X*M");
    d.y = DesignSpec::parse("1,X,A,M,L,A*X,A*M,A*L,A*M*L");
  }
  return d;
}

void ModelDesigns::validate() const {
  auto check = [](const DesignSpec& d, std::uint8_t allowed, const char* name) {
    if (!d.has_intercept())
      throw InvalidArgument(std::string("design for ") + name +
                            " must include an intercept");
    if (d.variables() & ~allowed)
      throw InvalidArgument(std::string("design for ") + name +
                            " references a non-parent variable");
  };
  check(a, Term::kX, "A");
  check(m, Term::kX | Term::kA, "M");
  if (graph == Graph::kTwoMediator) {
    check(l, Term::kX | Term::kA | Term::kM, "L");
    check(y, Term::kX | Term::kA | Term::kM | Term::kL, "Y");
  } else {
    if (l.size() != 0)
      throw InvalidArgument("one-mediator graph has no L design");
    check(y, Term::kX | Term::kA | Term::kM, "Y");
  }
}

Eigen::MatrixXd design_matrix(const DesignSpec& design,
                              const std::vector<Covariates>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), design.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < design.size(); ++j)
      out(static_cast<Eigen::Index>(i), j) =
          design.terms()[static_cast<std::size_t>(j)].eval(rows[i]);
  return out;
}

}  // namespace fairmle
