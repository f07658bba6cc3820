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


#include <cmath>
#include <string>

#include "doctest.h"
#include "fairmle/design.hpp"
#include "fairmle/error.hpp"

using fairmle::Covariates;
using fairmle::DesignSpec;
using fairmle::Graph;
using fairmle::InvalidArgument;
using fairmle::ModelDesigns;
using fairmle::Term;

TEST_SUITE("design") {

TEST_CASE("terms parse case-insensitively with either separator") {
  CHECK(Term::parse("1").is_intercept());
  CHECK(Term::parse("x*a") == Term::parse("A:X"));
  CHECK(Term::parse("A*X*M").mask() == (Term::kA | Term::kX | Term::kM));
  CHECK(Term::parse("A").is_pure_a());
  CHECK_FALSE(Term::parse("A*M").is_pure_a());
  CHECK_THROWS_AS(Term::parse(""), InvalidArgument);
  CHECK_THROWS_AS(Term::parse("Z"), InvalidArgument);
  CHECK_THROWS_AS(Term::parse("X*X"), InvalidArgument);
}

TEST_CASE("design features evaluate products") {
  const DesignSpec d = DesignSpec::parse("1,X,A,A*X*M");
  const Covariates c{2.0, 1.0, 1.0, 0.0};
  const Eigen::VectorXd f = d.features(c);
  REQUIRE(f.size() == 4);
  CHECK(f(0) == 1.0);
  CHECK(f(1) == 2.0);
  CHECK(f(2) == 1.0);
  CHECK(f(3) == 2.0);
  Eigen::VectorXd coef(4);
  coef << 0.5, -1.0, 3.0, 0.25;
  CHECK(d.dot(coef, c) == doctest::Approx(0.5 - 2.0 + 3.0 + 0.5));
  CHECK(d.index_of(Term::parse("A")) == 2);
  CHECK(d.index_of(Term::parse("L")) == -1);
  CHECK(DesignSpec::parse(d.to_string()) == d);
  CHECK_THROWS_AS(DesignSpec::parse("1,X,x"), InvalidArgument);
}

TEST_CASE("model designs respect the graph") {
  for (Graph g : {Graph::kOneMediator, Graph::kTwoMediator}) {
    const ModelDesigns d = ModelDesigns::correct(g);
    CHECK_NOTHROW(d.validate());
    CHECK(fairmle::parse_graph(fairmle::to_string(g)) == g);
  }
  ModelDesigns bad = ModelDesigns::correct(Graph::kOneMediator);
  bad.a = DesignSpec::parse("1,X,M");
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = ModelDesigns::correct(Graph::kOneMediator);
  bad.y = DesignSpec::parse("X,A,M");
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = ModelDesigns::correct(Graph::kOneMediator);
  bad.y = DesignSpec::parse("1,X,A,M,L");
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(fairmle::parse_graph("three"), InvalidArgument);
}

TEST_CASE("design matrix stacks rows") {
  const DesignSpec d = DesignSpec::parse("1,X,A*X");
  const std::vector<Covariates> rows{{1.0, 0.0, 0.0, 0.0}, {-2.0, 1.0, 0.0, 0.0}};
  const Eigen::MatrixXd phi = fairmle::design_matrix(d, rows);
  REQUIRE(phi.rows() == 2);
  CHECK(phi(0, 2) == 0.0);
  CHECK(phi(1, 2) == -2.0);
}

}  // TEST_SUITE
