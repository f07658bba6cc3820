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

#ifndef FAIRMLE_DATASET_HPP_
#define FAIRMLE_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "fairmle/design.hpp"

namespace fairmle {

// Rows (X, A, M, [L], Y, R). Y is present exactly when R = 1: rows with
// R = 1 are historical data, rows with R = 0 are new instances whose outcome
// is to be predicted.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Graph graph, std::vector<double> x, std::vector<std::uint8_t> a,
          std::vector<std::uint8_t> m, std::vector<std::uint8_t> l,
          std::vector<std::optional<double>> y);

  Graph graph() const { return graph_; }
  bool has_l() const { return graph_ == Graph::kTwoMediator; }
  std::size_t size() const { return x_.size(); }
  std::size_t observed_count() const { return n_observed_; }

  double x(std::size_t i) const { return x_[i]; }
  int a(std::size_t i) const { return a_[i]; }
  int m(std::size_t i) const { return m_[i]; }
  int l(std::size_t i) const { return has_l() ? l_[i] : 0; }
  bool r(std::size_t i) const { return y_[i].has_value(); }
  const std::optional<double>& y(std::size_t i) const { return y_[i]; }

  const std::vector<double>& xs() const { return x_; }

  Covariates covariates(std::size_t i) const {
    return {x_[i], static_cast<double>(a_[i]), static_cast<double>(m_[i]),
            has_l() ? static_cast<double>(l_[i]) : 0.0};
  }

  // True outcomes of masked rows, kept for evaluation of simulated data only.
  // Either empty (unknown) or size() long with NaN where r = 1.
  const std::vector<double>& heldout() const { return heldout_; }
  bool has_heldout() const { return !heldout_.empty(); }
  void set_heldout(std::vector<double> truth);

  friend bool operator==(const Dataset&, const Dataset&);

 private:
  Graph graph_ = Graph::kOneMediator;
  std::vector<double> x_;
  std::vector<std::uint8_t> a_, m_, l_;
  std::vector<std::optional<double>> y_;
  std::vector<double> heldout_;
  std::size_t n_observed_ = 0;
};

// Coefficients of a data-generating process over ModelDesigns::correct().
struct DgpCoefficients {
  Graph graph = Graph::kOneMediator;
  Eigen::VectorXd a, m, l, y;
  double sigma_y = 1.0;

  // Simulation 1/2 (one mediator) and Simulation 3 (two mediators).
  static DgpCoefficients published(Graph g);
};

struct DgpSpec {
  Graph variant = Graph::kOneMediator;
  std::size_t n = 5000;
  double missing_fraction = 0.20;
  std::uint64_t seed = 0;
  // Overrides the published coefficients, e.g. for null-effect studies.
  std::optional<DgpCoefficients> coefficients;

  const DgpCoefficients& truth() const;
  void validate() const;
};

// Draws n rows from the DGP, then masks floor(missing_fraction * n) outcomes
// (stream kMissingness). X ~ N(0, 1); binary factors are logistic in their
// correct designs; Y = linear predictor + sigma_y * N(0, 1).
Dataset simulate(const DgpSpec& spec);

// Removes the outcome of exactly floor(fraction * n) rows chosen uniformly
// without replacement. The selection ignores every variable.
Dataset mask_outcomes_mar(const Dataset& ds, double fraction,
                          std::uint64_t seed);

// CSV with header x,a,m,l,y,r (no l column for the one-mediator graph) and
// an empty y field when r = 0.
Dataset load_csv(const std::filesystem::path& path);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace fairmle

#endif  // FAIRMLE_DATASET_HPP_
