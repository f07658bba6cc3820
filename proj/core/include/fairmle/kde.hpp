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

#ifndef FAIRMLE_KDE_HPP_
#define FAIRMLE_KDE_HPP_

#include <vector>

#include <Eigen/Core>

namespace fairmle {

// Weighted Gaussian kernel density estimate in one dimension with the
// Silverman bandwidth 1.06 sd n_eff^(-1/5), n_eff = 1 / sum w_i^2.
// Evaluation inside the data range uses a linearly binned grid; points
// outside it are evaluated exactly.
class WeightedKde {
 public:
  // Uniform weights when `weights` is empty; otherwise they are normalised.
  explicit WeightedKde(std::vector<double> points, Eigen::VectorXd weights = {},
                       int grid_size = 4096);

  double bandwidth() const { return h_; }
  double log_density(double x) const;
  // Direct O(n) evaluation.
  double log_density_exact(double x) const;

 private:
  std::vector<double> points_;
  Eigen::VectorXd weights_;
  double h_ = 0.0;
  double lo_ = 0.0, step_ = 0.0;
  std::vector<double> grid_;  // density on lo_ + j * step_
};

}  // namespace fairmle

#endif  // FAIRMLE_KDE_HPP_
