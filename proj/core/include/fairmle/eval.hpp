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

#ifndef FAIRMLE_EVAL_HPP_
#define FAIRMLE_EVAL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairmle/dataset.hpp"
#include "fairmle/train.hpp"

namespace fairmle {

class DesignCache;

enum class KlScope { kConditionalGivenX, kFullJoint };
std::string_view to_string(KlScope s);

struct Metrics {
  double effect = 0.0;
  double loglik = 0.0;
  double kl_conditional = 0.0;  // KL of p(A, M, [L], Y | X)
  double kl_joint = 0.0;        // KL including the X marginal
  double mse = 0.0;

  double kl(KlScope s) const {
    return s == KlScope::kFullJoint ? kl_joint : kl_conditional;
  }
};

// Fresh, fully observed draw from the true DGP with the true per-row log
// densities, shared by every fit of one replication.
class EvaluationSample {
 public:
  EvaluationSample(const DgpSpec& truth, std::uint64_t seed,
                   std::size_t n = 100000);
  ~EvaluationSample();
  EvaluationSample(EvaluationSample&&) noexcept;

  const Dataset& data() const { return data_; }
  // Mean of log p(row | x) - log p_fit(row | x).
  double kl_conditional(const GlmParams& fitted) const;
  // Same including log phi(x) - log p_fit(x), p_fit(x) a kernel smooth of the
  // training X values under `x_weights` (uniform when empty).
  double kl_joint(const GlmParams& fitted, const std::vector<double>& train_x,
                  const Eigen::VectorXd& x_weights) const;

 private:
  const DesignCache& cache_for(const ModelDesigns& d) const;

  Dataset data_;
  Eigen::VectorXd true_loglik_;
  double mean_log_phi_ = 0.0;
  mutable std::vector<std::pair<ModelDesigns, std::unique_ptr<DesignCache>>> caches_;
};

// Monte-Carlo KL(p || p_fit) on a fresh sample of `n_eval` rows drawn with
// seed derive_seed(truth.seed, kEvaluation). Throws Error when the fitted
// density vanishes at a sampled row.
double kl_estimate(const Dataset& train, const DgpSpec& truth,
                   const FitResult& fit, KlScope scope,
                   std::size_t n_eval = 100000);
double kl_estimate(const EvaluationSample& sample, const Dataset& train,
                   const FitResult& fit, KlScope scope);

// Mean squared error over the masked rows against their held-out outcomes.
// Throws InvalidArgument when a masked row lacks a prediction or the dataset
// carries no held-out outcomes.
double mse(const Dataset& ds, const Eigen::VectorXd& predictions);

struct ExperimentSpec {
  Graph variant = Graph::kOneMediator;
  std::size_t n = 5000;
  double missing_fraction = 0.20;
  std::optional<DgpCoefficients> coefficients;
  std::size_t eval_n = 100000;
  int jobs = 1;
};

struct ConfigSummary {
  TrainConfig config;
  std::string label;
  Metrics mean, se;
  int ok = 0;
  int failed = 0;
  std::vector<std::string> failures;
};

struct ReplicationTable {
  int reps = 0;
  std::uint64_t seed = 0;
  std::vector<ConfigSummary> rows;
  // per_rep[c][r]: metrics of config c in replication r, empty on failure.
  std::vector<std::vector<std::optional<Metrics>>> per_rep;
};

// Seed of replication r.
std::uint64_t replication_seed(std::uint64_t base_seed, int r);

// Label used in tables, e.g. "M1 aipw".
std::string config_label(const TrainConfig& cfg);

// Every replication simulates one dataset, fits every config on it and
// evaluates the fits. Failures are recorded per config and replication.
ReplicationTable run_replications(int reps, std::uint64_t base_seed,
                                  const std::vector<TrainConfig>& configs,
                                  const ExperimentSpec& spec);

}  // namespace fairmle

#endif  // FAIRMLE_EVAL_HPP_
