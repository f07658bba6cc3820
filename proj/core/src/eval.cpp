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

#include "fairmle/eval.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/accumulators/accumulators.hpp>
#include <boost/accumulators/statistics/stats.hpp>
#include <boost/accumulators/statistics/sum_kahan.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/thread_pool.hpp>

#include "fairmle/cache.hpp"
#include "fairmle/error.hpp"
#include "fairmle/kde.hpp"
#include "fairmle/rng.hpp"

namespace fairmle {
namespace {

namespace acc = boost::accumulators;
using KahanSum = acc::accumulator_set<double, acc::stats<acc::tag::sum_kahan>>;

double log_phi(double x) {
  return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

bool same_designs(const ModelDesigns& a, const ModelDesigns& b) {
  return a.graph == b.graph && a.a == b.a && a.m == b.m && a.l == b.l && a.y == b.y;
}

}  // namespace

std::string_view to_string(KlScope s) {
  return s == KlScope::kFullJoint ? "full-joint" : "conditional";
}

EvaluationSample::EvaluationSample(const DgpSpec& truth, std::uint64_t seed,
                                   std::size_t n) {
  DgpSpec spec = truth;
  spec.n = n;
  spec.missing_fraction = 0.0;
  spec.seed = seed;
  data_ = simulate(spec);
  const GlmParams p = GlmParams::from_truth(spec.truth());
  true_loglik_ = cache_for(p.designs).row_loglik(p);
  KahanSum s;
  for (double x : data_.xs()) s(log_phi(x));
  mean_log_phi_ = acc::sum_kahan(s) / static_cast<double>(n);
}

EvaluationSample::~EvaluationSample() = default;
EvaluationSample::EvaluationSample(EvaluationSample&&) noexcept = default;

const DesignCache& EvaluationSample::cache_for(const ModelDesigns& d) const {
  for (const auto& [designs, cache] : caches_)
    if (same_designs(designs, d)) return *cache;
  caches_.emplace_back(d, std::make_unique<DesignCache>(data_, d, false));
  return *caches_.back().second;
}

double EvaluationSample::kl_conditional(const GlmParams& fitted) const {
  const Eigen::VectorXd fit_ll = cache_for(fitted.designs).row_loglik(fitted);
  if (!fit_ll.allFinite())
    throw Error("fitted density vanishes on the evaluation sample");
  KahanSum s;
  for (Eigen::Index i = 0; i < fit_ll.size(); ++i) s(true_loglik_[i] - fit_ll[i]);
  return acc::sum_kahan(s) / static_cast<double>(fit_ll.size());
}

double EvaluationSample::kl_joint(const GlmParams& fitted,
                                  const std::vector<double>& train_x,
                                  const Eigen::VectorXd& x_weights) const {
  const WeightedKde kde(train_x, x_weights);
  KahanSum s;
  for (double x : data_.xs()) {
    const double lq = kde.log_density(x);
    if (!std::isfinite(lq)) throw Error("fitted X density vanishes on the evaluation sample");
    s(-lq);
  }
  return kl_conditional(fitted) + mean_log_phi_ +
         acc::sum_kahan(s) / static_cast<double>(data_.size());
}

double kl_estimate(const EvaluationSample& sample, const Dataset& train,
                   const FitResult& fit, KlScope scope) {
  if (scope == KlScope::kConditionalGivenX) return sample.kl_conditional(fit.params);
  return sample.kl_joint(fit.params, train.xs(),
                         fit.el ? fit.el->weights : Eigen::VectorXd());
}

double kl_estimate(const Dataset& train, const DgpSpec& truth,
                   const FitResult& fit, KlScope scope, std::size_t n_eval) {
  const EvaluationSample sample(truth, derive_seed(truth.seed, Stream::kEvaluation), n_eval);
  return kl_estimate(sample, train, fit, scope);
}

double mse(const Dataset& ds, const Eigen::VectorXd& predictions) {
  if (!ds.has_heldout()) throw InvalidArgument("dataset has no held-out outcomes");
  if (predictions.size() != static_cast<Eigen::Index>(ds.size()))
    throw InvalidArgument("prediction vector does not match the dataset");
  KahanSum s;
  std::size_t k = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.r(i)) continue;
    const double p = predictions[static_cast<Eigen::Index>(i)];
    if (!std::isfinite(p))
      throw InvalidArgument("missing prediction for row " + std::to_string(i));
    const double d = p - ds.heldout()[i];
    s(d * d);
    ++k;
  }
  if (k == 0) throw InvalidArgument("no masked rows to evaluate");
  return acc::sum_kahan(s) / static_cast<double>(k);
}

std::uint64_t replication_seed(std::uint64_t base_seed, int r) {
  return splitmix64(derive_seed(base_seed, Stream::kReplication) +
                    static_cast<std::uint64_t>(r));
}

std::string config_label(const TrainConfig& cfg) {
  std::string s(to_string(cfg.method));
  s[0] = 'M';
  if (cfg.method == Method::kConstrainedStandard) {
    s += ' ';
    s += to_string(cfg.estimator);
  }
  return s;
}

ReplicationTable run_replications(int reps, std::uint64_t base_seed,
                                  const std::vector<TrainConfig>& configs,
                                  const ExperimentSpec& spec) {
  if (reps < 1) throw InvalidArgument("reps must be at least 1");
  if (spec.jobs < 1) throw InvalidArgument("jobs must be at least 1");
  for (const TrainConfig& c : configs) {
    if (c.graph != spec.variant)
      throw InvalidArgument("config graph differs from the experiment's DGP");
    c.validate();
  }
  const std::size_t nc = configs.size();
  ReplicationTable table;
  table.reps = reps;
  table.seed = base_seed;
  table.per_rep.assign(nc, std::vector<std::optional<Metrics>>(static_cast<std::size_t>(reps)));
  std::vector<std::vector<std::string>> errors(nc, std::vector<std::string>(static_cast<std::size_t>(reps)));

  auto run_one = [&](int r) {
    DgpSpec dgp;
    dgp.variant = spec.variant;
    dgp.n = spec.n;
    dgp.missing_fraction = spec.missing_fraction;
    dgp.seed = replication_seed(base_seed, r);
    dgp.coefficients = spec.coefficients;
    const auto ur = static_cast<std::size_t>(r);
    std::optional<Dataset> ds;
    std::optional<EvaluationSample> sample;
    try {
      ds = simulate(dgp);
      sample.emplace(dgp, derive_seed(dgp.seed, Stream::kEvaluation), spec.eval_n);
    } catch (const std::exception& e) {
      for (std::size_t c = 0; c < nc; ++c) errors[c][ur] = e.what();
      return;
    }
    for (std::size_t c = 0; c < nc; ++c) {
      try {
        const FitResult f = fit(*ds, configs[c]);
        Metrics m;
        m.effect = f.effect_at_fit;
        m.loglik = f.loglik;
        m.kl_conditional = sample->kl_conditional(f.params);
        m.kl_joint = kl_estimate(*sample, *ds, f, KlScope::kFullJoint);
        m.mse = mse(*ds, f.predictions);
        table.per_rep[c][ur] = m;
      } catch (const std::exception& e) {
        errors[c][ur] = e.what();
      }
    }
  };

  if (spec.jobs == 1) {
    for (int r = 0; r < reps; ++r) run_one(r);
  } else {
    boost::asio::thread_pool pool(static_cast<std::size_t>(spec.jobs));
    for (int r = 0; r < reps; ++r) boost::asio::post(pool, [&run_one, r] { run_one(r); });
    pool.join();
  }

  // Aggregate in replication order so the result does not depend on jobs.
  for (std::size_t c = 0; c < nc; ++c) {
    ConfigSummary row;
    row.config = configs[c];
    row.label = config_label(configs[c]);
    std::vector<const Metrics*> ok;
    for (int r = 0; r < reps; ++r) {
      const auto& m = table.per_rep[c][static_cast<std::size_t>(r)];
      if (m) {
        ok.push_back(&*m);
      } else {
        row.failures.push_back("rep " + std::to_string(r) + ": " +
                               errors[c][static_cast<std::size_t>(r)]);
      }
    }
    row.ok = static_cast<int>(ok.size());
    row.failed = reps - row.ok;
    auto summarize = [&](double Metrics::*field, double& mean, double& se) {
      mean = se = std::numeric_limits<double>::quiet_NaN();
      if (ok.empty()) return;
      KahanSum s;
      for (const Metrics* m : ok) s(m->*field);
      const double k = static_cast<double>(ok.size());
      mean = acc::sum_kahan(s) / k;
      if (ok.size() < 2) {
        se = 0.0;
        return;
      }
      KahanSum v;
      for (const Metrics* m : ok) v((m->*field - mean) * (m->*field - mean));
      se = std::sqrt(acc::sum_kahan(v) / (k - 1.0) / k);
    };
    summarize(&Metrics::effect, row.mean.effect, row.se.effect);
    summarize(&Metrics::loglik, row.mean.loglik, row.se.loglik);
    summarize(&Metrics::kl_conditional, row.mean.kl_conditional, row.se.kl_conditional);
    summarize(&Metrics::kl_joint, row.mean.kl_joint, row.se.kl_joint);
    summarize(&Metrics::mse, row.mean.mse, row.se.mse);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace fairmle
