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

#include <algorithm>
#include <cmath>
#include <optional>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "fairmle/dataset.hpp"
#include "fairmle/error.hpp"
#include "fairmle/eval.hpp"
#include "fairmle/train.hpp"

namespace {

using Json = nlohmann::ordered_json;
using namespace fairmle;

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

// Bad paths, unreadable files and similar.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path);
}

// Hash git assigns to a blob with this content.
std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr))
    throw std::runtime_error("SHA-1 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json metrics_json(const Metrics& m, KlScope scope) {
  return Json{{"effect", number_or_null(m.effect)},
              {"loglik", number_or_null(m.loglik)},
              {"kl", number_or_null(m.kl(scope))},
              {"mse", number_or_null(m.mse)}};
}

struct Manifest {
  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::string input_hash;
  Json metrics = Json::array();

  void write(const std::string& path) const {
    const Json j{{"command", command},
                 {"config", config},
                 {"seed", seed},
                 {"input_hash", input_hash},
                 {"timestamp", utc_timestamp()},
                 {"metrics", metrics}};
    write_file(path, j.dump(2) + "\n");
  }
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("FAIRMLE_SEED")) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      if (used == std::char_traits<char>::length(env)) return v;
    } catch (const std::exception&) {
    }
    throw CLI::ValidationError("FAIRMLE_SEED", "not an unsigned integer: " + std::string(env));
  }
  return 1;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
  std::string variant = "one-mediator";
  std::size_t n = 5000;
  double missing = 0.2;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string manifest;
};

int run_simulate(const SimulateOpts& o) {
  DgpSpec spec;
  spec.variant = parse_graph(o.variant);
  spec.n = o.n;
  spec.missing_fraction = o.missing;
  spec.seed = o.seed.value_or(default_seed());
  const Dataset ds = simulate(spec);
  save_csv(ds, o.out);

  Manifest m;
  m.command = "simulate";
  m.seed = spec.seed;
  m.config = Json{{"variant", std::string(to_string(spec.variant))},
                  {"n", spec.n},
                  {"missing", spec.missing_fraction},
                  {"seed", spec.seed},
                  {"out", o.out}};
  m.input_hash = git_blob_hash(m.config.dump());
  m.metrics.push_back(Json{{"rows", ds.size()}, {"observed", ds.observed_count()},
                           {"output_hash", git_blob_hash(read_file(o.out))}});
  m.write(o.manifest.empty() ? o.out + ".manifest.json" : o.manifest);
  std::cerr << "wrote " << ds.size() << " rows (" << ds.size() - ds.observed_count()
            << " without outcome) to " << o.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOpts {
  std::string method;
  std::string estimator = "gformula";
  double epsilon = 0.05;
  std::string in;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string manifest;
};

int run_fit(const FitOpts& o) {
  const std::string input = read_file(o.in);
  const Dataset ds = load_csv(o.in);
  TrainConfig cfg;
  cfg.method = parse_method(o.method);
  cfg.estimator = parse_estimator(o.estimator);
  cfg.epsilon_lo = -o.epsilon;
  cfg.epsilon_hi = o.epsilon;
  cfg.graph = ds.graph();
  const std::uint64_t seed = o.seed.value_or(default_seed());

  const FitResult f = fit(ds, cfg);
  double pse = 0.0;
  if (f.reparam) {
    pse = pse_of(*f.reparam);
  } else {
    const Eigen::VectorXd* w = f.el ? &f.el->weights : nullptr;
    pse = pse_gformula(ds, f.params, PseFunctional::unfair_default(ds.graph()), w).value;
  }
  const Json result{{"method", std::string(to_string(cfg.method))},
                    {"estimator", std::string(to_string(f.estimator))},
                    {"effect", f.effect_at_fit},
                    {"pse", pse},
                    {"loglik", f.loglik},
                    {"kl", nullptr},
                    {"mse", nullptr},
                    {"se", Json::object()},
                    {"reps", 1},
                    {"seed", seed},
                    {"rows", ds.size()},
                    {"observed", ds.observed_count()},
                    {"el_logterm", f.el ? Json(f.el_logterm) : Json(nullptr)},
                    {"iterations", f.diagnostics.iterations},
                    {"converged", f.diagnostics.converged},
                    {"constraint_residual", f.diagnostics.constraint_residual}};
  const std::string text = result.dump(2) + "\n";
  std::cout << text;
  if (!o.out.empty()) write_file(o.out, text);

  Manifest m;
  m.command = "fit";
  m.seed = seed;
  m.config = Json{{"method", o.method}, {"estimator", o.estimator},
                  {"epsilon", o.epsilon}, {"in", o.in}, {"out", o.out}};
  m.input_hash = git_blob_hash(input);
  m.metrics.push_back(result);
  m.write(!o.manifest.empty() ? o.manifest
          : !o.out.empty()    ? o.out + ".manifest.json"
                              : o.in + ".fit.manifest.json");
  return kExitOk;
}

// --------------------------------------------------------------- reproduce

struct ReproduceOpts {
  std::string table;
  int reps = 100;
  std::optional<std::uint64_t> seed;
  std::size_t n = 5000;
  double missing = 0.2;
  double epsilon = 0.05;
  std::size_t eval_n = 100000;
  int jobs = 1;
  std::string json;
  std::string manifest;
};

std::vector<TrainConfig> table_configs(const std::string& table, double eps) {
  std::vector<TrainConfig> out;
  auto add = [&](Method m, Estimator e, Graph g) {
    TrainConfig c;
    c.method = m;
    c.estimator = e;
    c.graph = g;
    c.epsilon_lo = -eps;
    c.epsilon_hi = eps;
    out.push_back(c);
  };
  if (table == "table1") {
    add(Method::kUnconstrained, Estimator::kGFormula, Graph::kOneMediator);
    for (Estimator e : {Estimator::kGFormula, Estimator::kIpw, Estimator::kMixed, Estimator::kAipw})
      add(Method::kConstrainedStandard, e, Graph::kOneMediator);
    return out;
  }
  const Graph g = table == "sim3" ? Graph::kTwoMediator : Graph::kOneMediator;
  for (Method m : {Method::kUnconstrained, Method::kConstrainedStandard, Method::kReparam,
                   Method::kHybrid, Method::kHybridReparam})
    add(m, Estimator::kGFormula, g);
  return out;
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

void print_table(const ReplicationTable& t, KlScope scope, std::ostream& os) {
  os << std::left << std::setw(14) << "method" << std::right << std::setw(18) << "effect"
     << std::setw(14) << "loglik" << std::setw(18) << "KL" << std::setw(18) << "MSE"
     << std::setw(8) << "failed" << "\n";
  for (const ConfigSummary& r : t.rows) {
    auto cell = [](double m, double se, int d) { return fixed(m, d) + " (" + fixed(se, d) + ")"; };
    os << std::left << std::setw(14) << r.label << std::right << std::setw(18)
       << cell(r.mean.effect, r.se.effect, 3) << std::setw(14) << fixed(r.mean.loglik, 1)
       << std::setw(18) << cell(r.mean.kl(scope), r.se.kl(scope), 3) << std::setw(18)
       << cell(r.mean.mse, r.se.mse, 3) << std::setw(8) << r.failed << "\n";
  }
  os << "KL scope: " << to_string(scope) << ", reps: " << t.reps << ", seed: " << t.seed << "\n";
}

int run_reproduce(const ReproduceOpts& o) {
  const std::vector<TrainConfig> configs = table_configs(o.table, o.epsilon);
  ExperimentSpec spec;
  spec.variant = configs.front().graph;
  spec.n = o.n;
  spec.missing_fraction = o.missing;
  spec.eval_n = o.eval_n;
  spec.jobs = o.jobs;
  const KlScope scope = o.table == "table1" ? KlScope::kConditionalGivenX : KlScope::kFullJoint;
  const std::uint64_t seed = o.seed.value_or(default_seed());
  const ReplicationTable t = run_replications(o.reps, seed, configs, spec);

  Json rows = Json::array();
  for (const ConfigSummary& r : t.rows) {
    Json row{{"method", std::string(to_string(r.config.method))},
             {"estimator", std::string(to_string(r.config.estimator))},
             {"label", r.label}};
    const Json mean = metrics_json(r.mean, scope);
    for (const auto& [k, v] : mean.items()) row[k] = v;
    row["se"] = metrics_json(r.se, scope);
    row["reps"] = t.reps;
    row["seed"] = t.seed;
    row["ok"] = r.ok;
    row["failed"] = r.failed;
    row["failures"] = r.failures;
    rows.push_back(row);
  }
  const Json result{{"table", o.table},
                    {"variant", std::string(to_string(spec.variant))},
                    {"kl_scope", std::string(to_string(scope))},
                    {"n", o.n},
                    {"missing", o.missing},
                    {"epsilon", o.epsilon},
                    {"reps", t.reps},
                    {"seed", t.seed},
                    {"rows", rows}};
  print_table(t, scope, std::cout);
  if (!o.json.empty()) write_file(o.json, result.dump(2) + "\n");

  Manifest m;
  m.command = "reproduce " + o.table;
  m.seed = seed;
  m.config = Json{{"table", o.table}, {"reps", o.reps}, {"seed", seed}, {"n", o.n},
                  {"missing", o.missing}, {"epsilon", o.epsilon}, {"eval_n", o.eval_n},
                  {"jobs", o.jobs}, {"json", o.json}};
  m.input_hash = git_blob_hash(m.config.dump());
  m.metrics = rows;
  m.write(!o.manifest.empty() ? o.manifest
          : !o.json.empty()   ? o.json + ".manifest.json"
                              : "fairmle-" + o.table + ".manifest.json");
  bool any_failed = false;
  for (const ConfigSummary& r : t.rows) any_failed = any_failed || r.ok == 0;
  return any_failed ? kExitNumeric : kExitOk;
}

// Moves `--config FILE` entries in front of the remaining flags, so that flags
// given on the command line override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      continue;
    }
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot read config file " + path);
    for (const CLI::ConfigItem& item : CLI::ConfigINI().from_file(path)) {
      if (item.name == "++" || item.name == "--") continue;
      std::string value;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
      from_file.push_back("--" + item.name + "=" + value);
    }
    --i;
  }
  // Subcommand (and its positional) first, then file entries, then flags.
  std::vector<std::string> out;
  std::size_t lead = 0;
  while (lead < args.size() && args[lead].rfind("-", 0) != 0) out.push_back(args[lead++]);
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), args.begin() + static_cast<std::ptrdiff_t>(lead), args.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fair prediction by constrained likelihood: simulation, fitting and "
               "replication studies"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  app.add_option("--config", config_path, "Flat key=value file mirroring the flags");

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a simulation DGP");
  sim->add_option("--variant", so.variant, "one-mediator | two-mediator")
      ->check(CLI::IsMember({"one-mediator", "two-mediator"}));
  sim->add_option("--n", so.n, "Rows")->check(CLI::PositiveNumber);
  sim->add_option("--missing", so.missing, "Fraction of outcomes to mask, in [0, 1)")
      ->check(CLI::Range(0.0, 0.999999999));
  sim->add_option("--seed", so.seed, "Seed (default: FAIRMLE_SEED, else 1)");
  sim->add_option("--out", so.out, "Output CSV")->required();
  sim->add_option("--manifest", so.manifest, "Manifest path (default: <out>.manifest.json)");

  FitOpts fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit one method to a CSV dataset");
  fit_cmd->add_option("--method", fo.method, "m0 | m1 | m2 | m3 | m4")
      ->required()
      ->check(CLI::IsMember({"m0", "m1", "m2", "m3", "m4"}, CLI::ignore_case));
  fit_cmd->add_option("--estimator", fo.estimator, "gformula | ipw | mixed | aipw (m0, m1)")
      ->check(CLI::IsMember({"gformula", "ipw", "mixed", "aipw"}));
  fit_cmd->add_option("--epsilon", fo.epsilon, "Half-width of the effect box")
      ->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--in", fo.in, "Input CSV")->required();
  fit_cmd->add_option("--out", fo.out, "Also write the JSON summary here");
  fit_cmd->add_option("--seed", fo.seed, "Recorded in the output");
  fit_cmd->add_option("--manifest", fo.manifest, "Manifest path");

  ReproduceOpts ro;
  auto* rep = app.add_subcommand("reproduce", "Run a replication study");
  rep->add_option("table", ro.table, "table1 | table2 | sim3")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "sim3"}));
  rep->add_option("--reps", ro.reps, "Replications")->check(CLI::PositiveNumber);
  rep->add_option("--seed", ro.seed, "Base seed (default: FAIRMLE_SEED, else 1)");
  rep->add_option("--n", ro.n, "Rows per replication")->check(CLI::PositiveNumber);
  rep->add_option("--missing", ro.missing, "Masked outcome fraction")
      ->check(CLI::Range(0.0, 0.999999999));
  rep->add_option("--epsilon", ro.epsilon, "Half-width of the effect box")
      ->check(CLI::NonNegativeNumber);
  rep->add_option("--eval-n", ro.eval_n, "Evaluation sample size for KL")
      ->check(CLI::PositiveNumber);
  rep->add_option("--jobs", ro.jobs, "Worker threads")->check(CLI::PositiveNumber);
  rep->add_option("--json", ro.json, "Write the JSON result here");
  rep->add_option("--manifest", ro.manifest, "Manifest path");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (*sim) return run_simulate(so);
    if (*fit_cmd) return run_fit(fo);
    return run_reproduce(ro);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    if (!e.trace().empty()) std::cerr << "trace: " << e.trace() << "\n";
    return kExitNumeric;
  } catch (const SeparationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const SingularError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const PositivityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const InfeasibleError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
