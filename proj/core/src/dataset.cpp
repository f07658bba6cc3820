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

#include "fairmle/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "fairmle/error.hpp"
#include "fairmle/rng.hpp"

namespace fairmle {
namespace {

double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

bool same_double(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

Dataset::Dataset(Graph graph, std::vector<double> x, std::vector<std::uint8_t> a,
                 std::vector<std::uint8_t> m, std::vector<std::uint8_t> l,
                 std::vector<std::optional<double>> y)
    : graph_(graph),
      x_(std::move(x)),
      a_(std::move(a)),
      m_(std::move(m)),
      l_(std::move(l)),
      y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n == 0) throw SchemaError("no rows");
  if (a_.size() != n || m_.size() != n || y_.size() != n)
    throw SchemaError("column lengths differ");
  if (graph_ == Graph::kTwoMediator ? l_.size() != n : !l_.empty())
    throw SchemaError("l column must be present for all rows or none");
  for (std::size_t i = 0; i < n; ++i) {
    if (a_[i] > 1 || m_[i] > 1 || (has_l() && l_[i] > 1))
      throw SchemaError("a, m and l must be 0 or 1");
    if (!std::isfinite(x_[i])) throw SchemaError("x must be finite");
    if (y_[i] && !std::isfinite(*y_[i])) throw SchemaError("y must be finite");
  }
  n_observed_ = static_cast<std::size_t>(
      std::count_if(y_.begin(), y_.end(), [](const auto& v) { return v.has_value(); }));
}

void Dataset::set_heldout(std::vector<double> truth) {
  if (!truth.empty() && truth.size() != size())
    throw InvalidArgument("held-out outcome vector has wrong length");
  heldout_ = std::move(truth);
}

bool operator==(const Dataset& lhs, const Dataset& rhs) {
  if (lhs.graph_ != rhs.graph_ || lhs.x_ != rhs.x_ || lhs.a_ != rhs.a_ ||
      lhs.m_ != rhs.m_ || lhs.l_ != rhs.l_ || lhs.y_ != rhs.y_)
    return false;
  if (lhs.heldout_.size() != rhs.heldout_.size()) return false;
  for (std::size_t i = 0; i < lhs.heldout_.size(); ++i)
    if (!same_double(lhs.heldout_[i], rhs.heldout_[i])) return false;
  return true;
}

DgpCoefficients DgpCoefficients::published(Graph g) {
  DgpCoefficients c;
  c.graph = g;
  c.a = Eigen::Vector2d(-0.5, -0.5);
  c.m.resize(4);
  c.m << -0.5, -1.0, -0.5, 1.0;
  if (g == Graph::kOneMediator) {
    // 1, X, A, M, A*X, X*M, A*M, A*X*M
    c.y.resize(8);
    c.y << 1.0, 1.0, 2.0, 1.0, -2.0, 3.0, 1.0, 1.0;
  } else {
    // 1, X, A, M, A*X, A*M, A*X*M
    c.l.resize(7);
    c.l << -0.5, -1.0, -0.5, -0.25, 1.0, 0.5, 0.25;
    // 1, X, A, M, L, A*X, A*M, A*L, A*M*L
    c.y.resize(9);
    c.y << 1.0, 1.0, 2.0, 1.0, 0.5, -2.0, 1.0, 1.0, 1.0;
  }
  c.sigma_y = 1.0;
  return c;
}

const DgpCoefficients& DgpSpec::truth() const {
  static const DgpCoefficients one = DgpCoefficients::published(Graph::kOneMediator);
  static const DgpCoefficients two = DgpCoefficients::published(Graph::kTwoMediator);
  if (coefficients) return *coefficients;
  return variant == Graph::kOneMediator ? one : two;
}

void DgpSpec::validate() const {
  if (n < 1) throw InvalidArgument("n must be at least 1");
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0))
    throw InvalidArgument("missing fraction must lie in [0, 1)");
  if (coefficients) {
    const ModelDesigns d = ModelDesigns::correct(variant);
    const auto& c = *coefficients;
    if (c.graph != variant || c.a.size() != d.a.size() ||
        c.m.size() != d.m.size() || c.l.size() != d.l.size() ||
        c.y.size() != d.y.size() || !(c.sigma_y > 0.0))
      throw InvalidArgument("DGP coefficients do not match the variant");
  }
}

Dataset simulate(const DgpSpec& spec) {
  spec.validate();
  const DgpCoefficients& c = spec.truth();
  const ModelDesigns d = ModelDesigns::correct(spec.variant);
  const bool two = spec.variant == Graph::kTwoMediator;
  const std::size_t n = spec.n;

  Rng rx(spec.seed, Stream::kCovariate);
  Rng ra(spec.seed, Stream::kSensitive);
  Rng rm(spec.seed, Stream::kMediatorM);
  Rng rl(spec.seed, Stream::kMediatorL);
  Rng ry(spec.seed, Stream::kOutcomeNoise);

  std::vector<double> x(n);
  std::vector<std::uint8_t> a(n), m(n), l(two ? n : 0);
  std::vector<std::optional<double>> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    Covariates cv;
    cv.x = x[i] = rx.normal();
    a[i] = ra.bernoulli(expit(d.a.dot(c.a, cv)));
    cv.a = a[i];
    m[i] = rm.bernoulli(expit(d.m.dot(c.m, cv)));
    cv.m = m[i];
    if (two) {
      l[i] = rl.bernoulli(expit(d.l.dot(c.l, cv)));
      cv.l = l[i];
    }
    y[i] = d.y.dot(c.y, cv) + c.sigma_y * ry.normal();
  }
  Dataset full(spec.variant, std::move(x), std::move(a), std::move(m),
               std::move(l), std::move(y));
  if (spec.missing_fraction == 0.0) return full;
  return mask_outcomes_mar(full, spec.missing_fraction,
                           derive_seed(spec.seed, Stream::kMissingness));
}

Dataset mask_outcomes_mar(const Dataset& ds, double fraction,
                          std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0))
    throw InvalidArgument("missing fraction must lie in [0, 1)");
  const std::size_t n = ds.size();
  if (ds.observed_count() != n)
    throw InvalidArgument("dataset already has missing outcomes");
  const auto k = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 1e-9));
  if (k == 0) return ds;

  // Partial Fisher-Yates: the first k entries of idx are the masked rows.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
    std::swap(idx[j], idx[pick]);
  }

  std::vector<double> x(n);
  std::vector<std::uint8_t> a(n), m(n), l(ds.has_l() ? n : 0);
  std::vector<std::optional<double>> y(n);
  std::vector<double> truth(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = ds.x(i);
    a[i] = static_cast<std::uint8_t>(ds.a(i));
    m[i] = static_cast<std::uint8_t>(ds.m(i));
    if (ds.has_l()) l[i] = static_cast<std::uint8_t>(ds.l(i));
    y[i] = ds.y(i);
  }
  for (std::size_t j = 0; j < k; ++j) {
    truth[idx[j]] = *y[idx[j]];
    y[idx[j]].reset();
  }
  Dataset out(ds.graph(), std::move(x), std::move(a), std::move(m),
              std::move(l), std::move(y));
  out.set_heldout(std::move(truth));
  return out;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

double parse_real(std::string_view f, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
  if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty())
    throw SchemaError("line " + std::to_string(line_no) + ": bad number '" +
                      std::string(f) + "'");
  return v;
}

std::uint8_t parse_binary(std::string_view f, const char* col,
                          std::size_t line_no) {
  if (f == "0") return 0;
  if (f == "1") return 1;
  throw SchemaError("line " + std::to_string(line_no) + ": column " + col +
                    " must be 0 or 1, got '" + std::string(f) + "'");
}

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("no rows");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  Graph graph;
  if (line == "x,a,m,y,r") {
    graph = Graph::kOneMediator;
  } else if (line == "x,a,m,l,y,r") {
    graph = Graph::kTwoMediator;
  } else {
    throw SchemaError("unexpected header '" + line + "'");
  }
  const bool two = graph == Graph::kTwoMediator;
  const std::size_t width = two ? 6 : 5;

  std::vector<double> x;
  std::vector<std::uint8_t> a, m, l;
  std::vector<std::optional<double>> y;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_fields(line);
    if (f.size() != width)
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(width) + " fields");
    std::size_t k = 0;
    x.push_back(parse_real(f[k++], line_no));
    a.push_back(parse_binary(f[k++], "a", line_no));
    m.push_back(parse_binary(f[k++], "m", line_no));
    if (two) l.push_back(parse_binary(f[k++], "l", line_no));
    std::string_view yf = f[k++];
    const std::uint8_t r = parse_binary(f[k++], "r", line_no);
    if (r == 1) {
      if (yf.empty())
        throw SchemaError("line " + std::to_string(line_no) +
                          ": y missing although r = 1");
      y.emplace_back(parse_real(yf, line_no));
    } else {
      if (!yf.empty())
        throw SchemaError("line " + std::to_string(line_no) +
                          ": y present although r = 0");
      y.emplace_back(std::nullopt);
    }
  }
  if (x.empty()) throw SchemaError("no rows");
  return Dataset(graph, std::move(x), std::move(a), std::move(m), std::move(l),
                 std::move(y));
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path.string());
  out << (ds.has_l() ? "x,a,m,l,y,r\n" : "x,a,m,y,r\n");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << format_real(ds.x(i)) << ',' << ds.a(i) << ',' << ds.m(i) << ',';
    if (ds.has_l()) out << ds.l(i) << ',';
    if (ds.r(i)) out << format_real(*ds.y(i));
    out << ',' << (ds.r(i) ? 1 : 0) << '\n';
  }
  if (!out) throw SchemaError("write failed for " + path.string());
}

}  // namespace fairmle
