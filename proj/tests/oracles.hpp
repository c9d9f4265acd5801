#pragma once

// Brute-force references shared by the unit tests and the acceptance runner.

#include "ewfs/ewmc.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

namespace ewfs::test {

/// Random M-stage subproblem: n <= max_n, d <= max_d, r <= max_r, m <= max_m.
struct EwmcInstance {
  IncompleteDataset data;
  ImputationEnsemble ensemble;
  Matrix x_hat;
  Vector v;
  double gamma;
  Index r;
};

inline EwmcInstance random_ewmc_instance(std::uint64_t seed, Index max_n = 20, Index max_d = 10, Index max_r = 3,
                                         int max_m = 3) {
  Rng rng(seed);
  const Index d = 2 + static_cast<Index>(rng() % static_cast<std::uint64_t>(max_d - 1));
  const Index n = d + static_cast<Index>(rng() % static_cast<std::uint64_t>(max_n - d + 1));
  const Index r = 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(std::min(max_r, d)));
  const int m = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_m));
  EwmcInstance inst;
  inst.data = random_incomplete(n, d, 0.2, seed);
  for (int i = 0; i < m; ++i) {
    inst.ensemble.members.push_back(
        project_observed(inst.data, uniform_matrix(n, d, seed * 31 + static_cast<std::uint64_t>(i))));
    inst.ensemble.method_tags.push_back("m" + std::to_string(i));
  }
  inst.x_hat = project_observed(inst.data, uniform_matrix(n, d, seed + 999));
  inst.v = uniform_matrix(d, 1, seed + 7).col(0);
  inst.gamma = 0.05 + 3.0 * static_cast<double>(rng() % 100) / 100.0;
  inst.r = r;
  return inst;
}

/// Central differences, h = 1e-5.
inline Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  const double h = 1e-5;
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    Vector a = x, b = x;
    a(k) += h;
    b(k) -= h;
    g(k) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

/// Largest numeric gradient component over the column subproblems of H.
inline double max_h_gradient(const EwmcInstance& inst, const Matrix& G, const Matrix& H) {
  double worst = 0;
  for (Index q = 0; q < H.cols(); ++q) {
    auto f = [&](const Vector& h) {
      double s = 0;
      for (const auto& m : inst.ensemble.members) s += (G * h - m.col(q)).squaredNorm();
      s /= static_cast<double>(inst.ensemble.size());
      return s + inst.v(q) * inst.v(q) * (G * h - inst.x_hat.col(q)).squaredNorm() + inst.gamma * h.squaredNorm();
    };
    worst = std::max(worst, numeric_gradient(f, H.col(q)).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Largest numeric gradient component over the row subproblems of G.
inline double max_g_gradient(const EwmcInstance& inst, const Matrix& G, const Matrix& H) {
  double worst = 0;
  for (Index p = 0; p < G.rows(); ++p) {
    auto f = [&](const Vector& g) {
      const RowVector row = g.transpose() * H;
      double s = 0;
      for (const auto& m : inst.ensemble.members) s += (row - m.row(p)).squaredNorm();
      s /= static_cast<double>(inst.ensemble.size());
      return s + ((row - inst.x_hat.row(p)) * inst.v.asDiagonal()).squaredNorm() + inst.gamma * g.squaredNorm();
    };
    const Vector g = G.row(p).transpose();
    worst = std::max(worst, numeric_gradient(f, g).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Exhaustive partial-distance kNN imputation of cell (i, q): every other row
/// that observes q is ranked by its rescaled squared distance, ties by row.
inline double knn_impute_oracle(const IncompleteDataset& data, Index i, Index q, int k) {
  const Index n = data.rows(), d = data.cols();
  std::vector<std::pair<double, Index>> all;
  for (Index j = 0; j < n; ++j) {
    if (j == i || !data.mask(j, q)) continue;
    double sq = 0;
    int shared = 0;
    for (Index l = 0; l < d; ++l)
      if (data.mask(i, l) && data.mask(j, l)) {
        sq += (data.values(i, l) - data.values(j, l)) * (data.values(i, l) - data.values(j, l));
        ++shared;
      }
    if (shared > 0) all.emplace_back(sq * static_cast<double>(d) / shared, j);
  }
  if (all.empty()) {
    double s = 0;
    int c = 0;
    for (Index j = 0; j < n; ++j)
      if (data.mask(j, q)) s += data.values(j, q), ++c;
    return c ? s / c : 0.0;
  }
  std::sort(all.begin(), all.end());
  double s = 0;
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  for (std::size_t t = 0; t < take; ++t) s += data.values(all[t].second, q);
  return s / static_cast<double>(take);
}

/// Full sort on (distance, row); votes by count, then summed distance, then id.
inline Labels knn_classify_oracle(const Matrix& trX, const Labels& trY, const Matrix& teX, int k) {
  Labels out;
  for (Index t = 0; t < teX.rows(); ++t) {
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < trX.rows(); ++i) order.emplace_back((trX.row(i) - teX.row(t)).norm(), i);
    std::sort(order.begin(), order.end());
    std::map<int, std::pair<int, double>> votes;
    for (std::size_t j = 0; j < static_cast<std::size_t>(k); ++j) {
      auto& v = votes[trY[static_cast<std::size_t>(order[j].second)]];
      v.first += 1;
      v.second += order[j].first;
    }
    int best = -1;
    std::pair<int, double> best_vote{-1, 0.0};
    for (const auto& [c, v] : votes)
      if (v.first > best_vote.first || (v.first == best_vote.first && v.second < best_vote.second)) {
        best = c;
        best_vote = v;
      }
    out.push_back(best);
  }
  return out;
}

/// Two-sided signed-rank p-value from all 2^n sign patterns of the mid-ranks.
inline double wilcoxon_exact_p(const std::vector<double>& d) {
  std::vector<double> nz;
  for (double x : d)
    if (x != 0.0) nz.push_back(x);
  const std::size_t n = nz.size();
  if (n == 0) return 1.0;
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    int less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      less += std::abs(nz[j]) < std::abs(nz[i]);
      equal += std::abs(nz[j]) == std::abs(nz[i]);
    }
    rank[i] = less + (equal + 1) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0) observed += rank[i];
  const double centre = static_cast<double>(n * (n + 1)) / 4.0;
  const double dev = std::abs(observed - centre);
  long hits = 0;
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1ul) t += rank[i];
    hits += std::abs(t - centre) >= dev - 1e-9;
  }
  return static_cast<double>(hits) / static_cast<double>(1ul << n);
}

/// Two classes; feature 0 separates them (centres 0 and 1, sd 0.1), feature 1
/// is uniform noise.
inline std::pair<Matrix, Labels> separating_set(std::uint64_t seed, Index n = 40) {
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix X(n, 2);
  Labels y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(i % 2);
    X(i, 0) = static_cast<double>(i % 2) + noise(rng);
    X(i, 1) = u(rng);
  }
  return {X, y};
}

}  // namespace ewfs::test
