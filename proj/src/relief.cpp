#include "ewfs/relief.hpp"

#include "ewfs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ewfs {

namespace {

int count_classes(const Matrix& X, const Labels& y) {
  if (static_cast<Index>(y.size()) != X.rows()) throw DataError("label count does not match row count");
  if (X.rows() < 2) throw DataError("feature weighting needs at least two samples");
  int num_classes = 0;
  for (int label : y) {
    if (label < 0) throw DataError("negative class id");
    num_classes = std::max(num_classes, label + 1);
  }
  std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
  for (int label : y) present[static_cast<std::size_t>(label)] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw DataError("feature weighting needs at least two classes");
  return num_classes;
}

std::vector<Index> visit_order(Index n, int iterations, std::uint64_t seed) {
  if (iterations < 0) throw ConfigError("relief iterations must be positive");
  const auto total = static_cast<std::size_t>(iterations == 0 ? n : iterations);
  Rng rng(seed);
  std::vector<Index> order;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  while (order.size() < total) {
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto take = std::min(perm.size(), total - order.size());
    order.insert(order.end(), perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return order;
}

// Vectorised diff over all features.
class DiffKernel {
 public:
  explicit DiffKernel(const FeatureRanges& ranges) : discrete_(ranges.discrete) {
    const Index d = ranges.min.size();
    inv_span_ = Vector::Zero(d);
    for (Index l = 0; l < d; ++l) {
      const double span = ranges.max(l) - ranges.min(l);
      if (span > 0) inv_span_(l) = 1.0 / span;
    }
    for (std::size_t l = 0; l < discrete_.size(); ++l)
      if (discrete_[l]) discrete_idx_.push_back(static_cast<Index>(l));
  }

  RowVector operator()(const RowVector& a, const RowVector& b) const {
    RowVector out = (a - b).cwiseAbs().cwiseProduct(inv_span_.transpose());
    for (Index l : discrete_idx_) out(l) = a(l) == b(l) ? 0.0 : 1.0;
    return out;
  }

 private:
  std::vector<bool> discrete_;
  std::vector<Index> discrete_idx_;
  Vector inv_span_;
};

}  // namespace

FeatureRanges FeatureRanges::of(const Matrix& X, std::vector<bool> discrete) {
  if (discrete.empty()) discrete.assign(static_cast<std::size_t>(X.cols()), false);
  if (static_cast<Index>(discrete.size()) != X.cols()) throw DataError("discrete flag count mismatch");
  FeatureRanges r;
  if (X.rows() == 0) {
    r.min = r.max = Vector::Zero(X.cols());
  } else {
    r.min = X.colwise().minCoeff().transpose();
    r.max = X.colwise().maxCoeff().transpose();
  }
  r.discrete = std::move(discrete);
  return r;
}

double diff(const RowVector& xi, const RowVector& xj, Index l, const FeatureRanges& ranges) {
  if (ranges.discrete[static_cast<std::size_t>(l)]) return xi(l) == xj(l) ? 0.0 : 1.0;
  const double span = ranges.max(l) - ranges.min(l);
  if (!(span > 0)) return 0.0;
  return std::abs(xi(l) - xj(l)) / span;
}

NeighborSets neighbor_sets(Index i, const Labels& y, int num_classes) {
  NeighborSets sets;
  sets.misses.resize(static_cast<std::size_t>(num_classes));
  const int own = y[static_cast<std::size_t>(i)];
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (static_cast<Index>(j) == i) continue;
    if (y[j] == own)
      sets.hits.push_back(static_cast<Index>(j));
    else
      sets.misses[static_cast<std::size_t>(y[j])].push_back(static_cast<Index>(j));
  }
  return sets;
}

AverageDistances average_distances(Index i, const Matrix& X, const Labels& y) {
  const int num_classes = count_classes(X, y);
  const auto sets = neighbor_sets(i, y, num_classes);
  auto mean_distance = [&](const std::vector<Index>& members) {
    double sum = 0.0;
    for (Index j : members) sum += (X.row(i) - X.row(j)).norm();
    return sum / static_cast<double>(members.size());
  };
  AverageDistances out;
  if (!sets.hits.empty()) out.hit = mean_distance(sets.hits);
  out.miss.assign(static_cast<std::size_t>(num_classes), std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < num_classes; ++c) {
    const auto& members = sets.misses[static_cast<std::size_t>(c)];
    if (!members.empty()) out.miss[static_cast<std::size_t>(c)] = mean_distance(members);
  }
  return out;
}

ReliefResult mu_relief_a(const Matrix& X, const Labels& y, const ReliefConfig& cfg,
                         const std::vector<bool>& discrete) {
  const int num_classes = count_classes(X, y);
  const Index n = X.rows(), d = X.cols();
  const DiffKernel kernel(FeatureRanges::of(X, discrete));

  std::vector<double> class_size(static_cast<std::size_t>(num_classes), 0.0);
  for (int label : y) class_size[static_cast<std::size_t>(label)] += 1.0;

  ReliefResult result{Vector::Ones(d), 0};
  std::vector<double> dist(static_cast<std::size_t>(n));
  std::vector<double> class_sum(static_cast<std::size_t>(num_classes));
  for (Index i : visit_order(n, cfg.iterations, cfg.seed)) {
    const int own = y[static_cast<std::size_t>(i)];
    std::fill(class_sum.begin(), class_sum.end(), 0.0);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      dist[static_cast<std::size_t>(j)] = (X.row(i) - X.row(j)).norm();
      class_sum[static_cast<std::size_t>(y[static_cast<std::size_t>(j)])] += dist[static_cast<std::size_t>(j)];
    }
    const double hit_count = class_size[static_cast<std::size_t>(own)] - 1.0;
    if (hit_count == 0.0) ++result.skipped_hit_terms;

    RowVector delta = RowVector::Zero(d);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto c = static_cast<std::size_t>(y[static_cast<std::size_t>(j)]);
      const double dij = dist[static_cast<std::size_t>(j)];
      double coeff;
      if (static_cast<int>(c) == own) {
        const double mean_hit = class_sum[c] / hit_count;
        coeff = -std::abs(dij - mean_hit) / hit_count;
      } else {
        const double mean_miss = class_sum[c] / class_size[c];
        coeff = std::abs(dij - mean_miss) / class_size[c];
      }
      delta += coeff * kernel(X.row(i), X.row(j));
    }
    result.weights += delta.transpose();
  }
  return result;
}

ReliefResult relieff(const Matrix& X, const Labels& y, const ReliefConfig& cfg,
                     const std::vector<bool>& discrete) {
  const int num_classes = count_classes(X, y);
  if (cfg.relieff_k < 1) throw ConfigError("relieff_k must be positive");
  const Index n = X.rows(), d = X.cols();
  const DiffKernel kernel(FeatureRanges::of(X, discrete));

  std::vector<double> prior(static_cast<std::size_t>(num_classes), 0.0);
  for (int label : y) prior[static_cast<std::size_t>(label)] += 1.0 / static_cast<double>(n);

  const auto order = visit_order(n, cfg.iterations, cfg.seed);
  const double m = static_cast<double>(order.size());
  ReliefResult result{Vector::Zero(d), 0};
  std::vector<std::vector<std::pair<double, Index>>> by_class(static_cast<std::size_t>(num_classes));
  std::vector<RowVector> diffs(static_cast<std::size_t>(n));
  for (Index i : order) {
    const int own = y[static_cast<std::size_t>(i)];
    for (auto& bucket : by_class) bucket.clear();
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      diffs[static_cast<std::size_t>(j)] = kernel(X.row(i), X.row(j));
      by_class[static_cast<std::size_t>(y[static_cast<std::size_t>(j)])].emplace_back(
          diffs[static_cast<std::size_t>(j)].sum(), j);
    }
    for (int c = 0; c < num_classes; ++c) {
      auto& bucket = by_class[static_cast<std::size_t>(c)];
      if (bucket.empty()) {
        if (c == own) ++result.skipped_hit_terms;
        continue;
      }
      const auto k = std::min(static_cast<std::size_t>(cfg.relieff_k), bucket.size());
      std::partial_sort(bucket.begin(), bucket.begin() + static_cast<std::ptrdiff_t>(k), bucket.end());
      RowVector sum = RowVector::Zero(d);
      for (std::size_t t = 0; t < k; ++t) sum += diffs[static_cast<std::size_t>(bucket[t].second)];
      const double scale = 1.0 / (m * static_cast<double>(k));
      if (c == own) {
        result.weights -= scale * sum.transpose();
      } else {
        const double w = prior[static_cast<std::size_t>(c)] / (1.0 - prior[static_cast<std::size_t>(own)]);
        result.weights += w * scale * sum.transpose();
      }
    }
  }
  return result;
}

std::vector<Index> rank_features(const Vector& weights) {
  std::vector<Index> order(static_cast<std::size_t>(weights.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return weights(a) > weights(b); });
  return order;
}

Selector parse_selector(std::string_view text) {
  if (text == "mu-reliefa") return Selector::MuReliefA;
  if (text == "relieff") return Selector::ReliefF;
  throw ConfigError("unknown feature selector '" + std::string(text) + "'");
}

std::string to_string(Selector s) { return s == Selector::MuReliefA ? "mu-reliefa" : "relieff"; }

ReliefResult select_features(Selector selector, const Matrix& X, const Labels& y, const ReliefConfig& cfg) {
  return selector == Selector::MuReliefA ? mu_relief_a(X, y, cfg) : relieff(X, y, cfg);
}

}  // namespace ewfs
