#include "ewfs/wilcoxon.hpp"

#include "ewfs/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace ewfs {

namespace {

std::vector<double> mid_ranks(const std::vector<double>& magnitudes, double& tie_term) {
  const std::size_t n = magnitudes.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return magnitudes[a] < magnitudes[b]; });
  std::vector<double> ranks(n);
  tie_term = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && magnitudes[order[end]] == magnitudes[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t t = start; t < end; ++t) ranks[order[t]] = rank;
    const double t = static_cast<double>(end - start);
    tie_term += t * t * t - t;
    start = end;
  }
  return ranks;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("paired samples have different lengths");
  if (a.empty()) throw DataError("paired samples are empty");

  std::vector<double> magnitudes;
  std::vector<bool> positive;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (!std::isfinite(d)) throw DataError("paired samples contain non-finite values");
    if (d == 0.0) continue;
    magnitudes.push_back(std::abs(d));
    positive.push_back(d > 0);
  }

  WilcoxonResult result;
  const int n = static_cast<int>(magnitudes.size());
  result.n_effective = n;
  if (n == 0) return result;

  double tie_term = 0.0;
  const auto ranks = mid_ranks(magnitudes, tie_term);
  for (int i = 0; i < n; ++i) {
    if (positive[static_cast<std::size_t>(i)]) {
      result.r_plus += ranks[static_cast<std::size_t>(i)];
      ++result.n_plus;
    } else {
      result.r_minus += ranks[static_cast<std::size_t>(i)];
      ++result.n_minus;
    }
  }

  const double nd = n;
  const double center = nd * (nd + 1.0) / 4.0;
  const double observed = std::abs(result.r_plus - center);
  if (n <= kExactLimit) {
    result.exact = true;
    const double tol = 1e-9 * (1.0 + center);
    std::uint64_t extreme = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t signs = 0; signs < total; ++signs) {
      double t = 0.0;
      for (int i = 0; i < n; ++i)
        if (signs >> i & 1U) t += ranks[static_cast<std::size_t>(i)];
      if (std::abs(t - center) >= observed - tol) ++extreme;
    }
    result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  } else {
    result.exact = false;
    const double variance = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    if (!(variance > 0)) {
      result.p_value = 1.0;
    } else {
      const double z = std::max(0.0, observed - 0.5) / std::sqrt(variance);
      result.p_value = std::erfc(z / std::sqrt(2.0));
    }
  }
  result.p_value = std::clamp(result.p_value, 0.0, 1.0);
  return result;
}

}  // namespace ewfs
