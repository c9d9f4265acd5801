#pragma once

#include <span>

namespace ewfs {

struct WilcoxonResult {
  int n_effective = 0;
  int n_plus = 0;
  int n_minus = 0;
  double r_plus = 0.0;
  double r_minus = 0.0;
  double p_value = 1.0;
  bool exact = true;
};

/// Two-sided Wilcoxon signed-rank test on the differences a - b. Zero
/// differences are dropped and tied magnitudes get mid-ranks. For at most
/// kExactLimit non-zero differences the p-value is the fraction of all 2^n
/// sign assignments of the observed ranks whose statistic lies at least as
/// far from n(n+1)/4 as the observed R+. Larger samples use the normal
/// approximation with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

inline constexpr int kExactLimit = 12;

}  // namespace ewfs
