#pragma once

#include "ewfs/dataset.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace ewfs {

enum class Mechanism { MCAR, MNAR };

Mechanism parse_mechanism(std::string_view text);
std::string to_string(Mechanism m);

struct MissingSpec {
  Mechanism mechanism = Mechanism::MCAR;
  double rate = 0.05;
  std::uint64_t seed = 0;

  /// rate must lie strictly inside (0, 1).
  void validate() const;
};

/// floor(rate * n * d), guarded against representation error in the product.
Index missing_quota(Index n, Index d, double rate);

/// Masks exactly missing_quota() cells drawn uniformly without replacement.
/// A draw that would leave its row without observed entries is rejected and
/// the next draw taken instead. Throws DataError when the quota cannot be
/// met (quota > n * (d - 1)) and when the input is not fully observed.
IncompleteDataset inject_mcar(const IncompleteDataset& data, const MissingSpec& spec);

/// Value-dependent censoring: columns are visited round-robin in a shuffled
/// order and each visit masks the largest still-observed value of that
/// column (ties go to the lower row index). Row coverage is preserved the
/// same way as for MCAR.
IncompleteDataset inject_mnar(const IncompleteDataset& data, const MissingSpec& spec);

IncompleteDataset inject(const IncompleteDataset& data, const MissingSpec& spec);

}  // namespace ewfs
