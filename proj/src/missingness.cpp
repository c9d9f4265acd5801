#include "ewfs/missingness.hpp"

#include "ewfs/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ewfs {

namespace {

void check_input(const IncompleteDataset& data, const MissingSpec& spec, Index quota) {
  spec.validate();
  if (!data.is_complete()) throw DataError("missingness injection requires a fully observed dataset");
  if (quota > data.rows() * (data.cols() - 1))
    throw DataError("cannot mask " + std::to_string(quota) + " cells of a " +
                    std::to_string(data.rows()) + "x" + std::to_string(data.cols()) +
                    " matrix and keep an observed entry in every row");
}

}  // namespace

Mechanism parse_mechanism(std::string_view text) {
  if (text == "mcar" || text == "MCAR") return Mechanism::MCAR;
  if (text == "mnar" || text == "MNAR") return Mechanism::MNAR;
  throw ConfigError("unknown missingness mechanism '" + std::string(text) + "'");
}

std::string to_string(Mechanism m) { return m == Mechanism::MCAR ? "mcar" : "mnar"; }

void MissingSpec::validate() const {
  if (!(rate > 0.0 && rate < 1.0))
    throw ConfigError("missing rate must lie strictly between 0 and 1, got " + std::to_string(rate));
}

Index missing_quota(Index n, Index d, double rate) {
  return static_cast<Index>(std::floor(rate * static_cast<double>(n) * static_cast<double>(d) + 1e-9));
}

IncompleteDataset inject_mcar(const IncompleteDataset& data, const MissingSpec& spec) {
  const Index n = data.rows(), d = data.cols();
  const Index quota = missing_quota(n, d, spec.rate);
  check_input(data, spec, quota);

  std::vector<Index> cells(static_cast<std::size_t>(n * d));
  std::iota(cells.begin(), cells.end(), Index{0});
  Rng rng(spec.seed);
  std::shuffle(cells.begin(), cells.end(), rng);

  IncompleteDataset out = data;
  std::vector<Index> masked_in_row(static_cast<std::size_t>(n), 0);
  Index masked = 0;
  for (Index cell : cells) {
    if (masked == quota) break;
    const Index i = cell / d, j = cell % d;
    if (masked_in_row[static_cast<std::size_t>(i)] == d - 1) continue;
    out.mask(i, j) = false;
    ++masked_in_row[static_cast<std::size_t>(i)];
    ++masked;
  }
  return out;
}

IncompleteDataset inject_mnar(const IncompleteDataset& data, const MissingSpec& spec) {
  const Index n = data.rows(), d = data.cols();
  const Index quota = missing_quota(n, d, spec.rate);
  check_input(data, spec, quota);

  std::vector<Index> column_order(static_cast<std::size_t>(d));
  std::iota(column_order.begin(), column_order.end(), Index{0});
  Rng rng(spec.seed);
  std::shuffle(column_order.begin(), column_order.end(), rng);

  // Per column: rows by descending value, lower row index first on ties.
  std::vector<std::vector<Index>> by_value(static_cast<std::size_t>(d));
  for (Index j = 0; j < d; ++j) {
    auto& order = by_value[static_cast<std::size_t>(j)];
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return data.values(a, j) > data.values(b, j); });
  }

  IncompleteDataset out = data;
  std::vector<Index> masked_in_row(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> cursor(static_cast<std::size_t>(d), 0);
  Index masked = 0;
  while (masked < quota) {
    bool progressed = false;
    for (Index j : column_order) {
      if (masked == quota) break;
      auto& pos = cursor[static_cast<std::size_t>(j)];
      const auto& order = by_value[static_cast<std::size_t>(j)];
      while (pos < order.size() && masked_in_row[static_cast<std::size_t>(order[pos])] == d - 1) ++pos;
      if (pos == order.size()) continue;
      const Index i = order[pos++];
      out.mask(i, j) = false;
      ++masked_in_row[static_cast<std::size_t>(i)];
      ++masked;
      progressed = true;
    }
    if (!progressed) throw DataError("MNAR quota cannot be met without emptying a row");
  }
  return out;
}

IncompleteDataset inject(const IncompleteDataset& data, const MissingSpec& spec) {
  return spec.mechanism == Mechanism::MCAR ? inject_mcar(data, spec) : inject_mnar(data, spec);
}

}  // namespace ewfs
