#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ewfs {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
/// true = observed
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Labels = std::vector<int>;

/// Feature importance vector, one entry per feature.
using FeatureWeights = Eigen::VectorXd;

/// Malformed or inconsistent input data (bad CSV cell, empty row, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter outside its admissible range.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A linear system or decomposition that could not be solved.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ewfs
