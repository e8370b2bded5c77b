#pragma once

#include "bdn/model.hpp"

#include <Eigen/Core>

#include <span>
#include <string_view>
#include <vector>

namespace bdn {

/// Categorical data: one column of state codes per variable.
struct Dataset {
  std::vector<Variable> variables;
  /// rows = samples, cols = variables; entries in [0, cardinality).
  Eigen::MatrixXi codes;

  Eigen::Index rows() const { return codes.rows(); }
  Eigen::Index cols() const { return codes.cols(); }
  int index_of(std::string_view name) const;
  std::vector<std::string> names() const;

  /// Rows selected by index (with repetition allowed).
  Dataset select_rows(std::span<const Eigen::Index> rows) const;
};

/// Throws ErrorCode::schema on out-of-range codes or shape mismatch.
void check_dataset(const Dataset& data);

}  // namespace bdn
