#include "bdn/dataset.hpp"

#include "bdn/error.hpp"

#include <algorithm>

namespace bdn {

int Dataset::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<int>(i);
  }
  throw Error(ErrorCode::schema, "unknown column '" + std::string(name) + "'");
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

Dataset Dataset::select_rows(std::span<const Eigen::Index> rows) const {
  Dataset out{variables, Eigen::MatrixXi(static_cast<Eigen::Index>(rows.size()), codes.cols())};
  for (Eigen::Index c = 0; c < codes.cols(); ++c) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out.codes(static_cast<Eigen::Index>(r), c) = codes(rows[r], c);
    }
  }
  return out;
}

void check_dataset(const Dataset& data) {
  if (static_cast<Eigen::Index>(data.variables.size()) != data.codes.cols()) {
    throw Error(ErrorCode::schema, "dataset has " + std::to_string(data.codes.cols()) +
                                       " columns but " + std::to_string(data.variables.size()) +
                                       " variables");
  }
  for (Eigen::Index c = 0; c < data.codes.cols(); ++c) {
    const int card = data.variables[static_cast<std::size_t>(c)].cardinality();
    if (data.codes.rows() == 0) continue;
    if (data.codes.col(c).minCoeff() < 0 || data.codes.col(c).maxCoeff() >= card) {
      throw Error(ErrorCode::schema,
                  "column '" + data.variables[static_cast<std::size_t>(c)].name +
                      "' has codes outside its state range");
    }
  }
}

}  // namespace bdn
