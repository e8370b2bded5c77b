#pragma once

#include "bdn/json_io.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdn {

enum class BinMethod { kmeans, frequency, quantile, uniform };

std::string_view to_string(BinMethod method);
BinMethod bin_method_from_string(std::string_view text);

/// Cascade order used by `discretize_column`.
inline constexpr BinMethod kMethodCascade[] = {BinMethod::kmeans, BinMethod::frequency,
                                               BinMethod::quantile, BinMethod::uniform};

struct DiscretizationSpec {
  std::string column;
  BinMethod method = BinMethod::kmeans;
  /// Strictly ascending, k-1 values for k bins.
  std::vector<double> cut_points;
  /// "[lo,hi)" for every bin but the last, which is closed "[lo,hi]".
  std::vector<std::string> bin_labels;
  double min = 0.0;
  double max = 0.0;

  int bins() const { return static_cast<int>(cut_points.size()) + 1; }
};

/// Bin index of `value`: a value equal to a cut point goes to the upper bin;
/// values outside [min, max] clamp to the terminal bins.
int bin_of(const DiscretizationSpec& spec, double value);
std::vector<int> apply_spec(const DiscretizationSpec& spec, std::span<const double> values);

/// Exact 1-D k-means (minimum within-cluster sum of squares) by dynamic
/// programming over the sorted distinct values. Returns the k-1 boundaries,
/// each the midpoint between the extremes of adjacent clusters, or nullopt
/// when there are fewer than k distinct values.
std::optional<std::vector<double>> kmeans_1d(std::span<const double> values, int k);

/// Cut points for a single method, or nullopt when the method fails: duplicate
/// cut points or an empty bin on `values`.
std::optional<std::vector<double>> cut_points_for(BinMethod method, std::span<const double> values,
                                                  int k);

/// Runs one method and labels the bins; nullopt on failure.
std::optional<DiscretizationSpec> discretize_with(BinMethod method, std::span<const double> values,
                                                  int k, std::string column = {});

struct DiscretizedColumn {
  DiscretizationSpec spec;
  std::vector<int> codes;
};

/// Tries kmeans, frequency, quantile, uniform in that order and keeps the first
/// success. Non-finite values are ignored when fitting. Throws
/// ErrorCode::constant_column with fewer than two distinct values and
/// ErrorCode::discretization_failed if every method fails.
DiscretizedColumn discretize_column(std::span<const double> values, int k = 3,
                                    std::string column = {});

/// Interval labels with the shortest precision (at least 3 significant digits)
/// that keeps every label distinct.
std::vector<std::string> interval_labels(double min, std::span<const double> cuts, double max);

json spec_to_json(const DiscretizationSpec& spec);
DiscretizationSpec spec_from_json(const json& doc);

}  // namespace bdn
