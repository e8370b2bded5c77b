#pragma once

#include "bdn/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace bdn {

/// Missing, numeric, or categorical cell.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<std::monostate>(c); }
std::string cell_text(const Cell& c);
/// "" and "NA" are missing; text that parses completely as a finite number is numeric.
Cell parse_cell(std::string_view text);

/// Rectangular table stored column-major. When `key_column` is non-empty its
/// values are unique and non-missing.
class RawTable {
 public:
  RawTable() = default;
  RawTable(std::vector<std::string> columns, std::vector<std::vector<Cell>> data,
           std::string key_column = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::string& key_column() const { return key_; }

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;
  const std::vector<Cell>& column(std::size_t c) const { return data_[c]; }
  const std::vector<Cell>& column(std::string_view name) const { return data_[column_index(name)]; }
  const Cell& at(std::size_t row, std::size_t col) const { return data_[col][row]; }

  /// True when every non-missing cell is numeric.
  bool is_numeric(std::size_t col) const;
  /// Missing cells become NaN. Throws ErrorCode::type_error on categorical cells.
  std::vector<double> numeric_column(std::string_view name) const;
  std::size_t missing_count() const;

  RawTable with_column(std::string name, std::vector<Cell> cells) const;
  /// The named columns in the given order; the key column is kept in front
  /// when the table has one. Unknown names raise ErrorCode::schema.
  RawTable select(const std::vector<std::string>& names) const;

  friend bool operator==(const RawTable&, const RawTable&) = default;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> data_;
  std::string key_;
  std::size_t rows_ = 0;
};

/// RFC-4180 with a required header row. Ragged rows raise parse_error naming
/// the 1-based record number; duplicate or missing keys raise merge_key.
RawTable parse_csv(std::string_view text, const std::string& key_column = {});
RawTable load_csv(const std::filesystem::path& path, const std::string& key_column = {});
std::string to_csv(const RawTable& table);

/// Inner join on `key`. Non-key columns present on both sides are renamed
/// with "_x" (left) and "_y" (right) suffixes.
RawTable merge(const RawTable& left, const RawTable& right, const std::string& key);

struct DerivedColumn {
  enum class Op { gap, pooled_mean, pooled_sd, proportion };
  Op op;
  std::string name;
  /// gap: {minuend, subtrahend}; proportion: {column, total};
  /// pooled_*: the value columns.
  std::vector<std::string> sources;
  /// pooled_*: per-row weight columns, parallel to `sources`; empty = uniform.
  std::vector<std::string> weights;
};

using DerivedSpec = std::vector<DerivedColumn>;

/// JSON list of `{op, name, args}`.
DerivedSpec derived_spec_from_json(const json& doc);
json derived_spec_to_json(const DerivedSpec& spec);

/// Appends one column per entry; rows with a missing source or weight get a
/// missing derived cell.
RawTable derive(const RawTable& table, const DerivedSpec& spec);

struct ImputationResult {
  RawTable table;
  /// column -> number of cells filled
  std::map<std::string, std::size_t> report;
};

class Imputer {
 public:
  virtual ~Imputer() = default;
  virtual ImputationResult impute(const RawTable& table, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
};

/// Numeric columns take the column median, categorical columns the mode
/// (lexicographically smallest on ties). Deterministic; the seed is unused.
class MedianModeImputer final : public Imputer {
 public:
  ImputationResult impute(const RawTable& table, std::uint64_t seed) const override;
  std::string name() const override { return "median_mode"; }
};

ImputationResult impute(const RawTable& table, std::uint64_t seed = 0);

json imputation_report_to_json(const std::map<std::string, std::size_t>& report);

}  // namespace bdn
