#include "bdn/ingest.hpp"

#include "bdn/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace bdn {

std::string cell_text(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, *d);
    return std::string(buf, res.ptr);
  }
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  return {};
}

Cell parse_cell(std::string_view text) {
  if (text.empty() || text == "NA") return std::monostate{};
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  if (res.ec == std::errc() && res.ptr == last && std::isfinite(value)) return value;
  return std::string(text);
}

// ---------------------------------------------------------------------------
// RawTable

RawTable::RawTable(std::vector<std::string> columns, std::vector<std::vector<Cell>> data,
                   std::string key_column)
    : columns_(std::move(columns)), data_(std::move(data)), key_(std::move(key_column)) {
  if (columns_.size() != data_.size()) {
    throw Error(ErrorCode::schema, "column count does not match data");
  }
  std::set<std::string_view> names;
  for (const auto& c : columns_) {
    if (!names.insert(c).second) throw Error(ErrorCode::schema, "duplicate column '" + c + "'");
  }
  rows_ = data_.empty() ? 0 : data_.front().size();
  for (std::size_t c = 0; c < data_.size(); ++c) {
    if (data_[c].size() != rows_) {
      throw Error(ErrorCode::parse_error, "column '" + columns_[c] + "' is not rectangular");
    }
  }
  if (!key_.empty()) {
    const auto& keys = data_[column_index(key_)];
    std::set<std::string> seen;
    for (std::size_t r = 0; r < keys.size(); ++r) {
      if (is_missing(keys[r])) {
        throw Error(ErrorCode::merge_key, "missing key in column '" + key_ + "' at row " +
                                              std::to_string(r + 1));
      }
      if (!seen.insert(cell_text(keys[r])).second) {
        throw Error(ErrorCode::merge_key,
                    "duplicate key '" + cell_text(keys[r]) + "' in column '" + key_ + "'");
      }
    }
  }
}

std::optional<std::size_t> RawTable::find_column(std::string_view name) const {
  auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns_.begin());
}

std::size_t RawTable::column_index(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw Error(ErrorCode::schema, "unknown column '" + std::string(name) + "'");
}

bool RawTable::is_numeric(std::size_t col) const {
  return std::all_of(data_[col].begin(), data_[col].end(),
                     [](const Cell& c) { return !std::holds_alternative<std::string>(c); });
}

std::vector<double> RawTable::numeric_column(std::string_view name) const {
  const std::size_t c = column_index(name);
  if (!is_numeric(c)) {
    throw Error(ErrorCode::type_error, "column '" + std::string(name) + "' is not numeric");
  }
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    const auto* d = std::get_if<double>(&data_[c][r]);
    out[r] = d ? *d : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::size_t RawTable::missing_count() const {
  std::size_t n = 0;
  for (const auto& col : data_) n += static_cast<std::size_t>(std::count_if(col.begin(), col.end(), is_missing));
  return n;
}

RawTable RawTable::with_column(std::string name, std::vector<Cell> cells) const {
  if (find_column(name)) throw Error(ErrorCode::schema, "column '" + name + "' already exists");
  if (cells.size() != rows_ && !columns_.empty()) {
    throw Error(ErrorCode::schema, "new column '" + name + "' has wrong length");
  }
  auto columns = columns_;
  auto data = data_;
  columns.push_back(std::move(name));
  data.push_back(std::move(cells));
  return RawTable(std::move(columns), std::move(data), key_);
}

RawTable RawTable::select(const std::vector<std::string>& names) const {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> data;
  if (!key_.empty()) {
    columns.push_back(key_);
    data.push_back(column(key_));
  }
  for (const auto& name : names) {
    if (name == key_) continue;
    if (std::find(columns.begin(), columns.end(), name) != columns.end()) {
      throw Error(ErrorCode::schema, "column '" + name + "' selected twice");
    }
    const auto c = find_column(name);
    if (!c) throw Error(ErrorCode::schema, "unknown column '" + name + "'");
    columns.push_back(name);
    data.push_back(data_[*c]);
  }
  return RawTable(std::move(columns), std::move(data), key_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A lone empty field means an empty line; skip it.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        field.push_back(ch);
      }
      ++i;
      continue;
    }
    if (ch == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\r' || ch == '\n') {
      end_record();
      if (ch == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else {
      field.push_back(ch);
      field_started = true;
    }
    ++i;
  }
  if (in_quotes) throw Error(ErrorCode::parse_error, "unterminated quoted field at end of input");
  if (field_started || !record.empty()) end_record();
  return records;
}

std::string quote_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

RawTable parse_csv(std::string_view text, const std::string& key_column) {
  auto records = split_records(text);
  if (records.empty()) throw Error(ErrorCode::parse_error, "CSV has no header row");
  const auto& header = records.front();
  std::vector<std::vector<Cell>> data(header.size());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      std::ostringstream msg;
      msg << "row " << r + 1 << " has " << records[r].size() << " fields, expected "
          << header.size();
      throw Error(ErrorCode::parse_error, msg.str());
    }
    for (std::size_t c = 0; c < header.size(); ++c) data[c].push_back(parse_cell(records[r][c]));
  }
  if (!key_column.empty() && std::find(header.begin(), header.end(), key_column) == header.end()) {
    throw Error(ErrorCode::schema, "key column '" + key_column + "' not in header");
  }
  return RawTable(header, std::move(data), key_column);
}

RawTable load_csv(const std::filesystem::path& path, const std::string& key_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), key_column);
}

std::string to_csv(const RawTable& table) {
  std::ostringstream out;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    out << (c ? "," : "") << quote_field(table.columns()[c]);
  }
  out << "\n";
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const Cell& cell = table.at(r, c);
      out << (c ? "," : "") << (is_missing(cell) ? std::string("NA") : quote_field(cell_text(cell)));
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// merge

RawTable merge(const RawTable& left, const RawTable& right, const std::string& key) {
  auto lk = left.find_column(key);
  auto rk = right.find_column(key);
  if (!lk || !rk) {
    throw Error(ErrorCode::schema, "key column '" + key + "' missing from " +
                                       (!lk ? std::string("left") : std::string("right")) +
                                       " table");
  }
  std::unordered_map<std::string, std::size_t> right_rows;
  for (std::size_t r = 0; r < right.rows(); ++r) {
    const Cell& k = right.at(r, *rk);
    if (is_missing(k)) continue;
    if (!right_rows.emplace(cell_text(k), r).second) {
      throw Error(ErrorCode::merge_key, "duplicate key '" + cell_text(k) + "' in right table");
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::set<std::string> left_keys;
  for (std::size_t r = 0; r < left.rows(); ++r) {
    const Cell& k = left.at(r, *lk);
    if (is_missing(k)) continue;
    if (!left_keys.insert(cell_text(k)).second) {
      throw Error(ErrorCode::merge_key, "duplicate key '" + cell_text(k) + "' in left table");
    }
    if (auto it = right_rows.find(cell_text(k)); it != right_rows.end()) {
      matches.emplace_back(r, it->second);
    }
  }

  std::set<std::string> left_names(left.columns().begin(), left.columns().end());
  std::set<std::string> right_names(right.columns().begin(), right.columns().end());
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> data;
  auto append = [&](const RawTable& t, std::size_t c, std::string name, bool take_left) {
    std::vector<Cell> cells;
    cells.reserve(matches.size());
    for (auto [l, r] : matches) cells.push_back(t.at(take_left ? l : r, c));
    columns.push_back(std::move(name));
    data.push_back(std::move(cells));
  };
  for (std::size_t c = 0; c < left.cols(); ++c) {
    const auto& name = left.columns()[c];
    bool clash = name != key && right_names.count(name);
    append(left, c, clash ? name + "_x" : name, true);
  }
  for (std::size_t c = 0; c < right.cols(); ++c) {
    const auto& name = right.columns()[c];
    if (name == key) continue;
    bool clash = left_names.count(name) > 0;
    append(right, c, clash ? name + "_y" : name, false);
  }
  return RawTable(std::move(columns), std::move(data), key);
}

// ---------------------------------------------------------------------------
// derive

namespace {

std::string_view op_name(DerivedColumn::Op op) {
  switch (op) {
    case DerivedColumn::Op::gap: return "gap";
    case DerivedColumn::Op::pooled_mean: return "pooled_mean";
    case DerivedColumn::Op::pooled_sd: return "pooled_sd";
    case DerivedColumn::Op::proportion: return "proportion";
  }
  return "";
}

}  // namespace

DerivedSpec derived_spec_from_json(const json& doc) {
  DerivedSpec spec;
  try {
    for (const auto& item : doc) {
      DerivedColumn col;
      const auto op = item.at("op").get<std::string>();
      col.name = item.at("name").get<std::string>();
      const auto& args = item.at("args");
      if (op == "gap") {
        col.op = DerivedColumn::Op::gap;
        col.sources = {args.at("minuend").get<std::string>(), args.at("subtrahend").get<std::string>()};
      } else if (op == "proportion") {
        col.op = DerivedColumn::Op::proportion;
        col.sources = {args.at("column").get<std::string>(), args.at("total").get<std::string>()};
      } else if (op == "pooled_mean" || op == "pooled_sd") {
        col.op = op == "pooled_mean" ? DerivedColumn::Op::pooled_mean : DerivedColumn::Op::pooled_sd;
        col.sources = args.at("columns").get<std::vector<std::string>>();
        if (args.contains("weights")) col.weights = args["weights"].get<std::vector<std::string>>();
        if (!col.weights.empty() && col.weights.size() != col.sources.size()) {
          throw Error(ErrorCode::schema, "derived column '" + col.name +
                                             "': weights must parallel columns");
        }
        if (col.sources.empty()) {
          throw Error(ErrorCode::schema, "derived column '" + col.name + "' has no columns");
        }
      } else {
        throw Error(ErrorCode::schema, "unknown derived op '" + op + "'");
      }
      spec.push_back(std::move(col));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed derived spec: ") + e.what());
  }
  return spec;
}

json derived_spec_to_json(const DerivedSpec& spec) {
  json out = json::array();
  for (const auto& col : spec) {
    json args;
    switch (col.op) {
      case DerivedColumn::Op::gap:
        args = {{"minuend", col.sources[0]}, {"subtrahend", col.sources[1]}};
        break;
      case DerivedColumn::Op::proportion:
        args = {{"column", col.sources[0]}, {"total", col.sources[1]}};
        break;
      default:
        args = {{"columns", col.sources}};
        if (!col.weights.empty()) args["weights"] = col.weights;
    }
    out.push_back({{"op", op_name(col.op)}, {"name", col.name}, {"args", args}});
  }
  return out;
}

RawTable derive(const RawTable& table, const DerivedSpec& spec) {
  RawTable out = table;
  for (const auto& col : spec) {
    std::vector<std::vector<double>> sources;
    for (const auto& s : col.sources) sources.push_back(table.numeric_column(s));
    std::vector<std::vector<double>> weights;
    for (const auto& w : col.weights) weights.push_back(table.numeric_column(w));

    std::vector<Cell> cells(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
      bool missing = false;
      for (const auto& s : sources) missing = missing || std::isnan(s[r]);
      for (const auto& w : weights) missing = missing || std::isnan(w[r]);
      if (missing) continue;
      switch (col.op) {
        case DerivedColumn::Op::gap:
          cells[r] = sources[0][r] - sources[1][r];
          break;
        case DerivedColumn::Op::proportion:
          if (sources[1][r] != 0.0) cells[r] = sources[0][r] / sources[1][r];
          break;
        case DerivedColumn::Op::pooled_mean:
        case DerivedColumn::Op::pooled_sd: {
          double wsum = 0.0, mean = 0.0;
          for (std::size_t i = 0; i < sources.size(); ++i) {
            double w = weights.empty() ? 1.0 : weights[i][r];
            if (w < 0.0) {
              throw Error(ErrorCode::validation, "negative weight in column '" + col.weights[i] +
                                                     "' at row " + std::to_string(r + 1));
            }
            wsum += w;
            mean += w * sources[i][r];
          }
          if (wsum <= 0.0) {
            throw Error(ErrorCode::validation, "derived column '" + col.name +
                                                   "': all weights zero at row " +
                                                   std::to_string(r + 1));
          }
          mean /= wsum;
          if (col.op == DerivedColumn::Op::pooled_mean) {
            cells[r] = mean;
            break;
          }
          double ss = 0.0;
          for (std::size_t i = 0; i < sources.size(); ++i) {
            double w = weights.empty() ? 1.0 : weights[i][r];
            double d = sources[i][r] - mean;
            ss += w * d * d;
          }
          cells[r] = std::sqrt(ss / wsum);
          break;
        }
      }
    }
    out = out.with_column(col.name, std::move(cells));
  }
  return out;
}

// ---------------------------------------------------------------------------
// impute

ImputationResult MedianModeImputer::impute(const RawTable& table, std::uint64_t) const {
  std::vector<std::vector<Cell>> data;
  std::map<std::string, std::size_t> report;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    std::vector<Cell> col = table.column(c);
    const std::string& name = table.columns()[c];
    std::size_t missing = static_cast<std::size_t>(std::count_if(col.begin(), col.end(), is_missing));
    report[name] = missing;
    if (missing == 0) {
      data.push_back(std::move(col));
      continue;
    }
    if (missing == col.size()) {
      throw Error(ErrorCode::unimputable_column, "column '" + name + "' has no observed values");
    }
    Cell fill;
    if (table.is_numeric(c)) {
      std::vector<double> values;
      for (const auto& cell : col) {
        if (const auto* d = std::get_if<double>(&cell)) values.push_back(*d);
      }
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      fill = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& cell : col) {
        if (!is_missing(cell)) ++counts[cell_text(cell)];
      }
      auto best = counts.begin();
      for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      fill = best->first;
    }
    for (auto& cell : col) {
      if (is_missing(cell)) cell = fill;
    }
    data.push_back(std::move(col));
  }
  return {RawTable(table.columns(), std::move(data), table.key_column()), std::move(report)};
}

ImputationResult impute(const RawTable& table, std::uint64_t seed) {
  return MedianModeImputer{}.impute(table, seed);
}

json imputation_report_to_json(const std::map<std::string, std::size_t>& report) {
  json out = json::object();
  for (const auto& [k, v] : report) out[k] = v;
  return out;
}

}  // namespace bdn
