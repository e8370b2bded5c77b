#include "bdn/discretize.hpp"

#include "bdn/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace bdn {

std::string_view to_string(BinMethod method) {
  switch (method) {
    case BinMethod::kmeans: return "kmeans";
    case BinMethod::frequency: return "frequency";
    case BinMethod::quantile: return "quantile";
    case BinMethod::uniform: return "uniform";
  }
  return "";
}

BinMethod bin_method_from_string(std::string_view text) {
  for (BinMethod m : kMethodCascade) {
    if (to_string(m) == text) return m;
  }
  throw Error(ErrorCode::schema, "unknown discretization method '" + std::string(text) + "'");
}

int bin_of(const DiscretizationSpec& spec, double value) {
  auto it = std::upper_bound(spec.cut_points.begin(), spec.cut_points.end(), value);
  return static_cast<int>(it - spec.cut_points.begin());
}

std::vector<int> apply_spec(const DiscretizationSpec& spec, std::span<const double> values) {
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(bin_of(spec, v));
  return out;
}

namespace {

std::vector<double> sorted_finite(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (std::isfinite(v)) out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool cuts_valid(const std::vector<double>& cuts, const std::vector<double>& sorted, int k) {
  if (static_cast<int>(cuts.size()) != k - 1) return false;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (!(cuts[i] > cuts[i - 1])) return false;
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (double v : sorted) {
    auto it = std::upper_bound(cuts.begin(), cuts.end(), v);
    ++counts[static_cast<std::size_t>(it - cuts.begin())];
  }
  return std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
}

std::string format_number(double v, int precision) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

}  // namespace

std::optional<std::vector<double>> kmeans_1d(std::span<const double> values, int k) {
  const auto sorted = sorted_finite(values);
  std::vector<double> distinct;
  std::vector<double> weight;
  for (double v : sorted) {
    if (distinct.empty() || v != distinct.back()) {
      distinct.push_back(v);
      weight.push_back(1.0);
    } else {
      weight.back() += 1.0;
    }
  }
  const std::size_t m = distinct.size();
  if (k < 1 || m < static_cast<std::size_t>(k)) return std::nullopt;
  if (k == 1) return std::vector<double>{};

  // Prefix sums of count, count*x and count*x^2 over the distinct values.
  std::vector<double> cw(m + 1, 0.0), cs(m + 1, 0.0), cq(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    cw[i + 1] = cw[i] + weight[i];
    cs[i + 1] = cs[i] + weight[i] * distinct[i];
    cq[i + 1] = cq[i] + weight[i] * distinct[i] * distinct[i];
  }
  auto sse = [&](std::size_t lo, std::size_t hi) {  // clusters [lo, hi)
    double w = cw[hi] - cw[lo];
    double s = cs[hi] - cs[lo];
    return std::max(0.0, (cq[hi] - cq[lo]) - s * s / w);
  };

  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t kk = static_cast<std::size_t>(k);
  // cost[j][i]: best SSE of the first i distinct values split into j+1 clusters.
  std::vector<std::vector<double>> cost(kk, std::vector<double>(m + 1, inf));
  std::vector<std::vector<std::size_t>> split(kk, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= m; ++i) cost[0][i] = sse(0, i);
  for (std::size_t j = 1; j < kk; ++j) {
    for (std::size_t i = j + 1; i <= m; ++i) {
      for (std::size_t s = j; s < i; ++s) {
        double c = cost[j - 1][s] + sse(s, i);
        if (c < cost[j][i]) {
          cost[j][i] = c;
          split[j][i] = s;
        }
      }
    }
  }
  std::vector<std::size_t> starts(kk, 0);
  std::size_t end = m;
  for (std::size_t j = kk - 1; j >= 1; --j) {
    starts[j] = split[j][end];
    end = starts[j];
  }
  std::vector<double> cuts;
  for (std::size_t j = 1; j < kk; ++j) {
    cuts.push_back(0.5 * (distinct[starts[j] - 1] + distinct[starts[j]]));
  }
  return cuts;
}

std::optional<std::vector<double>> cut_points_for(BinMethod method, std::span<const double> values,
                                                  int k) {
  const auto sorted = sorted_finite(values);
  const std::size_t n = sorted.size();
  if (k < 1 || n < static_cast<std::size_t>(k)) return std::nullopt;
  std::vector<double> cuts;
  switch (method) {
    case BinMethod::kmeans: {
      auto km = kmeans_1d(sorted, k);
      if (!km) return std::nullopt;
      cuts = std::move(*km);
      break;
    }
    case BinMethod::frequency:
      for (int i = 1; i < k; ++i) {
        std::size_t e = static_cast<std::size_t>(i) * n / static_cast<std::size_t>(k);
        cuts.push_back(0.5 * (sorted[e - 1] + sorted[e]));
      }
      break;
    case BinMethod::quantile:
      for (int i = 1; i < k; ++i) {
        double h = static_cast<double>(n - 1) * i / k;
        auto lo = static_cast<std::size_t>(std::floor(h));
        std::size_t hi = std::min(lo + 1, n - 1);
        cuts.push_back(sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]));
      }
      break;
    case BinMethod::uniform: {
      const double lo = sorted.front(), hi = sorted.back();
      for (int i = 1; i < k; ++i) cuts.push_back(lo + (hi - lo) * i / k);
      break;
    }
  }
  if (!cuts_valid(cuts, sorted, k)) return std::nullopt;
  return cuts;
}

std::vector<std::string> interval_labels(double min, std::span<const double> cuts, double max) {
  std::vector<double> bounds;
  bounds.push_back(min);
  bounds.insert(bounds.end(), cuts.begin(), cuts.end());
  bounds.push_back(max);
  std::vector<std::string> labels;
  for (int precision = 3; precision <= 17; ++precision) {
    labels.clear();
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      bool last = i + 2 == bounds.size();
      labels.push_back("[" + format_number(bounds[i], precision) + "," +
                       format_number(bounds[i + 1], precision) + (last ? "]" : ")"));
    }
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() == labels.size()) break;
  }
  return labels;
}

std::optional<DiscretizationSpec> discretize_with(BinMethod method, std::span<const double> values,
                                                  int k, std::string column) {
  auto cuts = cut_points_for(method, values, k);
  if (!cuts) return std::nullopt;
  const auto sorted = sorted_finite(values);
  DiscretizationSpec spec;
  spec.column = std::move(column);
  spec.method = method;
  spec.cut_points = std::move(*cuts);
  spec.min = sorted.front();
  spec.max = sorted.back();
  spec.bin_labels = interval_labels(spec.min, spec.cut_points, spec.max);
  return spec;
}

DiscretizedColumn discretize_column(std::span<const double> values, int k, std::string column) {
  const auto sorted = sorted_finite(values);
  std::set<double> unique(sorted.begin(), sorted.end());
  if (unique.size() < 2) {
    throw Error(ErrorCode::constant_column,
                "column '" + column + "' has fewer than two distinct values");
  }
  for (BinMethod method : kMethodCascade) {
    if (auto spec = discretize_with(method, values, k, column)) {
      DiscretizedColumn out{std::move(*spec), {}};
      out.codes = apply_spec(out.spec, values);
      return out;
    }
  }
  throw Error(ErrorCode::discretization_failed,
              "no discretization method produced " + std::to_string(k) +
                  " non-empty bins for column '" + column + "'");
}

json spec_to_json(const DiscretizationSpec& spec) {
  return {{"column", spec.column},       {"method", to_string(spec.method)},
          {"cut_points", spec.cut_points}, {"bin_labels", spec.bin_labels},
          {"min", spec.min},             {"max", spec.max}};
}

DiscretizationSpec spec_from_json(const json& doc) {
  try {
    DiscretizationSpec spec;
    spec.column = doc.at("column").get<std::string>();
    spec.method = bin_method_from_string(doc.at("method").get<std::string>());
    spec.cut_points = doc.at("cut_points").get<std::vector<double>>();
    spec.bin_labels = doc.at("bin_labels").get<std::vector<std::string>>();
    spec.min = doc.at("min").get<double>();
    spec.max = doc.at("max").get<double>();
    for (std::size_t i = 1; i < spec.cut_points.size(); ++i) {
      if (!(spec.cut_points[i] > spec.cut_points[i - 1])) {
        throw Error(ErrorCode::schema, "cut points of '" + spec.column + "' not ascending");
      }
    }
    if (spec.bin_labels.size() != spec.cut_points.size() + 1) {
      throw Error(ErrorCode::schema, "bin label count mismatch for '" + spec.column + "'");
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed discretization spec: ") + e.what());
  }
}

}  // namespace bdn
