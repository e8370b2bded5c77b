#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

namespace oracle {

bdn::DiscreteNetwork random_network(bdn::Rng& rng, const RandomNetOptions& o) {
  const int n = o.nodes;
  // Node i in the hidden order is called names[i]; the names are shuffled so
  // that lexicographic and topological order disagree.
  std::vector<int> label(static_cast<std::size_t>(n));
  std::iota(label.begin(), label.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(label[static_cast<std::size_t>(i)], label[bdn::uniform_index(rng, static_cast<std::uint64_t>(i + 1))]);
  }
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "V%02d", label[static_cast<std::size_t>(i)]);
    names.push_back(buf);
  }
  std::vector<int> cards;
  for (int i = 0; i < n; ++i) {
    cards.push_back(o.min_states + static_cast<int>(bdn::uniform_index(rng, static_cast<std::uint64_t>(o.max_states - o.min_states + 1))));
  }
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
  for (int i = 1; i < n; ++i) {
    const int k = static_cast<int>(bdn::uniform_index(rng, static_cast<std::uint64_t>(std::min(i, o.max_parents) + 1)));
    std::vector<int> pool(static_cast<std::size_t>(i));
    std::iota(pool.begin(), pool.end(), 0);
    for (int j = 0; j < k; ++j) {
      const auto pick = j + static_cast<int>(bdn::uniform_index(rng, static_cast<std::uint64_t>(i - j)));
      std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
      parents[static_cast<std::size_t>(i)].push_back(pool[static_cast<std::size_t>(j)]);
    }
  }

  // Dag and variables in name order.
  std::vector<int> by_name(static_cast<std::size_t>(n));
  std::iota(by_name.begin(), by_name.end(), 0);
  std::sort(by_name.begin(), by_name.end(), [&](int a, int b) { return names[static_cast<std::size_t>(a)] < names[static_cast<std::size_t>(b)]; });
  std::vector<bdn::Variable> vars;
  std::vector<std::string> sorted_names;
  for (int i : by_name) {
    bdn::Variable v{names[static_cast<std::size_t>(i)], {}, bdn::Role::chance};
    for (int s = 0; s < cards[static_cast<std::size_t>(i)]; ++s) v.states.push_back("s" + std::to_string(s));
    vars.push_back(v);
    sorted_names.push_back(v.name);
  }
  bdn::Dag dag(sorted_names);
  std::vector<bdn::Cpt> cpts;
  for (int i : by_name) {
    bdn::Cpt cpt;
    cpt.child = names[static_cast<std::size_t>(i)];
    int rows = 1;
    for (int p : parents[static_cast<std::size_t>(i)]) {
      dag.add_edge(names[static_cast<std::size_t>(p)], cpt.child);
      cpt.parents.push_back(names[static_cast<std::size_t>(p)]);
      rows *= cards[static_cast<std::size_t>(p)];
    }
    const int r = cards[static_cast<std::size_t>(i)];
    cpt.table.resize(rows, r);
    for (int row = 0; row < rows; ++row) {
      double sum = 0.0;
      for (int c = 0; c < r; ++c) {
        double x = 0.05 + bdn::uniform01(rng);
        if (o.zero_prob > 0.0 && bdn::uniform01(rng) < o.zero_prob) x = 0.0;
        cpt.table(row, c) = x;
        sum += x;
      }
      if (sum == 0.0) {
        cpt.table(row, static_cast<int>(bdn::uniform_index(rng, static_cast<std::uint64_t>(r)))) = 1.0;
        sum = 1.0;
      }
      cpt.table.row(row) /= sum;
    }
    cpts.push_back(std::move(cpt));
  }
  return bdn::DiscreteNetwork(std::move(vars), std::move(dag), std::move(cpts));
}

std::vector<int> Joint::decode(std::size_t index) const {
  std::vector<int> s(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    s[i] = static_cast<int>(index % static_cast<std::size_t>(cards[i]));
    index /= static_cast<std::size_t>(cards[i]);
  }
  return s;
}

Joint joint_table(const bdn::DiscreteNetwork& net) {
  Joint j;
  std::size_t total = 1;
  for (const auto& v : net.variables()) {
    j.cards.push_back(v.cardinality());
    total *= static_cast<std::size_t>(v.cardinality());
  }
  std::map<std::string, int> index;
  for (std::size_t v = 0; v < net.size(); ++v) index[net.variables()[v].name] = static_cast<int>(v);
  j.p.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    const auto s = j.decode(k);
    double p = 1.0;
    for (const auto& cpt : net.cpts()) {
      long row = 0;
      for (const auto& parent : cpt.parents) {
        const int pv = index.at(parent);
        row = row * j.cards[static_cast<std::size_t>(pv)] + s[static_cast<std::size_t>(pv)];
      }
      p *= cpt.table(row, s[static_cast<std::size_t>(index.at(cpt.child))]);
    }
    j.p[k] = p;
  }
  return j;
}

namespace {

bool matches(const std::vector<int>& s, const std::vector<std::pair<int, int>>& evidence) {
  for (auto [v, x] : evidence) {
    if (s[static_cast<std::size_t>(v)] != x) return false;
  }
  return true;
}

}  // namespace

double evidence_probability(const Joint& joint, const std::vector<std::pair<int, int>>& evidence) {
  double total = 0.0;
  for (std::size_t k = 0; k < joint.p.size(); ++k) {
    if (matches(joint.decode(k), evidence)) total += joint.p[k];
  }
  return total;
}

std::optional<Eigen::VectorXd> posterior(const Joint& joint, int target,
                                         const std::vector<std::pair<int, int>>& evidence) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(joint.cards[static_cast<std::size_t>(target)]);
  for (std::size_t k = 0; k < joint.p.size(); ++k) {
    const auto s = joint.decode(k);
    if (matches(s, evidence)) out(s[static_cast<std::size_t>(target)]) += joint.p[k];
  }
  const double z = out.sum();
  if (z == 0.0) return std::nullopt;
  return Eigen::VectorXd(out / z);
}

std::optional<std::vector<Eigen::VectorXd>> all_posteriors(const Joint& joint,
                                                           const std::vector<std::pair<int, int>>& evidence) {
  std::vector<Eigen::VectorXd> out;
  for (int c : joint.cards) out.push_back(Eigen::VectorXd::Zero(c));
  std::vector<int> s(joint.cards.size(), 0);
  double z = 0.0;
  for (std::size_t k = 0; k < joint.p.size(); ++k) {
    if (matches(s, evidence)) {
      z += joint.p[k];
      for (std::size_t v = 0; v < s.size(); ++v) out[v](s[v]) += joint.p[k];
    }
    for (std::size_t i = s.size(); i-- > 0;) {
      if (++s[i] < joint.cards[i]) break;
      s[i] = 0;
    }
  }
  if (z == 0.0) return std::nullopt;
  for (auto& v : out) v /= z;
  return out;
}

double bic_family(const bdn::Dataset& data, int child, const std::vector<int>& parents) {
  std::map<std::vector<int>, std::map<int, double>> counts;
  for (Eigen::Index r = 0; r < data.codes.rows(); ++r) {
    std::vector<int> cfg;
    for (int p : parents) cfg.push_back(data.codes(r, p));
    counts[cfg][data.codes(r, child)] += 1.0;
  }
  double loglik = 0.0;
  for (const auto& [cfg, by_state] : counts) {
    double nj = 0.0;
    for (const auto& [s, c] : by_state) nj += c;
    for (const auto& [s, c] : by_state) loglik += c * std::log(c / nj);
  }
  double q = 1.0;
  for (int p : parents) q *= data.variables[static_cast<std::size_t>(p)].cardinality();
  const double r = data.variables[static_cast<std::size_t>(child)].cardinality();
  return loglik - q * (r - 1.0) * std::log(static_cast<double>(data.codes.rows())) / 2.0;
}

std::vector<double> kmeans_cuts(std::vector<double> values, int k) {
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const int m = static_cast<int>(distinct.size());
  auto sse = [&](double lo, double hi) {
    double sum = 0.0, n = 0.0;
    for (double x : values) {
      if (x >= lo && x <= hi) {
        sum += x;
        n += 1.0;
      }
    }
    const double mean = sum / n;
    double s = 0.0;
    for (double x : values) {
      if (x >= lo && x <= hi) s += (x - mean) * (x - mean);
    }
    return s;
  };
  // Enumerate every choice of k-1 split positions among the m-1 gaps.
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_split;
  std::vector<int> split(static_cast<std::size_t>(k - 1));
  std::iota(split.begin(), split.end(), 1);
  while (true) {
    double total = 0.0;
    int start = 0;
    for (int i = 0; i <= k - 1; ++i) {
      const int end = i < k - 1 ? split[static_cast<std::size_t>(i)] : m;
      total += sse(distinct[static_cast<std::size_t>(start)], distinct[static_cast<std::size_t>(end - 1)]);
      start = end;
    }
    if (total < best) {
      best = total;
      best_split = split;
    }
    int i = k - 2;
    while (i >= 0 && split[static_cast<std::size_t>(i)] == m - (k - 1) + i) --i;
    if (i < 0) break;
    ++split[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k - 1; ++j) split[static_cast<std::size_t>(j)] = split[static_cast<std::size_t>(j - 1)] + 1;
  }
  std::vector<double> cuts;
  for (int s : best_split) cuts.push_back((distinct[static_cast<std::size_t>(s - 1)] + distinct[static_cast<std::size_t>(s)]) / 2.0);
  return cuts;
}

std::optional<double> expected_utility(const Joint& joint, const std::vector<std::pair<int, Eigen::VectorXd>>& utilities,
                                       std::vector<std::pair<int, int>> evidence) {
  double eu = 0.0;
  for (const auto& [h, u] : utilities) {
    auto p = posterior(joint, h, evidence);
    if (!p) return std::nullopt;
    eu += u.dot(*p);
  }
  return eu;
}

int skeleton_shd(const bdn::Dag& a, const bdn::Dag& b) {
  auto skeleton = [](const bdn::Dag& d) {
    std::set<std::pair<std::string, std::string>> s;
    for (const auto& [p, c] : d.named_edges()) s.insert(std::minmax(p, c));
    return s;
  };
  const auto sa = skeleton(a), sb = skeleton(b);
  int diff = 0;
  for (const auto& e : sa) diff += !sb.count(e);
  for (const auto& e : sb) diff += !sa.count(e);
  return diff;
}

}  // namespace oracle
