#include "bdn/structure.hpp"

#include "bdn/error.hpp"
#include "bdn/parallel.hpp"
#include "bdn/random.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace bdn {

// ---------------------------------------------------------------------------
// EdgeConstraints

bool EdgeConstraints::forbids(std::string_view parent, std::string_view child) const {
  for (const auto& [p, c] : blacklist) {
    if (c == child && (p == parent || p == kAnyNode)) return true;
  }
  return false;
}

bool EdgeConstraints::requires_edge(std::string_view parent, std::string_view child) const {
  return whitelist.count({std::string(parent), std::string(child)}) > 0;
}

void EdgeConstraints::validate(const std::vector<std::string>& nodes) const {
  auto known = [&nodes](const std::string& n) {
    return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
  };
  for (const auto& [p, c] : blacklist) {
    if ((p != kAnyNode && !known(p)) || !known(c)) {
      throw Error(ErrorCode::constraint, "blacklist names unknown variable in " + p + " -> " + c);
    }
  }
  for (const auto& [p, c] : whitelist) {
    if (!known(p) || !known(c)) {
      throw Error(ErrorCode::constraint, "whitelist names unknown variable in " + p + " -> " + c);
    }
    if (forbids(p, c)) {
      throw Error(ErrorCode::constraint, "edge " + p + " -> " + c + " is both required and forbidden");
    }
  }
  Dag required(nodes);
  try {
    for (const auto& [p, c] : whitelist) required.add_edge(p, c);
  } catch (const Error& e) {
    throw Error(ErrorCode::constraint, std::string("invalid whitelist: ") + e.what());
  }
  if (auto cycle = find_cycle(required)) {
    throw Error(ErrorCode::constraint, "whitelist contains a cycle through '" +
                                           required.name(cycle->front()) + "'");
  }
}

Dag EdgeConstraints::required_dag(const std::vector<std::string>& nodes) const {
  Dag dag(nodes);
  for (const auto& [p, c] : whitelist) dag.add_edge(p, c);
  return dag;
}

namespace {

std::set<std::pair<std::string, std::string>> read_pairs(const json& arr) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& e : arr) {
    if (e.is_array()) {
      out.emplace(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    } else {
      out.emplace(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    }
  }
  return out;
}

json write_pairs(const std::set<std::pair<std::string, std::string>>& pairs) {
  json out = json::array();
  for (const auto& [p, c] : pairs) out.push_back({p, c});
  return out;
}

}  // namespace

EdgeConstraints constraints_from_json(const json& doc) {
  try {
    EdgeConstraints out;
    if (doc.is_null()) return out;
    if (doc.is_array()) {
      out.blacklist = read_pairs(doc);
      return out;
    }
    if (doc.contains("blacklist")) out.blacklist = read_pairs(doc["blacklist"]);
    if (doc.contains("whitelist")) out.whitelist = read_pairs(doc["whitelist"]);
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::constraint, std::string("malformed constraints: ") + e.what());
  }
}

json constraints_to_json(const EdgeConstraints& constraints) {
  return {{"blacklist", write_pairs(constraints.blacklist)},
          {"whitelist", write_pairs(constraints.whitelist)}};
}

// ---------------------------------------------------------------------------
// BIC

double bic_family_score(const Dataset& data, int child, std::span<const int> parents) {
  const Eigen::Index n = data.rows();
  if (n < 1) throw Error(ErrorCode::validation, "cannot score an empty dataset");
  const int r = data.variables[static_cast<std::size_t>(child)].cardinality();
  double q = 1.0;
  for (int p : parents) q *= data.variables[static_cast<std::size_t>(p)].cardinality();
  if (q > 1e15) throw Error(ErrorCode::validation, "parent configuration space too large");

  // Mixed-radix configuration index, last parent fastest.
  auto config_of = [&](Eigen::Index row) {
    std::uint64_t j = 0;
    for (int p : parents) {
      j = j * static_cast<std::uint64_t>(data.variables[static_cast<std::size_t>(p)].cardinality()) +
          static_cast<std::uint64_t>(data.codes(row, p));
    }
    return j;
  };

  double loglik = 0.0;
  const double cells = q * r;
  if (cells <= static_cast<double>(std::max<Eigen::Index>(1 << 16, 4 * n))) {
    const auto q_int = static_cast<std::size_t>(q);
    std::vector<std::int64_t> counts(q_int * static_cast<std::size_t>(r), 0);
    for (Eigen::Index row = 0; row < n; ++row) {
      ++counts[config_of(row) * static_cast<std::size_t>(r) + static_cast<std::size_t>(data.codes(row, child))];
    }
    for (std::size_t j = 0; j < q_int; ++j) {
      std::int64_t nj = 0;
      for (int k = 0; k < r; ++k) nj += counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)];
      if (nj == 0) continue;
      for (int k = 0; k < r; ++k) {
        const auto njk = counts[j * static_cast<std::size_t>(r) + static_cast<std::size_t>(k)];
        if (njk > 0) loglik += static_cast<double>(njk) * std::log(static_cast<double>(njk) / static_cast<double>(nj));
      }
    }
  } else {
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> counts;
    for (Eigen::Index row = 0; row < n; ++row) {
      auto& slot = counts[config_of(row)];
      if (slot.empty()) slot.assign(static_cast<std::size_t>(r), 0);
      ++slot[static_cast<std::size_t>(data.codes(row, child))];
    }
    // Sum in key order so the result does not depend on hash iteration order.
    std::vector<std::uint64_t> keys;
    for (const auto& kv : counts) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    for (auto key : keys) {
      const auto& slot = counts[key];
      const double nj = static_cast<double>(std::accumulate(slot.begin(), slot.end(), std::int64_t{0}));
      for (auto njk : slot) {
        if (njk > 0) loglik += static_cast<double>(njk) * std::log(static_cast<double>(njk) / nj);
      }
    }
  }
  const double penalty = q * (r - 1) * std::log(static_cast<double>(n)) / 2.0;
  return loglik - penalty;
}

double bic_family_score(const Dataset& data, std::string_view child,
                        const std::vector<std::string>& parents) {
  std::vector<int> idx;
  for (const auto& p : parents) idx.push_back(data.index_of(p));
  return bic_family_score(data, data.index_of(child), idx);
}

double BicScorer::family(int child, const std::vector<int>& parents) const {
  auto& slot = cache_[static_cast<std::size_t>(child)];
  if (auto it = slot.find(parents); it != slot.end()) return it->second;
  ++evaluations_;
  double s = bic_family_score(*data_, child, parents);
  slot.emplace(parents, s);
  return s;
}

ScoredDag BicScorer::score(const Dag& dag) const {
  ScoredDag out{dag, 0.0, {}};
  for (std::size_t v = 0; v < dag.size(); ++v) {
    const int col = data_->index_of(dag.name(static_cast<int>(v)));
    std::vector<int> parents;
    for (int p : dag.parents(static_cast<int>(v))) parents.push_back(data_->index_of(dag.name(p)));
    std::sort(parents.begin(), parents.end());
    double s = family(col, parents);
    out.per_family[dag.name(static_cast<int>(v))] = s;
    out.score += s;
  }
  return out;
}

ScoredDag bic_score(const Dag& dag, const Dataset& data) { return BicScorer(data).score(dag); }

// ---------------------------------------------------------------------------
// hill climbing

std::string_view to_string(Move::Op op) {
  switch (op) {
    case Move::Op::add: return "add";
    case Move::Op::remove: return "remove";
    case Move::Op::reverse: return "reverse";
  }
  return "";
}

namespace {

std::vector<int> with_parent(std::vector<int> parents, int p) {
  parents.insert(std::upper_bound(parents.begin(), parents.end(), p), p);
  return parents;
}

std::vector<int> without_parent(std::vector<int> parents, int p) {
  parents.erase(std::lower_bound(parents.begin(), parents.end(), p));
  return parents;
}

/// reach[u][v] != 0 iff there is a directed path u ~> v (including u == v).
std::vector<std::vector<char>> reachability(const Dag& dag) {
  const std::size_t n = dag.size();
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t s = 0; s < n; ++s) {
    auto& row = reach[s];
    std::vector<int> stack{static_cast<int>(s)};
    row[s] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int c : dag.children(v)) {
        if (!row[static_cast<std::size_t>(c)]) {
          row[static_cast<std::size_t>(c)] = 1;
          stack.push_back(c);
        }
      }
    }
  }
  return reach;
}

}  // namespace

HillClimbResult hill_climb(const Dataset& data, const EdgeConstraints& constraints, const Dag& init,
                           const HillClimbOptions& options) {
  check_dataset(data);
  const auto names = data.names();
  if (init.nodes() != names) {
    throw Error(ErrorCode::constraint, "initial structure nodes do not match the data columns");
  }
  constraints.validate(names);
  for (const auto& [p, c] : init.named_edges()) {
    if (constraints.forbids(p, c)) {
      throw Error(ErrorCode::constraint, "initial structure contains forbidden edge " + p + " -> " + c);
    }
  }
  for (const auto& [p, c] : constraints.whitelist) {
    if (!init.has_edge(init.index_of(p), init.index_of(c))) {
      throw Error(ErrorCode::constraint, "initial structure lacks required edge " + p + " -> " + c);
    }
  }
  if (!init.is_acyclic()) throw Error(ErrorCode::constraint, "initial structure is cyclic");

  const int n = static_cast<int>(names.size());
  std::vector<std::vector<char>> forbidden(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  std::vector<std::vector<char>> required(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      forbidden[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = constraints.forbids(names[static_cast<std::size_t>(u)], names[static_cast<std::size_t>(v)]);
      required[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = constraints.requires_edge(names[static_cast<std::size_t>(u)], names[static_cast<std::size_t>(v)]);
    }
  }

  BicScorer scorer(data);
  Dag dag = init;
  std::vector<double> family(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) family[static_cast<std::size_t>(v)] = scorer.family(v, dag.parents(v));
  auto total_score = [&] { return std::accumulate(family.begin(), family.end(), 0.0); };

  HillClimbResult out;
  double total = total_score();
  out.trace.push_back(total);

  // Lexicographic rank of a move: (operation, parent name, child name).
  auto precedes = [&names](const Move& a, const Move& b) {
    return std::tie(a.op, names[static_cast<std::size_t>(a.parent)], names[static_cast<std::size_t>(a.child)]) <
           std::tie(b.op, names[static_cast<std::size_t>(b.parent)], names[static_cast<std::size_t>(b.child)]);
  };

  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const auto reach = reachability(dag);
    bool found = false;
    Move best{Move::Op::add, 0, 0};
    double best_gain = 0.0;
    auto consider = [&](const Move& m, double gain) {
      if (!found || gain > best_gain || (gain == best_gain && precedes(m, best))) {
        found = true;
        best = m;
        best_gain = gain;
      }
    };

    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (u == v) continue;
        const auto su = static_cast<std::size_t>(u);
        const auto sv = static_cast<std::size_t>(v);
        if (dag.has_edge(u, v)) {
          if (required[su][sv]) continue;
          const auto pv = without_parent(dag.parents(v), u);
          const double drop = scorer.family(v, pv) - family[sv];
          consider({Move::Op::remove, u, v}, drop);
          if (forbidden[sv][su]) continue;
          // Reversal is acyclic unless u reaches v through another child.
          bool cycle = false;
          for (int c : dag.children(u)) {
            if (c != v && reach[static_cast<std::size_t>(c)][sv]) {
              cycle = true;
              break;
            }
          }
          if (cycle) continue;
          const double gain = drop + scorer.family(u, with_parent(dag.parents(u), v)) - family[su];
          consider({Move::Op::reverse, u, v}, gain);
        } else if (!dag.has_edge(v, u)) {
          if (forbidden[su][sv] || reach[sv][su]) continue;
          consider({Move::Op::add, u, v}, scorer.family(v, with_parent(dag.parents(v), u)) - family[sv]);
        }
      }
    }

    if (!found || !(best_gain > options.tolerance * std::max(1.0, std::abs(total)))) break;

    switch (best.op) {
      case Move::Op::add: dag.add_edge(best.parent, best.child); break;
      case Move::Op::remove: dag.remove_edge(best.parent, best.child); break;
      case Move::Op::reverse: dag.reverse_edge(best.parent, best.child); break;
    }
    family[static_cast<std::size_t>(best.child)] = scorer.family(best.child, dag.parents(best.child));
    family[static_cast<std::size_t>(best.parent)] = scorer.family(best.parent, dag.parents(best.parent));
    total = total_score();
    out.trace.push_back(total);
    out.moves.push_back(best);
  }

  out.result.dag = dag;
  out.result.score = total;
  for (int v = 0; v < n; ++v) out.result.per_family[names[static_cast<std::size_t>(v)]] = family[static_cast<std::size_t>(v)];
  return out;
}

// ---------------------------------------------------------------------------
// ensemble

double EnsembleResult::undirected_strength(const std::string& u, const std::string& v) const {
  double s = 0.0;
  if (auto it = edge_strength.find({u, v}); it != edge_strength.end()) s += it->second;
  if (auto it = edge_strength.find({v, u}); it != edge_strength.end()) s += it->second;
  return s;
}

EnsembleResult aggregate_structures(const std::vector<std::string>& nodes,
                                    const std::vector<Dag>& structures,
                                    const EdgeConstraints& constraints, double threshold) {
  EnsembleResult out;
  out.nodes = nodes;
  out.n_bootstraps = structures.size();
  out.threshold = threshold;
  out.consensus = Dag(nodes);
  if (structures.empty()) return out;

  std::map<std::pair<std::string, std::string>, std::size_t> counts;
  for (const auto& dag : structures) {
    if (dag.nodes() != nodes) throw Error(ErrorCode::structure, "replicate structure has different nodes");
    for (auto& e : dag.named_edges()) ++counts[e];
  }
  const double total = static_cast<double>(structures.size());
  for (const auto& [edge, c] : counts) out.edge_strength[edge] = static_cast<double>(c) / total;

  auto count_of = [&counts](const std::string& p, const std::string& c) -> std::size_t {
    auto it = counts.find({p, c});
    return it == counts.end() ? 0 : it->second;
  };

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& [edge, c] : counts) pairs.insert(std::minmax(edge.first, edge.second));
  for (const auto& [u, v] : pairs) {
    const std::size_t forward = count_of(u, v);
    const std::size_t backward = count_of(v, u);
    out.direction_strength[{u, v}] = static_cast<double>(forward) / static_cast<double>(forward + backward);
    const double undirected = static_cast<double>(forward + backward) / total;
    if (!(undirected > threshold)) continue;
    bool keep_forward = forward > backward;
    if (forward == backward) {
      keep_forward = !constraints.forbids(u, v);
      out.notes.push_back("orientation tie on " + u + " - " + v + "; kept " +
                          (keep_forward ? u + " -> " + v : v + " -> " + u));
    }
    const auto& parent = keep_forward ? u : v;
    const auto& child = keep_forward ? v : u;
    if (constraints.forbids(parent, child)) continue;
    out.consensus.add_edge(parent, child);
  }

  while (auto cycle = find_cycle(out.consensus)) {
    const auto& cyc = *cycle;
    std::pair<int, int> weakest{-1, -1};
    double weakest_strength = 2.0;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const int p = cyc[i];
      const int c = cyc[(i + 1) % cyc.size()];
      const auto& pn = out.consensus.name(p);
      const auto& cn = out.consensus.name(c);
      const double s = out.edge_strength[{pn, cn}];
      if (s < weakest_strength ||
          (s == weakest_strength &&
           std::tie(pn, cn) < std::tie(out.consensus.name(weakest.first), out.consensus.name(weakest.second)))) {
        weakest = {p, c};
        weakest_strength = s;
      }
    }
    std::ostringstream note;
    note << "dropped " << out.consensus.name(weakest.first) << " -> "
         << out.consensus.name(weakest.second) << " (strength " << weakest_strength
         << ") to break a cycle";
    out.notes.push_back(note.str());
    out.consensus.remove_edge(weakest.first, weakest.second);
  }
  return out;
}

EnsembleResult bootstrap_ensemble(const Dataset& data, const EdgeConstraints& constraints,
                                  const EnsembleOptions& options) {
  check_dataset(data);
  if (options.n_bootstraps < 1) throw Error(ErrorCode::validation, "n_bootstraps must be at least 1");
  if (data.rows() < 1) throw Error(ErrorCode::validation, "cannot learn from an empty dataset");
  const auto names = data.names();
  constraints.validate(names);
  const Dag start = constraints.required_dag(names);

  std::vector<Dag> structures(options.n_bootstraps);
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(options.n_bootstraps, options.workers, [&](std::size_t i) {
    Rng rng(options.seed + i);
    const auto n = static_cast<std::uint64_t>(data.rows());
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows) r = static_cast<Eigen::Index>(uniform_index(rng, n));
    const Dataset sample = data.select_rows(rows);
    structures[i] = hill_climb(sample, constraints, start, options.search).result.dag;
    if (options.progress) {
      std::lock_guard lock(progress_mutex);
      options.progress(++done, options.n_bootstraps);
    }
  });

  EnsembleResult out = aggregate_structures(names, structures, constraints, options.threshold);
  out.seed = options.seed;
  return out;
}

json ensemble_to_json(const EnsembleResult& result) {
  json strengths = json::array();
  for (const auto& [edge, s] : result.edge_strength) {
    strengths.push_back({{"from", edge.first}, {"to", edge.second}, {"strength", s}});
  }
  json directions = json::array();
  for (const auto& [edge, s] : result.direction_strength) {
    directions.push_back({{"from", edge.first}, {"to", edge.second}, {"strength", s}});
  }
  return {{"nodes", result.nodes},
          {"edge_strength", strengths},
          {"direction_strength", directions},
          {"consensus", dag_to_json(result.consensus)},
          {"n_bootstraps", result.n_bootstraps},
          {"threshold", result.threshold},
          {"seed", result.seed},
          {"vote_rule", "undirected strength > threshold; orientation by majority direction; "
                        "cycles broken by dropping the weakest edge"},
          {"notes", result.notes}};
}

EnsembleResult ensemble_from_json(const json& doc) {
  try {
    EnsembleResult out;
    out.nodes = doc.at("nodes").get<std::vector<std::string>>();
    for (const auto& e : doc.at("edge_strength")) {
      out.edge_strength[{e.at("from").get<std::string>(), e.at("to").get<std::string>()}] =
          e.at("strength").get<double>();
    }
    for (const auto& e : doc.at("direction_strength")) {
      out.direction_strength[{e.at("from").get<std::string>(), e.at("to").get<std::string>()}] =
          e.at("strength").get<double>();
    }
    out.consensus = Dag(out.nodes);
    for (const auto& e : doc.at("consensus").at("edges")) {
      out.consensus.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    out.n_bootstraps = doc.at("n_bootstraps").get<std::size_t>();
    out.threshold = doc.at("threshold").get<double>();
    out.seed = doc.at("seed").get<std::uint64_t>();
    out.notes = doc.value("notes", std::vector<std::string>{});
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed ensemble JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// parameters

DiscreteNetwork fit_cpts(const Dag& dag, const Dataset& data, double alpha) {
  check_dataset(data);
  if (alpha < 0.0) throw Error(ErrorCode::validation, "alpha must be nonnegative");
  std::vector<Variable> variables;
  std::vector<int> column;
  for (const auto& name : dag.nodes()) {
    column.push_back(data.index_of(name));
    variables.push_back(data.variables[static_cast<std::size_t>(column.back())]);
  }
  std::vector<Cpt> cpts;
  for (std::size_t v = 0; v < dag.size(); ++v) {
    const auto& parents = dag.parents(static_cast<int>(v));
    Cpt cpt;
    cpt.child = dag.name(static_cast<int>(v));
    Eigen::Index rows = 1;
    for (int p : parents) {
      cpt.parents.push_back(dag.name(p));
      rows *= variables[static_cast<std::size_t>(p)].cardinality();
    }
    const int r = variables[v].cardinality();
    CptTable counts = CptTable::Zero(rows, r);
    for (Eigen::Index row = 0; row < data.rows(); ++row) {
      Eigen::Index j = 0;
      for (int p : parents) {
        j = j * variables[static_cast<std::size_t>(p)].cardinality() +
            data.codes(row, column[static_cast<std::size_t>(p)]);
      }
      counts(j, data.codes(row, column[v])) += 1.0;
    }
    cpt.table = CptTable(rows, r);
    for (Eigen::Index j = 0; j < rows; ++j) {
      const double denom = counts.row(j).sum() + alpha * r;
      if (denom > 0.0) {
        cpt.table.row(j) = (counts.row(j).array() + alpha) / denom;
      } else {
        cpt.table.row(j).setConstant(1.0 / r);
      }
    }
    cpts.push_back(std::move(cpt));
  }
  return DiscreteNetwork(std::move(variables), dag, std::move(cpts));
}

}  // namespace bdn
