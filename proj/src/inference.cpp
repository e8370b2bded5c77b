#include "bdn/inference.hpp"

#include "bdn/parallel.hpp"
#include "bdn/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

namespace bdn {

std::string_view to_string(Method method) {
  return method == Method::exact ? "exact" : "approximate";
}

EncodedEvidence encode_evidence(const DiscreteNetwork& net, const Evidence& evidence) {
  EncodedEvidence out;
  for (const auto& [name, state] : evidence) {
    auto v = net.dag().find(name);
    if (!v) throw Error(ErrorCode::query, "evidence on unknown variable '" + name + "'");
    auto s = net.variable(*v).find_state(state);
    if (!s) throw Error(ErrorCode::query, "variable '" + name + "' has no state '" + state + "'");
    out.emplace_back(*v, *s);
  }
  return out;
}

json distribution_to_json(const Distribution& dist) {
  json probs = json::object();
  for (std::size_t i = 0; i < dist.states.size(); ++i) {
    probs[dist.states[i]] = dist.probabilities(static_cast<Eigen::Index>(i));
  }
  json meta = {{"method", to_string(dist.method)}};
  if (dist.method == Method::exact) {
    meta["log_evidence"] = dist.log_evidence;
  } else {
    meta["samples_drawn"] = dist.samples.drawn;
    meta["accepted"] = dist.samples.accepted;
    meta["repeats"] = dist.samples.repeats;
    meta["repeats_with_acceptance"] = dist.samples.repeats_with_acceptance;
    meta["acceptance_rate"] = dist.samples.drawn
                                  ? static_cast<double>(dist.samples.accepted) / static_cast<double>(dist.samples.drawn)
                                  : 0.0;
  }
  json out = {{"variable", dist.variable}, {"probabilities", probs}, {"meta", meta}};
  if (dist.std_error) {
    json se = json::object();
    for (std::size_t i = 0; i < dist.states.size(); ++i) {
      se[dist.states[i]] = (*dist.std_error)(static_cast<Eigen::Index>(i));
    }
    out["std_error"] = se;
  }
  return out;
}

namespace {

std::vector<Eigen::Index> strides_of(const std::vector<int>& cards) {
  std::vector<Eigen::Index> strides(cards.size(), 1);
  for (std::size_t i = cards.size(); i-- > 1;) strides[i - 1] = strides[i] * cards[i];
  return strides;
}

Eigen::Index table_size(const std::vector<int>& cards) {
  Eigen::Index n = 1;
  for (int c : cards) n *= c;
  return n;
}

/// For every entry of a table over `from` (last variable fastest), the index
/// of the matching entry of a table over `to`, which must be a subset.
std::vector<Eigen::Index> projection(const DiscreteNetwork& net, const std::vector<int>& from,
                                     const std::vector<int>& to) {
  std::vector<int> from_cards, to_cards;
  for (int v : from) from_cards.push_back(net.cardinality(v));
  for (int v : to) to_cards.push_back(net.cardinality(v));
  const auto to_strides = strides_of(to_cards);
  // Stride in `to` contributed by each position of `from`.
  std::vector<Eigen::Index> weight(from.size(), 0);
  for (std::size_t i = 0; i < from.size(); ++i) {
    auto it = std::find(to.begin(), to.end(), from[i]);
    if (it != to.end()) weight[i] = to_strides[static_cast<std::size_t>(it - to.begin())];
  }
  const Eigen::Index size = table_size(from_cards);
  std::vector<Eigen::Index> map(static_cast<std::size_t>(size));
  std::vector<int> state(from.size(), 0);
  Eigen::Index target = 0;
  for (Eigen::Index k = 0; k < size; ++k) {
    map[static_cast<std::size_t>(k)] = target;
    // Odometer increment, last position fastest.
    for (std::size_t i = from.size(); i-- > 0;) {
      if (++state[i] < from_cards[i]) {
        target += weight[i];
        break;
      }
      target -= weight[i] * (from_cards[i] - 1);
      state[i] = 0;
    }
  }
  return map;
}

bool is_subset(const std::vector<int>& small, const std::vector<int>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

CliqueTree CliqueTree::compile(const DiscreteNetwork& net, const CompileOptions& options) {
  require_valid(net);
  CliqueTree tree;
  tree.net_ = std::make_shared<const DiscreteNetwork>(net);
  const Dag& dag = net.dag();
  const int n = static_cast<int>(net.size());

  // Moral graph.
  std::vector<std::set<int>> adj(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const auto& pa = dag.parents(v);
    for (int p : pa) {
      adj[static_cast<std::size_t>(p)].insert(v);
      adj[static_cast<std::size_t>(v)].insert(p);
    }
    for (std::size_t i = 0; i < pa.size(); ++i) {
      for (std::size_t j = i + 1; j < pa.size(); ++j) {
        adj[static_cast<std::size_t>(pa[i])].insert(pa[j]);
        adj[static_cast<std::size_t>(pa[j])].insert(pa[i]);
      }
    }
  }

  // Min-fill elimination.
  std::vector<char> eliminated(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> candidates;
  for (int step = 0; step < n; ++step) {
    int best = -1;
    std::size_t best_fill = 0;
    for (int v = 0; v < n; ++v) {
      if (eliminated[static_cast<std::size_t>(v)]) continue;
      const auto& nb = adj[static_cast<std::size_t>(v)];
      std::size_t fill = 0;
      for (auto a = nb.begin(); a != nb.end(); ++a) {
        for (auto b = std::next(a); b != nb.end(); ++b) {
          if (!adj[static_cast<std::size_t>(*a)].count(*b)) ++fill;
        }
      }
      if (best < 0 || fill < best_fill || (fill == best_fill && dag.name(v) < dag.name(best))) {
        best = v;
        best_fill = fill;
      }
    }
    const auto nb = adj[static_cast<std::size_t>(best)];
    std::vector<int> clique(nb.begin(), nb.end());
    clique.insert(std::upper_bound(clique.begin(), clique.end(), best), best);
    candidates.push_back(std::move(clique));
    for (auto a = nb.begin(); a != nb.end(); ++a) {
      for (auto b = std::next(a); b != nb.end(); ++b) {
        adj[static_cast<std::size_t>(*a)].insert(*b);
        adj[static_cast<std::size_t>(*b)].insert(*a);
      }
    }
    for (int u : nb) adj[static_cast<std::size_t>(u)].erase(best);
    adj[static_cast<std::size_t>(best)].clear();
    eliminated[static_cast<std::size_t>(best)] = 1;
  }

  // Keep maximal cliques, in elimination order.
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < candidates.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool sub = is_subset(candidates[i], candidates[j]);
      dominated = sub && (candidates[i].size() < candidates[j].size() || j < i);
    }
    if (!dominated) tree.cliques_.push_back(candidates[i]);
  }

  for (const auto& c : tree.cliques_) {
    std::vector<int> cards;
    double entries = 1.0;
    for (int v : c) {
      cards.push_back(net.cardinality(v));
      entries *= net.cardinality(v);
    }
    if (c.size() > options.max_clique_variables || entries > options.max_table_entries) {
      throw Error(ErrorCode::treewidth_limit,
                  "triangulated network has a clique of " + std::to_string(c.size()) +
                      " variables (" + std::to_string(entries) +
                      " entries); use approximate inference instead");
    }
    tree.strides_.push_back(strides_of(cards));
    tree.sizes_.push_back(table_size(cards));
  }

  // Maximum spanning tree on separator size (Kruskal, ties by clique index).
  const int m = static_cast<int>(tree.cliques_.size());
  struct Candidate {
    std::size_t weight;
    int a, b;
    std::vector<int> sep;
  };
  std::vector<Candidate> pairs;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      std::vector<int> sep;
      std::set_intersection(tree.cliques_[static_cast<std::size_t>(a)].begin(), tree.cliques_[static_cast<std::size_t>(a)].end(),
                            tree.cliques_[static_cast<std::size_t>(b)].begin(), tree.cliques_[static_cast<std::size_t>(b)].end(),
                            std::back_inserter(sep));
      pairs.push_back({sep.size(), a, b, std::move(sep)});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Candidate& x, const Candidate& y) { return x.weight > y.weight; });
  std::vector<int> root(static_cast<std::size_t>(m));
  std::iota(root.begin(), root.end(), 0);
  auto find = [&root](int x) {
    while (root[static_cast<std::size_t>(x)] != x) x = root[static_cast<std::size_t>(x)] = root[static_cast<std::size_t>(root[static_cast<std::size_t>(x)])];
    return x;
  };
  tree.adjacency_.resize(static_cast<std::size_t>(m));
  for (auto& c : pairs) {
    int ra = find(c.a), rb = find(c.b);
    if (ra == rb) continue;
    root[static_cast<std::size_t>(ra)] = rb;
    const int e = static_cast<int>(tree.edges_.size());
    tree.map_a_.push_back(projection(net, tree.cliques_[static_cast<std::size_t>(c.a)], c.sep));
    tree.map_b_.push_back(projection(net, tree.cliques_[static_cast<std::size_t>(c.b)], c.sep));
    tree.edges_.push_back({c.a, c.b, std::move(c.sep)});
    tree.adjacency_[static_cast<std::size_t>(c.a)].emplace_back(c.b, e);
    tree.adjacency_[static_cast<std::size_t>(c.b)].emplace_back(c.a, e);
  }

  // BFS order from clique 0.
  tree.parent_edge_.assign(static_cast<std::size_t>(m), -1);
  std::vector<char> seen(static_cast<std::size_t>(m), 0);
  for (int s = 0; s < m; ++s) {
    if (seen[static_cast<std::size_t>(s)]) continue;
    std::queue<int> q;
    q.push(s);
    seen[static_cast<std::size_t>(s)] = 1;
    while (!q.empty()) {
      int c = q.front();
      q.pop();
      tree.order_.push_back(c);
      for (auto [nb, e] : tree.adjacency_[static_cast<std::size_t>(c)]) {
        if (seen[static_cast<std::size_t>(nb)]) continue;
        seen[static_cast<std::size_t>(nb)] = 1;
        tree.parent_edge_[static_cast<std::size_t>(nb)] = e;
        q.push(nb);
      }
    }
  }

  // Home cliques and CPT assignment.
  tree.home_.assign(static_cast<std::size_t>(n), -1);
  tree.cpt_clique_.assign(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    std::vector<int> family = dag.parents(v);
    family.insert(std::upper_bound(family.begin(), family.end(), v), v);
    for (int c = 0; c < m; ++c) {
      const auto& clique = tree.cliques_[static_cast<std::size_t>(c)];
      const auto sc = static_cast<std::size_t>(c);
      if (std::binary_search(clique.begin(), clique.end(), v)) {
        int& h = tree.home_[static_cast<std::size_t>(v)];
        if (h < 0 || tree.sizes_[sc] < tree.sizes_[static_cast<std::size_t>(h)]) h = c;
      }
      if (is_subset(family, clique)) {
        int& a = tree.cpt_clique_[static_cast<std::size_t>(v)];
        if (a < 0 || tree.sizes_[sc] < tree.sizes_[static_cast<std::size_t>(a)]) a = c;
      }
    }
  }

  tree.potentials_.reserve(static_cast<std::size_t>(m));
  for (int c = 0; c < m; ++c) tree.potentials_.push_back(Eigen::ArrayXd::Ones(tree.sizes_[static_cast<std::size_t>(c)]));
  for (int v = 0; v < n; ++v) {
    const int c = tree.cpt_clique_[static_cast<std::size_t>(v)];
    std::vector<int> cpt_vars = net.cpt_parents(v);
    cpt_vars.push_back(v);
    const auto map = projection(net, tree.cliques_[static_cast<std::size_t>(c)], cpt_vars);
    const CptTable& table = net.cpt(v).table;
    auto& pot = tree.potentials_[static_cast<std::size_t>(c)];
    for (Eigen::Index k = 0; k < pot.size(); ++k) pot(k) *= table.data()[map[static_cast<std::size_t>(k)]];
  }

  tree.prior_ = tree.calibrate({});
  return tree;
}

bool CliqueTree::pass(Calibration& state, int from, int to, int edge, double* log_scale) const {
  const Edge& e = edges_[static_cast<std::size_t>(edge)];
  const bool from_a = e.a == from;
  const auto& map = from_a ? map_a_[static_cast<std::size_t>(edge)] : map_b_[static_cast<std::size_t>(edge)];
  const auto& to_map = from_a ? map_b_[static_cast<std::size_t>(edge)] : map_a_[static_cast<std::size_t>(edge)];
  auto& sender = state.beliefs[static_cast<std::size_t>(from)];
  auto& receiver = state.beliefs[static_cast<std::size_t>(to)];
  auto& sep = state.separators[static_cast<std::size_t>(edge)];

  if (log_scale) {
    const double total = sender.sum();
    if (!(total > 0.0)) return false;
    sender /= total;
    *log_scale += std::log(total);
  }
  Eigen::ArrayXd message = Eigen::ArrayXd::Zero(sep.size());
  for (Eigen::Index k = 0; k < sender.size(); ++k) message(map[static_cast<std::size_t>(k)]) += sender(k);
  Eigen::ArrayXd ratio = Eigen::ArrayXd::Zero(sep.size());
  for (Eigen::Index s = 0; s < sep.size(); ++s) {
    if (sep(s) != 0.0) ratio(s) = message(s) / sep(s);
  }
  for (Eigen::Index k = 0; k < receiver.size(); ++k) receiver(k) *= ratio(to_map[static_cast<std::size_t>(k)]);
  sep = std::move(message);
  return true;
}

void CliqueTree::run_passes(Calibration& state) const {
  double log_scale = 0.0;
  // Collect towards each root, normalizing every sender.
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const int c = *it;
    const int e = parent_edge_[static_cast<std::size_t>(c)];
    if (e < 0) continue;
    const Edge& edge = edges_[static_cast<std::size_t>(e)];
    const int parent = edge.a == c ? edge.b : edge.a;
    if (!pass(state, c, parent, e, &log_scale)) {
      state.consistent = false;
      state.log_evidence = -std::numeric_limits<double>::infinity();
      return;
    }
  }
  for (int c : order_) {
    if (parent_edge_[static_cast<std::size_t>(c)] >= 0) continue;
    auto& b = state.beliefs[static_cast<std::size_t>(c)];
    const double total = b.sum();
    if (!(total > 0.0)) {
      state.consistent = false;
      state.log_evidence = -std::numeric_limits<double>::infinity();
      return;
    }
    b /= total;
    log_scale += std::log(total);
  }
  // Distribute.
  for (int c : order_) {
    const int e = parent_edge_[static_cast<std::size_t>(c)];
    if (e < 0) continue;
    const Edge& edge = edges_[static_cast<std::size_t>(e)];
    const int parent = edge.a == c ? edge.b : edge.a;
    pass(state, parent, c, e, nullptr);
  }
  for (auto& b : state.beliefs) {
    const double total = b.sum();
    if (total > 0.0) b /= total;
  }
  state.consistent = true;
  state.log_evidence = log_scale;
}

Calibration CliqueTree::calibrate(const EncodedEvidence& evidence) const {
  ++*calibrations_;
  Calibration state;
  state.beliefs = potentials_;
  for (const auto& e : edges_) {
    Eigen::Index size = 1;
    for (int v : e.separator) size *= net_->cardinality(v);
    state.separators.push_back(Eigen::ArrayXd::Ones(size));
  }
  for (auto [v, s] : evidence) {
    const int c = home_[static_cast<std::size_t>(v)];
    const auto& clique = cliques_[static_cast<std::size_t>(c)];
    const auto pos = static_cast<std::size_t>(std::lower_bound(clique.begin(), clique.end(), v) - clique.begin());
    const Eigen::Index stride = strides_[static_cast<std::size_t>(c)][pos];
    const int card = net_->cardinality(v);
    auto& b = state.beliefs[static_cast<std::size_t>(c)];
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      if ((k / stride) % card != s) b(k) = 0.0;
    }
  }
  run_passes(state);
  return state;
}

void CliqueTree::recalibrate(Calibration& state) const {
  const double before = state.log_evidence;
  run_passes(state);
  if (state.consistent) state.log_evidence += before;
}

Eigen::VectorXd CliqueTree::marginal(const Calibration& state, int v) const {
  const int c = home_[static_cast<std::size_t>(v)];
  const auto& clique = cliques_[static_cast<std::size_t>(c)];
  const auto pos = static_cast<std::size_t>(std::lower_bound(clique.begin(), clique.end(), v) - clique.begin());
  const Eigen::Index stride = strides_[static_cast<std::size_t>(c)][pos];
  const int card = net_->cardinality(v);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(card);
  const auto& b = state.beliefs[static_cast<std::size_t>(c)];
  for (Eigen::Index k = 0; k < b.size(); ++k) out((k / stride) % card) += b(k);
  const double total = out.sum();
  if (total > 0.0) out /= total;
  return out;
}

Eigen::ArrayXd CliqueTree::separator_marginal(const Calibration& state, int edge, bool from_a) const {
  const Edge& e = edges_[static_cast<std::size_t>(edge)];
  const auto& map = from_a ? map_a_[static_cast<std::size_t>(edge)] : map_b_[static_cast<std::size_t>(edge)];
  const auto& b = state.beliefs[static_cast<std::size_t>(from_a ? e.a : e.b)];
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(state.separators[static_cast<std::size_t>(edge)].size());
  for (Eigen::Index k = 0; k < b.size(); ++k) out(map[static_cast<std::size_t>(k)]) += b(k);
  return out;
}

namespace {

int query_index(const DiscreteNetwork& net, std::string_view variable) {
  auto v = net.dag().find(variable);
  if (!v) throw Error(ErrorCode::query, "unknown query variable '" + std::string(variable) + "'");
  return *v;
}

Distribution exact_distribution(const CliqueTree& tree, const Calibration& state, int v) {
  const auto& var = tree.network().variable(v);
  Distribution d;
  d.variable = var.name;
  d.states = var.states;
  d.probabilities = tree.marginal(state, v);
  d.method = Method::exact;
  d.log_evidence = state.log_evidence;
  return d;
}

void require_consistent(const Calibration& state) {
  if (!state.consistent) throw Error(ErrorCode::impossible_evidence, "evidence has probability zero");
}

}  // namespace

Distribution prior_marginal(const CliqueTree& tree, std::string_view variable) {
  return exact_distribution(tree, tree.prior(), query_index(tree.network(), variable));
}

Distribution posterior(const CliqueTree& tree, std::string_view variable, const Evidence& evidence) {
  const int v = query_index(tree.network(), variable);
  if (evidence.empty()) return prior_marginal(tree, variable);
  const auto state = tree.calibrate(encode_evidence(tree.network(), evidence));
  require_consistent(state);
  return exact_distribution(tree, state, v);
}

std::vector<Distribution> posteriors(const CliqueTree& tree, const std::vector<std::string>& variables,
                                     const Evidence& evidence) {
  std::vector<int> idx;
  for (const auto& v : variables) idx.push_back(query_index(tree.network(), v));
  std::optional<Calibration> local;
  if (!evidence.empty()) {
    local = tree.calibrate(encode_evidence(tree.network(), evidence));
    require_consistent(*local);
  }
  const Calibration& state = local ? *local : tree.prior();
  std::vector<Distribution> out;
  for (int v : idx) out.push_back(exact_distribution(tree, state, v));
  return out;
}

Distribution rejection_sample(const DiscreteNetwork& net, std::string_view variable,
                              const Evidence& evidence, const RejectionOptions& options) {
  if (options.n_samples < 1 || options.repeats < 1) {
    throw Error(ErrorCode::validation, "n_samples and repeats must be at least 1");
  }
  const int target = query_index(net, variable);
  const auto encoded = encode_evidence(net, evidence);
  std::vector<int> observed(net.size(), -1);
  for (auto [v, s] : encoded) observed[static_cast<std::size_t>(v)] = s;
  const auto order = topological_indices(net.dag());
  const int card = net.cardinality(target);

  struct RepeatResult {
    Eigen::VectorXd counts;
    std::size_t accepted = 0;
  };
  std::vector<RepeatResult> results(options.repeats);
  parallel_for(options.repeats, options.workers, [&](std::size_t rep) {
    Rng rng(options.seed + rep);
    RepeatResult res{Eigen::VectorXd::Zero(card), 0};
    std::vector<int> states(net.size(), 0);
    for (std::size_t i = 0; i < options.n_samples; ++i) {
      bool rejected = false;
      for (int v : order) {
        const auto row = net.cpt(v).table.row(net.row_index(v, states));
        const double u = uniform01(rng);
        double acc = 0.0;
        int s = 0;
        const int last = static_cast<int>(row.size()) - 1;
        for (; s < last; ++s) {
          acc += row(s);
          if (u < acc) break;
        }
        states[static_cast<std::size_t>(v)] = s;
        const int obs = observed[static_cast<std::size_t>(v)];
        if (obs >= 0 && obs != s) {
          rejected = true;
          break;
        }
      }
      if (rejected) continue;
      ++res.accepted;
      res.counts(states[static_cast<std::size_t>(target)]) += 1.0;
    }
    results[rep] = std::move(res);
  });

  Distribution d;
  const auto& var = net.variable(target);
  d.variable = var.name;
  d.states = var.states;
  d.method = Method::approximate;
  d.samples.repeats = options.repeats;
  d.samples.drawn = options.n_samples * options.repeats;
  std::vector<Eigen::VectorXd> estimates;
  for (const auto& r : results) {
    d.samples.accepted += r.accepted;
    if (r.accepted > 0) estimates.push_back(r.counts / static_cast<double>(r.accepted));
  }
  d.samples.repeats_with_acceptance = estimates.size();
  if (estimates.empty()) {
    throw Error(ErrorCode::acceptance_failure,
                "no sample out of " + std::to_string(d.samples.drawn) +
                    " matched the evidence; use exact inference");
  }
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(card);
  for (const auto& e : estimates) mean += e;
  mean /= static_cast<double>(estimates.size());
  d.probabilities = mean;
  if (options.repeats > 1 && estimates.size() > 1) {
    Eigen::VectorXd var_sum = Eigen::VectorXd::Zero(card);
    for (const auto& e : estimates) var_sum += (e - mean).cwiseAbs2();
    d.std_error = (var_sum / static_cast<double>(estimates.size() - 1)).cwiseSqrt();
  }
  return d;
}

std::vector<QueryResult> query_batch(const CliqueTree& tree, const std::vector<Query>& queries) {
  std::vector<QueryResult> out(queries.size());
  std::map<Evidence, std::optional<Calibration>> calibrations;
  std::map<Evidence, std::pair<ErrorCode, std::string>> failures;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& q = queries[i];
    try {
      const int v = query_index(tree.network(), q.variable);
      if (q.evidence.empty()) {
        out[i].distribution = exact_distribution(tree, tree.prior(), v);
        continue;
      }
      if (auto f = failures.find(q.evidence); f != failures.end()) {
        throw Error(f->second.first, f->second.second);
      }
      auto it = calibrations.find(q.evidence);
      if (it == calibrations.end()) {
        try {
          auto state = tree.calibrate(encode_evidence(tree.network(), q.evidence));
          require_consistent(state);
          it = calibrations.emplace(q.evidence, std::move(state)).first;
        } catch (const Error& e) {
          failures.emplace(q.evidence, std::make_pair(e.code(), std::string(e.what())));
          throw;
        }
      }
      out[i].distribution = exact_distribution(tree, *it->second, v);
    } catch (const Error& e) {
      out[i].error_code = e.code();
      out[i].error = e.what();
    }
  }
  return out;
}

Dataset forward_sample(const DiscreteNetwork& net, std::size_t n, std::uint64_t seed) {
  Dataset data{net.variables(), Eigen::MatrixXi(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(net.size()))};
  const auto order = topological_indices(net.dag());
  Rng rng(seed);
  std::vector<int> states(net.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int v : order) {
      const auto row = net.cpt(v).table.row(net.row_index(v, states));
      const double u = uniform01(rng);
      double acc = 0.0;
      int s = 0;
      const int last = static_cast<int>(row.size()) - 1;
      for (; s < last; ++s) {
        acc += row(s);
        if (u < acc) break;
      }
      states[static_cast<std::size_t>(v)] = s;
    }
    for (std::size_t v = 0; v < net.size(); ++v) data.codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = states[v];
  }
  return data;
}

}  // namespace bdn
