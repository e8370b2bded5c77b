#include "bdn/model.hpp"

#include "bdn/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace bdn {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::chance: return "chance";
    case Role::decision: return "decision";
    case Role::utility: return "utility";
  }
  return "chance";
}

Role role_from_string(std::string_view text) {
  if (text == "chance") return Role::chance;
  if (text == "decision") return Role::decision;
  if (text == "utility") return Role::utility;
  throw Error(ErrorCode::schema, "unknown role '" + std::string(text) + "'");
}

std::optional<int> Variable::find_state(std::string_view label) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

int Variable::state_index(std::string_view label) const {
  if (auto s = find_state(label)) return *s;
  throw Error(ErrorCode::invalid_assignment,
              "variable '" + name + "' has no state '" + std::string(label) + "'");
}

// ---------------------------------------------------------------------------
// Dag

Dag::Dag(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
  std::set<std::string_view> seen;
  for (const auto& n : nodes_) {
    if (!seen.insert(n).second) throw Error(ErrorCode::structure, "duplicate node '" + n + "'");
  }
  parents_.resize(nodes_.size());
  children_.resize(nodes_.size());
}

Dag::Dag(std::vector<std::string> nodes,
         const std::vector<std::pair<std::string, std::string>>& edges)
    : Dag(std::move(nodes)) {
  for (const auto& [p, c] : edges) add_edge(p, c);
}

std::optional<int> Dag::find(std::string_view name) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), name);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<int>(it - nodes_.begin());
}

int Dag::index_of(std::string_view name) const {
  if (auto v = find(name)) return *v;
  throw Error(ErrorCode::schema, "unknown variable '" + std::string(name) + "'");
}

void Dag::add_edge(int parent, int child) {
  if (parent == child) throw Error(ErrorCode::structure, "self-loop on '" + name(parent) + "'");
  if (has_edge(parent, child)) {
    throw Error(ErrorCode::structure,
                "duplicate edge " + name(parent) + " -> " + name(child));
  }
  auto& pa = parents_[static_cast<std::size_t>(child)];
  pa.insert(std::upper_bound(pa.begin(), pa.end(), parent), parent);
  auto& ch = children_[static_cast<std::size_t>(parent)];
  ch.insert(std::upper_bound(ch.begin(), ch.end(), child), child);
  ++edge_count_;
}

void Dag::add_edge(std::string_view parent, std::string_view child) {
  add_edge(index_of(parent), index_of(child));
}

void Dag::remove_edge(int parent, int child) {
  auto& pa = parents_[static_cast<std::size_t>(child)];
  auto it = std::lower_bound(pa.begin(), pa.end(), parent);
  if (it == pa.end() || *it != parent) {
    throw Error(ErrorCode::structure, "no edge " + name(parent) + " -> " + name(child));
  }
  pa.erase(it);
  auto& ch = children_[static_cast<std::size_t>(parent)];
  ch.erase(std::lower_bound(ch.begin(), ch.end(), child));
  --edge_count_;
}

void Dag::reverse_edge(int parent, int child) {
  remove_edge(parent, child);
  add_edge(child, parent);
}

bool Dag::has_edge(int parent, int child) const {
  const auto& pa = parents_[static_cast<std::size_t>(child)];
  return std::binary_search(pa.begin(), pa.end(), parent);
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(edge_count_);
  for (std::size_t c = 0; c < parents_.size(); ++c) {
    for (int p : parents_[c]) out.emplace_back(p, static_cast<int>(c));
  }
  std::sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
    if (name(a.first) != name(b.first)) return name(a.first) < name(b.first);
    return name(a.second) < name(b.second);
  });
  return out;
}

std::vector<std::pair<std::string, std::string>> Dag::named_edges() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto [p, c] : edges()) out.emplace_back(name(p), name(c));
  return out;
}

bool Dag::has_path(int from, int to) const {
  if (from == to) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<int> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int c : children(v)) {
      if (c == to) return true;
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
    }
  }
  return false;
}

bool Dag::is_acyclic() const {
  std::vector<int> indegree(nodes_.size());
  for (std::size_t v = 0; v < nodes_.size(); ++v) indegree[v] = static_cast<int>(parents_[v].size());
  std::vector<int> ready;
  for (std::size_t v = 0; v < nodes_.size(); ++v) {
    if (indegree[v] == 0) ready.push_back(static_cast<int>(v));
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int c : children(v)) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  return visited == nodes_.size();
}

bool operator==(const Dag& a, const Dag& b) {
  return a.nodes_ == b.nodes_ && a.parents_ == b.parents_;
}

std::vector<int> topological_indices(const Dag& dag) {
  const std::size_t n = dag.size();
  std::vector<int> indegree(n);
  for (std::size_t v = 0; v < n; ++v) indegree[v] = static_cast<int>(dag.parents(static_cast<int>(v)).size());

  auto later = [&dag](int a, int b) { return dag.name(a) > dag.name(b); };
  std::priority_queue<int, std::vector<int>, decltype(later)> ready(later);
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push(static_cast<int>(v));
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : dag.children(v)) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
    }
  }
  if (order.size() == n) return order;
  const auto cycle = find_cycle(dag).value();
  std::ostringstream msg;
  msg << "graph has a directed cycle: ";
  for (int c : cycle) msg << dag.name(c) << " -> ";
  msg << dag.name(cycle.front());
  throw Error(ErrorCode::cyclic_graph, msg.str());
}

std::optional<std::vector<int>> find_cycle(const Dag& dag) {
  const std::size_t n = dag.size();
  // Peel off nodes without remaining parents; whatever is left lies on or
  // downstream of a cycle and keeps at least one remaining parent.
  std::vector<int> indegree(n);
  for (std::size_t v = 0; v < n; ++v) indegree[v] = static_cast<int>(dag.parents(static_cast<int>(v)).size());
  std::vector<int> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (indegree[v] == 0) ready.push_back(static_cast<int>(v));
  }
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    for (int c : dag.children(v)) {
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  int start = -1;
  for (std::size_t v = 0; v < n && start < 0; ++v) {
    if (indegree[v] > 0) start = static_cast<int>(v);
  }
  if (start < 0) return std::nullopt;

  std::vector<int> position(n, -1);
  std::vector<int> walk;
  int v = start;
  while (position[static_cast<std::size_t>(v)] < 0) {
    position[static_cast<std::size_t>(v)] = static_cast<int>(walk.size());
    walk.push_back(v);
    for (int p : dag.parents(v)) {
      if (indegree[static_cast<std::size_t>(p)] > 0) {
        v = p;
        break;
      }
    }
  }
  std::vector<int> cycle(walk.begin() + position[static_cast<std::size_t>(v)], walk.end());
  std::reverse(cycle.begin(), cycle.end());
  return cycle;
}

std::vector<std::string> topological_order(const Dag& dag) {
  std::vector<std::string> out;
  for (int v : topological_indices(dag)) out.push_back(dag.name(v));
  return out;
}

// ---------------------------------------------------------------------------
// DiscreteNetwork

DiscreteNetwork::DiscreteNetwork(std::vector<Variable> variables, Dag dag, std::vector<Cpt> cpts)
    : variables_(std::move(variables)), dag_(std::move(dag)) {
  if (variables_.size() != dag_.size()) {
    throw Error(ErrorCode::invalid_network, "variable count does not match DAG node count");
  }
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (variables_[v].name != dag_.name(static_cast<int>(v))) {
      throw Error(ErrorCode::invalid_network,
                  "variable '" + variables_[v].name + "' out of DAG node order");
    }
  }
  cpts_.resize(variables_.size());
  std::vector<char> have(variables_.size(), 0);
  for (auto& cpt : cpts) {
    int v = dag_.find(cpt.child).value_or(-1);
    if (v < 0) throw Error(ErrorCode::invalid_network, "CPT for unknown node '" + cpt.child + "'");
    if (have[static_cast<std::size_t>(v)]) {
      throw Error(ErrorCode::invalid_network, "duplicate CPT for '" + cpt.child + "'");
    }
    have[static_cast<std::size_t>(v)] = 1;
    cpts_[static_cast<std::size_t>(v)] = std::move(cpt);
  }
  cpt_parents_.resize(variables_.size());
  log_tables_.resize(variables_.size());
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    if (!have[v]) throw Error(ErrorCode::invalid_network, "missing CPT for '" + variables_[v].name + "'");
    for (const auto& p : cpts_[v].parents) {
      auto idx = dag_.find(p);
      if (!idx) {
        throw Error(ErrorCode::invalid_network,
                    "CPT of '" + variables_[v].name + "' names unknown parent '" + p + "'");
      }
      cpt_parents_[v].push_back(*idx);
    }
    log_tables_[v] = cpts_[v].table.array().log().matrix();
  }
}

const Variable& DiscreteNetwork::variable(std::string_view name) const {
  return variables_[static_cast<std::size_t>(dag_.index_of(name))];
}

Eigen::Index DiscreteNetwork::row_index(int v, std::span<const int> states) const {
  Eigen::Index row = 0;
  for (int p : cpt_parents_[static_cast<std::size_t>(v)]) {
    row = row * cardinality(p) + states[static_cast<std::size_t>(p)];
  }
  return row;
}

double DiscreteNetwork::log_joint(std::span<const int> states) const {
  double sum = 0.0;
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    int node = static_cast<int>(v);
    sum += log_tables_[v](row_index(node, states), states[v]);
  }
  return sum;
}

DiscreteNetwork DiscreteNetwork::with_role(std::string_view name, Role role) const {
  DiscreteNetwork copy = *this;
  copy.variables_[static_cast<std::size_t>(dag_.index_of(name))].role = role;
  return copy;
}

std::vector<int> encode_assignment(const DiscreteNetwork& net, const Assignment& assignment) {
  std::vector<int> states(net.size(), -1);
  for (const auto& [name, label] : assignment) {
    auto v = net.dag().find(name);
    if (!v) throw Error(ErrorCode::invalid_assignment, "unknown variable '" + name + "'");
    states[static_cast<std::size_t>(*v)] = net.variable(*v).state_index(label);
  }
  for (std::size_t v = 0; v < states.size(); ++v) {
    if (states[v] < 0) {
      throw Error(ErrorCode::invalid_assignment,
                  "assignment does not cover '" + net.variable(static_cast<int>(v)).name + "'");
    }
  }
  return states;
}

double joint_probability(const DiscreteNetwork& net, const Assignment& assignment) {
  return std::exp(net.log_joint(encode_assignment(net, assignment)));
}

std::vector<Violation> validate_network(const DiscreteNetwork& net) {
  using Kind = Violation::Kind;
  std::vector<Violation> out;
  const Dag& dag = net.dag();
  if (!dag.is_acyclic()) {
    std::string detail;
    try {
      topological_indices(dag);
    } catch (const Error& e) {
      detail = e.what();
    }
    out.push_back({Kind::cycle, "", detail});
  }
  for (std::size_t vi = 0; vi < net.size(); ++vi) {
    const int v = static_cast<int>(vi);
    const Variable& var = net.variable(v);
    const Cpt& cpt = net.cpt(v);
    std::set<std::string> states(var.states.begin(), var.states.end());
    if (states.size() != var.states.size()) {
      out.push_back({Kind::shape, var.name, "duplicate state labels"});
    }
    if (var.role != Role::utility && var.states.size() < 2) {
      out.push_back({Kind::shape, var.name, "fewer than two states"});
    }
    if (var.role == Role::utility && !dag.children(v).empty()) {
      out.push_back({Kind::role, var.name, "utility node has children"});
    }

    std::vector<int> dag_parents = dag.parents(v);
    std::vector<int> cpt_parents = net.cpt_parents(v);
    std::sort(cpt_parents.begin(), cpt_parents.end());
    if (dag_parents != cpt_parents) {
      out.push_back({Kind::shape, var.name, "CPT parents differ from DAG parents"});
    }
    Eigen::Index rows = 1;
    for (int p : net.cpt_parents(v)) rows *= net.cardinality(p);
    if (cpt.table.rows() != rows || cpt.table.cols() != var.cardinality()) {
      std::ostringstream msg;
      msg << "CPT is " << cpt.table.rows() << "x" << cpt.table.cols() << ", expected " << rows
          << "x" << var.cardinality();
      out.push_back({Kind::shape, var.name, msg.str()});
      continue;
    }
    for (Eigen::Index r = 0; r < cpt.table.rows(); ++r) {
      const auto row = cpt.table.row(r);
      bool negative = (row.array() < 0.0).any() || !row.allFinite();
      double sum = row.sum();
      if (negative || std::abs(sum - 1.0) > 1e-9) {
        std::ostringstream msg;
        msg << "row " << r << " sums to " << sum << (negative ? " with invalid entries" : "");
        out.push_back({Kind::normalization, var.name, msg.str()});
      }
    }
  }
  return out;
}

void require_valid(const DiscreteNetwork& net) {
  auto violations = validate_network(net);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid network:";
  for (const auto& v : violations) msg << " [" << v.node << "] " << v.message << ";";
  throw Error(ErrorCode::invalid_network, msg.str());
}

}  // namespace bdn
