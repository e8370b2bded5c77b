#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bdn {

enum class Role { chance, decision, utility };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct Variable {
  std::string name;
  std::vector<std::string> states;
  Role role = Role::chance;

  int cardinality() const { return static_cast<int>(states.size()); }
  std::optional<int> find_state(std::string_view label) const;
  int state_index(std::string_view label) const;
};

/// Directed graph over named nodes. Acyclicity is not enforced on mutation;
/// `topological_order` and `is_acyclic` report it. Self-loops and duplicate
/// edges are rejected.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::vector<std::string> nodes);
  Dag(std::vector<std::string> nodes,
      const std::vector<std::pair<std::string, std::string>>& edges);

  std::size_t size() const { return nodes_.size(); }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::string& name(int v) const { return nodes_[static_cast<std::size_t>(v)]; }
  std::optional<int> find(std::string_view name) const;
  int index_of(std::string_view name) const;

  void add_edge(int parent, int child);
  void add_edge(std::string_view parent, std::string_view child);
  void remove_edge(int parent, int child);
  void reverse_edge(int parent, int child);
  bool has_edge(int parent, int child) const;

  /// Ascending node index.
  const std::vector<int>& parents(int v) const { return parents_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }

  std::size_t edge_count() const { return edge_count_; }
  /// Edges ordered by (parent name, child name).
  std::vector<std::pair<int, int>> edges() const;
  std::vector<std::pair<std::string, std::string>> named_edges() const;

  bool has_path(int from, int to) const;
  bool is_acyclic() const;

  friend bool operator==(const Dag& a, const Dag& b);

 private:
  std::vector<std::string> nodes_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
  std::size_t edge_count_ = 0;
};

/// Nodes of one directed cycle in edge order, or nullopt for an acyclic graph.
std::optional<std::vector<int>> find_cycle(const Dag& dag);

/// Parent-first order with lexicographic tie-breaking by node name.
/// Throws ErrorCode::cyclic_graph naming one cycle.
std::vector<int> topological_indices(const Dag& dag);
std::vector<std::string> topological_order(const Dag& dag);

/// Rows index joint parent configurations (last parent varies fastest),
/// columns index child states.
using CptTable = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Cpt {
  std::string child;
  std::vector<std::string> parents;
  CptTable table;
};

/// Variables + DAG + one CPT per node. Construction checks only what is
/// needed to index the CPTs; `validate_network` reports everything else.
class DiscreteNetwork {
 public:
  DiscreteNetwork() = default;
  DiscreteNetwork(std::vector<Variable> variables, Dag dag, std::vector<Cpt> cpts);

  std::size_t size() const { return variables_.size(); }
  const Dag& dag() const { return dag_; }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(int v) const { return variables_[static_cast<std::size_t>(v)]; }
  const Variable& variable(std::string_view name) const;
  int index_of(std::string_view name) const { return dag_.index_of(name); }
  int cardinality(int v) const { return variables_[static_cast<std::size_t>(v)].cardinality(); }

  /// CPTs are stored in node order.
  const Cpt& cpt(int v) const { return cpts_[static_cast<std::size_t>(v)]; }
  const std::vector<Cpt>& cpts() const { return cpts_; }
  /// Node indices of cpt(v).parents, in CPT order.
  const std::vector<int>& cpt_parents(int v) const { return cpt_parents_[static_cast<std::size_t>(v)]; }
  const CptTable& log_table(int v) const { return log_tables_[static_cast<std::size_t>(v)]; }

  /// Row of cpt(v) selected by the parent states in a complete assignment.
  Eigen::Index row_index(int v, std::span<const int> states) const;

  /// Sum of log CPT entries; -infinity for zero-probability assignments.
  double log_joint(std::span<const int> states) const;

  /// Same network with variable `name` given a new role.
  DiscreteNetwork with_role(std::string_view name, Role role) const;

 private:
  std::vector<Variable> variables_;
  Dag dag_;
  std::vector<Cpt> cpts_;
  std::vector<std::vector<int>> cpt_parents_;
  std::vector<CptTable> log_tables_;
};

using Assignment = std::map<std::string, std::string>;

/// Converts a complete name->state map into per-node state indices.
std::vector<int> encode_assignment(const DiscreteNetwork& net, const Assignment& assignment);

/// Product of CPT entries, computed in log space and exponentiated.
double joint_probability(const DiscreteNetwork& net, const Assignment& assignment);

struct Violation {
  enum class Kind { cycle, shape, normalization, role };
  Kind kind;
  std::string node;
  std::string message;
};

std::vector<Violation> validate_network(const DiscreteNetwork& net);

/// Throws ErrorCode::invalid_network listing every violation.
void require_valid(const DiscreteNetwork& net);

}  // namespace bdn
