#pragma once

#include "bdn/dataset.hpp"
#include "bdn/json_io.hpp"
#include "bdn/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bdn {

inline constexpr std::string_view kAnyNode = "*";

/// Directed edge constraints. A blacklist entry whose parent is "*" forbids
/// every incoming edge of its child.
struct EdgeConstraints {
  std::set<std::pair<std::string, std::string>> blacklist;
  std::set<std::pair<std::string, std::string>> whitelist;

  bool forbids(std::string_view parent, std::string_view child) const;
  bool requires_edge(std::string_view parent, std::string_view child) const;
  /// Unknown node names, blacklist/whitelist overlap and whitelist cycles
  /// raise ErrorCode::constraint.
  void validate(const std::vector<std::string>& nodes) const;
  /// DAG over `nodes` holding exactly the whitelisted edges.
  Dag required_dag(const std::vector<std::string>& nodes) const;
};

/// Accepts `{"blacklist": [[p, c], ...], "whitelist": [...]}` or a bare array
/// of blacklisted pairs.
EdgeConstraints constraints_from_json(const json& doc);
json constraints_to_json(const EdgeConstraints& constraints);

/// Sum over parent configurations j and child states k of N_jk ln(N_jk / N_j)
/// minus q (r - 1) ln(N) / 2, with r child states and q parent configurations.
double bic_family_score(const Dataset& data, int child, std::span<const int> parents);
double bic_family_score(const Dataset& data, std::string_view child,
                        const std::vector<std::string>& parents);

struct ScoredDag {
  Dag dag;
  double score = 0.0;
  std::map<std::string, double> per_family;
};

/// Family-score cache over one dataset. Not thread-safe; give each search its own.
class BicScorer {
 public:
  explicit BicScorer(const Dataset& data) : data_(&data), cache_(data.variables.size()) {}

  /// `parents` must be sorted ascending.
  double family(int child, const std::vector<int>& parents) const;
  ScoredDag score(const Dag& dag) const;
  std::size_t evaluations() const { return evaluations_; }

 private:
  const Dataset* data_;
  mutable std::vector<std::map<std::vector<int>, double>> cache_;
  mutable std::size_t evaluations_ = 0;
};

ScoredDag bic_score(const Dag& dag, const Dataset& data);

struct Move {
  enum class Op { add, remove, reverse };
  Op op;
  int parent;
  int child;
};

std::string_view to_string(Move::Op op);

struct HillClimbOptions {
  std::size_t max_iters = 100000;
  /// A move is accepted only when it improves the score by more than
  /// tolerance * max(1, |score|).
  double tolerance = 1e-10;
};

struct HillClimbResult {
  ScoredDag result;
  /// Total score after initialisation and after each accepted move.
  std::vector<double> trace;
  std::vector<Move> moves;
};

/// Steepest-ascent search over single-edge additions, removals and reversals.
/// Candidates must stay acyclic and satisfy `constraints`; equal gains are
/// broken lexicographically on (operation, parent name, child name). Throws
/// ErrorCode::constraint when `init` violates the constraints.
HillClimbResult hill_climb(const Dataset& data, const EdgeConstraints& constraints, const Dag& init,
                           const HillClimbOptions& options = {});

struct EnsembleOptions {
  std::size_t n_bootstraps = 1001;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  HillClimbOptions search;
  /// Called with the number of completed replicates; serialized by the caller.
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct EnsembleResult {
  std::vector<std::string> nodes;
  /// Fraction of replicates containing parent -> child. Zero entries omitted.
  std::map<std::pair<std::string, std::string>, double> edge_strength;
  /// Keyed by the lexicographically ordered pair (u, v): fraction of replicates
  /// containing u -> v among those containing either direction.
  std::map<std::pair<std::string, std::string>, double> direction_strength;
  Dag consensus;
  std::size_t n_bootstraps = 0;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  /// One entry per edge dropped to break a cycle, and per orientation tie.
  std::vector<std::string> notes;

  double undirected_strength(const std::string& u, const std::string& v) const;
};

/// Majority vote over replicate structures: an edge enters the consensus when
/// its undirected strength exceeds `threshold`, oriented by the majority
/// direction. Cycles are broken by dropping the weakest edge on each cycle.
EnsembleResult aggregate_structures(const std::vector<std::string>& nodes,
                                    const std::vector<Dag>& structures,
                                    const EdgeConstraints& constraints, double threshold);

/// Replicate i resamples N rows with replacement using seed + i and runs
/// hill_climb from the whitelist-only graph. Results are independent of the
/// worker count.
EnsembleResult bootstrap_ensemble(const Dataset& data, const EdgeConstraints& constraints,
                                  const EnsembleOptions& options = {});

json ensemble_to_json(const EnsembleResult& result);
EnsembleResult ensemble_from_json(const json& doc);

/// Laplace-smoothed maximum likelihood: (N_jk + alpha) / (N_j + alpha r).
/// Rows with N_j + alpha r = 0 are uniform.
DiscreteNetwork fit_cpts(const Dag& dag, const Dataset& data, double alpha = 1.0);

}  // namespace bdn
