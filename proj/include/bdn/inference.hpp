#pragma once

#include "bdn/dataset.hpp"
#include "bdn/error.hpp"
#include "bdn/json_io.hpp"
#include "bdn/model.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bdn {

/// Observed state per variable.
using Evidence = std::map<std::string, std::string>;
/// (node index, state index) pairs.
using EncodedEvidence = std::vector<std::pair<int, int>>;

/// Unknown variables or states raise ErrorCode::query.
EncodedEvidence encode_evidence(const DiscreteNetwork& net, const Evidence& evidence);

enum class Method { exact, approximate };
std::string_view to_string(Method method);

struct SampleStats {
  std::size_t drawn = 0;
  std::size_t accepted = 0;
  std::size_t repeats = 0;
  std::size_t repeats_with_acceptance = 0;
};

struct Distribution {
  std::string variable;
  std::vector<std::string> states;
  Eigen::VectorXd probabilities;
  /// Standard deviation of the per-repeat estimates (approximate, repeats > 1).
  std::optional<Eigen::VectorXd> std_error;
  Method method = Method::exact;
  SampleStats samples;
  /// ln P(evidence); exact only.
  double log_evidence = 0.0;
};

json distribution_to_json(const Distribution& dist);

struct CompileOptions {
  /// Largest admissible clique, in variables.
  std::size_t max_clique_variables = 25;
  /// Largest admissible clique table.
  double max_table_entries = 1 << 26;
};

/// Beliefs over every clique and separator after two-pass message passing.
/// Beliefs are normalized; the normalizers are accumulated in `log_evidence`.
struct Calibration {
  std::vector<Eigen::ArrayXd> beliefs;
  std::vector<Eigen::ArrayXd> separators;
  double log_evidence = 0.0;
  bool consistent = true;  // false when the evidence has probability zero
};

/// Junction tree over a network: moralize, triangulate (min-fill, ties by
/// node name), keep maximal cliques, join them by a maximum spanning tree on
/// separator size, and assign each CPT to the smallest clique holding its
/// family. The prior calibration is computed at compile time; the tree is
/// immutable afterwards and safe to share between threads.
class CliqueTree {
 public:
  struct Edge {
    int a;
    int b;
    std::vector<int> separator;  // node indices, ascending
  };

  static CliqueTree compile(const DiscreteNetwork& net, const CompileOptions& options = {});

  const DiscreteNetwork& network() const { return *net_; }
  const std::vector<std::vector<int>>& cliques() const { return cliques_; }
  const std::vector<Edge>& edges() const { return edges_; }
  /// Clique holding the CPT of node v.
  int cpt_clique(int v) const { return cpt_clique_[static_cast<std::size_t>(v)]; }
  /// Smallest clique containing node v.
  int home_clique(int v) const { return home_[static_cast<std::size_t>(v)]; }

  const Calibration& prior() const { return prior_; }
  Calibration calibrate(const EncodedEvidence& evidence) const;
  /// Runs both message passes again on an existing calibration.
  void recalibrate(Calibration& state) const;
  Eigen::VectorXd marginal(const Calibration& state, int v) const;
  /// Sum of a clique belief onto one of its separators.
  Eigen::ArrayXd separator_marginal(const Calibration& state, int edge, bool from_a) const;

  /// Number of calibrations performed, including the prior.
  std::size_t calibration_count() const { return calibrations_->load(); }

 private:
  CliqueTree() = default;
  bool pass(Calibration& state, int from, int to, int edge, double* log_scale) const;
  void run_passes(Calibration& state) const;

  std::shared_ptr<const DiscreteNetwork> net_;
  std::vector<std::vector<int>> cliques_;
  std::vector<std::vector<Eigen::Index>> strides_;
  std::vector<Eigen::Index> sizes_;
  std::vector<Edge> edges_;
  /// For edge e: clique-entry -> separator-entry maps for both endpoints.
  std::vector<std::vector<Eigen::Index>> map_a_, map_b_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;  // (neighbor, edge)
  std::vector<int> order_;          // BFS order from clique 0
  std::vector<int> parent_edge_;    // edge to BFS parent, -1 for roots
  std::vector<int> cpt_clique_;
  std::vector<int> home_;
  std::vector<Eigen::ArrayXd> potentials_;
  Calibration prior_;
  std::shared_ptr<std::atomic<std::size_t>> calibrations_ = std::make_shared<std::atomic<std::size_t>>(0);
};

inline CliqueTree compile(const DiscreteNetwork& net, const CompileOptions& options = {}) {
  return CliqueTree::compile(net, options);
}

Distribution prior_marginal(const CliqueTree& tree, std::string_view variable);

/// P(variable | evidence). Throws ErrorCode::impossible_evidence when P(e) = 0.
Distribution posterior(const CliqueTree& tree, std::string_view variable, const Evidence& evidence);

/// Posteriors of several variables under one calibration.
std::vector<Distribution> posteriors(const CliqueTree& tree, const std::vector<std::string>& variables,
                                     const Evidence& evidence);

struct RejectionOptions {
  std::size_t n_samples = 10000;  // proposals per repeat
  std::size_t repeats = 25;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

/// Forward sampling with rejection of evidence-inconsistent samples. Repeat i
/// uses seed + i. Reports the mean of the per-repeat estimates and their
/// standard deviation. Throws ErrorCode::acceptance_failure when no sample is
/// accepted in any repeat.
Distribution rejection_sample(const DiscreteNetwork& net, std::string_view variable,
                              const Evidence& evidence, const RejectionOptions& options = {});

struct Query {
  std::string variable;
  Evidence evidence;
};

struct QueryResult {
  std::optional<Distribution> distribution;
  std::optional<ErrorCode> error_code;
  std::string error;

  bool ok() const { return distribution.has_value(); }
};

/// Order-preserving; queries sharing identical evidence share one calibration.
/// Failures are reported per entry.
std::vector<QueryResult> query_batch(const CliqueTree& tree, const std::vector<Query>& queries);

/// Samples n complete assignments in topological order.
Dataset forward_sample(const DiscreteNetwork& net, std::size_t n, std::uint64_t seed);

}  // namespace bdn
