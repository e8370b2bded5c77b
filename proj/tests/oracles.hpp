#pragma once

// Reference implementations used by the tests. They share no code with the
// library beyond its data types: joints are built by multiplying CPT entries
// directly and posteriors by summing the full joint.

#include "bdn/dataset.hpp"
#include "bdn/model.hpp"
#include "bdn/random.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct RandomNetOptions {
  int nodes = 6;
  int max_parents = 2;
  int min_states = 2;
  int max_states = 3;
  /// Chance that a CPT entry is forced to zero (rows always keep one positive entry).
  double zero_prob = 0.0;
};

/// Random DAG (parents drawn from earlier nodes of a hidden order) with node
/// names that do not follow the topological order, and random CPT rows.
bdn::DiscreteNetwork random_network(bdn::Rng& rng, const RandomNetOptions& options);

/// Every complete assignment, last variable fastest, with its probability.
struct Joint {
  std::vector<int> cards;
  std::vector<double> p;

  std::vector<int> decode(std::size_t index) const;
};

Joint joint_table(const bdn::DiscreteNetwork& net);

/// P(target | evidence) by summation; nullopt when P(evidence) = 0.
std::optional<Eigen::VectorXd> posterior(const Joint& joint, int target,
                                         const std::vector<std::pair<int, int>>& evidence);
/// Every variable's posterior in one pass over the joint.
std::optional<std::vector<Eigen::VectorXd>> all_posteriors(const Joint& joint,
                                                           const std::vector<std::pair<int, int>>& evidence);
double evidence_probability(const Joint& joint, const std::vector<std::pair<int, int>>& evidence);

/// Counts, log-likelihood and penalty computed from scratch.
double bic_family(const bdn::Dataset& data, int child, const std::vector<int>& parents);

/// Minimum within-cluster SSE over every split of the sorted values into k
/// contiguous non-empty groups of distinct values; returns the boundaries.
std::vector<double> kmeans_cuts(std::vector<double> values, int k);

/// Σ_u Σ_h U_u(h) P(h | decisions, evidence); nullopt when the conditioning
/// event is impossible.
std::optional<double> expected_utility(const Joint& joint, const std::vector<std::pair<int, Eigen::VectorXd>>& utilities,
                                       std::vector<std::pair<int, int>> evidence);

/// Structural Hamming distance between undirected skeletons.
int skeleton_shd(const bdn::Dag& a, const bdn::Dag& b);

}  // namespace oracle
