#pragma once

#include "bdn/inference.hpp"
#include "bdn/json_io.hpp"
#include "bdn/model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bdn {

/// Utility node `target` attached to chance variable `hypothesis`, with one
/// preference in [-1, 1] per hypothesis state.
struct UtilitySpec {
  std::string target;
  std::string hypothesis;
  std::map<std::string, double> preferences;
};

json utility_spec_to_json(const UtilitySpec& spec);
/// Accepts {target?, variable | hypothesis, preferences}. The target defaults
/// to "U_<hypothesis>".
UtilitySpec utility_spec_from_json(const json& j);

/// Learned network plus decision roles and utility tables. Decisions are set
/// by conditioning on them; several utilities add up.
class DecisionNetwork {
 public:
  struct Utility {
    UtilitySpec spec;
    int hypothesis;
    Eigen::VectorXd values;  // indexed by hypothesis state
  };

  /// Network with decision roles applied.
  const DiscreteNetwork& network() const { return *net_; }
  const CliqueTree& tree() const { return *tree_; }
  const std::vector<std::string>& decisions() const { return decisions_; }
  const std::vector<int>& decision_indices() const { return decision_idx_; }
  const std::vector<Utility>& utilities() const { return utilities_; }
  /// Product of decision cardinalities, saturating at the double range.
  double space_size() const;

 private:
  friend DecisionNetwork extend(const DiscreteNetwork&, const std::vector<std::string>&,
                                const std::vector<UtilitySpec>&, std::shared_ptr<const CliqueTree>);
  std::shared_ptr<const DiscreteNetwork> net_;
  std::shared_ptr<const CliqueTree> tree_;
  std::vector<std::string> decisions_;
  std::vector<int> decision_idx_;
  std::vector<Utility> utilities_;
};

/// Checks decision and utility names and builds the clique tree unless a
/// compiled one for the same network is supplied. Unknown decisions, states
/// or hypotheses and out-of-range preferences raise ErrorCode::schema; a
/// utility target that names a node with children raises ErrorCode::structure.
DecisionNetwork extend(const DiscreteNetwork& net, const std::vector<std::string>& decisions,
                       const std::vector<UtilitySpec>& utilities,
                       std::shared_ptr<const CliqueTree> tree = nullptr);

/// Σ_u Σ_j U_u(h_j) P(h_j | action, evidence). Throws ErrorCode::impossible_action
/// when P(action, evidence) = 0.
double expected_utility(const DecisionNetwork& bdn, const Assignment& action, const Evidence& evidence = {});

/// Payoffs within this distance are treated as equal when ranking.
inline constexpr double kPayoffTieTolerance = 1e-9;

struct Policy {
  Assignment action;
  double payoff = 0.0;
  /// Other assignments matched the payoff; the smallest one was chosen.
  bool tie = false;
  std::size_t tied = 1;
};

struct PolicyRow {
  std::vector<int> codes;  // decision order
  double payoff = 0.0;
  std::size_t visits = 0;  // gibbs only
};

struct PolicyTable {
  std::vector<std::string> decisions;
  std::vector<std::vector<std::string>> state_labels;  // per decision
  std::vector<PolicyRow> rows;
  std::string method;  // "exact" or "gibbs"
  std::size_t combinations = 0;
  std::size_t iterations = 0;
  std::size_t burn_in = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  bool tie = false;  // top row shares its payoff
  /// Impossible assignments met during the search.
  std::vector<std::string> skipped;

  Assignment assignment(std::size_t row) const;
};

json policy_table_to_json(const PolicyTable& table);

struct ExactOptions {
  double enumeration_limit = 1e6;
  std::size_t top_k = 0;  // 0 keeps every row
  unsigned workers = 1;
};

/// Exhaustive argmax. Ties go to the smallest assignment, compared by state
/// index with decisions taken in name order.
Policy optimal_policy(const DecisionNetwork& bdn, const Evidence& evidence = {},
                      const ExactOptions& options = {});

/// Every combination, descending payoff. Impossible combinations are skipped.
PolicyTable exact_policy_table(const DecisionNetwork& bdn, const Evidence& evidence = {},
                               const ExactOptions& options = {});

struct GibbsOptions {
  std::size_t iterations = 1000;  // full sweeps over the decisions
  std::size_t burn_in = 100;
  double beta = 5.0;
  std::uint64_t seed = 0;
  std::size_t top_k = 0;
};

/// Systematic-scan sampler over decision assignments targeting
/// exp(beta * EU). Rows are the visited assignments with their visit counts.
PolicyTable gibbs_policy(const DecisionNetwork& bdn, const Evidence& evidence = {},
                         const GibbsOptions& options = {});

/// Independent chains with seeds seed, seed+1, ...
std::vector<PolicyTable> gibbs_chains(const DecisionNetwork& bdn, const Evidence& evidence,
                                      const GibbsOptions& options, std::size_t chains, unsigned workers = 0);

enum class PolicyMode { exact, gibbs };

struct PolicyRequest {
  std::vector<std::string> decisions;
  std::vector<UtilitySpec> utilities;
  Evidence evidence;
  PolicyMode mode = PolicyMode::exact;
  std::size_t iterations = 1000;
  std::size_t burn_in = 100;
  double beta = 5.0;
  std::uint64_t seed = 0;
  std::size_t top_k = 0;
};

/// {decisions, utility (object or array), evidence?, mode?, iterations?,
/// burn_in?, beta?, seed?, top_k?}. Bad shapes raise ErrorCode::validation.
PolicyRequest policy_request_from_json(const json& j, std::uint64_t default_seed = 0);

PolicyTable policy_table(const DecisionNetwork& bdn, const PolicyRequest& request, unsigned workers = 1);

}  // namespace bdn
