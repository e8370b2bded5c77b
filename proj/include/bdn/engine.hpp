#pragma once

#include "bdn/decision.hpp"
#include "bdn/discretize.hpp"
#include "bdn/inference.hpp"
#include "bdn/ingest.hpp"
#include "bdn/json_io.hpp"
#include "bdn/structure.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bdn {

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

struct LearnConfig {
  EdgeConstraints constraints;
  DerivedSpec derived;
  /// Variables to model; empty means every non-key column after derivation.
  std::vector<std::string> columns;
  std::size_t bootstraps = 1001;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  int bins = 3;
  double alpha = 1.0;
  unsigned workers = 0;  // not part of provenance; results do not depend on it
};

/// Reads {blacklist?, whitelist?, derived_spec?, columns?, bootstraps?,
/// threshold?, seed?, bins?, alpha?}. Bad values raise ErrorCode::validation.
LearnConfig learn_config_from_json(const json& j, std::uint64_t default_seed = 0);
json learn_config_to_json(const LearnConfig& config);

enum class Phase { queued, ingesting, learning, fitting, done, failed };
std::string_view to_string(Phase phase);

using ProgressFn = std::function<void(Phase phase, std::size_t done, std::size_t total)>;

/// Names of the modelled variables (derived columns included) without
/// touching the data, for validating constraints before a run.
std::vector<std::string> model_variables(const RawTable& table, const LearnConfig& config);

struct PreparedData {
  Dataset data;
  /// Bin specs of the discretized numeric columns.
  std::vector<DiscretizationSpec> discretization;
  std::map<std::string, std::size_t> imputation;
};

/// Impute, derive, then discretize numeric columns with more distinct values
/// than bins. Other columns become categorical with sorted states (numeric
/// order for numbers).
PreparedData prepare_data(const RawTable& table, const LearnConfig& config);

struct LearnedModel {
  DiscreteNetwork network;
  std::vector<DiscretizationSpec> discretization;
  EnsembleResult ensemble;
  std::map<std::string, std::size_t> imputation;
  json provenance;
};

/// Full pipeline. `dataset_hash` is recorded in the provenance.
LearnedModel learn_model(const RawTable& table, const LearnConfig& config, const std::string& dataset_hash,
                         const ProgressFn& progress = {});

/// {network, discretization, ensemble, imputation, provenance}.
json model_to_json(const LearnedModel& model);
LearnedModel model_from_json(const json& doc);

/// A model ready to answer queries. The clique tree is compiled on first use
/// and shared by all callers.
class LoadedModel {
 public:
  explicit LoadedModel(LearnedModel model) : model_(std::move(model)) {}

  const LearnedModel& model() const { return model_; }
  const DiscreteNetwork& network() const { return model_.network; }
  /// Throws ErrorCode::treewidth_limit if the network is too dense.
  std::shared_ptr<const CliqueTree> tree() const;

  /// Evidence given as a number on a discretized variable is binned with the
  /// stored spec; strings are state labels.
  Evidence evidence_from_json(const json& j) const;

 private:
  LearnedModel model_;
  mutable std::once_flag compiled_;
  mutable std::shared_ptr<const CliqueTree> tree_;
  mutable std::optional<Error> compile_error_;
};

/// {variable, evidence?, method?: exact|approx, n_samples?, repeats?, seed?}
/// or {queries: [...]}, answered as a distribution or {results: [...]}.
json run_query(const LoadedModel& model, const json& request, std::uint64_t default_seed = 0,
               unsigned workers = 0);

json run_policy(const LoadedModel& model, const json& request, std::uint64_t default_seed = 0,
                unsigned workers = 1);

json error_to_json(ErrorCode code, std::string_view message);

}  // namespace bdn
