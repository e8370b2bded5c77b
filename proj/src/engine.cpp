#include "bdn/engine.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <set>

namespace bdn {

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::io, "SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::queued: return "queued";
    case Phase::ingesting: return "ingesting";
    case Phase::learning: return "learning";
    case Phase::fitting: return "fitting";
    case Phase::done: return "done";
    case Phase::failed: return "failed";
  }
  return "unknown";
}

LearnConfig learn_config_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "learning config must be an object");
  LearnConfig c;
  c.seed = default_seed;
  try {
    json constraints = json::object();
    if (j.contains("blacklist")) constraints["blacklist"] = j["blacklist"];
    if (j.contains("whitelist")) constraints["whitelist"] = j["whitelist"];
    c.constraints = constraints_from_json(constraints);
    if (j.contains("derived_spec")) c.derived = derived_spec_from_json(j["derived_spec"]);
    if (j.contains("columns")) c.columns = j["columns"].get<std::vector<std::string>>();
    for (const char* key : {"bootstraps", "seed", "bins"}) {
      if (j.contains(key) && !is_count(j[key])) {
        throw Error(ErrorCode::validation, std::string("'") + key + "' must be a non-negative integer");
      }
    }
    if (j.contains("bootstraps")) c.bootstraps = j["bootstraps"].get<std::size_t>();
    if (j.contains("threshold")) c.threshold = j["threshold"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("bins")) {
      if (j["bins"].get<std::uint64_t>() > 1000) throw Error(ErrorCode::validation, "bins must be at most 1000");
      c.bins = j["bins"].get<int>();
    }
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::validation, std::string("bad learning config: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::validation, e.what());
  }
  if (c.bootstraps < 1) throw Error(ErrorCode::validation, "bootstraps must be at least 1");
  if (!(c.threshold >= 0.0 && c.threshold < 1.0)) throw Error(ErrorCode::validation, "threshold must be in [0, 1)");
  if (c.bins < 2) throw Error(ErrorCode::validation, "bins must be at least 2");
  if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) throw Error(ErrorCode::validation, "alpha must be non-negative");
  return c;
}

json learn_config_to_json(const LearnConfig& config) {
  json constraints = constraints_to_json(config.constraints);
  return {{"blacklist", constraints.value("blacklist", json::array())},
          {"whitelist", constraints.value("whitelist", json::array())},
          {"derived_spec", derived_spec_to_json(config.derived)},
          {"columns", config.columns},
          {"bootstraps", config.bootstraps},
          {"threshold", config.threshold},
          {"seed", config.seed},
          {"bins", config.bins},
          {"alpha", config.alpha}};
}

std::vector<std::string> model_variables(const RawTable& table, const LearnConfig& config) {
  std::vector<std::string> available = table.columns();
  for (const auto& d : config.derived) available.push_back(d.name);
  std::vector<std::string> names;
  if (config.columns.empty()) {
    for (const auto& c : available) {
      if (c != table.key_column()) names.push_back(c);
    }
  } else {
    for (const auto& c : config.columns) {
      if (std::find(available.begin(), available.end(), c) == available.end()) {
        throw Error(ErrorCode::schema, "unknown column '" + c + "'");
      }
      if (c == table.key_column()) throw Error(ErrorCode::schema, "key column '" + c + "' cannot be modelled");
      names.push_back(c);
    }
  }
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw Error(ErrorCode::schema, "duplicate column in selection");
  if (names.size() < 2) throw Error(ErrorCode::schema, "at least two variables are needed");
  return names;
}

namespace {

/// Key, selected raw columns, and every derived-column input.
RawTable project(const RawTable& table, const LearnConfig& config, const std::vector<std::string>& names) {
  std::set<std::string> keep(names.begin(), names.end());
  for (const auto& d : config.derived) {
    keep.insert(d.sources.begin(), d.sources.end());
    keep.insert(d.weights.begin(), d.weights.end());
  }
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> data;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& name = table.columns()[c];
    if (name == table.key_column() || keep.count(name)) {
      columns.push_back(name);
      data.push_back(table.column(c));
    }
  }
  return RawTable(std::move(columns), std::move(data), table.key_column());
}

}  // namespace

PreparedData prepare_data(const RawTable& table, const LearnConfig& config) {
  const auto names = model_variables(table, config);
  RawTable work = project(table, config, names);
  PreparedData out;
  auto imputed = impute(work, config.seed);
  out.imputation = std::move(imputed.report);
  work = derive(imputed.table, config.derived);

  const auto rows = static_cast<Eigen::Index>(work.rows());
  out.data.codes.resize(rows, static_cast<Eigen::Index>(names.size()));
  for (std::size_t v = 0; v < names.size(); ++v) {
    const auto& name = names[v];
    const std::size_t c = work.column_index(name);
    Variable var{name, {}, Role::chance};
    std::vector<int> codes;
    if (work.is_numeric(c)) {
      const auto values = work.numeric_column(name);
      std::set<double> distinct;
      for (double x : values) {
        if (std::isfinite(x)) distinct.insert(x);
      }
      if (distinct.size() < 2) throw Error(ErrorCode::constant_column, "column '" + name + "' is constant");
      if (distinct.size() > static_cast<std::size_t>(config.bins)) {
        auto col = discretize_column(values, config.bins, name);
        var.states = col.spec.bin_labels;
        codes = std::move(col.codes);
        out.discretization.push_back(std::move(col.spec));
      } else {
        std::vector<double> levels(distinct.begin(), distinct.end());
        for (double x : levels) var.states.push_back(cell_text(Cell{x}));
        for (double x : values) {
          codes.push_back(static_cast<int>(std::lower_bound(levels.begin(), levels.end(), x) - levels.begin()));
        }
      }
    } else {
      std::set<std::string> distinct;
      for (const auto& cell : work.column(c)) distinct.insert(cell_text(cell));
      if (distinct.size() < 2) throw Error(ErrorCode::constant_column, "column '" + name + "' is constant");
      var.states.assign(distinct.begin(), distinct.end());
      for (const auto& cell : work.column(c)) {
        const auto text = cell_text(cell);
        codes.push_back(static_cast<int>(std::lower_bound(var.states.begin(), var.states.end(), text) -
                                         var.states.begin()));
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r) out.data.codes(r, static_cast<Eigen::Index>(v)) = codes[static_cast<std::size_t>(r)];
    out.data.variables.push_back(std::move(var));
  }
  return out;
}

LearnedModel learn_model(const RawTable& table, const LearnConfig& config, const std::string& dataset_hash,
                         const ProgressFn& progress) {
  auto report = [&](Phase p, std::size_t done, std::size_t total) {
    if (progress) progress(p, done, total);
  };
  report(Phase::ingesting, 0, 0);
  const auto names = model_variables(table, config);
  config.constraints.validate(names);
  PreparedData prepared = prepare_data(table, config);

  report(Phase::learning, 0, config.bootstraps);
  EnsembleOptions options;
  options.n_bootstraps = config.bootstraps;
  options.threshold = config.threshold;
  options.seed = config.seed;
  options.workers = config.workers;
  options.progress = [&](std::size_t done, std::size_t total) { report(Phase::learning, done, total); };
  LearnedModel model;
  model.ensemble = bootstrap_ensemble(prepared.data, config.constraints, options);

  report(Phase::fitting, config.bootstraps, config.bootstraps);
  model.network = fit_cpts(model.ensemble.consensus, prepared.data, config.alpha);
  model.discretization = std::move(prepared.discretization);
  model.imputation = std::move(prepared.imputation);
  model.provenance = {{"dataset_hash", dataset_hash},
                      {"key_column", table.key_column()},
                      {"rows", table.rows()},
                      {"config", learn_config_to_json(config)}};
  return model;
}

json model_to_json(const LearnedModel& model) {
  json specs = json::array();
  for (const auto& s : model.discretization) specs.push_back(spec_to_json(s));
  return {{"network", network_to_json(model.network)},
          {"discretization", specs},
          {"ensemble", ensemble_to_json(model.ensemble)},
          {"imputation", imputation_report_to_json(model.imputation)},
          {"provenance", model.provenance}};
}

LearnedModel model_from_json(const json& doc) {
  try {
    LearnedModel m;
    m.network = network_from_json(doc.at("network"));
    for (const auto& s : doc.at("discretization")) m.discretization.push_back(spec_from_json(s));
    m.ensemble = ensemble_from_json(doc.at("ensemble"));
    if (doc.contains("imputation")) {
      m.imputation = doc["imputation"].get<std::map<std::string, std::size_t>>();
    }
    m.provenance = doc.value("provenance", json::object());
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("bad model document: ") + e.what());
  }
}

std::shared_ptr<const CliqueTree> LoadedModel::tree() const {
  std::call_once(compiled_, [this] {
    try {
      tree_ = std::make_shared<const CliqueTree>(CliqueTree::compile(model_.network));
    } catch (const Error& e) {
      compile_error_ = e;
    }
  });
  if (compile_error_) throw *compile_error_;
  return tree_;
}

Evidence LoadedModel::evidence_from_json(const json& j) const {
  Evidence ev;
  if (j.is_null()) return ev;
  if (!j.is_object()) throw Error(ErrorCode::validation, "'evidence' must be an object");
  for (const auto& [name, value] : j.items()) {
    if (value.is_string()) {
      ev[name] = value.get<std::string>();
    } else if (value.is_number()) {
      const double x = value.get<double>();
      auto spec = std::find_if(model_.discretization.begin(), model_.discretization.end(),
                               [&](const DiscretizationSpec& s) { return s.column == name; });
      ev[name] = spec != model_.discretization.end()
                     ? spec->bin_labels[static_cast<std::size_t>(bin_of(*spec, x))]
                     : cell_text(Cell{x});
    } else {
      throw Error(ErrorCode::validation, "evidence for '" + name + "' must be a state label or a number");
    }
  }
  return ev;
}

json error_to_json(ErrorCode code, std::string_view message) {
  return {{"error", {{"code", to_string(code)}, {"message", message}}}};
}

namespace {

struct ParsedQuery {
  Query query;
  bool exact = true;
  RejectionOptions sampling;
};

ParsedQuery parse_query(const LoadedModel& model, const json& j, std::uint64_t default_seed, unsigned workers) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "query must be an object");
  if (!j.contains("variable") || !j["variable"].is_string()) {
    throw Error(ErrorCode::validation, "'variable' must name a variable");
  }
  ParsedQuery p;
  p.query.variable = j["variable"].get<std::string>();
  if (j.contains("evidence")) p.query.evidence = model.evidence_from_json(j["evidence"]);
  const std::string method = j.value("method", "exact");
  if (method == "approx" || method == "approximate") {
    p.exact = false;
  } else if (method != "exact") {
    throw Error(ErrorCode::validation, "method must be 'exact' or 'approx'");
  }
  auto count = [&](const char* key, auto& out) {
    if (!j.contains(key)) return;
    if (!is_count(j[key])) throw Error(ErrorCode::validation, std::string("'") + key + "' must be a non-negative integer");
    out = j[key].get<std::remove_reference_t<decltype(out)>>();
  };
  p.sampling.seed = default_seed;
  p.sampling.workers = workers;
  count("n_samples", p.sampling.n_samples);
  count("repeats", p.sampling.repeats);
  count("seed", p.sampling.seed);
  return p;
}

json answer(const LoadedModel& model, const ParsedQuery& p) {
  if (p.exact) return distribution_to_json(posterior(*model.tree(), p.query.variable, p.query.evidence));
  return distribution_to_json(rejection_sample(model.network(), p.query.variable, p.query.evidence, p.sampling));
}

}  // namespace

json run_query(const LoadedModel& model, const json& request, std::uint64_t default_seed, unsigned workers) {
  if (!request.is_object() || !request.contains("queries")) {
    return answer(model, parse_query(model, request, default_seed, workers));
  }
  if (!request["queries"].is_array()) throw Error(ErrorCode::validation, "'queries' must be an array");
  json results = json::array();
  for (const auto& item : request["queries"]) {
    try {
      results.push_back(answer(model, parse_query(model, item, default_seed, workers)));
    } catch (const Error& e) {
      results.push_back(error_to_json(e.code(), e.what()));
    }
  }
  return {{"results", results}};
}

json run_policy(const LoadedModel& model, const json& request, std::uint64_t default_seed, unsigned workers) {
  if (!request.is_object()) throw Error(ErrorCode::validation, "policy request must be an object");
  json stripped = request;
  stripped.erase("evidence");
  PolicyRequest r = policy_request_from_json(stripped, default_seed);
  if (request.contains("evidence")) r.evidence = model.evidence_from_json(request["evidence"]);
  const auto bdn = extend(model.network(), r.decisions, r.utilities, model.tree());
  return policy_table_to_json(policy_table(bdn, r, workers));
}

}  // namespace bdn
