#include "bdn/decision.hpp"

#include "bdn/error.hpp"
#include "bdn/parallel.hpp"
#include "bdn/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace bdn {

json utility_spec_to_json(const UtilitySpec& spec) {
  json prefs = json::object();
  for (const auto& [state, value] : spec.preferences) prefs[state] = value;
  return {{"target", spec.target}, {"variable", spec.hypothesis}, {"preferences", prefs}};
}

UtilitySpec utility_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "utility must be an object");
  UtilitySpec spec;
  const char* key = j.contains("variable") ? "variable" : "hypothesis";
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::validation, "utility needs a 'variable' naming its hypothesis");
  }
  spec.hypothesis = j[key].get<std::string>();
  spec.target = j.value("target", "U_" + spec.hypothesis);
  if (!j.contains("preferences") || !j["preferences"].is_object()) {
    throw Error(ErrorCode::validation, "utility needs a 'preferences' object");
  }
  for (const auto& [state, value] : j["preferences"].items()) {
    if (!value.is_number()) throw Error(ErrorCode::validation, "preference for '" + state + "' is not a number");
    spec.preferences[state] = value.get<double>();
  }
  return spec;
}

double DecisionNetwork::space_size() const {
  double size = 1.0;
  for (int d : decision_idx_) size *= net_->cardinality(d);
  return size;
}

DecisionNetwork extend(const DiscreteNetwork& net, const std::vector<std::string>& decisions,
                       const std::vector<UtilitySpec>& utilities, std::shared_ptr<const CliqueTree> tree) {
  if (decisions.empty()) throw Error(ErrorCode::schema, "at least one decision variable is required");
  if (utilities.empty()) throw Error(ErrorCode::schema, "at least one utility is required");
  DecisionNetwork bdn;
  DiscreteNetwork roled = net;
  std::set<std::string> seen;
  for (const auto& name : decisions) {
    auto v = net.dag().find(name);
    if (!v) throw Error(ErrorCode::schema, "unknown decision variable '" + name + "'");
    if (!seen.insert(name).second) throw Error(ErrorCode::schema, "decision '" + name + "' listed twice");
    if (net.variable(*v).role == Role::utility) {
      throw Error(ErrorCode::schema, "'" + name + "' is a utility node and cannot be a decision");
    }
    roled = roled.with_role(name, Role::decision);
    bdn.decisions_.push_back(name);
    bdn.decision_idx_.push_back(*v);
  }

  std::set<std::string> targets;
  for (const auto& spec : utilities) {
    if (auto t = net.dag().find(spec.target)) {
      if (!net.dag().children(*t).empty()) {
        throw Error(ErrorCode::structure,
                    "utility node '" + spec.target + "' would be a parent of another node");
      }
      throw Error(ErrorCode::schema, "utility target '" + spec.target + "' already names a network variable");
    }
    if (!targets.insert(spec.target).second) {
      throw Error(ErrorCode::schema, "utility target '" + spec.target + "' used twice");
    }
    auto h = net.dag().find(spec.hypothesis);
    if (!h) throw Error(ErrorCode::schema, "unknown utility hypothesis '" + spec.hypothesis + "'");
    if (seen.count(spec.hypothesis)) {
      throw Error(ErrorCode::schema, "utility hypothesis '" + spec.hypothesis + "' is a decision");
    }
    const Variable& var = net.variable(*h);
    if (var.role != Role::chance) {
      throw Error(ErrorCode::schema, "utility hypothesis '" + spec.hypothesis + "' is not a chance node");
    }
    Eigen::VectorXd values(var.cardinality());
    for (const auto& [state, value] : spec.preferences) {
      if (!var.find_state(state)) {
        throw Error(ErrorCode::schema, "variable '" + var.name + "' has no state '" + state + "'");
      }
      if (!std::isfinite(value) || value < -1.0 || value > 1.0) {
        throw Error(ErrorCode::schema, "preference for '" + state + "' is outside [-1, 1]");
      }
    }
    for (int s = 0; s < var.cardinality(); ++s) {
      auto it = spec.preferences.find(var.states[static_cast<std::size_t>(s)]);
      if (it == spec.preferences.end()) {
        throw Error(ErrorCode::schema, "no preference for state '" + var.states[static_cast<std::size_t>(s)] +
                                           "' of '" + var.name + "'");
      }
      values(s) = it->second;
    }
    bdn.utilities_.push_back({spec, *h, std::move(values)});
  }

  if (tree && !(tree->network().dag() == net.dag())) {
    throw Error(ErrorCode::structure, "supplied clique tree belongs to a different network");
  }
  bdn.tree_ = tree ? std::move(tree) : std::make_shared<const CliqueTree>(CliqueTree::compile(net));
  bdn.net_ = std::make_shared<const DiscreteNetwork>(std::move(roled));
  return bdn;
}

namespace {

EncodedEvidence base_evidence(const DecisionNetwork& bdn, const Evidence& evidence) {
  for (const auto& d : bdn.decisions()) {
    if (evidence.count(d)) throw Error(ErrorCode::query, "evidence on decision variable '" + d + "'");
  }
  return encode_evidence(bdn.network(), evidence);
}

/// Payoff of one decision assignment, nullopt when it has probability zero.
std::optional<double> payoff(const DecisionNetwork& bdn, EncodedEvidence evidence, const std::vector<int>& codes) {
  for (std::size_t i = 0; i < codes.size(); ++i) evidence.emplace_back(bdn.decision_indices()[i], codes[i]);
  const auto state = bdn.tree().calibrate(evidence);
  if (!state.consistent) return std::nullopt;
  double eu = 0.0;
  for (const auto& u : bdn.utilities()) eu += u.values.dot(bdn.tree().marginal(state, u.hypothesis));
  return eu;
}

std::string describe(const DecisionNetwork& bdn, const std::vector<int>& codes) {
  std::string out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i) out += ", ";
    const auto& var = bdn.network().variable(bdn.decision_indices()[i]);
    out += var.name + "=" + var.states[static_cast<std::size_t>(codes[i])];
  }
  return out;
}

/// Decision positions sorted by name, for tie-breaking.
std::vector<std::size_t> name_order(const std::vector<std::string>& decisions) {
  std::vector<std::size_t> order(decisions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return decisions[a] < decisions[b]; });
  return order;
}

/// Descending payoff; rows within the tie tolerance of a cluster's leader are
/// ordered by assignment. Returns the size of the leading cluster.
std::size_t rank_rows(std::vector<PolicyRow>& rows, const std::vector<std::string>& decisions) {
  const auto order = name_order(decisions);
  auto key_less = [&](const PolicyRow& a, const PolicyRow& b) {
    for (std::size_t i : order) {
      if (a.codes[i] != b.codes[i]) return a.codes[i] < b.codes[i];
    }
    return false;
  };
  std::sort(rows.begin(), rows.end(), [&](const PolicyRow& a, const PolicyRow& b) {
    if (a.payoff != b.payoff) return a.payoff > b.payoff;
    return key_less(a, b);
  });
  std::size_t leading = 0;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i + 1;
    while (j < rows.size() && rows[i].payoff - rows[j].payoff <= kPayoffTieTolerance) ++j;
    std::sort(rows.begin() + static_cast<std::ptrdiff_t>(i), rows.begin() + static_cast<std::ptrdiff_t>(j), key_less);
    if (i == 0) leading = j;
    i = j;
  }
  return leading;
}

PolicyTable empty_table(const DecisionNetwork& bdn, const char* method) {
  PolicyTable table;
  table.decisions = bdn.decisions();
  for (int d : bdn.decision_indices()) table.state_labels.push_back(bdn.network().variable(d).states);
  table.method = method;
  table.combinations = static_cast<std::size_t>(bdn.space_size());
  return table;
}

}  // namespace

double expected_utility(const DecisionNetwork& bdn, const Assignment& action, const Evidence& evidence) {
  std::vector<int> codes;
  for (int d : bdn.decision_indices()) {
    const auto& var = bdn.network().variable(d);
    auto it = action.find(var.name);
    if (it == action.end()) throw Error(ErrorCode::invalid_assignment, "action leaves '" + var.name + "' unset");
    codes.push_back(var.state_index(it->second));
  }
  if (action.size() != codes.size()) {
    throw Error(ErrorCode::invalid_assignment, "action assigns a variable that is not a decision");
  }
  auto eu = payoff(bdn, base_evidence(bdn, evidence), codes);
  if (!eu) throw Error(ErrorCode::impossible_action, "action " + describe(bdn, codes) + " has probability zero");
  return *eu;
}

Assignment PolicyTable::assignment(std::size_t row) const {
  Assignment a;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    a[decisions[i]] = state_labels[i][static_cast<std::size_t>(rows[row].codes[i])];
  }
  return a;
}

json policy_table_to_json(const PolicyTable& table) {
  json columns = table.decisions;
  columns.push_back("payoff");
  json rows = json::array();
  json visits = json::array();
  for (const auto& r : table.rows) {
    json row = json::array();
    for (std::size_t i = 0; i < r.codes.size(); ++i) {
      row.push_back(table.state_labels[i][static_cast<std::size_t>(r.codes[i])]);
    }
    row.push_back(r.payoff);
    rows.push_back(std::move(row));
    visits.push_back(r.visits);
  }
  json meta = {{"method", table.method},
               {"combinations", table.combinations},
               {"tie", table.tie},
               {"skipped", table.skipped}};
  if (table.method == "gibbs") {
    meta["iterations"] = table.iterations;
    meta["burn_in"] = table.burn_in;
    meta["beta"] = table.beta;
    meta["seed"] = table.seed;
    meta["visits"] = visits;
  }
  return {{"columns", columns}, {"rows", rows}, {"meta", meta}};
}

PolicyTable exact_policy_table(const DecisionNetwork& bdn, const Evidence& evidence, const ExactOptions& options) {
  const double space = bdn.space_size();
  if (space > options.enumeration_limit) {
    throw Error(ErrorCode::enumeration_limit,
                "decision space has " + std::to_string(space) + " combinations, above the limit of " +
                    std::to_string(options.enumeration_limit) + "; use gibbs mode");
  }
  const auto base = base_evidence(bdn, evidence);
  const auto n = static_cast<std::size_t>(space);
  std::vector<int> cards;
  for (int d : bdn.decision_indices()) cards.push_back(bdn.network().cardinality(d));
  auto decode = [&](std::size_t index) {
    std::vector<int> codes(cards.size());
    for (std::size_t i = cards.size(); i-- > 0;) {
      codes[i] = static_cast<int>(index % static_cast<std::size_t>(cards[i]));
      index /= static_cast<std::size_t>(cards[i]);
    }
    return codes;
  };
  std::vector<std::optional<double>> payoffs(n);
  parallel_for(n, options.workers, [&](std::size_t i) { payoffs[i] = payoff(bdn, base, decode(i)); });

  PolicyTable table = empty_table(bdn, "exact");
  for (std::size_t i = 0; i < n; ++i) {
    if (payoffs[i]) {
      table.rows.push_back({decode(i), *payoffs[i], 0});
    } else {
      table.skipped.push_back(describe(bdn, decode(i)));
    }
  }
  if (table.rows.empty()) {
    throw Error(ErrorCode::impossible_action, "every decision combination has probability zero");
  }
  table.tie = rank_rows(table.rows, table.decisions) > 1;
  if (options.top_k > 0 && table.rows.size() > options.top_k) table.rows.resize(options.top_k);
  return table;
}

Policy optimal_policy(const DecisionNetwork& bdn, const Evidence& evidence, const ExactOptions& options) {
  ExactOptions all = options;
  all.top_k = 0;
  const PolicyTable table = exact_policy_table(bdn, evidence, all);
  Policy p;
  p.action = table.assignment(0);
  p.payoff = table.rows[0].payoff;
  p.tied = 1;
  while (p.tied < table.rows.size() && p.payoff - table.rows[p.tied].payoff <= kPayoffTieTolerance) ++p.tied;
  p.tie = p.tied > 1;
  return p;
}

PolicyTable gibbs_policy(const DecisionNetwork& bdn, const Evidence& evidence, const GibbsOptions& options) {
  if (options.iterations <= options.burn_in) {
    throw Error(ErrorCode::validation, "iterations must exceed burn_in");
  }
  if (!std::isfinite(options.beta) || options.beta < 0.0) {
    throw Error(ErrorCode::validation, "beta must be finite and non-negative");
  }
  const auto base = base_evidence(bdn, evidence);
  const auto& idx = bdn.decision_indices();
  std::map<std::vector<int>, std::optional<double>> cache;
  PolicyTable table = empty_table(bdn, "gibbs");
  auto lookup = [&](const std::vector<int>& codes) {
    auto it = cache.find(codes);
    if (it == cache.end()) {
      it = cache.emplace(codes, payoff(bdn, base, codes)).first;
      if (!it->second) table.skipped.push_back(describe(bdn, codes));
    }
    return it->second;
  };

  Rng rng(options.seed);
  std::vector<int> codes(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    codes[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(bdn.network().cardinality(idx[i]))));
  }
  std::map<std::vector<int>, std::size_t> visits;
  std::vector<double> weights;
  for (std::size_t sweep = 0; sweep < options.iterations; ++sweep) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int card = bdn.network().cardinality(idx[i]);
      const int current = codes[i];
      std::vector<std::optional<double>> eu(static_cast<std::size_t>(card));
      double best = -std::numeric_limits<double>::infinity();
      for (int s = 0; s < card; ++s) {
        codes[i] = s;
        eu[static_cast<std::size_t>(s)] = lookup(codes);
        if (eu[static_cast<std::size_t>(s)]) best = std::max(best, *eu[static_cast<std::size_t>(s)]);
      }
      if (!std::isfinite(best)) {
        codes[i] = current;
        continue;
      }
      weights.assign(static_cast<std::size_t>(card), 0.0);
      double total = 0.0;
      for (int s = 0; s < card; ++s) {
        if (const auto& e = eu[static_cast<std::size_t>(s)]) {
          weights[static_cast<std::size_t>(s)] = std::exp(options.beta * (*e - best));
          total += weights[static_cast<std::size_t>(s)];
        }
      }
      const double u = uniform01(rng) * total;
      double acc = 0.0;
      int pick = -1;
      for (int s = 0; s < card; ++s) {
        if (weights[static_cast<std::size_t>(s)] == 0.0) continue;
        pick = s;
        acc += weights[static_cast<std::size_t>(s)];
        if (u < acc) break;
      }
      codes[i] = pick;
    }
    if (sweep >= options.burn_in && lookup(codes)) ++visits[codes];
  }

  for (const auto& [c, count] : visits) table.rows.push_back({c, *cache.at(c), count});
  if (table.rows.empty()) {
    throw Error(ErrorCode::impossible_action, "sampler found no decision combination with positive probability");
  }
  table.tie = rank_rows(table.rows, table.decisions) > 1;
  table.iterations = options.iterations;
  table.burn_in = options.burn_in;
  table.beta = options.beta;
  table.seed = options.seed;
  std::sort(table.skipped.begin(), table.skipped.end());
  if (options.top_k > 0 && table.rows.size() > options.top_k) table.rows.resize(options.top_k);
  return table;
}

std::vector<PolicyTable> gibbs_chains(const DecisionNetwork& bdn, const Evidence& evidence,
                                      const GibbsOptions& options, std::size_t chains, unsigned workers) {
  std::vector<PolicyTable> out(chains);
  parallel_for(chains, workers, [&](std::size_t i) {
    GibbsOptions o = options;
    o.seed = options.seed + i;
    out[i] = gibbs_policy(bdn, evidence, o);
  });
  return out;
}

PolicyRequest policy_request_from_json(const json& j, std::uint64_t default_seed) {
  if (!j.is_object()) throw Error(ErrorCode::validation, "policy request must be an object");
  PolicyRequest r;
  r.seed = default_seed;
  if (!j.contains("decisions") || !j["decisions"].is_array()) {
    throw Error(ErrorCode::validation, "'decisions' must be an array of variable names");
  }
  for (const auto& d : j["decisions"]) {
    if (!d.is_string()) throw Error(ErrorCode::validation, "'decisions' must be an array of variable names");
    r.decisions.push_back(d.get<std::string>());
  }
  if (!j.contains("utility")) throw Error(ErrorCode::validation, "'utility' is required");
  const json& u = j["utility"];
  if (u.is_array()) {
    for (const auto& item : u) r.utilities.push_back(utility_spec_from_json(item));
  } else {
    r.utilities.push_back(utility_spec_from_json(u));
  }
  if (j.contains("evidence")) {
    if (!j["evidence"].is_object()) throw Error(ErrorCode::validation, "'evidence' must be an object");
    for (const auto& [k, v] : j["evidence"].items()) {
      if (!v.is_string()) throw Error(ErrorCode::validation, "evidence for '" + k + "' must be a state label");
      r.evidence[k] = v.get<std::string>();
    }
  }
  const std::string mode = j.value("mode", "exact");
  if (mode == "exact") {
    r.mode = PolicyMode::exact;
  } else if (mode == "gibbs") {
    r.mode = PolicyMode::gibbs;
  } else {
    throw Error(ErrorCode::validation, "mode must be 'exact' or 'gibbs'");
  }
  auto count = [&](const char* key, std::size_t& out) {
    if (!j.contains(key)) return;
    if (!is_count(j[key])) throw Error(ErrorCode::validation, std::string("'") + key + "' must be a non-negative integer");
    out = j[key].get<std::size_t>();
  };
  count("iterations", r.iterations);
  count("burn_in", r.burn_in);
  count("top_k", r.top_k);
  if (j.contains("seed")) {
    if (!is_count(j["seed"])) throw Error(ErrorCode::validation, "'seed' must be a non-negative integer");
    r.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("beta")) {
    if (!j["beta"].is_number()) throw Error(ErrorCode::validation, "'beta' must be a number");
    r.beta = j["beta"].get<double>();
  }
  return r;
}

PolicyTable policy_table(const DecisionNetwork& bdn, const PolicyRequest& request, unsigned workers) {
  if (request.mode == PolicyMode::exact) {
    ExactOptions o;
    o.top_k = request.top_k;
    o.workers = workers;
    return exact_policy_table(bdn, request.evidence, o);
  }
  GibbsOptions o;
  o.iterations = request.iterations;
  o.burn_in = request.burn_in;
  o.beta = request.beta;
  o.seed = request.seed;
  o.top_k = request.top_k;
  return gibbs_policy(bdn, request.evidence, o);
}

}  // namespace bdn
