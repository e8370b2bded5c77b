#include "bdn/json_io.hpp"

#include "bdn/error.hpp"

#include <cmath>
#include <cstdio>

namespace bdn {

namespace {

void dump_into(const json& value, std::string& out) {
  switch (value.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        out += json(it.key()).dump(-1, ' ', false, json::error_handler_t::replace);
        out.push_back(':');
        dump_into(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      bool first = true;
      for (const auto& item : value) {
        if (!first) out.push_back(',');
        first = false;
        dump_into(item, out);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float: {
      double d = value.get<double>();
      if (!std::isfinite(d)) {
        out += "null";
        break;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      out += buf;
      break;
    }
    default:
      out += value.dump(-1, ' ', false, json::error_handler_t::replace);
  }
}

}  // namespace

std::string canonical_dump(const json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

json dag_to_json(const Dag& dag) {
  json edges = json::array();
  for (const auto& [p, c] : dag.named_edges()) edges.push_back({p, c});
  return {{"nodes", dag.nodes()}, {"edges", edges}};
}

json network_to_json(const DiscreteNetwork& net) {
  json variables = json::array();
  for (const auto& v : net.variables()) {
    variables.push_back({{"name", v.name}, {"states", v.states}, {"role", to_string(v.role)}});
  }
  json cpts = json::array();
  for (const auto& cpt : net.cpts()) {
    json probs = json::array();
    for (Eigen::Index r = 0; r < cpt.table.rows(); ++r) {
      for (Eigen::Index c = 0; c < cpt.table.cols(); ++c) probs.push_back(cpt.table(r, c));
    }
    cpts.push_back({{"child", cpt.child}, {"parents", cpt.parents}, {"probabilities", probs}});
  }
  return {{"variables", variables}, {"edges", dag_to_json(net.dag())["edges"]}, {"cpts", cpts}};
}

DiscreteNetwork network_from_json(const json& doc) {
  try {
    std::vector<Variable> variables;
    std::vector<std::string> names;
    for (const auto& v : doc.at("variables")) {
      Variable var;
      var.name = v.at("name").get<std::string>();
      var.states = v.at("states").get<std::vector<std::string>>();
      var.role = v.contains("role") ? role_from_string(v["role"].get<std::string>()) : Role::chance;
      names.push_back(var.name);
      variables.push_back(std::move(var));
    }
    Dag dag(names);
    for (const auto& e : doc.at("edges")) {
      dag.add_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    std::vector<Cpt> cpts;
    for (const auto& c : doc.at("cpts")) {
      Cpt cpt;
      cpt.child = c.at("child").get<std::string>();
      cpt.parents = c.at("parents").get<std::vector<std::string>>();
      auto probs = c.at("probabilities").get<std::vector<double>>();
      auto child = dag.find(cpt.child);
      if (!child) throw Error(ErrorCode::schema, "CPT for unknown node '" + cpt.child + "'");
      Eigen::Index cols = variables[static_cast<std::size_t>(*child)].cardinality();
      Eigen::Index rows = 1;
      for (const auto& p : cpt.parents) {
        rows *= variables[static_cast<std::size_t>(dag.index_of(p))].cardinality();
      }
      if (static_cast<Eigen::Index>(probs.size()) != rows * cols) {
        throw Error(ErrorCode::schema, "CPT for '" + cpt.child + "' has " +
                                           std::to_string(probs.size()) + " entries, expected " +
                                           std::to_string(rows * cols));
      }
      cpt.table = Eigen::Map<const CptTable>(probs.data(), rows, cols);
      cpts.push_back(std::move(cpt));
    }
    return DiscreteNetwork(std::move(variables), std::move(dag), std::move(cpts));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, std::string("malformed network JSON: ") + e.what());
  }
}

}  // namespace bdn
