// bdn: learn, query and serve discrete Bayesian decision networks.

#include "bdn/engine.hpp"
#include "bdn/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw bdn::Error(bdn::ErrorCode::io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bdn::json read_json(const std::string& path) {
  bdn::json doc = bdn::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw bdn::Error(bdn::ErrorCode::parse_error, "'" + path + "' is not valid JSON");
  return doc;
}

void write_output(const std::string& text, const std::string& out) {
  const char* end = text.ends_with('\n') ? "" : "\n";
  if (out.empty() || out == "-") {
    std::cout << text << end;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  f << text << end;
  if (!f) throw bdn::Error(bdn::ErrorCode::io, "cannot write '" + out + "'");
}

/// "A=a" pairs into an evidence object.
bdn::json evidence_from_pairs(const std::vector<std::string>& pairs) {
  bdn::json ev = bdn::json::object();
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw bdn::Error(bdn::ErrorCode::validation, "evidence '" + p + "' is not NAME=STATE");
    ev[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return ev;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete Bayesian network learning, inference and policy tables"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  unsigned workers = 0;

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  std::string host = "0.0.0.0";
  int port = 8080;
  std::string data_dir = "store";
  serve->add_option("--host", host);
  serve->add_option("--port", port)->envname("PORT");
  serve->add_option("--data-dir", data_dir)->envname("DATA_DIR");
  serve->add_option("--seed", seed, "default seed for requests without one")->envname("DEFAULT_SEED");
  serve->add_option("--workers", workers, "0 = hardware threads");

  auto* learn = app.add_subcommand("learn", "learn a model from a CSV file");
  std::string data, key, blacklist, derived, out, config_path;
  std::vector<std::string> columns;
  bdn::LearnConfig config;
  learn->add_option("--data", data, "CSV file")->required();
  learn->add_option("--key", key, "key column (excluded from the model)");
  learn->add_option("--config", config_path, "JSON learning config; flags override it");
  learn->add_option("--blacklist", blacklist, "JSON constraints file");
  learn->add_option("--derived", derived, "JSON derived-column spec");
  learn->add_option("--columns", columns, "variables to model")->delimiter(',');
  auto* bootstraps_opt = learn->add_option("--bootstraps", config.bootstraps);
  auto* threshold_opt = learn->add_option("--threshold", config.threshold);
  auto* bins_opt = learn->add_option("--bins", config.bins);
  auto* learn_seed = learn->add_option("--seed", seed)->envname("DEFAULT_SEED");
  learn->add_option("--workers", workers);
  learn->add_option("--out", out, "model file (stdout when omitted)");

  auto* merge = app.add_subcommand("merge", "inner-join two CSV files on a key column");
  std::string left_path, right_path, merge_key;
  std::vector<std::string> right_columns;
  merge->add_option("--left", left_path)->required();
  merge->add_option("--right", right_path)->required();
  merge->add_option("--key", merge_key)->required();
  merge->add_option("--right-columns", right_columns, "keep only these right-hand columns")->delimiter(',');
  merge->add_option("--out", out);

  auto* query = app.add_subcommand("query", "posterior of one variable");
  std::string model_path, request_path, variable, method = "exact";
  std::vector<std::string> evidence;
  std::size_t n_samples = 10000, repeats = 25;
  query->add_option("--model", model_path)->required();
  query->add_option("--request", request_path, "JSON query request");
  query->add_option("--variable", variable);
  query->add_option("--evidence", evidence, "NAME=STATE, repeatable");
  query->add_option("--method", method)->check(CLI::IsMember({"exact", "approx"}));
  query->add_option("--n-samples", n_samples);
  query->add_option("--repeats", repeats);
  query->add_option("--seed", seed)->envname("DEFAULT_SEED");
  query->add_option("--workers", workers);

  auto* policy = app.add_subcommand("policy", "ranked policy table");
  policy->add_option("--model", model_path)->required();
  policy->add_option("--request", request_path, "JSON policy request")->required();
  policy->add_option("--seed", seed)->envname("DEFAULT_SEED");
  policy->add_option("--workers", workers);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      bdn::Service service({data_dir, seed, workers});
      std::cerr << "listening on " << host << ":" << port << '\n';
      bdn::serve_http(service, host, port);
      return 0;
    }
    if (*learn) {
      const std::string bytes = read_file(data);
      const bdn::RawTable table = bdn::parse_csv(bytes, key);
      bdn::json cfg = config_path.empty() ? bdn::json::object() : read_json(config_path);
      if (!blacklist.empty()) {
        const bdn::json c = read_json(blacklist);
        if (c.is_array()) {
          cfg["blacklist"] = c;
        } else {
          for (const char* k : {"blacklist", "whitelist"}) {
            if (c.contains(k)) cfg[k] = c[k];
          }
        }
      }
      if (!derived.empty()) cfg["derived_spec"] = read_json(derived);
      if (!columns.empty()) cfg["columns"] = columns;
      if (*bootstraps_opt) cfg["bootstraps"] = config.bootstraps;
      if (*threshold_opt) cfg["threshold"] = config.threshold;
      if (*bins_opt) cfg["bins"] = config.bins;
      if (*learn_seed || !cfg.contains("seed")) cfg["seed"] = seed;
      bdn::LearnConfig resolved = bdn::learn_config_from_json(cfg);
      resolved.workers = workers;
      auto progress = [](bdn::Phase phase, std::size_t done, std::size_t total) {
        if (phase == bdn::Phase::learning && done > 0 && (done == total || done % 50 == 0)) {
          std::cerr << "bootstrap " << done << "/" << total << '\n';
        }
      };
      const auto model = bdn::learn_model(table, resolved, bdn::sha256_hex(bytes), progress);
      write_output(bdn::canonical_dump(bdn::model_to_json(model)), out);
      return 0;
    }
    if (*merge) {
      const auto left = bdn::load_csv(left_path, merge_key);
      auto right = bdn::load_csv(right_path, merge_key);
      if (!right_columns.empty()) right = right.select(right_columns);
      write_output(bdn::to_csv(bdn::merge(left, right, merge_key)), out);
      return 0;
    }
    const bdn::LoadedModel model(bdn::model_from_json(read_json(model_path)));
    if (*query) {
      bdn::json request;
      if (!request_path.empty()) {
        request = read_json(request_path);
      } else {
        if (variable.empty()) throw bdn::Error(bdn::ErrorCode::validation, "--variable or --request is required");
        request = {{"variable", variable},
                   {"evidence", evidence_from_pairs(evidence)},
                   {"method", method},
                   {"n_samples", n_samples},
                   {"repeats", repeats}};
      }
      write_output(bdn::canonical_dump(bdn::run_query(model, request, seed, workers)), "");
      return 0;
    }
    write_output(bdn::canonical_dump(bdn::run_policy(model, read_json(request_path), seed, workers ? workers : 1)), "");
    return 0;
  } catch (const bdn::Error& e) {
    std::cerr << bdn::canonical_dump(bdn::error_to_json(e.code(), e.what())) << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << bdn::canonical_dump(bdn::error_to_json(bdn::ErrorCode::io, e.what())) << '\n';
    return 1;
  }
}
