#pragma once

#include "bdn/engine.hpp"
#include "bdn/json_io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace bdn {

/// Append-only single-file store: content-addressed blobs plus manifest
/// records, one JSON document per line of `<dir>/store.jsonl`. A torn final
/// line (crash mid-write) is ignored on load.
class Store {
 public:
  explicit Store(std::filesystem::path dir);

  /// SHA-256 id; storing the same bytes twice is a no-op.
  std::string put_blob(std::string_view bytes);
  std::optional<std::string> blob(const std::string& id) const;

  void put_record(const std::string& kind, const std::string& id, const json& record);
  std::optional<json> record(const std::string& kind, const std::string& id) const;
  std::vector<std::string> ids(const std::string& kind) const;

 private:
  void append(const json& line);

  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, std::string> blobs_;
  std::map<std::string, std::map<std::string, json>> records_;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "store";
  std::uint64_t default_seed = 0;
  unsigned workers = 0;
};

struct Response {
  int status = 200;
  std::string body;
};

/// Endpoint logic, independent of the HTTP layer. Every body is canonical
/// JSON; failures are {"error": {"code", "message"}}.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response upload_dataset(std::string_view csv, const std::string& key_column);
  Response get_dataset(const std::string& id);
  Response start_learning(std::string_view body);
  Response get_job(const std::string& id);
  Response get_model(const std::string& id);
  Response query(const std::string& model_id, std::string_view body);
  Response policy(const std::string& model_id, std::string_view body);

  /// Blocks until every learning job has finished.
  void wait_for_jobs();

  const ServiceConfig& config() const { return config_; }

 private:
  struct Job {
    std::string id;
    std::string dataset;
    Phase phase = Phase::queued;
    std::size_t done = 0;
    std::size_t total = 0;
    std::string model;
    std::optional<std::pair<ErrorCode, std::string>> error;
  };

  json job_json(const Job& job) const;
  RawTable load_dataset(const std::string& id) const;
  std::shared_ptr<const LoadedModel> load_model(const std::string& id);
  void run_job(std::string job_id, RawTable table, LearnConfig config, std::string dataset_hash, std::string name);
  std::string next_id(char prefix, std::size_t& counter);

  ServiceConfig config_;
  Store store_;
  std::mutex mutex_;
  std::map<std::string, Job> jobs_;
  std::map<std::string, std::string> running_;  // dataset -> job
  std::map<std::string, std::shared_ptr<const LoadedModel>> models_;
  std::size_t job_counter_ = 0;
  std::size_t model_counter_ = 0;
  std::vector<std::jthread> threads_;
};

/// Registers the endpoints on an httplib server.
void bind_routes(httplib::Server& server, Service& service);

/// Serves the endpoints over HTTP until the process is stopped.
void serve_http(Service& service, const std::string& host, int port);

}  // namespace bdn
