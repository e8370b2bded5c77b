#include "bdn/service.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>

namespace bdn {

Store::Store(std::filesystem::path dir) : path_(dir / "store.jsonl") {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create data directory '" + dir.string() + "': " + ec.message());
  std::string text;
  {
    std::ifstream in(path_, std::ios::binary);
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    if (end == std::string::npos) {
      // Torn final write: cut it off so the next append starts a fresh line.
      std::filesystem::resize_file(path_, start, ec);
      if (ec) throw Error(ErrorCode::io, "cannot repair '" + path_.string() + "': " + ec.message());
      break;
    }
    json doc = json::parse(std::string_view(text).substr(start, end - start), nullptr, false);
    start = end + 1;
    if (doc.is_discarded() || !doc.is_object()) continue;
    const std::string type = doc.value("type", "");
    if (type == "blob") {
      blobs_[doc.value("id", "")] = doc.value("data", "");
    } else if (type == "record") {
      records_[doc.value("kind", "")][doc.value("id", "")] = doc["record"];
    }
  }
}

void Store::append(const json& line) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << canonical_dump(line) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::io, "cannot write to '" + path_.string() + "'");
}

std::string Store::put_blob(std::string_view bytes) {
  std::string id = sha256_hex(bytes);
  std::lock_guard lock(mutex_);
  if (blobs_.count(id)) return id;
  append({{"type", "blob"}, {"id", id}, {"data", bytes}});
  blobs_.emplace(id, std::string(bytes));
  return id;
}

std::optional<std::string> Store::blob(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = blobs_.find(id);
  if (it == blobs_.end()) return std::nullopt;
  return it->second;
}

void Store::put_record(const std::string& kind, const std::string& id, const json& record) {
  std::lock_guard lock(mutex_);
  append({{"type", "record"}, {"kind", kind}, {"id", id}, {"record", record}});
  records_[kind][id] = record;
}

std::optional<json> Store::record(const std::string& kind, const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto k = records_.find(kind);
  if (k == records_.end()) return std::nullopt;
  auto it = k->second.find(id);
  if (it == k->second.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Store::ids(const std::string& kind) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  if (auto k = records_.find(kind); k != records_.end()) {
    for (const auto& [id, _] : k->second) out.push_back(id);
  }
  return out;
}

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::io: return 500;
    default: return 422;
  }
}

Response ok(const json& body, int status = 200) { return {status, canonical_dump(body)}; }

Response fail(ErrorCode code, std::string_view message) {
  return {status_for(code), canonical_dump(error_to_json(code, message))};
}

/// Malformed request bodies answer 400 rather than 422.
struct BadRequest : Error {
  using Error::Error;
};

json parse_body(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw BadRequest(ErrorCode::validation, "request body is not valid JSON");
  return doc;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename Fn>
Response guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const BadRequest& e) {
    return {400, canonical_dump(error_to_json(e.code(), e.what()))};
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return {500, canonical_dump(error_to_json(ErrorCode::io, e.what()))};
  }
}

std::size_t highest_id(const std::vector<std::string>& ids) {
  std::size_t n = 0;
  for (const auto& id : ids) {
    if (id.size() > 1) n = std::max<std::size_t>(n, std::stoull(id.substr(1)));
  }
  return n;
}

}  // namespace

Service::Service(ServiceConfig config) : config_(std::move(config)), store_(config_.data_dir) {
  job_counter_ = highest_id(store_.ids("job"));
  model_counter_ = highest_id(store_.ids("model"));
}

Service::~Service() { wait_for_jobs(); }

void Service::wait_for_jobs() {
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(mutex_);
    threads.swap(threads_);
  }
  threads.clear();
}

std::string Service::next_id(char prefix, std::size_t& counter) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%06zu", prefix, ++counter);
  return buf;
}

Response Service::upload_dataset(std::string_view csv, const std::string& key_column) {
  return guarded([&] {
    try {
      (void)json(std::string(csv)).dump();
    } catch (const json::type_error&) {
      throw Error(ErrorCode::parse_error, "dataset is not valid UTF-8");
    }
    const RawTable table = parse_csv(csv, key_column);
    const std::string blob = store_.put_blob(csv);
    const std::string id = key_column.empty() ? blob : sha256_hex(key_column + "\n" + std::string(csv));
    if (auto existing = store_.record("dataset", id)) return ok(*existing);
    json numeric = json::object();
    json missing = json::object();
    for (std::size_t c = 0; c < table.cols(); ++c) {
      const auto& name = table.columns()[c];
      numeric[name] = table.is_numeric(c);
      std::size_t n = 0;
      for (const auto& cell : table.column(c)) n += is_missing(cell);
      missing[name] = n;
    }
    json record = {{"id", id},           {"blob", blob},       {"key_column", key_column},
                   {"rows", table.rows()}, {"columns", table.columns()}, {"numeric", numeric},
                   {"missing", missing}};
    store_.put_record("dataset", id, record);
    return ok(record, 201);
  });
}

Response Service::get_dataset(const std::string& id) {
  return guarded([&] {
    auto record = store_.record("dataset", id);
    if (!record) throw Error(ErrorCode::not_found, "no dataset '" + id + "'");
    return ok(*record);
  });
}

RawTable Service::load_dataset(const std::string& id) const {
  auto record = store_.record("dataset", id);
  if (!record) throw Error(ErrorCode::not_found, "no dataset '" + id + "'");
  auto bytes = store_.blob((*record)["blob"].get<std::string>());
  if (!bytes) throw Error(ErrorCode::io, "dataset blob missing from store");
  return parse_csv(*bytes, (*record)["key_column"].get<std::string>());
}

json Service::job_json(const Job& job) const {
  json j = {{"id", job.id},
            {"dataset", job.dataset},
            {"phase", to_string(job.phase)},
            {"completed", job.done},
            {"total", job.total}};
  double progress = 0.0;
  if (job.phase == Phase::learning && job.total > 0) progress = static_cast<double>(job.done) / static_cast<double>(job.total);
  if (job.phase == Phase::fitting || job.phase == Phase::done) progress = 1.0;
  if (job.phase == Phase::failed) progress = job.total ? static_cast<double>(job.done) / static_cast<double>(job.total) : 0.0;
  j["progress"] = progress;
  if (!job.model.empty()) j["model"] = job.model;
  if (job.error) j["error"] = error_to_json(job.error->first, job.error->second)["error"];
  return j;
}

Response Service::start_learning(std::string_view body) {
  return guarded([&] {
    const json request = parse_body(body);
    if (!request.is_object() || !request.contains("dataset") || !request["dataset"].is_string()) {
      throw Error(ErrorCode::validation, "'dataset' must name an uploaded dataset");
    }
    const std::string dataset = request["dataset"].get<std::string>();
    RawTable table = load_dataset(dataset);
    LearnConfig config = learn_config_from_json(request, config_.default_seed);
    config.workers = config_.workers;
    try {
      config.constraints.validate(model_variables(table, config));
    } catch (const Error& e) {
      throw Error(ErrorCode::validation, e.what());
    }
    const std::string name = request.value("name", std::string{});
    const std::string hash = store_.record("dataset", dataset)->at("blob").get<std::string>();

    std::lock_guard lock(mutex_);
    if (auto running = running_.find(dataset); running != running_.end()) {
      json j = job_json(jobs_.at(running->second));
      j["duplicate"] = true;
      return ok({{"job", j}});
    }
    Job job;
    job.id = next_id('j', job_counter_);
    job.dataset = dataset;
    jobs_[job.id] = job;
    running_[dataset] = job.id;
    threads_.emplace_back(&Service::run_job, this, job.id, std::move(table), std::move(config), hash, name);
    return ok({{"job", job_json(job)}}, 202);
  });
}

void Service::run_job(std::string job_id, RawTable table, LearnConfig config, std::string dataset_hash,
                      std::string name) {
  auto update = [&](Phase phase, std::size_t done, std::size_t total) {
    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(job_id);
    job.phase = phase;
    job.done = done;
    job.total = total;
  };
  json final_record;
  try {
    LearnedModel model = learn_model(table, config, dataset_hash, update);
    const std::string blob = store_.put_blob(canonical_dump(model_to_json(model)));
    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(job_id);
    const std::string model_id = next_id('m', model_counter_);
    store_.put_record("model", model_id,
                      {{"id", model_id},
                       {"name", name.empty() ? model_id : name},
                       {"created_at", utc_now()},
                       {"blob", blob},
                       {"dataset", job.dataset},
                       {"job", job_id}});
    job.phase = Phase::done;
    job.done = job.total = config.bootstraps;
    job.model = model_id;
    running_.erase(job.dataset);
    store_.put_record("job", job_id, job_json(job));
  } catch (const std::exception& e) {
    std::lock_guard lock(mutex_);
    Job& job = jobs_.at(job_id);
    const auto* err = dynamic_cast<const Error*>(&e);
    job.phase = Phase::failed;
    job.error = std::make_pair(err ? err->code() : ErrorCode::io, std::string(e.what()));
    running_.erase(job.dataset);
    store_.put_record("job", job_id, job_json(job));
  }
}

Response Service::get_job(const std::string& id) {
  return guarded([&] {
    {
      std::lock_guard lock(mutex_);
      if (auto it = jobs_.find(id); it != jobs_.end()) return ok(job_json(it->second));
    }
    if (auto record = store_.record("job", id)) return ok(*record);
    throw Error(ErrorCode::not_found, "no job '" + id + "'");
  });
}

std::shared_ptr<const LoadedModel> Service::load_model(const std::string& id) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = models_.find(id); it != models_.end()) return it->second;
  }
  auto record = store_.record("model", id);
  if (!record) throw Error(ErrorCode::not_found, "no model '" + id + "'");
  auto bytes = store_.blob((*record)["blob"].get<std::string>());
  if (!bytes) throw Error(ErrorCode::io, "model blob missing from store");
  auto loaded = std::make_shared<const LoadedModel>(model_from_json(json::parse(*bytes)));
  std::lock_guard lock(mutex_);
  return models_.emplace(id, std::move(loaded)).first->second;
}

Response Service::get_model(const std::string& id) {
  return guarded([&] {
    auto record = store_.record("model", id);
    if (!record) throw Error(ErrorCode::not_found, "no model '" + id + "'");
    auto bytes = store_.blob((*record)["blob"].get<std::string>());
    if (!bytes) throw Error(ErrorCode::io, "model blob missing from store");
    json doc = json::parse(*bytes);
    json out = *record;
    out.erase("blob");
    out["dag"] = doc["ensemble"]["consensus"];
    out["edge_strength"] = doc["ensemble"]["edge_strength"];
    for (auto& [k, v] : doc.items()) out[k] = v;
    return ok(out);
  });
}

Response Service::query(const std::string& model_id, std::string_view body) {
  return guarded([&] {
    auto model = load_model(model_id);
    return ok(run_query(*model, parse_body(body), config_.default_seed, config_.workers));
  });
}

Response Service::policy(const std::string& model_id, std::string_view body) {
  return guarded([&] {
    auto model = load_model(model_id);
    return ok(run_policy(*model, parse_body(body), config_.default_seed, config_.workers));
  });
}

}  // namespace bdn
