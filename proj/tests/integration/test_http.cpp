#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bdn/service.hpp"
#include "fixtures.hpp"

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <future>
#include <thread>

using namespace bdn;
namespace fs = std::filesystem;

namespace {

// Service plus an httplib server on an ephemeral port, stopped on scope exit.
struct Running {
  fs::path dir;
  std::unique_ptr<Service> service;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit Running(fs::path d) : dir(std::move(d)) { start(); }
  ~Running() { stop(); }

  void start() {
    service = std::make_unique<Service>(ServiceConfig{dir, 0, 2});
    bind_routes(server, *service);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  void stop() {
    server.stop();
    if (thread.joinable()) thread.join();
    service.reset();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(60, 0);
    return c;
  }
};

json parse(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

}  // namespace

TEST_CASE("full workflow over HTTP") {
  const fs::path dir = fs::temp_directory_path() / ("bdn_http_" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
  std::string model_id, query_body;
  const std::string query = R"({"variable": "longevity", "evidence": {"smoker": "no", "income": 75}})";
  {
    Running app(dir);
    auto c = app.client();
    const auto up = c.Post("/datasets?key_column=county", fixture::synthetic_csv(500, 3), "text/csv");
    REQUIRE(up);
    CHECK(up->status == 201);
    CHECK(up->get_header_value("Content-Type") == "application/json");
    const std::string ds = parse(up)["id"];
    CHECK(parse(c.Get("/datasets/" + ds))["rows"] == 500);

    const auto started = c.Post("/models", json{{"dataset", ds}, {"bootstraps", 21}, {"seed", 2}}.dump(), "application/json");
    REQUIRE(started);
    CHECK(started->status == 202);
    const std::string job = parse(started)["job"]["id"];
    json status;
    for (int i = 0; i < 3000; ++i) {
      status = parse(c.Get("/jobs/" + job));
      if (status["phase"] == "done" || status["phase"] == "failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(status["phase"] == "done");
    model_id = status["model"];

    const auto model = parse(c.Get("/models/" + model_id));
    CHECK(model["ensemble"]["n_bootstraps"] == 21);
    CHECK(model["discretization"].is_array());

    const auto q = c.Post("/models/" + model_id + "/query", query, "application/json");
    REQUIRE(q);
    CHECK(q->status == 200);
    query_body = q->body;

    // Concurrent clients get the serial answer.
    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 6; ++i) {
      futures.push_back(std::async(std::launch::async, [&] {
        auto cc = app.client();
        auto r = cc.Post("/models/" + model_id + "/query", query, "application/json");
        return r ? r->body : std::string();
      }));
    }
    for (auto& f : futures) CHECK(f.get() == query_body);

    const auto p = c.Post("/models/" + model_id + "/policy",
                          R"({"decisions": ["smoker"], "utility": {"variable": "region", "preferences": {"north": 1, "south": 0, "west": -1}}})",
                          "application/json");
    REQUIRE(p);
    CHECK(p->status == 200);
    CHECK(parse(p)["rows"].size() == 2);

    const auto nf = c.Get("/models/m999999");
    REQUIRE(nf);
    CHECK(nf->status == 404);
    CHECK(parse(nf)["error"]["code"] == "not_found");
    const auto bad = c.Post("/models/" + model_id + "/query", "{", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    const auto unprocessable = c.Post("/models/" + model_id + "/query", R"({"variable": "ghost"})", "application/json");
    REQUIRE(unprocessable);
    CHECK(unprocessable->status == 422);
    const auto nowhere = c.Get("/nowhere");
    REQUIRE(nowhere);
    CHECK(nowhere->status == 404);
    CHECK(parse(nowhere)["error"]["code"] == "not_found");
  }
  {
    // Restart on the same data directory.
    Running app(dir);
    auto c = app.client();
    const auto q = c.Post("/models/" + model_id + "/query", query, "application/json");
    REQUIRE(q);
    CHECK(q->body == query_body);
  }
  fs::remove_all(dir);
}
