#include "bdn/service.hpp"

#include <httplib.h>

namespace bdn {

namespace {

void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

void bind_routes(httplib::Server& server, Service& service) {
  server.Post("/datasets", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.upload_dataset(req.body, req.get_param_value("key_column")));
  });
  server.Get(R"(/datasets/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_dataset(req.matches[1]));
  });
  server.Post("/models", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.start_learning(req.body));
  });
  server.Get(R"(/jobs/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_job(req.matches[1]));
  });
  server.Get(R"(/models/([^/]+))", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.get_model(req.matches[1]));
  });
  server.Post(R"(/models/([^/]+)/query)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.query(req.matches[1], req.body));
  });
  server.Post(R"(/models/([^/]+)/policy)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, service.policy(req.matches[1], req.body));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    res.set_content(canonical_dump(error_to_json(ErrorCode::not_found, "no such endpoint")), "application/json");
  });
}

void serve_http(Service& service, const std::string& host, int port) {
  httplib::Server server;
  bind_routes(server, service);
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::io, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

}  // namespace bdn
