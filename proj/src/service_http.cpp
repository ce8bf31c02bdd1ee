#include "mixgp/service_http.hpp"

#include "mixgp/levelset.hpp"
#include "mixgp/model_io.hpp"
#include "mixgp/preference.hpp"

#include "httplib.h"

#include <charconv>
#include <iostream>

namespace mixgp {

using nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const ServiceError& e) { send(res, e.status(), e.body()); }

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, "bad_request", "request body is not valid JSON", e.what());
  }
}

// Runs a handler and maps exceptions onto error bodies.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      std::cerr << req.method << ' ' << req.path << ": " << e.what() << '\n';
      send(res, 500, ServiceError(500, "internal_error", e.what()).body());
    }
  };
}

// Acquisition value at the pending trial and the posterior there.
json query_summary(const Session& s, const SessionSnapshot& snap) {
  json j = {{"elbo", snap.elbo ? json(*snap.elbo) : json(nullptr)}, {"responses", snap.responses}};
  if (!snap.pending) {
    j["query"] = nullptr;
    return j;
  }
  const Trial& t = *snap.pending;
  Points X(1, t.x.size());
  X.row(0) = t.x.transpose();
  const Marginals m = snap.posterior->marginals(X);
  json q = {{"acquisition_value", t.acquisition_value ? json(*t.acquisition_value) : json(nullptr)},
            {"latent_mean", m.mean[0]},
            {"latent_var", m.var[0]}};
  if (s.config().kind == SessionKind::levelset)
    q["sublevel_prob"] = sublevel_prob(m.mean[0], std::sqrt(m.var[0]), s.config().threshold);
  else
    q["preference_prob"] = preference_probability(m.mean[0], m.var[0]);
  j["query"] = q;
  return j;
}

int grid_param(const httplib::Request& req) {
  if (!req.has_param("grid")) return 0;
  const std::string v = req.get_param_value("grid");
  int n = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ServiceError(422, "validation_error", "grid must be an integer", {{"grid", v}});
  return n;
}

}  // namespace

void mount_routes(httplib::Server& server, SessionManager& manager) {
  server.Get("/healthz", guarded([&](const httplib::Request&, httplib::Response& res) {
    send(res, 200, {{"status", "ok"}, {"sessions", manager.size()}, {"loaded_at_startup", manager.loaded_at_startup()}});
  }));

  server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto [session, created] = manager.create(body, req.get_header_value("Idempotency-Key"));
    json out = session->trial_json();
    out["config"] = session->config().resolved;
    out["created"] = created;
    send(res, created ? 201 : 200, out);
  }));

  server.Get(R"(/sessions/([^/]+)/trial)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send(res, 200, manager.get(req.matches[1])->trial_json());
  }));

  server.Post(R"(/sessions/([^/]+)/responses)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    const auto session = manager.get(req.matches[1]);
    const json body = parse_body(req);
    const auto snap = session->submit(body);
    manager.schedule(session);
    json out = session->trial_json(snap);
    out["accepted"] = body.at("trial");
    out["summary"] = query_summary(*session, *snap);
    out["elbo_trace"] = snap->last_elbo_trace;
    send(res, 200, out);
  }));

  server.Get(R"(/sessions/([^/]+)/model)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send(res, 200, manager.get(req.matches[1])->model_json(grid_param(req)));
  }));

  server.Get(R"(/sessions/([^/]+)/export)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send(res, 200, manager.get(req.matches[1])->export_json());
  }));

  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const int status = res.status;
    const std::string code = status == 404 ? "not_found" : status == 405 ? "method_not_allowed" : "http_error";
    send(res, status, ServiceError(status, code, "no route for " + req.method + " " + req.path).body());
  });
}

}  // namespace mixgp
