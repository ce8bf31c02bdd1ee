#pragma once

#include "mixgp/session.hpp"

namespace httplib {
class Server;
}

namespace mixgp {

/// Registers the session API on `server`:
///   POST /sessions, GET /sessions/{id}/trial, POST /sessions/{id}/responses,
///   GET /sessions/{id}/model?grid=N, GET /sessions/{id}/export, GET /healthz.
void mount_routes(httplib::Server& server, SessionManager& manager);

}  // namespace mixgp
