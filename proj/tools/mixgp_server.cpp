#include "mixgp/service_http.hpp"
#include "mixgp/session.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <csignal>
#include <cstdlib>
#include <iostream>

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Session service for live trials"};
  std::string bind = env_or("MIXGP_BIND", "127.0.0.1:8080");
  std::string data_dir = env_or("MIXGP_DATA_DIR", "sessions");
  int workers = std::stoi(env_or("MIXGP_WORKERS", "2"));
  app.add_option("--bind", bind, "host:port to listen on; port 0 picks a free port (env MIXGP_BIND)");
  app.add_option("--data-dir", data_dir, "session persistence directory (env MIXGP_DATA_DIR)");
  app.add_option("--workers", workers, "autopilot and HTTP worker threads (env MIXGP_WORKERS)")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    std::cerr << "--bind must be host:port\n";
    return 2;
  }
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    std::cerr << "--bind: bad port in " << bind << '\n';
    return 2;
  }

  try {
    mixgp::SessionManager manager(data_dir, workers);
    httplib::Server server;
    server.new_task_queue = [workers] { return new httplib::ThreadPool(static_cast<std::size_t>(std::max(4, 2 * workers))); };
    mixgp::mount_routes(server, manager);

    if (port == 0) {
      port = server.bind_to_any_port(host);
    } else if (!server.bind_to_port(host, port)) {
      port = -1;
    }
    if (port < 0) {
      std::cerr << "cannot listen on " << bind << '\n';
      return 1;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on " << host << ':' << port << " (" << manager.loaded_at_startup()
              << " sessions restored from " << data_dir << ")" << std::endl;
    server.listen_after_bind();
    manager.stop();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
