#pragma once

#include "mixgp/levelset.hpp"
#include "mixgp/preference.hpp"
#include "mixgp/simulators.hpp"

#include "json.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace mixgp {

inline constexpr const char* kSessionExportSchema = "session-export-v1";
inline constexpr const char* kLevelsetTrialsSchema = "levelset-trials-v1";
inline constexpr int kMaxGridPoints = 64 * 64;

/// Error carried to HTTP clients as {code, message, detail}.
class ServiceError : public std::runtime_error {
public:
  ServiceError(int status, std::string code, const std::string& message, nlohmann::json detail = nullptr)
      : std::runtime_error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }
  nlohmann::json body() const { return {{"code", code_}, {"message", what()}, {"detail", detail_}}; }

private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

enum class SessionKind { levelset, preference };

/// Validated session settings; `resolved` is the config with defaults filled.
struct SessionConfig {
  SessionKind kind = SessionKind::levelset;
  std::optional<Objective> objective;
  Box domain;
  double threshold = 0.0;
  ConstraintSet constraints;
  ModelVariant variant = ModelVariant::mixed;
  AcquisitionKind acquisition = AcquisitionKind::globalmi;
  int num_inducing = 100;
  int likert_options = 0;
  double lapse = LikertLikelihood::default_lapse;
  FitOptions refit;
  HyperPriors priors;
  int budget = 50;
  int initial_trials = 10;
  std::uint64_t seed = 0;
  int num_reference = 1000;
  AcquisitionOptimizerOptions optimizer;
  bool autopilot = false;
  nlohmann::json resolved;

  /// Throws ServiceError(422, "invalid_config") listing every problem.
  static SessionConfig parse(const nlohmann::json& body);
};

struct Trial {
  int id = 0;  // 1-based
  Vector x;    // levelset stimulus, or [x1, x2] for preference pairs
  std::string source;  // "sobol" or "acquisition"
  std::optional<double> acquisition_value;
};

struct Response {
  int trial = 0;
  Vector x;
  int choice = 0;
  std::optional<int> rating;  // 1-based, preference sessions with Likert options
  double timestamp = 0.0;
};

/// Immutable view published after every accepted response.
struct SessionSnapshot {
  std::string status;  // awaiting_response | fitting | completed
  std::optional<Trial> pending;
  int responses = 0;
  VariationalGP model;
  std::shared_ptr<const Posterior> posterior;
  std::optional<double> elbo;
  std::vector<double> last_elbo_trace;
  std::vector<Response> history;
  std::vector<std::vector<double>> fit_traces;
};

/// One live session. Writers are serialized by an internal mutex; readers use
/// the latest published snapshot.
class Session {
public:
  Session(std::string id, SessionConfig config, std::filesystem::path dir, std::string idempotency_key,
          double created);

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  const std::string& idempotency_key() const { return idempotency_key_; }

  std::shared_ptr<const SessionSnapshot> snapshot() const { return std::atomic_load(&snapshot_); }

  /// Validates, persists, refits and proposes the next trial.
  std::shared_ptr<const SessionSnapshot> submit(const nlohmann::json& body);
  /// Applies a logged response without writing it again (used on restart).
  void replay(const Response& r);

  std::vector<Response> history() const;
  /// ELBO trace of every refit so far, one per accepted response.
  std::vector<std::vector<double>> fit_traces() const;
  /// Pending trial view of `snap`, or of the latest snapshot.
  nlohmann::json trial_json(std::shared_ptr<const SessionSnapshot> snap = nullptr) const;
  nlohmann::json model_json(int grid) const;
  nlohmann::json export_json() const;
  nlohmann::json header_json() const;

  static std::shared_ptr<Session> load(const std::filesystem::path& dir);
  void persist_header() const;

private:
  Trial propose(int id) const;
  void apply(const Response& r, bool write_log);
  void publish(std::optional<Trial> pending, bool fitting = false);
  std::vector<ObservationBlock> blocks() const;
  void append_log(const Response& r) const;

  std::string id_;
  SessionConfig config_;
  std::filesystem::path dir_;
  std::string idempotency_key_;
  double created_ = 0.0;

  mutable std::mutex write_mu_;
  std::vector<Response> history_;
  VariationalGP model_;
  std::optional<double> elbo_;
  std::vector<double> elbo_trace_;
  std::vector<std::vector<double>> fit_traces_;
  std::optional<Trial> pending_;
  LevelSetProblem problem_;
  std::shared_ptr<const SessionSnapshot> snapshot_;
};

/// Owns all sessions, their persistence directory and the autopilot workers.
class SessionManager {
public:
  SessionManager(std::filesystem::path data_dir, int workers = 1);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Returns the session and whether it was newly created.
  std::pair<std::shared_ptr<Session>, bool> create(const nlohmann::json& body, const std::string& idempotency_key);
  std::shared_ptr<Session> get(const std::string& id) const;
  std::size_t size() const;
  std::size_t loaded_at_startup() const { return loaded_; }

  /// Blocks until no autopilot work is queued or running.
  void wait_idle();
  void stop();

  // Called after a response is accepted so autopilot sessions keep going.
  void schedule(const std::shared_ptr<Session>& s);

private:
  void worker();
  std::string new_id();

  std::filesystem::path dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::string> by_key_;
  std::size_t loaded_ = 0;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::condition_variable idle_cv_;
  std::deque<std::shared_ptr<Session>> queue_;
  int busy_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

/// Canonical dataset from an export: pairwise-likert-v1 for preference
/// sessions, levelset-trials-v1 for level-set sessions.
nlohmann::json dataset_from_session_export(const nlohmann::json& doc);

}  // namespace mixgp
