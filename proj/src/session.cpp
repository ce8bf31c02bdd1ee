#include "mixgp/session.hpp"

#include "mixgp/dataset.hpp"
#include "mixgp/evaluation.hpp"
#include "mixgp/model_io.hpp"
#include "mixgp/numerics/normal.hpp"
#include "mixgp/numerics/random.hpp"
#include "mixgp/numerics/sobol.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

namespace mixgp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

ServiceError invalid(const std::string& message, json detail = nullptr) {
  return ServiceError(422, "validation_error", message, std::move(detail));
}

Box pair_box(const Box& d) {
  Vector lo(2 * d.dim()), hi(2 * d.dim());
  lo << d.lower, d.lower;
  hi << d.upper, d.upper;
  return Box(lo, hi);
}

void write_all(int fd, const std::string& s) {
  const char* p = s.data();
  std::size_t left = s.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("write failed");
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

// tmp file + fsync + rename, so readers never see a torn header
void write_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw std::runtime_error("cannot write " + tmp.string());
  write_all(fd, text);
  ::fsync(fd);
  ::close(fd);
  fs::rename(tmp, path);
}

json trial_to_json(const Trial& t, SessionKind kind) {
  json j = {{"id", t.id}, {"x", to_json(t.x)}, {"source", t.source}};
  j["acquisition_value"] = t.acquisition_value ? json(*t.acquisition_value) : json(nullptr);
  if (kind == SessionKind::preference) {
    const Eigen::Index d = t.x.size() / 2;
    j["x1"] = to_json(Vector(t.x.head(d)));
    j["x2"] = to_json(Vector(t.x.tail(d)));
  }
  return j;
}

json response_to_json(const Response& r) {
  json j = {{"trial", r.trial}, {"x", to_json(r.x)}, {"choice", r.choice}, {"timestamp", r.timestamp}};
  j["rating"] = r.rating ? json(*r.rating) : json(nullptr);
  return j;
}

Response response_from_json(const json& j) {
  Response r;
  r.trial = j.at("trial").get<int>();
  r.x = vector_from_json(j.at("x"));
  r.choice = j.at("choice").get<int>();
  if (j.contains("rating") && !j["rating"].is_null()) r.rating = j["rating"].get<int>();
  r.timestamp = j.value("timestamp", 0.0);
  return r;
}

class Fields {
public:
  Fields(json& node, std::string where, std::vector<std::string>& problems)
      : node_(node), where_(std::move(where)), problems_(problems) {}

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!node_.contains(key) || node_[key].is_null()) {
      node_[key] = fallback;
      return fallback;
    }
    const json& v = node_[key];
    bool ok;
    if constexpr (std::is_same_v<T, bool>) ok = v.is_boolean();
    else if constexpr (std::is_integral_v<T>)
      ok = v.is_number_integer() && (std::is_signed_v<T> || v.is_number_unsigned() || v.get<std::int64_t>() >= 0);
    else if constexpr (std::is_floating_point_v<T>) ok = v.is_number();
    else ok = v.is_string();
    if (!ok) {
      fail(key, "has the wrong type");
      return fallback;
    }
    return v.get<T>();
  }
  json* optional(const std::string& key) {
    seen_.insert(key);
    return node_.contains(key) && !node_[key].is_null() ? &node_[key] : nullptr;
  }
  void fail(const std::string& key, const std::string& msg) { problems_.push_back(where_ + key + ": " + msg); }
  void finish() {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) fail(it.key(), "unknown field");
  }

private:
  json& node_;
  std::string where_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

}  // namespace

SessionConfig SessionConfig::parse(const json& body) {
  if (!body.is_object()) throw ServiceError(422, "invalid_config", "session config must be a JSON object");
  SessionConfig c;
  c.resolved = body;
  c.resolved.erase("idempotency_key");
  std::vector<std::string> problems;
  Fields f(c.resolved, "", problems);

  const std::string kind = f.get<std::string>("kind", "levelset");
  if (kind == "levelset") c.kind = SessionKind::levelset;
  else if (kind == "preference") c.kind = SessionKind::preference;
  else f.fail("kind", "must be levelset or preference");

  if (json* o = f.optional("objective")) {
    try {
      c.objective = make_objective(o->get<std::string>());
      const bool pref = c.objective->kind == ObjectiveKind::identity_preference;
      if (pref != (c.kind == SessionKind::preference)) f.fail("objective", "does not match the session kind");
    } catch (const std::exception& e) {
      f.fail("objective", e.what());
    }
  }
  if (json* d = f.optional("domain")) {
    try {
      c.domain = Box(vector_from_json(d->at("lower")), vector_from_json(d->at("upper")));
      if (c.objective && c.domain.dim() != c.objective->dim) f.fail("domain", "dimension differs from the objective");
    } catch (const std::exception& e) {
      f.fail("domain", e.what());
    }
  } else if (c.objective) {
    c.domain = c.objective->domain;
    c.resolved["domain"] = {{"lower", to_json(c.domain.lower)}, {"upper", to_json(c.domain.upper)}};
  } else {
    f.fail("domain", "required when no objective is given");
  }

  c.threshold = f.get<double>("threshold", default_latent_threshold());
  c.budget = f.get<int>("budget", 50);
  if (c.budget < 1) f.fail("budget", "must be >= 1");
  c.initial_trials = f.get<int>("initial_trials", 10);
  if (c.initial_trials < 1) f.fail("initial_trials", "must be >= 1");
  c.seed = f.get<std::uint64_t>("seed", 0);
  c.num_reference = f.get<int>("num_reference", 1000);
  if (c.num_reference < 1) f.fail("num_reference", "must be >= 1");
  c.autopilot = f.get<bool>("autopilot", false);
  if (c.autopilot && !c.objective) f.fail("autopilot", "needs an objective to simulate responses");
  try {
    c.acquisition = acquisition_from_string(f.get<std::string>("acquisition", "globalmi"));
  } catch (const std::exception&) {
    f.fail("acquisition", "must be globalmi or eavc");
  }

  f.optional("model");
  json& model = c.resolved["model"];
  if (model.is_null()) model = json::object();
  if (!model.is_object()) {
    f.fail("model", "must be an object");
    model = json::object();
  }
  Fields m(model, "model.", problems);
  try {
    c.variant = model_variant_from_string(m.get<std::string>("variant", "mixed"));
  } catch (const std::exception&) {
    m.fail("variant", "must be mixed, pseudo or unconstrained");
  }
  c.num_inducing = m.get<int>("inducing", 100);
  if (c.num_inducing < 1) m.fail("inducing", "must be >= 1");
  c.refit.iterations = m.get<int>("refit_iterations", 200);
  if (c.refit.iterations < 0) m.fail("refit_iterations", "must be >= 0");
  c.refit.adam.learning_rate = m.get<double>("learning_rate", AdamConfig{}.learning_rate);
  c.refit.monotone = true;
  c.likert_options = m.get<int>("likert_options", c.kind == SessionKind::preference ? 3 : 0);
  if (c.kind == SessionKind::levelset && c.likert_options != 0) m.fail("likert_options", "only preference sessions take ratings");
  if (c.likert_options == 1 || c.likert_options < 0) m.fail("likert_options", "must be 0 or >= 2");
  c.lapse = m.get<double>("lapse", LikertLikelihood::default_lapse);
  if (!(c.lapse >= 0.0 && c.lapse < 1.0)) m.fail("lapse", "must be in [0, 1)");
  if (!m.get<bool>("priors", true)) c.priors = HyperPriors::none();
  m.finish();

  if (json* cons = f.optional("constraints")) {
    if (c.kind != SessionKind::levelset) {
      f.fail("constraints", "only level-set sessions take constraints");
    } else if (cons->is_string() && cons->get<std::string>() == "objective") {
      if (!c.objective) f.fail("constraints", "'objective' needs an objective");
      else c.constraints = make_constraints(*c.objective);
    } else if (cons->is_object()) {
      try {
        const Points X = points_from_json(cons->at("locations"), c.domain.dim());
        const Vector y = vector_from_json(cons->at("targets"));
        if (y.size() != X.rows()) throw std::invalid_argument("targets and locations differ in length");
        c.constraints = cons->contains("noise_sd") ? ConstraintSet{X, y, vector_from_json(cons->at("noise_sd"))}
                                                   : make_constraint_set(X, y);
        c.constraints.validate(c.domain);
      } catch (const std::exception& e) {
        f.fail("constraints", e.what());
      }
    } else {
      f.fail("constraints", "must be \"objective\" or {locations, targets[, noise_sd]}");
    }
  } else {
    c.constraints = ConstraintSet{Points(0, std::max(c.domain.dim(), 0)), Vector(), Vector()};
    c.resolved["constraints"] = nullptr;
  }
  if (c.kind == SessionKind::levelset && c.variant != ModelVariant::unconstrained && c.constraints.size() == 0 &&
      problems.empty())
    c.variant = ModelVariant::unconstrained, c.resolved["model"]["variant"] = "unconstrained";

  if (json* opt = f.optional("optimizer")) {
    Fields o(*opt, "optimizer.", problems);
    c.optimizer.num_candidates = o.get<int>("candidates", c.optimizer.num_candidates);
    c.optimizer.num_starts = o.get<int>("starts", c.optimizer.num_starts);
    c.optimizer.steps_per_axis = o.get<int>("steps", c.optimizer.steps_per_axis);
    c.optimizer.sweeps = o.get<int>("sweeps", c.optimizer.sweeps);
    if (c.optimizer.num_candidates < 1) o.fail("candidates", "must be >= 1");
    o.finish();
  }
  f.finish();
  if (!problems.empty()) throw ServiceError(422, "invalid_config", "invalid session config", problems);
  return c;
}

Session::Session(std::string id, SessionConfig config, fs::path dir, std::string idempotency_key, double created)
    : id_(std::move(id)),
      config_(std::move(config)),
      dir_(std::move(dir)),
      idempotency_key_(std::move(idempotency_key)),
      created_(created) {
  if (config_.kind == SessionKind::levelset) {
    problem_ = LevelSetProblem::make(config_.domain, config_.threshold, config_.num_reference);
    LevelSetModelConfig mc;
    mc.variant = config_.variant;
    mc.num_inducing = config_.num_inducing;
    mc.priors = config_.priors;
    model_ = make_levelset_model(config_.domain, config_.constraints, mc);
  } else {
    PreferenceModelConfig pc;
    pc.num_inducing = config_.num_inducing;
    pc.likert_options = config_.likert_options;
    pc.lapse = config_.lapse;
    model_ = make_preference_model(config_.domain, pc);
  }
  pending_ = propose(1);
  publish(pending_);
}

Trial Session::propose(int id) const {
  Trial t;
  t.id = id;
  const bool pref = config_.kind == SessionKind::preference;
  const Box box = pref ? pair_box(config_.domain) : config_.domain;
  if (id <= config_.initial_trials) {
    const Points design = pref ? sobol(config_.initial_trials, box, SobolOptions{true, config_.seed, 0})
                               : initial_design(box, config_.initial_trials, config_.seed);
    t.x = design.row(id - 1).transpose();
    t.source = "sobol";
    return t;
  }
  AcquisitionOptimizerOptions opts = config_.optimizer;
  opts.seed = config_.seed * 7919 + static_cast<std::uint64_t>(id);
  const Posterior post(model_);
  AcquisitionChoice choice;
  if (pref) {
    // most uncertain pair latent
    choice = optimize_acquisition([&](const Points& X) { return post.marginals(X).var; }, box, opts);
  } else {
    choice = optimize_acquisition(post, problem_, config_.acquisition, opts);
  }
  t.x = choice.x;
  t.source = "acquisition";
  t.acquisition_value = choice.value;
  return t;
}

void Session::publish(std::optional<Trial> pending, bool fitting) {
  auto s = std::make_shared<SessionSnapshot>();
  s->status = fitting ? "fitting" : pending ? "awaiting_response" : "completed";
  s->pending = std::move(pending);
  s->responses = static_cast<int>(history_.size());
  s->model = model_;
  s->posterior = std::make_shared<const Posterior>(model_);
  s->elbo = elbo_;
  s->last_elbo_trace = elbo_trace_;
  s->history = history_;
  s->fit_traces = fit_traces_;
  std::atomic_store(&snapshot_, std::shared_ptr<const SessionSnapshot>(std::move(s)));
}

std::vector<ObservationBlock> Session::blocks() const {
  const Eigen::Index n = static_cast<Eigen::Index>(history_.size());
  if (config_.kind == SessionKind::levelset) {
    Points X(n, config_.domain.dim());
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      X.row(i) = history_[static_cast<std::size_t>(i)].x.transpose();
      y[i] = history_[static_cast<std::size_t>(i)].choice;
    }
    return levelset_blocks(config_.variant, config_.constraints, X, y);
  }
  const Eigen::Index d = config_.domain.dim();
  std::vector<PreferenceRecord> recs;
  for (const Response& r : history_) {
    PreferenceRecord p{{r.x.head(d), r.x.tail(d)}, r.choice, std::nullopt, std::nullopt};
    if (r.rating) p.rating = *r.rating - 1;
    recs.push_back(std::move(p));
  }
  return preference_blocks(recs, config_.likert_options > 0);
}

void Session::append_log(const Response& r) const {
  const fs::path path = dir_ / "log.jsonl";
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw ServiceError(500, "persistence_error", "cannot open session log");
  try {
    write_all(fd, response_to_json(r).dump() + "\n");
  } catch (...) {
    ::close(fd);
    throw ServiceError(500, "persistence_error", "cannot append to session log");
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw ServiceError(500, "persistence_error", "cannot sync session log");
  }
  ::close(fd);
}

void Session::apply(const Response& r, bool write_log) {
  if (write_log) append_log(r);
  history_.push_back(r);
  if (write_log) publish(std::nullopt, true);
  const auto b = blocks();
  try {
    VariationalGP next = model_;
    const FitResult fr = fit(next, b, config_.priors, config_.refit);
    model_ = std::move(next);
    elbo_ = fr.final_elbo;
    elbo_trace_ = fr.elbo_trace;
    fit_traces_.push_back(fr.elbo_trace);
  } catch (const TrainingDivergence& e) {
    // the response is kept; the previous model stays published
    fit_traces_.emplace_back();
    std::cerr << "session " << id_ << ": refit after trial " << r.trial << " failed: " << e.what() << '\n';
  }
  const int next_id = static_cast<int>(history_.size()) + 1;
  pending_ = next_id <= config_.budget ? std::optional<Trial>(propose(next_id)) : std::nullopt;
  publish(pending_);
}

std::shared_ptr<const SessionSnapshot> Session::submit(const json& body) {
  std::lock_guard lock(write_mu_);
  if (!body.is_object()) throw invalid("response must be a JSON object");
  if (!body.contains("trial") || !body["trial"].is_number_integer())
    throw invalid("field 'trial' (integer) is required");
  if (!body.contains("choice") || !body["choice"].is_number_integer())
    throw invalid("field 'choice' (0 or 1) is required");
  for (auto it = body.begin(); it != body.end(); ++it)
    if (it.key() != "trial" && it.key() != "choice" && it.key() != "rating")
      throw invalid("unknown field '" + it.key() + "'");
  const int trial = body["trial"].get<int>();
  if (!pending_)
    throw ServiceError(409, "conflict", "session is completed", {{"responses", history_.size()}});
  if (trial != pending_->id)
    throw ServiceError(409, "conflict", "trial " + std::to_string(trial) + " is not pending",
                       {{"pending_trial", pending_->id}});
  const int choice = body["choice"].get<int>();
  if (choice != 0 && choice != 1) throw invalid("choice must be 0 or 1");
  Response r{trial, pending_->x, choice, std::nullopt, now_seconds()};
  if (body.contains("rating") && !body["rating"].is_null()) {
    if (config_.kind != SessionKind::preference || config_.likert_options == 0)
      throw invalid("this session does not take ratings");
    if (!body["rating"].is_number_integer()) throw invalid("rating must be an integer");
    const int rating = body["rating"].get<int>();
    if (rating < 1 || rating > config_.likert_options)
      throw invalid("rating must be in 1.." + std::to_string(config_.likert_options),
                    {{"rating", rating}, {"options", config_.likert_options}});
    r.rating = rating;
  }
  apply(r, true);
  return snapshot();
}

void Session::replay(const Response& r) {
  std::lock_guard lock(write_mu_);
  if (!pending_ || r.trial != pending_->id)
    throw std::runtime_error("session " + id_ + ": log entry for trial " + std::to_string(r.trial) +
                             " does not match the pending trial");
  if (r.x != pending_->x)
    throw std::runtime_error("session " + id_ + ": replayed proposal for trial " + std::to_string(r.trial) +
                             " differs from the logged stimulus");
  apply(r, false);
}

std::vector<Response> Session::history() const { return snapshot()->history; }

std::vector<std::vector<double>> Session::fit_traces() const { return snapshot()->fit_traces; }

json Session::header_json() const {
  return {{"id", id_}, {"created", created_}, {"idempotency_key", idempotency_key_}, {"config", config_.resolved}};
}

void Session::persist_header() const { write_atomic(dir_ / "session.json", header_json().dump(2) + "\n"); }

json Session::trial_json(std::shared_ptr<const SessionSnapshot> s) const {
  if (!s) s = snapshot();
  json j = {{"session", id_},
            {"kind", config_.kind == SessionKind::levelset ? "levelset" : "preference"},
            {"status", s->status},
            {"responses", s->responses},
            {"budget", config_.budget},
            {"likert_options", config_.likert_options}};
  j["trial"] = s->pending ? trial_to_json(*s->pending, config_.kind) : json(nullptr);
  return j;
}

json Session::model_json(int grid) const {
  const auto s = snapshot();
  const bool pref = config_.kind == SessionKind::preference;
  const Box box = pref ? pair_box(config_.domain) : config_.domain;
  json j = {{"session", id_}, {"status", s->status}, {"responses", s->responses}};
  j["elbo"] = s->elbo ? json(*s->elbo) : json(nullptr);
  j["hyperparameters"] = {{"lengthscales", to_json(Vector(s->model.kernel.log_lengthscales.array().exp()))},
                          {"outputscale", s->model.kernel.outputscale()},
                          {"mean", s->model.mean_constant()}};
  j["cut_points"] = s->model.likert ? to_json(s->model.likert->cut_points()) : json(nullptr);
  j["grid"] = nullptr;
  if (grid < 0) throw invalid("grid must be nonnegative");
  if (grid > 0) {
    const int d = box.dim();
    const double total = std::pow(static_cast<double>(grid), d);
    if (grid < 2 || total > kMaxGridPoints)
      throw ServiceError(422, "grid_too_large",
                         "grid of " + std::to_string(grid) + " per axis in " + std::to_string(d) +
                             " dimensions exceeds " + std::to_string(kMaxGridPoints) + " points",
                         {{"max_points", kMaxGridPoints}, {"dimensions", d}});
    const auto n = static_cast<Eigen::Index>(total);
    Points X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index rem = i;
      for (int k = d - 1; k >= 0; --k) {
        const Eigen::Index idx = rem % grid;
        rem /= grid;
        X(i, k) = box.lower[k] + (box.upper[k] - box.lower[k]) * static_cast<double>(idx) / (grid - 1);
      }
    }
    json axes = json::array();
    for (int k = 0; k < d; ++k) axes.push_back(to_json(Vector(Vector::LinSpaced(grid, box.lower[k], box.upper[k]))));
    Vector values;
    if (pref) {
      const Marginals m = s->posterior->marginals(X);
      values.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) values[i] = preference_probability(m.mean[i], m.var[i]);
    } else {
      values = sublevel_prob(*s->posterior, X, config_.threshold);
    }
    j["grid"] = {{"size", grid},
                 {"axes", axes},
                 {"quantity", pref ? "preference_probability" : "sublevel_probability"},
                 {"values", to_json(values)}};
  }
  if (!pref && config_.objective) {
    const Objective obj = *config_.objective;
    j["f1"] = score_levelset(*s->posterior, config_.threshold, [&](const Vector& x) { return obj.in_truth_sublevel(x); },
                             config_.domain, 4096, config_.seed, false)
                  .f1.f1;
  } else {
    j["f1"] = nullptr;
  }
  return j;
}

json Session::export_json() const {
  const auto s = snapshot();
  json trials = json::array();
  for (const Response& r : s->history) trials.push_back(response_to_json(r));
  json j = {{"schema", kSessionExportSchema}, {"session", header_json()}, {"status", s->status}, {"trials", trials}};
  j["session"]["kind"] = config_.kind == SessionKind::levelset ? "levelset" : "preference";
  j["pending"] = s->pending ? trial_to_json(*s->pending, config_.kind) : json(nullptr);
  j["elbo"] = s->elbo ? json(*s->elbo) : json(nullptr);
  j["model"] = model_to_json(s->model);
  j["fit_traces"] = s->fit_traces;
  return j;
}

std::shared_ptr<Session> Session::load(const fs::path& dir) {
  std::ifstream hin(dir / "session.json");
  if (!hin) throw std::runtime_error("missing session.json in " + dir.string());
  const json header = json::parse(hin);
  auto s = std::make_shared<Session>(header.at("id").get<std::string>(), SessionConfig::parse(header.at("config")), dir,
                                     header.value("idempotency_key", ""), header.value("created", 0.0));
  std::ifstream lin(dir / "log.jsonl");
  std::string line;
  int lineno = 0;
  std::vector<Response> entries;
  while (std::getline(lin, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      entries.push_back(response_from_json(json::parse(line)));
    } catch (const std::exception&) {
      // a torn final line from a crash mid-append carries no acknowledged response
      if (lin.peek() == EOF) break;
      throw std::runtime_error(dir.string() + "/log.jsonl:" + std::to_string(lineno) + ": unreadable entry");
    }
  }
  for (const Response& r : entries) s->replay(r);
  return s;
}

SessionManager::SessionManager(fs::path data_dir, int workers) : dir_(std::move(data_dir)) {
  fs::create_directories(dir_);
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir_))
    if (e.is_directory() && fs::exists(e.path() / "session.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const fs::path& d : dirs) {
    auto s = Session::load(d);
    if (!s->idempotency_key().empty()) by_key_[s->idempotency_key()] = s->id();
    sessions_[s->id()] = s;
    ++loaded_;
  }
  for (int w = 0; w < std::max(1, workers); ++w) workers_.emplace_back([this] { worker(); });
  for (auto& [id, s] : sessions_) schedule(s);
}

SessionManager::~SessionManager() { stop(); }

void SessionManager::stop() {
  {
    std::lock_guard lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : workers_)
    if (t.joinable()) t.join();
  workers_.clear();
}

std::string SessionManager::new_id() {
  static thread_local std::mt19937_64 gen(std::random_device{}() ^
                                          static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()));
  for (;;) {
    std::ostringstream ss;
    ss << std::hex << (gen() & 0xffffffffffffULL);
    std::string id = "s" + ss.str();
    if (!sessions_.count(id) && !fs::exists(dir_ / id)) return id;
  }
}

std::pair<std::shared_ptr<Session>, bool> SessionManager::create(const json& body, const std::string& key_header) {
  std::string key = key_header;
  if (key.empty() && body.is_object() && body.contains("idempotency_key")) {
    if (!body["idempotency_key"].is_string())
      throw ServiceError(422, "invalid_config", "idempotency_key must be a string");
    key = body["idempotency_key"].get<std::string>();
  }
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mu_);
    if (!key.empty()) {
      const auto it = by_key_.find(key);
      if (it != by_key_.end()) return {sessions_.at(it->second), false};
    }
    SessionConfig cfg = SessionConfig::parse(body);
    const std::string id = new_id();
    const fs::path d = dir_ / id;
    fs::create_directories(d);
    s = std::make_shared<Session>(id, std::move(cfg), d, key, now_seconds());
    s->persist_header();
    sessions_[id] = s;
    if (!key.empty()) by_key_[key] = id;
  }
  schedule(s);
  return {s, true};
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "unknown session " + id);
  return it->second;
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionManager::schedule(const std::shared_ptr<Session>& s) {
  if (!s->config().autopilot || !s->snapshot()->pending) return;
  {
    std::lock_guard lock(queue_mu_);
    if (stopping_) return;
    queue_.push_back(s);
  }
  queue_cv_.notify_one();
}

void SessionManager::wait_idle() {
  std::unique_lock lock(queue_mu_);
  idle_cv_.wait(lock, [&] { return (queue_.empty() && busy_ == 0) || stopping_; });
}

void SessionManager::worker() {
  for (;;) {
    std::shared_ptr<Session> s;
    {
      std::unique_lock lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      s = std::move(queue_.front());
      queue_.pop_front();
      ++busy_;
    }
    try {
      const auto snap = s->snapshot();
      if (snap->pending) {
        const SessionConfig& c = s->config();
        const Objective& obj = *c.objective;
        const Trial& t = *snap->pending;
        const CounterRng rng(c.seed, 1);
        json body = {{"trial", t.id}};
        if (c.kind == SessionKind::levelset) {
          body["choice"] = BernoulliResponder{obj, rng}.respond(t.x, static_cast<std::uint64_t>(t.id));
        } else {
          const Eigen::Index d = t.x.size() / 2;
          const double g = obj.latent(t.x.head(d)) - obj.latent(t.x.tail(d));
          body["choice"] = rng.uniform(static_cast<std::uint64_t>(t.id)) < normal_cdf(g) ? 1 : 0;
          if (c.likert_options == 3) body["rating"] = synthetic_likert_rating(std::abs(g)) + 1;
        }
        try {
          s->submit(body);
        } catch (const ServiceError& e) {
          if (e.status() != 409) throw;
        }
      }
    } catch (const std::exception& e) {
      std::cerr << "autopilot for session " << s->id() << " stopped: " << e.what() << '\n';
      s.reset();
    }
    if (s) schedule(s);
    {
      std::lock_guard lock(queue_mu_);
      --busy_;
    }
    idle_cv_.notify_all();
  }
}

json dataset_from_session_export(const json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != kSessionExportSchema)
    throw std::invalid_argument(std::string("expected a ") + kSessionExportSchema + " document");
  const json& session = doc.at("session");
  const json& config = session.at("config");
  const std::string kind = config.at("kind").get<std::string>();
  const int dim = static_cast<int>(config.at("domain").at("lower").size());
  json records = json::array();
  for (const json& t : doc.at("trials")) {
    const Vector x = vector_from_json(t.at("x"));
    if (kind == "preference") {
      json r = {{"x1", to_json(Vector(x.head(dim)))}, {"x2", to_json(Vector(x.tail(dim)))}, {"choice", t.at("choice")}};
      r["rating"] = t.at("rating").is_null() ? json(nullptr) : json(t["rating"].get<int>() - 1);
      r["confidence"] = nullptr;
      r["trial"] = t.at("trial");
      r["timestamp"] = t.at("timestamp");
      records.push_back(std::move(r));
    } else {
      records.push_back({{"trial", t.at("trial")}, {"x", t.at("x")}, {"y", t.at("choice")}, {"timestamp", t.at("timestamp")}});
    }
  }
  return {{"schema", kind == "preference" ? kPairwiseLikertSchema : kLevelsetTrialsSchema},
          {"dim", dim},
          {"session", session.at("id")},
          {"records", records}};
}

}  // namespace mixgp
