#include "mixgp/runner.hpp"

#include "mixgp/dataset.hpp"
#include "mixgp/evaluation.hpp"
#include "mixgp/experiments.hpp"
#include "mixgp/model_io.hpp"
#include "mixgp/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>

namespace mixgp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid run config";
  for (const auto& line : p) s += "\n  " + line;
  return s;
}

// Best-effort line of a JSON pointer in the source text: find each key in turn.
int line_of(const std::string& text, const json::json_pointer& ptr) {
  std::size_t pos = 0;
  std::string path = ptr.to_string();
  std::size_t start = 1;
  while (start <= path.size() && !path.empty()) {
    const std::size_t slash = path.find('/', start);
    const std::string key = path.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
    const bool index = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
    if (!index) {
      const std::size_t at = text.find('"' + key + '"', pos);
      if (at == std::string::npos) break;
      pos = at;
    }
    if (slash == std::string::npos) break;
    start = slash + 1;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

/// Reads typed fields with defaults, records problems and unknown keys.
class Reader {
public:
  using Problems = std::vector<std::pair<json::json_pointer, std::string>>;

  Reader(json& node, json::json_pointer where, Problems& problems)
      : node_(node), where_(std::move(where)), problems_(problems) {
    if (!node_.is_object()) fail(where_, "expected an object");
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!node_.is_object()) return fallback;
    if (!node_.contains(key)) {
      node_[key] = fallback;
      return fallback;
    }
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!node_[key].is_number()) throw std::invalid_argument("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!node_[key].is_number_integer()) throw std::invalid_argument("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!node_[key].is_boolean()) throw std::invalid_argument("");
      } else {
        if (!node_[key].is_string()) throw std::invalid_argument("");
      }
      return node_[key].get<T>();
    } catch (const std::exception&) {
      fail(where_ / key, std::string("expected ") + type_name<T>());
      return fallback;
    }
  }

  std::string required_string(const std::string& key) {
    seen_.insert(key);
    if (!node_.is_object() || !node_.contains(key) || !node_[key].is_string()) {
      fail(where_ / key, "required string is missing");
      return {};
    }
    return node_[key].get<std::string>();
  }

  int positive(const std::string& key, int fallback, int minimum = 1) {
    const int v = get<int>(key, fallback);
    if (v < minimum) fail(where_ / key, "must be >= " + std::to_string(minimum));
    return v;
  }

  double positive_real(const std::string& key, double fallback) {
    const double v = get<double>(key, fallback);
    if (!(v > 0.0)) fail(where_ / key, "must be positive");
    return v;
  }

  std::string one_of(const std::string& key, const std::string& fallback, std::initializer_list<const char*> allowed) {
    const std::string v = get<std::string>(key, fallback);
    for (const char* a : allowed)
      if (v == a) return v;
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    fail(where_ / key, msg);
    return fallback;
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    if (node_.is_object() && !node_.contains(key)) node_[key] = json::object();
    return Reader(node_.is_object() ? node_[key] : dummy_, where_ / key, problems_);
  }

  json& raw(const std::string& key) {
    seen_.insert(key);
    return node_[key];
  }
  bool has(const std::string& key) const { return node_.is_object() && node_.contains(key); }

  void fail(const json::json_pointer& at, const std::string& msg) { problems_.emplace_back(at, msg); }

  void finish() {
    if (!node_.is_object()) return;
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) fail(where_ / it.key(), "unknown field");
  }

  const json::json_pointer& where() const { return where_; }
  Problems& problems() { return problems_; }

private:
  template <class T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else return "a string";
  }

  json& node_;
  json::json_pointer where_;
  Problems& problems_;
  std::set<std::string> seen_;
  json dummy_ = json::object();
};

void read_priors(Reader r) {
  r.get<bool>("enabled", true);
  const HyperPriors d;
  const double lo = r.positive_real("outputscale_lower", d.outputscale_lower);
  const double hi = r.positive_real("outputscale_upper", d.outputscale_upper);
  if (!(lo < hi)) r.fail(r.where() / "outputscale_upper", "must exceed outputscale_lower");
  r.positive_real("lengthscale_shape", d.lengthscale_shape);
  r.positive_real("lengthscale_rate", d.lengthscale_rate);
  r.finish();
}

void read_levelset(Reader& r) {
  const std::string obj = r.required_string("objective");
  if (!obj.empty()) {
    try {
      if (make_objective(obj).kind == ObjectiveKind::identity_preference)
        r.fail(r.where() / "objective", "identity-preference is not a level-set objective");
    } catch (const std::exception& e) {
      r.fail(r.where() / "objective", e.what());
    }
  }
  r.one_of("acquisition", "globalmi", {"globalmi", "eavc"});
  r.positive("budget", 50, 0);
  r.positive("initial_trials", 10);
  r.positive("seeds", 1);
  r.positive("num_reference", 10000);
  r.positive("metric_samples", 1 << 14);
  r.positive("final_metric_samples", 1 << 20);
  Reader m = r.child("model");
  m.one_of("variant", "mixed", {"mixed", "pseudo", "unconstrained"});
  m.positive("inducing", 100);
  m.positive_real("initial_lengthscale", 1.0 / 3.0);
  m.positive_real("initial_outputscale", 2.0);
  m.positive("initial_fit_iterations", 400, 0);
  m.positive("refit_iterations", 100, 0);
  m.positive("refit_stride", 1);
  m.positive_real("learning_rate", AdamConfig{}.learning_rate);
  read_priors(m.child("priors"));
  m.finish();
  Reader o = r.child("optimizer");
  const AcquisitionOptimizerOptions d;
  o.positive("candidates", d.num_candidates);
  o.positive("starts", d.num_starts, 0);
  o.positive("steps", d.steps_per_axis, 1);
  o.positive("sweeps", d.sweeps, 0);
  o.finish();
}

void read_preference_model(Reader m, int iterations) {
  m.positive("inducing", 100);
  m.positive("iterations", iterations, 0);
  m.positive_real("learning_rate", AdamConfig{}.learning_rate);
  m.positive("likert_options", 3, 2);
  const double lapse = m.get<double>("lapse", LikertLikelihood::default_lapse);
  if (!(lapse >= 0.0 && lapse < 1.0)) m.fail(m.where() / "lapse", "must be in [0, 1)");
  read_priors(m.child("priors"));
  m.finish();
}

void read_preference_offline(Reader& r) {
  r.required_string("dataset");
  r.positive("train_size", 40);
  r.positive("repeats", 100);
  if (r.has("domain")) {
    Reader d = r.child("domain");
    for (const char* k : {"lower", "upper"}) {
      const json& v = d.raw(k);
      if (!v.is_array() || v.empty() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); }))
        d.fail(d.where() / k, "expected a nonempty numeric array");
    }
    d.finish();
  }
  read_preference_model(r.child("model"), 800);
  json& configs = r.raw("configs");
  if (configs.is_null())
    configs = json::array({{{"name", "mixed"}, {"use_likert", true}}, {{"name", "choice-only"}, {"use_likert", false}}});
  if (!configs.is_array() || configs.empty()) {
    r.fail(r.where() / "configs", "expected a nonempty array");
    return;
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    Reader c(configs[i], r.where() / "configs" / i, r.problems());
    const std::string name = c.required_string("name");
    if (!name.empty() && !names.insert(name).second) c.fail(c.where() / "name", "duplicate config name");
    c.get<bool>("use_likert", true);
    c.finish();
  }
}

void read_figure2(Reader& r) {
  r.positive("draws", 30);
  r.positive_real("constraint_variance", 1e-3);
  r.positive("grid_points", 121, 2);
  Reader m = r.child("model");
  m.positive("inducing", 100);
  m.positive("iterations", 1500, 0);
  m.positive_real("learning_rate", AdamConfig{}.learning_rate);
  read_priors(m.child("priors"));
  m.finish();
}

void read_figure4(Reader& r) {
  r.positive("seeds", 20);
  r.positive("train_pairs", 40);
  r.positive("grid_points", 41, 2);
  read_preference_model(r.child("model"), 800);
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

json resolve_run_config(const std::string& text, const std::string& source, const RunOverrides& overrides) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({source + ": " + e.what()});
  }
  Reader::Problems problems;
  Reader r(doc, json::json_pointer(), problems);
  if (doc.is_object()) {
    const std::string experiment = r.one_of("experiment", "", {kExperiments[0], kExperiments[1], kExperiments[2], kExperiments[3]});
    if (overrides.seed) doc["seed"] = *overrides.seed;
    if (overrides.workers) doc["workers"] = *overrides.workers;
    if (overrides.output_dir) doc["output_dir"] = *overrides.output_dir;
    r.get<std::string>("output_dir", "runs/" + (experiment.empty() ? std::string("run") : experiment));
    if (doc.contains("seed") && !doc["seed"].is_number_unsigned())
      r.fail(json::json_pointer("/seed"), "expected a nonnegative integer");
    r.get<std::uint64_t>("seed", 0);
    r.positive("workers", 1);
    r.get<std::string>("description", "");
    if (experiment == kExperiments[0]) read_levelset(r);
    else if (experiment == kExperiments[1]) read_preference_offline(r);
    else if (experiment == kExperiments[2]) read_figure2(r);
    else if (experiment == kExperiments[3]) read_figure4(r);
    if (!experiment.empty()) r.finish();
  }
  if (!problems.empty()) {
    std::vector<std::string> lines;
    for (const auto& [ptr, msg] : problems) {
      const std::string at = ptr.empty() ? "/" : ptr.to_string();
      lines.push_back(source + ":" + std::to_string(line_of(text, ptr)) + ": " + at + ": " + msg);
    }
    throw ConfigError(std::move(lines));
  }
  return doc;
}

namespace {

std::string num(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

HyperPriors priors_from(const json& j) {
  HyperPriors p;
  p.enabled = j.at("enabled").get<bool>();
  p.outputscale_lower = j.at("outputscale_lower").get<double>();
  p.outputscale_upper = j.at("outputscale_upper").get<double>();
  p.lengthscale_shape = j.at("lengthscale_shape").get<double>();
  p.lengthscale_rate = j.at("lengthscale_rate").get<double>();
  return p;
}

PreferenceFitConfig preference_fit_from(const json& m) {
  PreferenceFitConfig f;
  f.model.num_inducing = m.at("inducing").get<int>();
  f.model.likert_options = m.at("likert_options").get<int>();
  f.model.lapse = m.at("lapse").get<double>();
  f.fit.iterations = m.at("iterations").get<int>();
  f.fit.adam.learning_rate = m.at("learning_rate").get<double>();
  f.priors = priors_from(m.at("priors"));
  return f;
}

}  // namespace

ActiveLearningConfig active_learning_config_from(const json& c, std::uint64_t seed) {
  ActiveLearningConfig a;
  a.objective = c.at("objective").get<std::string>();
  a.acquisition = acquisition_from_string(c.at("acquisition").get<std::string>());
  a.budget = c.at("budget").get<int>();
  a.initial_trials = c.at("initial_trials").get<int>();
  a.seed = seed;
  a.num_reference = c.at("num_reference").get<int>();
  a.metric_samples = c.at("metric_samples").get<int>();
  a.final_metric_samples = c.at("final_metric_samples").get<int>();
  const json& m = c.at("model");
  a.model.variant = model_variant_from_string(m.at("variant").get<std::string>());
  a.model.num_inducing = m.at("inducing").get<int>();
  a.model.initial_lengthscale = m.at("initial_lengthscale").get<double>();
  a.model.initial_outputscale = m.at("initial_outputscale").get<double>();
  a.model.initial_fit.iterations = m.at("initial_fit_iterations").get<int>();
  a.model.refit.iterations = m.at("refit_iterations").get<int>();
  a.model.refit_stride = m.at("refit_stride").get<int>();
  a.model.initial_fit.adam.learning_rate = a.model.refit.adam.learning_rate = m.at("learning_rate").get<double>();
  a.model.priors = priors_from(m.at("priors"));
  const json& o = c.at("optimizer");
  a.optimizer.num_candidates = o.at("candidates").get<int>();
  a.optimizer.num_starts = o.at("starts").get<int>();
  a.optimizer.steps_per_axis = o.at("steps").get<int>();
  a.optimizer.sweeps = o.at("sweeps").get<int>();
  return a;
}

json trial_to_json(const TrialRecord& t) {
  json j = {{"iteration", t.iteration}, {"x", to_json(t.x)}, {"y", t.y}};
  j["acquisition_value"] = t.acquisition_value ? json(*t.acquisition_value) : json(nullptr);
  j["timestamp"] = t.timestamp;
  return j;
}

namespace {

struct Progress {
  std::ostream& log;
  std::mutex mu;
  template <class... A>
  void line(const A&... parts) {
    std::lock_guard lock(mu);
    (log << ... << parts) << std::endl;
  }
};

RunOutcome run_levelset(const json& c, const fs::path& dir, Progress& progress) {
  const int n = c.at("seeds").get<int>();
  const auto base = c.at("seed").get<std::uint64_t>();
  std::vector<std::optional<ActiveLearningResult>> results(static_cast<std::size_t>(n));
  std::vector<std::string> errors(static_cast<std::size_t>(n));

  parallel_for(static_cast<std::size_t>(n), c.at("workers").get<int>(), [&](std::size_t k) {
    const std::uint64_t seed = base + k;
    const ActiveLearningConfig cfg = active_learning_config_from(c, seed);
    std::ofstream trials(dir / ("trials_seed" + std::to_string(seed) + ".jsonl"), std::ios::trunc);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      results[k] = run_active_learning(cfg, {}, [&](const TrialRecord& t) { trials << trial_to_json(t).dump() << '\n' << std::flush; });
      write_json(dir / ("model_seed" + std::to_string(seed) + ".json"), model_to_json(results[k]->model));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      progress.line("seed ", seed, ": final F1 ", results[k]->final_f1, ", Brier ", results[k]->final_brier, " (",
                    secs, " s)");
    } catch (const ActiveLearningAborted& e) {
      results[k] = e.partial();
      errors[k] = e.what();
      progress.line("seed ", seed, ": aborted: ", e.what());
    } catch (const std::exception& e) {
      errors[k] = e.what();
      progress.line("seed ", seed, ": failed: ", e.what());
    }
  });

  RunOutcome out{dir, true, {}};
  std::ostringstream metrics;
  metrics << "seed,iteration,f1,brier,elbo\n";
  int longest = 0;
  for (int k = 0; k < n; ++k) {
    const auto& r = results[static_cast<std::size_t>(k)];
    if (!r) continue;
    for (const auto& m : r->metrics)
      metrics << base + static_cast<std::uint64_t>(k) << ',' << m.iteration << ',' << num(m.f1) << ',' << num(m.brier)
              << ',' << num(m.elbo) << '\n';
    longest = std::max(longest, static_cast<int>(r->metrics.size()));
  }
  write_text(dir / "metrics.csv", metrics.str());

  std::ostringstream curve;
  curve << "iteration,runs,f1_mean,f1_se,brier_mean,brier_se\n";
  for (int i = 0; i < longest; ++i) {
    std::vector<double> f, b;
    int iteration = 0;
    for (const auto& r : results)
      if (r && static_cast<int>(r->metrics.size()) > i) {
        f.push_back(r->metrics[static_cast<std::size_t>(i)].f1);
        b.push_back(r->metrics[static_cast<std::size_t>(i)].brier);
        iteration = r->metrics[static_cast<std::size_t>(i)].iteration;
      }
    curve << iteration << ',' << f.size() << ',' << num(mean(f)) << ',' << num(standard_error(f)) << ','
          << num(mean(b)) << ',' << num(standard_error(b)) << '\n';
  }
  write_text(dir / "curve.csv", curve.str());

  json per_seed = json::array();
  std::vector<double> finals;
  for (int k = 0; k < n; ++k) {
    const auto& r = results[static_cast<std::size_t>(k)];
    const std::string& err = errors[static_cast<std::size_t>(k)];
    json s = {{"seed", base + static_cast<std::uint64_t>(k)}, {"status", err.empty() ? "complete" : "partial"}};
    if (r) {
      s["trials"] = r->trials.size();
      if (err.empty()) {
        s["final_f1"] = r->final_f1;
        s["final_brier"] = r->final_brier;
        finals.push_back(r->final_f1);
      }
    }
    if (!err.empty()) {
      s["error"] = err;
      out.complete = false;
      out.errors.push_back("seed " + std::to_string(base + static_cast<std::uint64_t>(k)) + ": " + err);
    }
    per_seed.push_back(std::move(s));
  }
  json summary = {{"experiment", c.at("experiment")},
                  {"status", out.complete ? "complete" : "partial"},
                  {"seeds", per_seed},
                  {"final_f1_mean", finals.empty() ? json(nullptr) : json(mean(finals))},
                  {"final_f1_se", finals.empty() ? json(nullptr) : json(standard_error(finals))}};
  write_json(dir / "summary.json", summary);
  return out;
}

PreferenceDataset load_dataset(const std::string& path) {
  if (fs::path(path).extension() == ".csv") return read_pairwise_likert_csv_file(path);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  return dataset_from_json(json::parse(in));
}

RunOutcome run_preference_offline(const json& c, const fs::path& dir, Progress& progress) {
  const PreferenceDataset data = load_dataset(c.at("dataset").get<std::string>());
  const Box domain = c.contains("domain") ? Box(vector_from_json(c["domain"]["lower"]), vector_from_json(c["domain"]["upper"]))
                                          : dataset_domain(data);
  if (domain.dim() != data.dim) throw std::invalid_argument("domain dimension differs from the dataset");
  const PreferenceFitConfig base = preference_fit_from(c.at("model"));
  std::vector<SplitEvalConfig> configs;
  for (const json& j : c.at("configs")) {
    SplitEvalConfig s{j.at("name").get<std::string>(), base};
    s.fit.use_likert = j.at("use_likert").get<bool>();
    configs.push_back(std::move(s));
  }
  progress.line("dataset: ", data.records.size(), " records, dimension ", data.dim);
  const SplitEvalResult r = repeated_split_eval(data.records, domain, c.at("train_size").get<int>(),
                                                c.at("repeats").get<int>(), configs, c.at("seed").get<std::uint64_t>(),
                                                c.at("workers").get<int>());
  std::ostringstream scores;
  scores << "config,repeat,brier,f1\n";
  for (const auto& s : r.scores) scores << s.config << ',' << s.repeat << ',' << num(s.brier) << ',' << num(s.f1) << '\n';
  write_text(dir / "metrics.csv", scores.str());
  json summary = {{"experiment", c.at("experiment")}, {"status", "complete"}, {"redrawn_splits", r.redrawn_splits}};
  json per = json::array();
  for (const auto& s : r.summary) {
    per.push_back({{"config", s.config}, {"brier_mean", s.brier_mean}, {"brier_se", s.brier_se},
                   {"f1_mean", s.f1_mean}, {"f1_se", s.f1_se}});
    progress.line(s.config, ": Brier ", s.brier_mean, " +- ", s.brier_se, ", F1 ", s.f1_mean, " +- ", s.f1_se);
  }
  summary["configs"] = per;
  write_json(dir / "summary.json", summary);
  return {dir, true, {}};
}

RunOutcome run_figure2_demo(const json& c, const fs::path& dir, Progress& progress) {
  Figure2Config f;
  f.seed = c.at("seed").get<std::uint64_t>();
  f.draws = c.at("draws").get<int>();
  f.constraint_variance = c.at("constraint_variance").get<double>();
  f.grid_points = c.at("grid_points").get<int>();
  f.num_inducing = c["model"].at("inducing").get<int>();
  f.fit.iterations = c["model"].at("iterations").get<int>();
  f.fit.adam.learning_rate = c["model"].at("learning_rate").get<double>();
  f.priors = priors_from(c["model"].at("priors"));
  const Figure2Result r = run_figure2(f);

  std::ostringstream curve;
  curve << "x,truth,mixed_mean,mixed_sd,unconstrained_mean,unconstrained_sd\n";
  for (Eigen::Index i = 0; i < r.grid.size(); ++i)
    curve << num(r.grid[i]) << ',' << num(r.truth[i]) << ',' << num(r.mixed.mean[i]) << ',' << num(r.mixed.sd[i]) << ','
          << num(r.unconstrained.mean[i]) << ',' << num(r.unconstrained.sd[i]) << '\n';
  write_text(dir / "curve.csv", curve.str());
  std::ostringstream data;
  data << "x,y\n";
  for (Eigen::Index i = 0; i < r.data_y.size(); ++i) data << num(r.data_x(i, 0)) << ',' << r.data_y[i] << '\n';
  write_text(dir / "trials.csv", data.str());
  std::ostringstream metrics;
  metrics << "x,target,mixed_sd,mixed_abs_error,unconstrained_sd\n";
  for (Eigen::Index i = 0; i < r.constraints.size(); ++i)
    metrics << num(r.constraints.X(i, 0)) << ',' << num(r.constraints.y[i]) << ',' << num(r.mixed_sd_at[i]) << ','
            << num(r.mixed_error_at[i]) << ',' << num(r.unconstrained_sd_at[i]) << '\n';
  write_text(dir / "metrics.csv", metrics.str());
  write_json(dir / "summary.json", {{"experiment", c.at("experiment")},
                                    {"status", "complete"},
                                    {"constraint_x", to_json(Vector(r.constraints.X.col(0)))},
                                    {"mixed_sd", to_json(r.mixed_sd_at)},
                                    {"mixed_abs_error", to_json(r.mixed_error_at)},
                                    {"unconstrained_sd", to_json(r.unconstrained_sd_at)}});
  progress.line("mixed sd at constraints ", r.mixed_sd_at.transpose(), "; unconstrained ",
                r.unconstrained_sd_at.transpose());
  return {dir, true, {}};
}

RunOutcome run_figure4_demo(const json& c, const fs::path& dir, Progress& progress) {
  const int n = c.at("seeds").get<int>();
  const auto base = c.at("seed").get<std::uint64_t>();
  Figure4Config f;
  f.train_pairs = c.at("train_pairs").get<int>();
  f.grid_points = c.at("grid_points").get<int>();
  f.fit = preference_fit_from(c.at("model"));
  std::vector<Figure4Result> results(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), c.at("workers").get<int>(), [&](std::size_t k) {
    Figure4Config fk = f;
    fk.seed = base + k;
    results[k] = run_figure4(fk);
    progress.line("seed ", fk.seed, ": MSE mixed ", results[k].mse_mixed, ", choice-only ", results[k].mse_choice_only);
  });
  std::ostringstream metrics;
  metrics << "seed,mse_mixed,mse_choice_only\n";
  int wins = 0;
  std::vector<double> mm, mc;
  for (int k = 0; k < n; ++k) {
    const auto& r = results[static_cast<std::size_t>(k)];
    metrics << base + static_cast<std::uint64_t>(k) << ',' << num(r.mse_mixed) << ',' << num(r.mse_choice_only) << '\n';
    wins += r.mse_mixed < r.mse_choice_only;
    mm.push_back(r.mse_mixed);
    mc.push_back(r.mse_choice_only);
  }
  write_text(dir / "metrics.csv", metrics.str());
  const Figure4Result& first = results.front();
  std::ostringstream grid;
  grid << "x1,x2,truth,mixed,choice_only\n";
  for (Eigen::Index i = 0; i < first.grid.size(); ++i)
    for (Eigen::Index j = 0; j < first.grid.size(); ++j)
      grid << num(first.grid[i]) << ',' << num(first.grid[j]) << ',' << num(first.truth(i, j)) << ','
           << num(first.mixed(i, j)) << ',' << num(first.choice_only(i, j)) << '\n';
  write_text(dir / "curve.csv", grid.str());
  write_json(dir / "summary.json", {{"experiment", c.at("experiment")},
                                    {"status", "complete"},
                                    {"seeds", n},
                                    {"mixed_wins", wins},
                                    {"mse_mixed_mean", mean(mm)},
                                    {"mse_choice_only_mean", mean(mc)}});
  progress.line("mixed model has lower MSE in ", wins, "/", n, " seeds");
  return {dir, true, {}};
}

}  // namespace

RunOutcome run_experiment(const json& resolved, std::ostream& log) {
  const fs::path dir = resolved.at("output_dir").get<std::string>();
  fs::create_directories(dir);
  write_json(dir / "config.json", resolved);
  Progress progress{log, {}};
  const std::string experiment = resolved.at("experiment").get<std::string>();
  RunOutcome out;
  try {
    if (experiment == kExperiments[0]) out = run_levelset(resolved, dir, progress);
    else if (experiment == kExperiments[1]) out = run_preference_offline(resolved, dir, progress);
    else if (experiment == kExperiments[2]) out = run_figure2_demo(resolved, dir, progress);
    else if (experiment == kExperiments[3]) out = run_figure4_demo(resolved, dir, progress);
    else throw std::invalid_argument("unknown experiment " + experiment);
  } catch (const std::exception& e) {
    out = {dir, false, {e.what()}};
    write_json(dir / "summary.json", {{"experiment", experiment}, {"status", "failed"}, {"errors", out.errors}});
  }
  return out;
}

}  // namespace mixgp
