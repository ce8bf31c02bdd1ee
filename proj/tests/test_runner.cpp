#include "doctest.h"

#include "mixgp/dataset.hpp"
#include "mixgp/experiments.hpp"
#include "mixgp/runner.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mixgp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mixgp_runner_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::vector<std::string> config_errors(const std::string& text) {
  try {
    resolve_run_config(text, "cfg.json");
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

}  // namespace

TEST_CASE("config errors carry file, line and path") {
  const std::string text =
      "{\n"
      "  \"experiment\": \"levelset-active-learning\",\n"
      "  \"objective\": \"normball-2d\",\n"
      "  \"budget\": -4,\n"
      "  \"model\": {\n"
      "    \"variant\": \"hybrid\"\n"
      "  },\n"
      "  \"colour\": 1\n"
      "}\n";
  const auto errors = config_errors(text);
  REQUIRE(errors.size() == 3);
  CHECK(errors[0].rfind("cfg.json:4: /budget:", 0) == 0);
  CHECK(errors[1].rfind("cfg.json:6: /model/variant:", 0) == 0);
  CHECK(errors[2].rfind("cfg.json:8: /colour:", 0) == 0);

  const auto syntax = config_errors("{\n  \"experiment\": \n}");
  REQUIRE(syntax.size() == 1);
  CHECK(syntax[0].find("line 3") != std::string::npos);

  CHECK(config_errors(R"({"experiment": "levelset-active-learning"})").size() == 1);
  CHECK(config_errors(R"({"experiment": "fig9"})").size() == 1);
}

TEST_CASE("resolved config fills defaults and applies overrides") {
  RunOverrides o;
  o.seed = 9;
  o.output_dir = "elsewhere";
  const json r = resolve_run_config(R"({"experiment": "levelset-active-learning", "objective": "ellipsoid"})", "c", o);
  CHECK(r["seed"] == 9);
  CHECK(r["output_dir"] == "elsewhere");
  CHECK(r["budget"] == 50);
  CHECK(r["initial_trials"] == 10);
  CHECK(r["acquisition"] == "globalmi");
  CHECK(r["model"]["variant"] == "mixed");
  const ActiveLearningConfig al = active_learning_config_from(r, 4);
  CHECK(al.objective == "ellipsoid");
  CHECK(al.seed == 4);
}

TEST_CASE("a small levelset run writes every artifact and reruns byte for byte") {
  const fs::path a = scratch("ls_a"), b = scratch("ls_b");
  const std::string base = R"({"experiment": "levelset-active-learning", "objective": "normball-2d",
    "budget": 3, "seeds": 2, "num_reference": 64, "metric_samples": 256, "final_metric_samples": 512,
    "model": {"inducing": 20, "initial_fit_iterations": 40, "refit_iterations": 10},
    "optimizer": {"candidates": 32, "starts": 1, "steps": 4, "sweeps": 1}, "output_dir": ")";
  std::ostringstream log;
  const RunOutcome ra = run_experiment(resolve_run_config(base + a.string() + "\"}"), log);
  const RunOutcome rb = run_experiment(resolve_run_config(base + b.string() + "\"}"), log);
  REQUIRE(ra.complete);
  REQUIRE(rb.complete);
  for (const char* f : {"config.json", "metrics.csv", "curve.csv", "summary.json", "trials_seed0.jsonl",
                        "trials_seed1.jsonl", "model_seed0.json", "model_seed1.json"})
    CHECK_MESSAGE(fs::exists(a / f), f);
  CHECK(slurp(a / "metrics.csv") == slurp(b / "metrics.csv"));
  CHECK(slurp(a / "curve.csv") == slurp(b / "curve.csv"));
  CHECK(slurp(a / "model_seed1.json") == slurp(b / "model_seed1.json"));

  std::ifstream trials(a / "trials_seed0.jsonl");
  int n = 0;
  for (std::string line; std::getline(trials, line); ++n) {
    const json t = json::parse(line);
    CHECK(t["iteration"] == n + 1);
  }
  CHECK(n == 13);
  const json summary = json::parse(slurp(a / "summary.json"));
  CHECK(summary["status"] == "complete");
  const json config = json::parse(slurp(a / "config.json"));
  CHECK(config["model"]["refit_iterations"] == 10);
}

TEST_CASE("figure 2 smoke run") {
  const fs::path dir = scratch("fig2");
  std::ostringstream log;
  const json cfg = {{"experiment", "figure2-demo"},
                    {"output_dir", dir.string()},
                    {"grid_points", 13},
                    {"model", {{"inducing", 20}, {"iterations", 200}}}};
  const RunOutcome out = run_experiment(resolve_run_config(cfg.dump()), log);
  REQUIRE(out.complete);
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s["mixed_sd"].size() == 2);
  std::ifstream curve(dir / "curve.csv");
  int rows = -1;
  for (std::string line; std::getline(curve, line);) ++rows;
  CHECK(rows == 13);
}

TEST_CASE("preference-offline run on an ingested file") {
  const fs::path dir = scratch("pref");
  fs::create_directories(dir);
  PreferenceDataset data{1, {}};
  for (const auto& r : synthetic_preference_data(24, 1, -2.0, 2.0)) {
    PreferenceRecord rec = r;
    rec.raw_rating = 3 * *r.rating + 2;
    data.records.push_back(rec);
  }
  {
    std::ofstream out(dir / "data.json");
    out << dataset_to_json(data).dump();
  }
  const json cfg = {{"experiment", "preference-offline"},
                    {"dataset", (dir / "data.json").string()},
                    {"output_dir", (dir / "out").string()},
                    {"train_size", 16},
                    {"repeats", 3},
                    {"model", {{"inducing", 15}, {"iterations", 60}}}};
  std::ostringstream log;
  const RunOutcome out = run_experiment(resolve_run_config(cfg.dump()), log);
  REQUIRE(out.complete);
  std::ifstream metrics(dir / "out" / "metrics.csv");
  int rows = -1;
  for (std::string line; std::getline(metrics, line);) ++rows;
  CHECK(rows == 6);
}

TEST_CASE("a failing run is flagged in its summary") {
  const fs::path dir = scratch("missing");
  const json cfg = {{"experiment", "preference-offline"},
                    {"dataset", (dir / "nope.json").string()},
                    {"output_dir", dir.string()}};
  std::ostringstream log;
  const RunOutcome out = run_experiment(resolve_run_config(cfg.dump()), log);
  CHECK_FALSE(out.complete);
  CHECK(json::parse(slurp(dir / "summary.json"))["status"] == "failed");
}
