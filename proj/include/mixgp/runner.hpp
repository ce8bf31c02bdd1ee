#pragma once

#include "mixgp/levelset.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixgp {

/// Config problems, each prefixed with its location ("config.json:12: /model/variant: ...").
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

inline constexpr const char* kExperiments[] = {"levelset-active-learning", "preference-offline", "figure2-demo",
                                               "figure4-demo"};

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output_dir;
};

/// Parses and validates a run config, filling every default. The result is
/// what gets written to <run dir>/config.json.
nlohmann::json resolve_run_config(const std::string& text, const std::string& source = "config",
                                  const RunOverrides& overrides = {});

struct RunOutcome {
  std::filesystem::path directory;
  bool complete = true;
  std::vector<std::string> errors;
};

/// Library settings for one seed of a resolved levelset-active-learning config.
ActiveLearningConfig active_learning_config_from(const nlohmann::json& resolved, std::uint64_t seed);
/// {iteration, x, y, acquisition_value, timestamp}
nlohmann::json trial_to_json(const TrialRecord& trial);

/// Executes a resolved config and writes all artifacts into its output_dir.
/// Failures inside individual seeds are recorded and flagged in summary.json.
RunOutcome run_experiment(const nlohmann::json& resolved, std::ostream& log);

}  // namespace mixgp
