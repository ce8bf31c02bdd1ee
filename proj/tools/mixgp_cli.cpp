#include "mixgp/dataset.hpp"
#include "mixgp/runner.hpp"
#include "mixgp/session.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text).flush()) throw std::runtime_error("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-likelihood GP experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out_dir;
  bool check_only = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "base seed (overrides the config)");
  run->add_option("--workers", workers, "parallel seeds")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_flag("--check", check_only, "validate and print the resolved config");

  std::string input, schema, output;
  auto* ingest = app.add_subcommand("ingest", "validate a response file and write the canonical dataset");
  ingest->add_option("input", input, "CSV file or session export")->required()->check(CLI::ExistingFile);
  ingest->add_option("--schema", schema, "input schema")
      ->required()
      ->check(CLI::IsMember({mixgp::kPairwiseLikertSchema, mixgp::kSessionExportSchema}));
  ingest->add_option("--out", output, "dataset JSON path")->required();

  std::string dataset_path, csv_out;
  auto* exp = app.add_subcommand("export", "write a canonical dataset back to pairwise-likert-v1 CSV");
  exp->add_option("dataset", dataset_path, "dataset JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", csv_out, "CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const nlohmann::json resolved =
          mixgp::resolve_run_config(slurp(config_path), config_path, {seed, workers, out_dir});
      if (check_only) {
        std::cout << resolved.dump(2) << '\n';
        return 0;
      }
      const mixgp::RunOutcome r = mixgp::run_experiment(resolved, std::cerr);
      std::cout << r.directory.string() << '\n';
      if (!r.complete) {
        for (const auto& e : r.errors) std::cerr << "error: " << e << '\n';
        std::cerr << "outputs in " << r.directory.string() << " are partial\n";
        return 3;
      }
      return 0;
    }
    if (*ingest) {
      mixgp::PreferenceDataset data;
      if (schema == mixgp::kPairwiseLikertSchema) {
        data = mixgp::read_pairwise_likert_csv_file(input);
      } else {
        const auto doc = nlohmann::json::parse(slurp(input));
        write_file(output, mixgp::dataset_from_session_export(doc).dump(2) + "\n");
        std::cerr << "ingested session export " << doc.at("session").at("id").get<std::string>() << '\n';
        return 0;
      }
      write_file(output, mixgp::dataset_to_json(data).dump(2) + "\n");
      std::cerr << "ingested " << data.records.size() << " records of dimension " << data.dim << '\n';
      return 0;
    }
    if (*exp) {
      const auto data = mixgp::dataset_from_json(nlohmann::json::parse(slurp(dataset_path)));
      std::ostringstream ss;
      mixgp::write_pairwise_likert_csv(ss, data);
      write_file(csv_out, ss.str());
      return 0;
    }
  } catch (const mixgp::ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << p << '\n';
    return 2;
  } catch (const mixgp::IngestError& e) {
    for (const auto& p : e.problems()) std::cerr << input << ": " << p << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
