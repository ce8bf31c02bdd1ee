#pragma once

#include "mixgp/preference.hpp"

#include "json.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixgp {

inline constexpr const char* kPairwiseLikertSchema = "pairwise-likert-v1";

struct PreferenceDataset {
  int dim = 0;
  std::vector<PreferenceRecord> records;
};

/// All problems found in an input file; each entry names its line.
class IngestError : public std::runtime_error {
public:
  explicit IngestError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

private:
  std::vector<std::string> problems_;
};

/// CSV with header x1_1..x1_d, x2_1..x2_d, choice, confidence (1..9). Extra
/// columns are ignored. Line numbers in errors count the header as line 1.
PreferenceDataset read_pairwise_likert_csv(std::istream& in);
PreferenceDataset read_pairwise_likert_csv_file(const std::string& path);
void write_pairwise_likert_csv(std::ostream& out, const PreferenceDataset& data);

nlohmann::json dataset_to_json(const PreferenceDataset& data);
PreferenceDataset dataset_from_json(const nlohmann::json& doc);

/// Bounding box of all stimuli, padded when an axis is flat.
Box dataset_domain(const PreferenceDataset& data);

}  // namespace mixgp
