#include "mixgp/dataset.hpp"

#include "mixgp/model_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace mixgp {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = std::to_string(p.size()) + " problem(s) in input";
  for (const auto& line : p) s += "\n  " + line;
  return s;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end && std::isfinite(v);
}

bool parse_int(std::string_view s, int& v) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end;
}

std::string shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

IngestError::IngestError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

PreferenceDataset read_pairwise_likert_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError({"line 1: missing header"});
  const auto header = split(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);

  std::vector<std::string> problems;
  int d = 0;
  while (col.count("x1_" + std::to_string(d + 1))) ++d;
  if (d == 0) problems.push_back("line 1: no x1_1 column");
  std::vector<std::size_t> c1, c2;
  for (int k = 1; k <= d; ++k) {
    c1.push_back(col["x1_" + std::to_string(k)]);
    const auto it = col.find("x2_" + std::to_string(k));
    if (it == col.end())
      problems.push_back("line 1: missing column x2_" + std::to_string(k));
    else
      c2.push_back(it->second);
  }
  if (col.count("x2_" + std::to_string(d + 1)))
    problems.push_back("line 1: column x2_" + std::to_string(d + 1) + " has no x1 counterpart");
  for (const char* name : {"choice", "confidence"})
    if (!col.count(name)) problems.push_back(std::string("line 1: missing column ") + name);
  if (!problems.empty()) throw IngestError(std::move(problems));
  const std::size_t ci = col["choice"], ri = col["confidence"];

  PreferenceDataset data;
  data.dim = d;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (cells.size() != header.size()) {
      problems.push_back(where + "expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(cells.size()));
      continue;
    }
    PreferenceRecord rec;
    rec.pair.x1.resize(d);
    rec.pair.x2.resize(d);
    bool ok = true;
    for (int k = 0; k < d; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (!parse_double(cells[c1[uk]], rec.pair.x1[k])) {
        problems.push_back(where + "x1_" + std::to_string(k + 1) + " is not a number: '" + std::string(cells[c1[uk]]) + "'");
        ok = false;
      }
      if (!parse_double(cells[c2[uk]], rec.pair.x2[k])) {
        problems.push_back(where + "x2_" + std::to_string(k + 1) + " is not a number: '" + std::string(cells[c2[uk]]) + "'");
        ok = false;
      }
    }
    if (!parse_int(cells[ci], rec.choice) || (rec.choice != 0 && rec.choice != 1)) {
      problems.push_back(where + "choice must be 0 or 1, found '" + std::string(cells[ci]) + "'");
      ok = false;
    }
    int raw = 0;
    if (!parse_int(cells[ri], raw) || raw < 1 || raw > 9) {
      problems.push_back(where + "confidence must be an integer in 1..9, found '" + std::string(cells[ri]) + "'");
      ok = false;
    }
    if (!ok) continue;
    rec.raw_rating = raw;
    rec.rating = map_raw_likert(raw);
    data.records.push_back(std::move(rec));
  }
  if (!problems.empty()) throw IngestError(std::move(problems));
  return data;
}

PreferenceDataset read_pairwise_likert_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_pairwise_likert_csv(in);
}

void write_pairwise_likert_csv(std::ostream& out, const PreferenceDataset& data) {
  for (int k = 1; k <= data.dim; ++k) out << "x1_" << k << ',';
  for (int k = 1; k <= data.dim; ++k) out << "x2_" << k << ',';
  out << "choice,confidence\n";
  for (const auto& r : data.records) {
    if (!r.raw_rating) throw std::invalid_argument("CSV export needs the raw 1..9 confidence of every record");
    for (int k = 0; k < data.dim; ++k) out << shortest(r.pair.x1[k]) << ',';
    for (int k = 0; k < data.dim; ++k) out << shortest(r.pair.x2[k]) << ',';
    out << r.choice << ',' << *r.raw_rating << '\n';
  }
}

json dataset_to_json(const PreferenceDataset& data) {
  json recs = json::array();
  for (const auto& r : data.records) {
    json j = {{"x1", to_json(r.pair.x1)}, {"x2", to_json(r.pair.x2)}, {"choice", r.choice}};
    j["rating"] = r.rating ? json(*r.rating) : json(nullptr);
    j["confidence"] = r.raw_rating ? json(*r.raw_rating) : json(nullptr);
    recs.push_back(std::move(j));
  }
  return {{"schema", kPairwiseLikertSchema}, {"dim", data.dim}, {"records", std::move(recs)}};
}

PreferenceDataset dataset_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("schema", "") != kPairwiseLikertSchema)
    throw std::invalid_argument(std::string("dataset must declare schema ") + kPairwiseLikertSchema);
  PreferenceDataset data;
  data.dim = doc.at("dim").get<int>();
  if (data.dim < 1) throw std::invalid_argument("dataset dim must be positive");
  std::vector<std::string> problems;
  const json& recs = doc.at("records");
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const json& j = recs[i];
    const std::string where = "record " + std::to_string(i) + ": ";
    try {
      PreferenceRecord r;
      r.pair.x1 = vector_from_json(j.at("x1"));
      r.pair.x2 = vector_from_json(j.at("x2"));
      if (r.pair.x1.size() != data.dim || r.pair.x2.size() != data.dim)
        throw std::invalid_argument("stimulus dimension differs from dim");
      r.choice = j.at("choice").get<int>();
      if (r.choice != 0 && r.choice != 1) throw std::invalid_argument("choice must be 0 or 1");
      if (j.contains("confidence") && !j["confidence"].is_null()) {
        r.raw_rating = j["confidence"].get<int>();
        r.rating = map_raw_likert(*r.raw_rating);
      }
      if (j.contains("rating") && !j["rating"].is_null()) {
        const int rating = j["rating"].get<int>();
        if (r.rating && *r.rating != rating) throw std::invalid_argument("rating disagrees with confidence");
        if (rating < 0) throw std::invalid_argument("rating must be nonnegative");
        r.rating = rating;
      }
      data.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      problems.push_back(where + e.what());
    }
  }
  if (!problems.empty()) throw IngestError(std::move(problems));
  return data;
}

Box dataset_domain(const PreferenceDataset& data) {
  if (data.records.empty()) throw std::invalid_argument("empty dataset has no domain");
  Vector lo = data.records[0].pair.x1, hi = lo;
  for (const auto& r : data.records) {
    lo = lo.cwiseMin(r.pair.x1).cwiseMin(r.pair.x2);
    hi = hi.cwiseMax(r.pair.x1).cwiseMax(r.pair.x2);
  }
  for (Eigen::Index k = 0; k < lo.size(); ++k)
    if (hi[k] - lo[k] < 1e-12) {
      lo[k] -= 0.5;
      hi[k] += 0.5;
    }
  return Box(lo, hi);
}

}  // namespace mixgp
