#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>

#include "ordmed/cli.hpp"
#include "format.hpp"

namespace ordmed::cli {

namespace {

std::vector<double> vector_field(const nlohmann::json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw ValidationError(std::string("parameter file: missing field '") + key + "'");
    return {};
  }
  const auto& v = j.at(key);
  if (!v.is_array()) throw ValidationError(std::string("parameter file: '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) {
      throw ValidationError(std::string("parameter file: '") + key + "' must contain numbers");
    }
    out.push_back(e.get<double>());
  }
  return out;
}

double scalar_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ValidationError(std::string("parameter file: missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ValidationError(std::string("parameter file: '") + key + "' must be a number");
  return v.get<double>();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

}  // namespace

ModelParameters parameters_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("parameter file: top level must be a JSON object");
  ModelParameters p;
  p.med = MediatorModel(scalar_field(j, "gamma0"), scalar_field(j, "gammaX"),
                        vector_field(j, "gammaC", false));
  p.out = OutcomeModel(vector_field(j, "alpha", true), scalar_field(j, "betaX"),
                       scalar_field(j, "betaM"), scalar_field(j, "betaXM"),
                       vector_field(j, "betaC", false));
  if (p.med.covariate_dim() != p.out.covariate_dim()) {
    throw ValidationError("parameter file: gammaC and betaC lengths differ");
  }
  return p;
}

nlohmann::json parameters_to_json(const ModelParameters& p) {
  return nlohmann::json{{"gamma0", p.med.gamma0()}, {"gammaX", p.med.gammaX()},
                        {"gammaC", p.med.gammaC()}, {"alpha", p.out.alpha()},
                        {"betaX", p.out.betaX()},   {"betaM", p.out.betaM()},
                        {"betaXM", p.out.betaXM()}, {"betaC", p.out.betaC()}};
}

ModelParameters read_parameters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open parameter file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("parameter file '" + path + "' is not valid JSON: " + e.what());
  }
  return parameters_from_json(j);
}

Dataset read_dataset(std::istream& in, int J) {
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!skippable(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw ValidationError("data file has no header row");

  const auto header = split(line, ',');
  if (header.size() < 3 || trim(header[0]) != "x" || trim(header[1]) != "m" ||
      trim(header[2]) != "y") {
    throw ValidationError("data header must start with columns x,m,y");
  }
  const std::size_t p = header.size() - 3;
  for (std::size_t k = 0; k < p; ++k) {
    if (trim(header[3 + k]) != "c" + std::to_string(k + 1)) {
      throw ValidationError("data header: expected column 'c" + std::to_string(k + 1) +
                            "', found '" + std::string(trim(header[3 + k])) + "'");
    }
  }

  std::vector<ObservationRecord> records;
  std::vector<RecordIssue> issues;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    const std::size_t row = records.size();
    const auto cells = split(line, ',');
    ObservationRecord r;
    if (cells.size() != header.size()) {
      issues.push_back({row, "row", "has " + std::to_string(cells.size()) + " columns, header has " +
                                        std::to_string(header.size())});
      records.push_back(std::move(r));
      continue;
    }
    if (auto v = parse_real(cells[0])) {
      r.x = *v;
    } else {
      issues.push_back({row, "x", "not a number: '" + std::string(trim(cells[0])) + "'"});
    }
    auto integer_cell = [&](std::string_view cell, const char* name, int& target) {
      const auto v = parse_real(cell);
      if (!v || std::floor(*v) != *v || std::abs(*v) > 1e9) {
        issues.push_back({row, name, "not an integer: '" + std::string(trim(cell)) + "'"});
      } else {
        target = static_cast<int>(*v);
      }
    };
    integer_cell(cells[1], "m", r.m);
    integer_cell(cells[2], "y", r.y);
    r.c.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      if (auto v = parse_real(cells[3 + k])) {
        r.c[k] = *v;
      } else {
        issues.push_back({row, "c" + std::to_string(k + 1),
                          "not a number: '" + std::string(trim(cells[3 + k])) + "'"});
      }
    }
    records.push_back(std::move(r));
  }
  if (issues.empty()) return validate_dataset(std::move(records), J, p);
  // Report range problems of the rows that did parse alongside the parse errors.
  try {
    validate_dataset(records, J, p);
  } catch (const DatasetError& e) {
    for (const auto& issue : e.issues()) {
      const bool seen = std::any_of(issues.begin(), issues.end(),
                                    [&](const RecordIssue& i) { return i.row == issue.row; });
      if (!seen) issues.push_back(issue);
    }
  }
  std::stable_sort(issues.begin(), issues.end(),
                   [](const RecordIssue& a, const RecordIssue& b) { return a.row < b.row; });
  throw DatasetError(std::move(issues));
}

Dataset read_dataset(const std::string& path, int J) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  return read_dataset(in, J);
}

void write_dataset(std::ostream& out, const Dataset& data,
                   const std::map<std::string, std::string>& metadata) {
  write_comment_block(out, metadata);
  out << "x,m,y";
  for (std::size_t k = 0; k < data.covariate_dim(); ++k) out << ",c" << k + 1;
  out << '\n';
  for (const auto& r : data.records()) {
    out << num(r.x) << ',' << r.m << ',' << r.y;
    for (double c : r.c) out << ',' << num(c);
    out << '\n';
  }
}

void require_all_levels(const Dataset& data) {
  std::vector<bool> seen(static_cast<std::size_t>(data.levels()), false);
  for (const auto& r : data.records()) seen[static_cast<std::size_t>(r.y - 1)] = true;
  std::string missing;
  for (int j = 1; j <= data.levels(); ++j) {
    if (!seen[static_cast<std::size_t>(j - 1)]) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(j);
    }
  }
  if (!missing.empty()) {
    throw ValidationError("outcome level(s) " + missing + " of J = " +
                          std::to_string(data.levels()) + " never observed in the data");
  }
}

std::map<std::string, std::string> Metadata::entries() const {
  std::map<std::string, std::string> m = extra;
  m["version"] = std::string("ordmed ") + kVersion;
  m["command"] = command_line;
  if (seed) m["seed"] = std::to_string(*seed);
  return m;
}

}  // namespace ordmed::cli
