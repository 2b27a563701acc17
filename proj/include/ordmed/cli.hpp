// Command-line surface: data and parameter file formats plus the
// effects / fit / analyze / simulate / mc-study commands.
//
// Data CSV: header `x,m,y[,c1..cp]`, '.' decimal separator. Lines starting
// with '#' are metadata comments and are skipped on input.
// Parameter JSON: {gamma0, gammaX, gammaC[], alpha[], betaX, betaM, betaXM, betaC[]};
// gammaC and betaC may be omitted when there are no covariates.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ordmed/core_model.hpp"
#include "ordmed/simulation.hpp"
#include "json.hpp"

namespace ordmed::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kValidationError = 1,
  kConvergenceFailure = 2,
  kBootstrapUnreliable = 3,
};

enum class Format { csv, json };

struct ModelParameters {
  MediatorModel med;
  OutcomeModel out;
};

ModelParameters parameters_from_json(const nlohmann::json& j);
nlohmann::json parameters_to_json(const ModelParameters& params);
ModelParameters read_parameters(const std::string& path);

/// Parses the data CSV. Throws DatasetError listing every malformed row.
Dataset read_dataset(std::istream& in, int J);
Dataset read_dataset(const std::string& path, int J);
void write_dataset(std::ostream& out, const Dataset& data,
                   const std::map<std::string, std::string>& metadata);

/// Throws ValidationError naming every level in 1..J with no observation.
void require_all_levels(const Dataset& data);

/// Key/value block written into every output (version, command, seed, ...).
struct Metadata {
  std::string command_line;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> extra;

  std::map<std::string, std::string> entries() const;
};

struct EffectsOptions {
  std::string params_path;
  double x = 0.0;
  double xstar = 0.0;
  std::vector<double> c;
  Format format = Format::csv;
};

struct FitOptionsCli {
  std::string data_path;
  int levels = 0;
};

struct AnalyzeOptions {
  std::string data_path;
  int levels = 0;
  double x = 0.0;
  double xstar = 0.0;
  std::vector<double> c;
  std::size_t B = 1000;
  double level = 0.95;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  Format format = Format::json;
};

struct DesignOptions {
  std::string preset;       // table1 | table2 | sparse | ""
  std::string params_path;  // optional model parameters (JSON)
  std::optional<std::size_t> n;
  std::optional<double> meanX, sdX;
  std::optional<double> gamma0, gammaX, betaX, betaM, betaXM;
  std::optional<std::vector<double>> alpha, gammaC, betaC, covMean, covSd;
  std::optional<std::uint64_t> seed;
};

/// Builds a validated design from preset / parameter file / individual flags
/// (later sources override earlier ones).
SimulationDesign build_design(const DesignOptions& opt);

struct SimulateOptions {
  DesignOptions design;
  std::uint64_t stream = 0;
};

struct StudyOptions {
  DesignOptions design;
  std::size_t replications = 1000;
  double x = 3.5;
  double xstar = 2.0;
  std::vector<double> c;
  unsigned threads = 0;
};

// Each command writes its primary output to `out` and returns an exit code.
int cmd_effects(const EffectsOptions& opt, const Metadata& meta, std::ostream& out);
int cmd_fit(const FitOptionsCli& opt, const Metadata& meta, std::ostream& out);
int cmd_analyze(const AnalyzeOptions& opt, const Metadata& meta, std::ostream& out);
int cmd_simulate(const SimulateOptions& opt, const Metadata& meta, std::ostream& out);
/// `raw` receives one row per replicate per effect per level; `params` (optional)
/// one row per replicate per fitted parameter.
int cmd_mc_study(const StudyOptions& opt, const Metadata& meta, std::ostream& summary,
                 std::ostream& raw, std::ostream* params = nullptr);

/// Full argv entry point: parses flags, maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& err);

}  // namespace ordmed::cli
