// Synthetic data from the mediator/outcome models and Monte Carlo studies of
// the effect estimators.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ordmed/core_model.hpp"
#include "ordmed/effects.hpp"

namespace ordmed {

struct SimulationDesign {
  std::size_t n = 500;
  double meanX = 3.0;
  double sdX = 1.5;
  MediatorModel med;
  OutcomeModel out;
  std::uint64_t seed = 0;
  // Independent Normal(covMean[k], covSd[k]) covariates; empty when p = 0.
  std::vector<double> covMean;
  std::vector<double> covSd;

  std::size_t covariate_dim() const { return covMean.size(); }
  /// Throws ValidationError on inconsistent dimensions or nonpositive scales.
  void validate() const;
};

/// Reference designs: J=3 and J=5 studies with n=500, and the sparse J=5 example with n=300.
namespace designs {
SimulationDesign table1(std::uint64_t seed = 0);
SimulationDesign table2(std::uint64_t seed = 0);
SimulationDesign sparse(std::uint64_t seed = 0);
}  // namespace designs

/// Draws design.n records. `stream` selects an independent sequence for the
/// same seed (replicate index in studies).
Dataset simulate_dataset(const SimulationDesign& design, std::uint64_t stream = 0);

/// One cell of a flattened EffectTable: effect in {logNDE, logNIE, logTCE,
/// logCDE}; index is the level j, or the mediator value m for logCDE.
struct EffectEntry {
  std::string effect;
  int index = 0;
};

/// Entry order: logNDE j=1..J-1, logNIE, logTCE, then logCDE m=1, m=0.
std::vector<EffectEntry> effect_entries(int J);
std::vector<double> flatten(const EffectTable& table);

struct ReplicateResult {
  std::size_t index = 0;
  bool ok = false;
  std::string failure;  // empty when ok
  EffectTable table;
  Eigen::VectorXd mediator_params;
  Eigen::VectorXd outcome_params;
};

struct StudySummary {
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<EffectEntry> entries;
  std::vector<double> mean;
  std::vector<std::optional<double>> sd;  // absent with fewer than two successes
  std::vector<ReplicateResult> replicates;
};

/// Simulates, fits both models and evaluates the effect table per replicate.
/// Replicate r uses stream r of design.seed. threads = 0 uses hardware concurrency.
StudySummary monte_carlo_study(const SimulationDesign& design, std::size_t replications,
                               const EffectQuery& query, unsigned threads = 0);

}  // namespace ordmed
