// Percentile bootstrap for the effect table.
//
// Quantiles use linear interpolation between order statistics: for a sorted
// sample v_0..v_{n-1} and probability q, h = (n-1) q and
//   Q(q) = v_floor(h) + (h - floor(h)) (v_floor(h)+1 - v_floor(h)).

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ordmed/core_model.hpp"
#include "ordmed/effects.hpp"
#include "ordmed/simulation.hpp"

namespace ordmed {

double quantile(std::span<const double> sorted, double q);

/// Row indices of bootstrap resample b (with replacement, n draws).
std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t b);

class BootstrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BootstrapResult {
  EffectTable point;  // from the full-data fit
  std::vector<EffectEntry> entries;
  std::vector<double> boot_sd;  // aligned with entries; NaN with < 2 successes
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  std::size_t B = 0;
  double level = 0.95;
  std::size_t failures = 0;
  bool unreliable = false;  // failures > B / 2
  /// Flattened effect table of every successful resample, in resample order.
  std::vector<std::vector<double>> estimates;
};

/// Refits both models on B row-resamples. Resamples whose fits fail
/// (missing level, constant mediator, separation, ...) are counted and
/// excluded. Throws BootstrapError if every resample fails; FitError from the
/// full-data fit propagates.
BootstrapResult bootstrap_effects(const Dataset& data, const EffectQuery& query, std::size_t B,
                                  double level, std::uint64_t seed, unsigned threads = 0);

}  // namespace ordmed
