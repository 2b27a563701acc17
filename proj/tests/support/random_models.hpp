#pragma once

#include <algorithm>
#include <vector>

#include "ordmed/core_model.hpp"
#include "ordmed/random.hpp"

namespace testsupport {

inline double draw(ordmed::SplitMix64& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

// Strictly increasing thresholds with gaps of at least 0.05.
inline ordmed::OutcomeModel random_outcome(ordmed::SplitMix64& rng, int J, std::size_t p) {
  std::vector<double> alpha{draw(rng, -3.0, 1.0)};
  for (int j = 2; j < J; ++j) alpha.push_back(alpha.back() + draw(rng, 0.05, 2.0));
  std::vector<double> betaC(p);
  for (auto& b : betaC) b = draw(rng, -1.0, 1.0);
  return ordmed::OutcomeModel(alpha, draw(rng, -2.0, 2.0), draw(rng, -2.0, 2.0),
                              draw(rng, -1.0, 1.0), betaC);
}

inline ordmed::MediatorModel random_mediator(ordmed::SplitMix64& rng, std::size_t p) {
  std::vector<double> gammaC(p);
  for (auto& g : gammaC) g = draw(rng, -1.0, 1.0);
  return ordmed::MediatorModel(draw(rng, -2.0, 2.0), draw(rng, -1.5, 1.5), gammaC);
}

inline std::vector<double> random_covariates(ordmed::SplitMix64& rng, std::size_t p) {
  std::vector<double> c(p);
  for (auto& v : c) v = draw(rng, -1.5, 1.5);
  return c;
}

}  // namespace testsupport
