#include "ordmed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "ordmed/estimation.hpp"
#include "ordmed/random.hpp"
#include "parallel.hpp"

namespace ordmed {

double quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("quantile probability must lie in [0,1]");
  const double h = static_cast<double>(sorted.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted[lo];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::size_t b) {
  SplitMix64 rng(seed, b, StreamRole::resample);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
  return idx;
}

BootstrapResult bootstrap_effects(const Dataset& data, const EffectQuery& query, std::size_t B,
                                  double level, std::uint64_t seed, unsigned threads) {
  if (B == 0) throw ValidationError("bootstrap needs B >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0,1)");

  BootstrapResult res;
  res.B = B;
  res.level = level;
  res.entries = effect_entries(data.levels());
  {
    const auto med = fit_mediator(data);
    const auto out = fit_outcome(data);
    res.point = effect_table(query, med.model, out.model);
  }

  std::vector<std::optional<std::vector<double>>> draws(B);
  detail::parallel_for(B, threads, [&](std::size_t b) {
    const auto idx = resample_indices(data.size(), seed, b);
    const Dataset sample = data.subset(idx);
    try {
      const auto med = fit_mediator(sample);
      const auto out = fit_outcome(sample);
      draws[b] = flatten(effect_table(query, med.model, out.model));
    } catch (const FitError&) {
      // excluded and counted below
    }
  });

  for (auto& d : draws) {
    if (d) {
      res.estimates.push_back(std::move(*d));
    } else {
      ++res.failures;
    }
  }
  if (res.estimates.empty()) {
    throw BootstrapError("bootstrap: all " + std::to_string(B) + " resamples failed to fit");
  }
  res.unreliable = 2 * res.failures > B;

  const std::size_t k = res.entries.size();
  const std::size_t s = res.estimates.size();
  const double tail = (1.0 - level) / 2.0;
  res.boot_sd.resize(k);
  res.ci_lower.resize(k);
  res.ci_upper.resize(k);
  std::vector<double> column(s);
  for (std::size_t e = 0; e < k; ++e) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      column[i] = res.estimates[i][e];
      sum += column[i];
    }
    const double mean = sum / static_cast<double>(s);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    res.boot_sd[e] = s >= 2 ? std::sqrt(ss / static_cast<double>(s - 1)) : std::nan("");
    std::sort(column.begin(), column.end());
    res.ci_lower[e] = quantile(column, tail);
    res.ci_upper[e] = quantile(column, 1.0 - tail);
  }
  return res;
}

}  // namespace ordmed
