#include "ordmed/simulation.hpp"

#include <cmath>
#include <numeric>

#include "ordmed/estimation.hpp"
#include "ordmed/random.hpp"
#include "parallel.hpp"

namespace ordmed {

void SimulationDesign::validate() const {
  if (n == 0) throw ValidationError("simulation design: n must be positive");
  if (!std::isfinite(meanX) || !(sdX > 0.0) || !std::isfinite(sdX)) {
    throw ValidationError("simulation design: exposure needs finite mean and positive sd");
  }
  const std::size_t p = covMean.size();
  if (covSd.size() != p) {
    throw ValidationError("simulation design: covariate mean and sd vectors differ in length");
  }
  for (std::size_t k = 0; k < p; ++k) {
    if (!std::isfinite(covMean[k]) || !(covSd[k] > 0.0) || !std::isfinite(covSd[k])) {
      throw ValidationError("simulation design: covariate " + std::to_string(k + 1) +
                            " needs finite mean and positive sd");
    }
  }
  if (med.covariate_dim() != p || out.covariate_dim() != p) {
    throw ValidationError("simulation design: model covariate dimensions do not match the " +
                          std::to_string(p) + " generated covariates");
  }
}

namespace designs {

SimulationDesign table1(std::uint64_t seed) {
  SimulationDesign d;
  d.n = 500;
  d.meanX = 3.0;
  d.sdX = 1.5;
  d.med = MediatorModel(-1.0, 0.5);
  d.out = OutcomeModel({2.5, 5.5}, 1.1, 0.7, 0.5);
  d.seed = seed;
  return d;
}

SimulationDesign table2(std::uint64_t seed) {
  SimulationDesign d = table1(seed);
  d.out = OutcomeModel({0.5, 2.5, 4.5, 5.5}, 0.5, 1.3, 0.6);
  return d;
}

SimulationDesign sparse(std::uint64_t seed) {
  SimulationDesign d;
  d.n = 300;
  d.meanX = 3.0;
  d.sdX = 1.3;
  d.med = MediatorModel(-1.0, 0.9);
  d.out = OutcomeModel({-0.9, 0.9, 2.2, 3.5}, 0.5, 1.3, 0.6);
  d.seed = seed;
  return d;
}

}  // namespace designs

Dataset simulate_dataset(const SimulationDesign& design, std::uint64_t stream) {
  design.validate();
  SplitMix64 exposure_rng(design.seed, stream, StreamRole::exposure);
  SplitMix64 covariate_rng(design.seed, stream, StreamRole::covariates);
  SplitMix64 mediator_rng(design.seed, stream, StreamRole::mediator);
  SplitMix64 outcome_rng(design.seed, stream, StreamRole::outcome);

  const int J = design.out.levels();
  const std::size_t p = design.covariate_dim();
  std::vector<ObservationRecord> records(design.n);
  for (auto& r : records) {
    r.x = design.meanX + design.sdX * exposure_rng.normal();
    r.c.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
      r.c[k] = design.covMean[k] + design.covSd[k] * covariate_rng.normal();
    }
    r.m = mediator_rng.uniform() < mediator_probability(design.med, r.x, r.c) ? 1 : 0;

    // Inverse CDF over the cumulative probabilities.
    const double u = outcome_rng.uniform();
    r.y = J;
    for (int j = 1; j < J; ++j) {
      if (u < cumulative_probability(design.out, j, r.x, r.m, r.c)) {
        r.y = j;
        break;
      }
    }
  }
  return validate_dataset(std::move(records), J, p);
}

std::vector<EffectEntry> effect_entries(int J) {
  std::vector<EffectEntry> entries;
  for (const char* name : {"logNDE", "logNIE", "logTCE"}) {
    for (int j = 1; j < J; ++j) entries.push_back({name, j});
  }
  entries.push_back({"logCDE", 1});
  entries.push_back({"logCDE", 0});
  return entries;
}

std::vector<double> flatten(const EffectTable& table) {
  std::vector<double> v;
  v.reserve(3 * table.logTCE.size() + 2);
  v.insert(v.end(), table.logNDE.begin(), table.logNDE.end());
  v.insert(v.end(), table.logNIE.begin(), table.logNIE.end());
  v.insert(v.end(), table.logTCE.begin(), table.logTCE.end());
  v.push_back(table.logCDE[1]);
  v.push_back(table.logCDE[0]);
  return v;
}

StudySummary monte_carlo_study(const SimulationDesign& design, std::size_t replications,
                               const EffectQuery& query, unsigned threads) {
  if (replications == 0) throw ValidationError("monte carlo study: replications must be >= 1");
  design.validate();

  StudySummary summary;
  summary.replications = replications;
  summary.entries = effect_entries(design.out.levels());
  summary.replicates.resize(replications);

  detail::parallel_for(replications, threads, [&](std::size_t r) {
    ReplicateResult& rep = summary.replicates[r];
    rep.index = r;
    const Dataset data = simulate_dataset(design, r);
    try {
      const auto med = fit_mediator(data);
      const auto out = fit_outcome(data);
      rep.table = effect_table(query, med.model, out.model);
      rep.mediator_params = pack(med.model);
      rep.outcome_params = pack(out.model);
      rep.ok = true;
    } catch (const FitError& e) {
      rep.failure = std::string(to_string(e.kind())) + ": " + e.what();
    }
  });

  // Reduction in replicate order.
  const std::size_t k = summary.entries.size();
  std::vector<double> sum(k, 0.0);
  std::vector<std::vector<double>> values(k);
  std::size_t successes = 0;
  for (const auto& rep : summary.replicates) {
    if (!rep.ok) {
      ++summary.failures;
      continue;
    }
    ++successes;
    const auto flat = flatten(rep.table);
    for (std::size_t e = 0; e < k; ++e) {
      sum[e] += flat[e];
      values[e].push_back(flat[e]);
    }
  }
  summary.mean.assign(k, std::nan(""));
  summary.sd.assign(k, std::nullopt);
  if (successes == 0) return summary;
  for (std::size_t e = 0; e < k; ++e) {
    const double mean = sum[e] / static_cast<double>(successes);
    summary.mean[e] = mean;
    if (successes >= 2) {
      double ss = 0.0;
      for (double v : values[e]) ss += (v - mean) * (v - mean);
      summary.sd[e] = std::sqrt(ss / static_cast<double>(successes - 1));
    }
  }
  return summary;
}

}  // namespace ordmed
