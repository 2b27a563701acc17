#include "ordmed/effects.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace ordmed {

namespace {

void check_indicator(int d) {
  if (d != 0 && d != 1) throw ValidationError("indicator d must be 0 or 1");
}

void check_query(const EffectQuery& q) {
  if (!std::isfinite(q.x) || !std::isfinite(q.xstar)) {
    throw ValidationError("effect query exposures must be finite");
  }
}

// log[(1 + exp g_1) / (1 + exp g_0)] with both g's taken at (x, xstar).
double log_odds_shift(int j, double x, double xstar, std::span<const double> c,
                      const MediatorModel& med, const OutcomeModel& out) {
  return log1pexp(g_cross(1, j, x, xstar, c, med, out)) -
         log1pexp(g_cross(0, j, x, xstar, c, med, out));
}

}  // namespace

double g_cross(int d, int j, double x, double xstar, std::span<const double> c,
               const MediatorModel& med, const OutcomeModel& out) {
  check_indicator(d);
  const double mediator_slope = out.betaM() + out.betaXM() * x;
  const double base = out.alpha(j) - out.linear_predictor(x, 0, c);
  return -d * mediator_slope + log1pexp(base) - log1pexp(base - mediator_slope) +
         med.linear_predictor(xstar, c);
}

double g_observed(int d, int j, double x, std::span<const double> c, const MediatorModel& med,
                  const OutcomeModel& out) {
  return g_cross(d, j, x, x, c, med, out);
}

double log_rr_correction(int j, double x, std::span<const double> c, const MediatorModel& med,
                         const OutcomeModel& out) {
  return -log_odds_shift(j, x, x, c, med, out);
}

double marginal_cumulative_logit(int j, double x, std::span<const double> c,
                                 const MediatorModel& med, const OutcomeModel& out) {
  return counterfactual_cumulative_logit(j, x, x, c, med, out);
}

double counterfactual_cumulative_logit(int j, double x, double xstar, std::span<const double> c,
                                       const MediatorModel& med, const OutcomeModel& out) {
  return out.alpha(j) - out.linear_predictor(x, 0, c) + log_odds_shift(j, x, xstar, c, med, out);
}

double plug_in_oracle(int j, double x, double xstar, std::span<const double> c,
                      const MediatorModel& med, const OutcomeModel& out) {
  const double p1 = mediator_probability(med, xstar, c);
  // P(M=0) computed as its own expit to keep full relative precision.
  const double p0 = expit(-med.linear_predictor(xstar, c));
  const double at_or_below = cumulative_probability(out, j, x, 0, c) * p0 +
                             cumulative_probability(out, j, x, 1, c) * p1;
  const double above = exceedance_probability(out, j, x, 0, c) * p0 +
                       exceedance_probability(out, j, x, 1, c) * p1;
  return std::log(at_or_below) - std::log(above);
}

double log_tce(int j, const EffectQuery& q, const MediatorModel& med, const OutcomeModel& out) {
  check_query(q);
  return out.betaX() * (q.x - q.xstar) - log_odds_shift(j, q.x, q.x, q.c, med, out) +
         log_odds_shift(j, q.xstar, q.xstar, q.c, med, out);
}

double log_nde(int j, const EffectQuery& q, const MediatorModel& med, const OutcomeModel& out) {
  check_query(q);
  return out.betaX() * (q.x - q.xstar) - log_odds_shift(j, q.x, q.xstar, q.c, med, out) +
         log_odds_shift(j, q.xstar, q.xstar, q.c, med, out);
}

double log_nie(int j, const EffectQuery& q, const MediatorModel& med, const OutcomeModel& out) {
  check_query(q);
  return -log_odds_shift(j, q.x, q.x, q.c, med, out) +
         log_odds_shift(j, q.x, q.xstar, q.c, med, out);
}

double log_cde(int m, const EffectQuery& q, const OutcomeModel& out) {
  check_query(q);
  if (m != 0 && m != 1) throw ValidationError("controlled mediator level must be 0 or 1");
  return (out.betaX() + out.betaXM() * m) * (q.x - q.xstar);
}

EffectTable effect_table(const EffectQuery& q, const MediatorModel& med, const OutcomeModel& out) {
  check_query(q);
  if (med.covariate_dim() != q.c.size() || out.covariate_dim() != q.c.size()) {
    throw ValidationError("effect query covariate dimension does not match the models");
  }
  const int J = out.levels();
  EffectTable table;
  table.query = q;
  table.logTCE.reserve(J - 1);
  table.logNDE.reserve(J - 1);
  table.logNIE.reserve(J - 1);
  for (int j = 1; j < J; ++j) {
    const double total = log_tce(j, q, med, out);
    const double direct = log_nde(j, q, med, out);
    const double indirect = log_nie(j, q, med, out);
    if (!(std::abs(total - (direct + indirect)) <= 1e-10)) {
      std::ostringstream msg;
      msg << "decomposition violated at level " << j << ": log TCE = " << total
          << ", log NDE + log NIE = " << direct + indirect;
      throw InternalConsistencyError(msg.str());
    }
    table.logTCE.push_back(total);
    table.logNDE.push_back(direct);
    table.logNIE.push_back(indirect);
  }
  table.logCDE[0] = log_cde(0, q, out);
  table.logCDE[1] = log_cde(1, q, out);
  return table;
}

}  // namespace ordmed
