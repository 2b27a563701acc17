// Closed-form counterfactual effects on the log-odds scale.
//
// All effects are conditional on a covariate vector c and contrast exposure x
// against baseline xstar. For every level j:
//
//   log TCE^j = log NDE^j + log NIE^j
//
// and the controlled direct effect does not depend on j. The alternative
// decomposition (mediator held at M(x) for the direct part) is obtained by
// swapping x and xstar in the query and negating.

#pragma once

#include <array>
#include <vector>

#include "ordmed/core_model.hpp"

namespace ordmed {

struct EffectQuery {
  double x = 0.0;
  double xstar = 0.0;
  std::vector<double> c;
};

struct EffectTable {
  std::vector<double> logTCE;  // index j-1
  std::vector<double> logNDE;
  std::vector<double> logNIE;
  std::array<double, 2> logCDE{};  // indexed by mediator level m
  EffectQuery query;

  int levels() const { return static_cast<int>(logTCE.size()) + 1; }
};

/// Thrown when an assembled table breaks log TCE = log NDE + log NIE.
class InternalConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Log-odds of M=1 given I(Y<=j)=d, X=x, C=c.
double g_observed(int d, int j, double x, std::span<const double> c, const MediatorModel& med,
                  const OutcomeModel& out);

/// As g_observed, with the mediator model evaluated at xstar instead of x.
double g_cross(int d, int j, double x, double xstar, std::span<const double> c,
               const MediatorModel& med, const OutcomeModel& out);

/// log RR of M=0 across I(Y<=j): log[(1 + exp g_0) / (1 + exp g_1)].
double log_rr_correction(int j, double x, std::span<const double> c, const MediatorModel& med,
                         const OutcomeModel& out);

/// logit P(Y<=j | x, c) with the mediator integrated out.
double marginal_cumulative_logit(int j, double x, std::span<const double> c,
                                 const MediatorModel& med, const OutcomeModel& out);

/// logit P(Y(x, M(xstar)) <= j | c), from the g-functions.
double counterfactual_cumulative_logit(int j, double x, double xstar, std::span<const double> c,
                                       const MediatorModel& med, const OutcomeModel& out);

/// logit P(Y(x, M(xstar)) <= j | c) by summing over m with core-model
/// probabilities only. Independent of the g-function route.
double plug_in_oracle(int j, double x, double xstar, std::span<const double> c,
                      const MediatorModel& med, const OutcomeModel& out);

double log_tce(int j, const EffectQuery& query, const MediatorModel& med, const OutcomeModel& out);
double log_nde(int j, const EffectQuery& query, const MediatorModel& med, const OutcomeModel& out);
double log_nie(int j, const EffectQuery& query, const MediatorModel& med, const OutcomeModel& out);
/// (betaX + betaXM m)(x - xstar); identical for every level.
double log_cde(int m, const EffectQuery& query, const OutcomeModel& out);

EffectTable effect_table(const EffectQuery& query, const MediatorModel& med,
                         const OutcomeModel& out);

}  // namespace ordmed
