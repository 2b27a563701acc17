// Maximum-likelihood fitting of the mediator (binary logistic) and outcome
// (proportional-odds cumulative logit) models by Newton-Raphson.
//
// Parameter vectors use the natural ordering
//   mediator: (gamma0, gammaX, gammaC_1..gammaC_p)
//   outcome:  (alpha_1..alpha_{J-1}, betaX, betaM, betaXM, betaC_1..betaC_p)
// Internally the outcome thresholds are optimized as
//   alpha_j = alpha_1 + sum_{k=2..j} exp(delta_k)
// so the ordering constraint never binds.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "ordmed/core_model.hpp"

namespace ordmed {

enum class FitFailure {
  not_converged,
  rank_deficient,
  separation,
  empty_category,
  single_mediator_value,
  ordering_violation,
};

const char* to_string(FitFailure failure);

class FitError : public std::runtime_error {
 public:
  FitError(FitFailure kind, const std::string& what);
  FitFailure kind() const { return kind_; }

 private:
  FitFailure kind_;
};

struct FitOptions {
  int max_iterations = 100;
  int max_step_halvings = 30;
  double gradient_tolerance = 1e-8;
  double relative_loglik_tolerance = 1e-12;
  double separation_norm = 1e3;
};

template <typename Model>
struct FitResult {
  Model model;
  double loglik = 0.0;
  double gradient_norm = 0.0;  // max-norm in the natural parameterization
  int iterations = 0;
  Eigen::VectorXd standard_errors;  // natural ordering; NaN if information is singular
  Eigen::MatrixXd covariance;
  bool converged = false;
};

/// Value, gradient and Hessian of a log-likelihood in the natural parameterization.
struct LoglikDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

Eigen::VectorXd pack(const MediatorModel& model);
Eigen::VectorXd pack(const OutcomeModel& model);
MediatorModel unpack_mediator(const Eigen::VectorXd& theta);
/// Throws ValidationError if the thresholds are not strictly increasing.
OutcomeModel unpack_outcome(const Eigen::VectorXd& theta, int J);

/// Sum of log P(M=m_i | x_i, c_i). -infinity if a record has probability zero.
double loglik_mediator(const MediatorModel& model, const Dataset& data);
/// Sum of log P(Y=y_i | x_i, m_i, c_i). -infinity if a record has probability zero.
double loglik_outcome(const OutcomeModel& model, const Dataset& data);

LoglikDerivatives mediator_derivatives(const MediatorModel& model, const Dataset& data);
LoglikDerivatives outcome_derivatives(const OutcomeModel& model, const Dataset& data);

FitResult<MediatorModel> fit_mediator(const Dataset& data, const FitOptions& options = {});
FitResult<OutcomeModel> fit_outcome(const Dataset& data, const FitOptions& options = {});

}  // namespace ordmed
