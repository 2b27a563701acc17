// Parametric models for ordinal-outcome / binary-mediator mediation analysis.
//
//   logit P(M=1 | x, c)        = gamma0 + gammaX x + gammaC . c
//   logit P(Y<=j | x, m, c)    = alpha_j - (betaX x + betaM m + betaXM x m + betaC . c)
//
// Outcome levels are coded 1..J; thresholds are indexed 1..J-1.

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ordmed {

/// Thrown for malformed inputs: dimension mismatches, invalid models, bad data.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Overflow-safe scalar helpers.
double expit(double z);
double log1pexp(double z);  // log(1 + exp(z))
double logit(double p);

class MediatorModel {
 public:
  MediatorModel() = default;
  MediatorModel(double gamma0, double gammaX, std::vector<double> gammaC = {});

  double gamma0() const { return gamma0_; }
  double gammaX() const { return gammaX_; }
  const std::vector<double>& gammaC() const { return gammaC_; }
  std::size_t covariate_dim() const { return gammaC_.size(); }

  double linear_predictor(double x, std::span<const double> c) const;

 private:
  double gamma0_ = 0.0;
  double gammaX_ = 0.0;
  std::vector<double> gammaC_;
};

class OutcomeModel {
 public:
  OutcomeModel() = default;
  /// Throws ValidationError unless alpha is nonempty, finite and strictly increasing.
  OutcomeModel(std::vector<double> alpha, double betaX, double betaM, double betaXM,
               std::vector<double> betaC = {});

  const std::vector<double>& alpha() const { return alpha_; }
  /// Threshold alpha_j for j in 1..J-1.
  double alpha(int j) const;
  double betaX() const { return betaX_; }
  double betaM() const { return betaM_; }
  double betaXM() const { return betaXM_; }
  const std::vector<double>& betaC() const { return betaC_; }
  int levels() const { return static_cast<int>(alpha_.size()) + 1; }
  std::size_t covariate_dim() const { return betaC_.size(); }

  /// betaX x + betaM m + betaXM x m + betaC . c
  double linear_predictor(double x, int m, std::span<const double> c) const;

  void check_level(int j) const;

 private:
  std::vector<double> alpha_{0.0};
  double betaX_ = 0.0;
  double betaM_ = 0.0;
  double betaXM_ = 0.0;
  std::vector<double> betaC_;
};

struct ObservationRecord {
  double x = 0.0;
  int m = 0;
  int y = 1;
  std::vector<double> c;
};

/// One violated field of one input row (row is 0-based).
struct RecordIssue {
  std::size_t row;
  std::string field;
  std::string reason;
};

class DatasetError : public ValidationError {
 public:
  explicit DatasetError(std::vector<RecordIssue> issues);
  const std::vector<RecordIssue>& issues() const { return issues_; }

 private:
  std::vector<RecordIssue> issues_;
};

/// A validated, nonempty collection of records sharing J and covariate dimension p.
class Dataset {
 public:
  const std::vector<ObservationRecord>& records() const { return records_; }
  const ObservationRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const { return records_.size(); }
  int levels() const { return levels_; }
  std::size_t covariate_dim() const { return p_; }

  /// Records selected by index, with repetition. Indices must be in range.
  Dataset subset(std::span<const std::size_t> indices) const;

  friend Dataset validate_dataset(std::vector<ObservationRecord> records, int J, std::size_t p);

 private:
  Dataset() = default;
  std::vector<ObservationRecord> records_;
  int levels_ = 2;
  std::size_t p_ = 0;
};

/// Throws DatasetError listing every violated record.
Dataset validate_dataset(std::vector<ObservationRecord> records, int J, std::size_t p);

double mediator_probability(const MediatorModel& model, double x, std::span<const double> c);

/// P(Y <= j | x, m, c) for j in 1..J-1.
double cumulative_probability(const OutcomeModel& model, int j, double x, int m,
                              std::span<const double> c);

/// P(Y > j | x, m, c), evaluated directly rather than as a complement.
double exceedance_probability(const OutcomeModel& model, int j, double x, int m,
                              std::span<const double> c);

/// (P(Y=1), ..., P(Y=J)) as differences of cumulative probabilities.
std::vector<double> category_probabilities(const OutcomeModel& model, double x, int m,
                                           std::span<const double> c);

}  // namespace ordmed
