#include "ordmed/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ordmed {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double dot(std::span<const double> coef, std::span<const double> c, const char* what) {
  if (coef.size() != c.size()) {
    std::ostringstream msg;
    msg << what << ": covariate vector has length " << c.size() << ", model expects "
        << coef.size();
    throw ValidationError(msg.str());
  }
  return std::inner_product(coef.begin(), coef.end(), c.begin(), 0.0);
}

void check_binary(int m) {
  if (m != 0 && m != 1) throw ValidationError("mediator value must be 0 or 1");
}

std::string describe(const std::vector<RecordIssue>& issues) {
  std::ostringstream msg;
  msg << "dataset validation failed (" << issues.size() << " issue"
      << (issues.size() == 1 ? "" : "s") << ")";
  for (const auto& issue : issues) {
    msg << "\n  row " << issue.row + 1 << ", field '" << issue.field << "': " << issue.reason;
  }
  return msg.str();
}

}  // namespace

double expit(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log1pexp(double z) {
  if (z > 36.0) return z + std::exp(-z);
  if (z > -36.0) return std::log1p(std::exp(z));
  return std::exp(z);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

MediatorModel::MediatorModel(double gamma0, double gammaX, std::vector<double> gammaC)
    : gamma0_(gamma0), gammaX_(gammaX), gammaC_(std::move(gammaC)) {
  if (!std::isfinite(gamma0_) || !std::isfinite(gammaX_) || !all_finite(gammaC_)) {
    throw ValidationError("mediator model parameters must be finite");
  }
}

double MediatorModel::linear_predictor(double x, std::span<const double> c) const {
  return gamma0_ + gammaX_ * x + dot(gammaC_, c, "mediator model");
}

OutcomeModel::OutcomeModel(std::vector<double> alpha, double betaX, double betaM, double betaXM,
                           std::vector<double> betaC)
    : alpha_(std::move(alpha)), betaX_(betaX), betaM_(betaM), betaXM_(betaXM),
      betaC_(std::move(betaC)) {
  if (alpha_.empty()) throw ValidationError("outcome model needs at least one threshold (J >= 2)");
  if (!all_finite(alpha_) || !std::isfinite(betaX_) || !std::isfinite(betaM_) ||
      !std::isfinite(betaXM_) || !all_finite(betaC_)) {
    throw ValidationError("outcome model parameters must be finite");
  }
  for (std::size_t j = 1; j < alpha_.size(); ++j) {
    if (!(alpha_[j - 1] < alpha_[j])) {
      std::ostringstream msg;
      msg << "outcome thresholds must be strictly increasing: alpha_" << j << " = "
          << alpha_[j - 1] << " is not below alpha_" << j + 1 << " = " << alpha_[j];
      throw ValidationError(msg.str());
    }
  }
}

double OutcomeModel::alpha(int j) const {
  check_level(j);
  return alpha_[static_cast<std::size_t>(j - 1)];
}

void OutcomeModel::check_level(int j) const {
  if (j < 1 || j > levels() - 1) {
    std::ostringstream msg;
    msg << "level index j = " << j << " outside 1.." << levels() - 1;
    throw ValidationError(msg.str());
  }
}

double OutcomeModel::linear_predictor(double x, int m, std::span<const double> c) const {
  check_binary(m);
  return betaX_ * x + betaM_ * m + betaXM_ * x * m + dot(betaC_, c, "outcome model");
}

DatasetError::DatasetError(std::vector<RecordIssue> issues)
    : ValidationError(describe(issues)), issues_(std::move(issues)) {}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.levels_ = levels_;
  out.p_ = p_;
  out.records_.reserve(indices.size());
  for (std::size_t i : indices) out.records_.push_back(records_.at(i));
  return out;
}

Dataset validate_dataset(std::vector<ObservationRecord> records, int J, std::size_t p) {
  if (J < 2) throw ValidationError("number of outcome levels J must be at least 2");
  if (records.empty()) throw ValidationError("dataset is empty");

  std::vector<RecordIssue> issues;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!std::isfinite(r.x)) issues.push_back({i, "x", "not a finite number"});
    if (r.m != 0 && r.m != 1) {
      issues.push_back({i, "m", "value " + std::to_string(r.m) + " is not in {0,1}"});
    }
    if (r.y < 1 || r.y > J) {
      issues.push_back(
          {i, "y", "value " + std::to_string(r.y) + " is outside 1.." + std::to_string(J)});
    }
    if (r.c.size() != p) {
      issues.push_back({i, "c",
                        "has " + std::to_string(r.c.size()) + " covariates, expected " +
                            std::to_string(p)});
    } else {
      for (std::size_t k = 0; k < p; ++k) {
        if (!std::isfinite(r.c[k])) {
          issues.push_back({i, "c" + std::to_string(k + 1), "not a finite number"});
        }
      }
    }
  }
  if (!issues.empty()) throw DatasetError(std::move(issues));

  Dataset data;
  data.records_ = std::move(records);
  data.levels_ = J;
  data.p_ = p;
  return data;
}

double mediator_probability(const MediatorModel& model, double x, std::span<const double> c) {
  return expit(model.linear_predictor(x, c));
}

double cumulative_probability(const OutcomeModel& model, int j, double x, int m,
                              std::span<const double> c) {
  return expit(model.alpha(j) - model.linear_predictor(x, m, c));
}

double exceedance_probability(const OutcomeModel& model, int j, double x, int m,
                              std::span<const double> c) {
  return expit(model.linear_predictor(x, m, c) - model.alpha(j));
}

std::vector<double> category_probabilities(const OutcomeModel& model, double x, int m,
                                           std::span<const double> c) {
  const int J = model.levels();
  const double eta = model.linear_predictor(x, m, c);
  const auto& alpha = model.alpha();
  std::vector<double> probs(static_cast<std::size_t>(J));
  // F(u) - F(l) = F(u) F(-l) (1 - exp(l - u)), free of cancellation.
  probs.front() = expit(alpha.front() - eta);
  for (std::size_t j = 1; j + 1 < probs.size(); ++j) {
    const double upper = alpha[j] - eta;
    const double lower = alpha[j - 1] - eta;
    probs[j] = expit(upper) * expit(-lower) * -std::expm1(lower - upper);
  }
  probs.back() = expit(eta - alpha.back());
  return probs;
}

}  // namespace ordmed
