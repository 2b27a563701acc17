#include "ordmed/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace ordmed {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double max_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Row of the mediator design: (1, x, c).
Eigen::VectorXd mediator_row(const ObservationRecord& r) {
  Eigen::VectorXd w(2 + r.c.size());
  w(0) = 1.0;
  w(1) = r.x;
  for (std::size_t k = 0; k < r.c.size(); ++k) w(2 + k) = r.c[k];
  return w;
}

// Slope covariates of the outcome model: (x, m, x m, c).
Eigen::VectorXd outcome_row(const ObservationRecord& r) {
  Eigen::VectorXd z(3 + r.c.size());
  z(0) = r.x;
  z(1) = r.m;
  z(2) = r.x * r.m;
  for (std::size_t k = 0; k < r.c.size(); ++k) z(3 + k) = r.c[k];
  return z;
}

// log P(Y=y) and its first and second derivatives with respect to the upper
// argument u = alpha_y - eta and the lower argument l = alpha_{y-1} - eta.
struct CategoryTerms {
  double logp = 0.0;
  double du = 0.0, dl = 0.0;
  double duu = 0.0, dll = 0.0, dul = 0.0;
};

CategoryTerms category_terms(const std::vector<double>& alpha, int y, double eta) {
  const int J = static_cast<int>(alpha.size()) + 1;
  const bool has_upper = y < J;
  const bool has_lower = y > 1;
  const double u = has_upper ? alpha[static_cast<std::size_t>(y - 1)] - eta : 0.0;
  const double l = has_lower ? alpha[static_cast<std::size_t>(y - 2)] - eta : 0.0;

  CategoryTerms t;
  if (has_upper) {
    // log F(u)
    t.logp -= log1pexp(-u);
    t.du += expit(-u);
    t.duu -= expit(u) * expit(-u);
  }
  if (has_lower) {
    // log F(-l)
    t.logp -= log1pexp(l);
    t.dl -= expit(l);
    t.dll -= expit(l) * expit(-l);
  }
  if (has_upper && has_lower) {
    // log(1 - exp(l - u)), u > l
    const double gap = u - l;
    t.logp += std::log(-std::expm1(-gap));
    const double r = 1.0 / std::expm1(gap);
    const double r2 = r + r * r;
    t.du += r;
    t.dl -= r;
    t.duu -= r2;
    t.dll -= r2;
    t.dul += r2;
  }
  return t;
}

template <typename Derivs>
double outcome_pass(const OutcomeModel& model, const Dataset& data, Derivs&& accumulate) {
  const auto& alpha = model.alpha();
  double total = 0.0;
  for (const auto& r : data.records()) {
    const double eta = model.linear_predictor(r.x, r.m, r.c);
    const CategoryTerms t = category_terms(alpha, r.y, eta);
    total += t.logp;
    accumulate(r, t);
  }
  return total;
}

void require_dims(const Dataset& data, std::size_t model_dim, int model_levels) {
  if (data.covariate_dim() != model_dim) {
    throw ValidationError("model covariate dimension does not match the dataset");
  }
  if (model_levels > 0 && data.levels() != model_levels) {
    throw ValidationError("model number of levels does not match the dataset");
  }
}

// Solves (-H) s = g, falling back to a ridge-damped system when -H is not
// positive definite and finally to a scaled gradient step.
Eigen::VectorXd ascent_direction(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& gradient) {
  const Eigen::MatrixXd info = -hessian;
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd step = llt.solve(gradient);
    if (step.allFinite()) return step;
  }
  const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
  const Eigen::Index k = info.rows();
  for (double lambda = 1e-8 * scale; lambda < 1e12 * scale; lambda *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> damped(info + lambda * Eigen::MatrixXd::Identity(k, k));
    if (damped.info() == Eigen::Success) {
      Eigen::VectorXd step = damped.solve(gradient);
      if (step.allFinite()) return step;
    }
  }
  return gradient / std::max(1.0, gradient.norm());
}

struct Evaluation {
  double value = kNegInf;
  Eigen::VectorXd gradient;  // working parameterization
  Eigen::MatrixXd hessian;
  Eigen::VectorXd natural_gradient;
  Eigen::VectorXd natural;
};

struct NewtonOutcome {
  Eigen::VectorXd theta;
  Evaluation at;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton maximization shared by both models. `value` must return
// -infinity for infeasible points.
NewtonOutcome newton_maximize(Eigen::VectorXd theta,
                              const std::function<Evaluation(const Eigen::VectorXd&)>& evaluate,
                              const std::function<double(const Eigen::VectorXd&)>& value,
                              const FitOptions& opt, const char* what) {
  NewtonOutcome res;
  Evaluation cur = evaluate(theta);
  if (!std::isfinite(cur.value)) {
    throw FitError(FitFailure::not_converged,
                   std::string(what) + ": log-likelihood is not finite at the starting values");
  }

  std::vector<double> norm_history{cur.natural.norm()};
  int flat_steps = 0;
  bool step_small = false;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const Eigen::VectorXd step = ascent_direction(cur.hessian, cur.gradient);
    step_small = max_norm(step) <= 1e-5 * (1.0 + max_norm(theta));
    if (max_norm(cur.natural_gradient) <= opt.gradient_tolerance && step_small) break;

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    std::optional<Evaluation> next;
    for (int h = 0; h <= opt.max_step_halvings; ++h, t *= 0.5) {
      candidate = theta + t * step;
      const double v = value(candidate);
      if (!std::isfinite(v)) continue;
      if (v > cur.value) {
        accepted = true;
        break;
      }
      // At the precision floor of the likelihood a full Newton step is kept
      // when it still shrinks the gradient.
      if (h == 0 && v >= cur.value - opt.relative_loglik_tolerance * std::abs(cur.value)) {
        Evaluation e = evaluate(candidate);
        if (max_norm(e.natural_gradient) < max_norm(cur.natural_gradient)) {
          next = std::move(e);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;  // numerical floor

    const double previous = cur.value;
    theta = candidate;
    cur = next ? std::move(*next) : evaluate(theta);
    norm_history.push_back(cur.natural.norm());
    if (cur.natural.norm() > opt.separation_norm) {
      throw FitError(FitFailure::separation,
                     std::string(what) +
                         ": parameter norm diverged while the likelihood kept improving "
                         "(separation)");
    }
    // Many consecutive flat iterations: stalled.
    if (std::abs(cur.value - previous) <= opt.relative_loglik_tolerance * std::abs(previous)) {
      if (++flat_steps >= 5) {
        ++it;
        break;
      }
    } else {
      flat_steps = 0;
    }
  }

  res.theta = theta;
  res.iterations = it;
  const double grad = max_norm(cur.natural_gradient);
  if (grad <= opt.gradient_tolerance) {
    const Eigen::VectorXd step = ascent_direction(cur.hessian, cur.gradient);
    step_small = max_norm(step) <= 1e-5 * (1.0 + max_norm(theta));
  }
  res.converged = grad <= opt.gradient_tolerance && step_small;
  res.at = std::move(cur);
  if (!res.converged) {
    // A norm that keeps growing over the tail of the run means the supremum
    // is approached at infinity. Slow drifts show up over the longer window.
    const std::size_t n = norm_history.size();
    bool growing = false;
    for (std::size_t w : {10, 20}) {
      growing = growing || (n > w && norm_history[n - 1] > norm_history[n - 1 - w] + 1.0 &&
                            std::is_sorted(norm_history.end() - (w + 1), norm_history.end()));
    }
    std::ostringstream msg;
    msg << what << ": ";
    if (growing) {
      msg << "parameter norm keeps growing with improving likelihood (separation)";
      throw FitError(FitFailure::separation, msg.str());
    }
    msg << "Newton iterations stopped after " << it << " iterations with gradient max-norm "
        << grad;
    throw FitError(FitFailure::not_converged, msg.str());
  }
  return res;
}

void check_rank(const Eigen::MatrixXd& design, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) {
    std::ostringstream msg;
    msg << what << ": design matrix has rank " << qr.rank() << " < " << design.cols()
        << " columns";
    throw FitError(FitFailure::rank_deficient, msg.str());
  }
}

Eigen::MatrixXd invert_information(const Eigen::MatrixXd& hessian) {
  const Eigen::Index k = hessian.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(-hessian);
  if (llt.info() != Eigen::Success) return Eigen::MatrixXd::Constant(k, k, kNaN);
  return llt.solve(Eigen::MatrixXd::Identity(k, k));
}

Eigen::VectorXd standard_errors_from(const Eigen::MatrixXd& cov) {
  Eigen::VectorXd se(cov.rows());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    se(i) = cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) : kNaN;
  }
  return se;
}

// Working <-> natural outcome parameters.
Eigen::VectorXd outcome_natural(const Eigen::VectorXd& theta, int J) {
  Eigen::VectorXd nat = theta;
  for (int j = 1; j < J - 1; ++j) nat(j) = nat(j - 1) + std::exp(theta(j));
  return nat;
}

Eigen::MatrixXd outcome_jacobian(const Eigen::VectorXd& theta, int J) {
  const Eigen::Index k = theta.size();
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(k, k);
  for (int j = 1; j < J - 1; ++j) {
    for (int d = 1; d <= j; ++d) jac(j, d) = std::exp(theta(d));
    jac(j, 0) = 1.0;
  }
  return jac;
}

}  // namespace

const char* to_string(FitFailure failure) {
  switch (failure) {
    case FitFailure::not_converged: return "not_converged";
    case FitFailure::rank_deficient: return "rank_deficient";
    case FitFailure::separation: return "separation";
    case FitFailure::empty_category: return "empty_category";
    case FitFailure::single_mediator_value: return "single_mediator_value";
    case FitFailure::ordering_violation: return "ordering_violation";
  }
  return "unknown";
}

FitError::FitError(FitFailure kind, const std::string& what)
    : std::runtime_error(what), kind_(kind) {}

Eigen::VectorXd pack(const MediatorModel& model) {
  Eigen::VectorXd theta(2 + model.covariate_dim());
  theta(0) = model.gamma0();
  theta(1) = model.gammaX();
  for (std::size_t k = 0; k < model.covariate_dim(); ++k) theta(2 + k) = model.gammaC()[k];
  return theta;
}

Eigen::VectorXd pack(const OutcomeModel& model) {
  const std::size_t na = model.alpha().size();
  Eigen::VectorXd theta(na + 3 + model.covariate_dim());
  for (std::size_t j = 0; j < na; ++j) theta(j) = model.alpha()[j];
  theta(na) = model.betaX();
  theta(na + 1) = model.betaM();
  theta(na + 2) = model.betaXM();
  for (std::size_t k = 0; k < model.covariate_dim(); ++k) theta(na + 3 + k) = model.betaC()[k];
  return theta;
}

MediatorModel unpack_mediator(const Eigen::VectorXd& theta) {
  if (theta.size() < 2) throw ValidationError("mediator parameter vector too short");
  return MediatorModel(theta(0), theta(1), std::vector<double>(theta.data() + 2, theta.data() + theta.size()));
}

OutcomeModel unpack_outcome(const Eigen::VectorXd& theta, int J) {
  if (J < 2 || theta.size() < J + 2) throw ValidationError("outcome parameter vector too short");
  const auto na = static_cast<std::size_t>(J - 1);
  std::vector<double> alpha(theta.data(), theta.data() + na);
  std::vector<double> betaC(theta.data() + na + 3, theta.data() + theta.size());
  return OutcomeModel(std::move(alpha), theta(na), theta(na + 1), theta(na + 2), std::move(betaC));
}

double loglik_mediator(const MediatorModel& model, const Dataset& data) {
  require_dims(data, model.covariate_dim(), 0);
  double total = 0.0;
  for (const auto& r : data.records()) {
    const double eta = model.linear_predictor(r.x, r.c);
    total -= log1pexp(r.m == 1 ? -eta : eta);
  }
  return total;
}

double loglik_outcome(const OutcomeModel& model, const Dataset& data) {
  require_dims(data, model.covariate_dim(), model.levels());
  return outcome_pass(model, data, [](const ObservationRecord&, const CategoryTerms&) {});
}

LoglikDerivatives mediator_derivatives(const MediatorModel& model, const Dataset& data) {
  require_dims(data, model.covariate_dim(), 0);
  const Eigen::Index k = static_cast<Eigen::Index>(2 + model.covariate_dim());
  LoglikDerivatives d;
  d.gradient = Eigen::VectorXd::Zero(k);
  d.hessian = Eigen::MatrixXd::Zero(k, k);
  for (const auto& r : data.records()) {
    const double eta = model.linear_predictor(r.x, r.c);
    const double p = expit(eta);
    const Eigen::VectorXd w = mediator_row(r);
    d.value -= log1pexp(r.m == 1 ? -eta : eta);
    d.gradient += (r.m - p) * w;
    d.hessian.noalias() -= (p * expit(-eta)) * w * w.transpose();
  }
  return d;
}

LoglikDerivatives outcome_derivatives(const OutcomeModel& model, const Dataset& data) {
  require_dims(data, model.covariate_dim(), model.levels());
  const int na = model.levels() - 1;
  const Eigen::Index k = na + 3 + static_cast<Eigen::Index>(model.covariate_dim());
  const Eigen::Index nb = k - na;
  LoglikDerivatives d;
  d.gradient = Eigen::VectorXd::Zero(k);
  d.hessian = Eigen::MatrixXd::Zero(k, k);
  d.value = outcome_pass(model, data, [&](const ObservationRecord& r, const CategoryTerms& t) {
    const Eigen::VectorXd z = outcome_row(r);
    const int up = r.y - 1;   // index of alpha_y
    const int low = r.y - 2;  // index of alpha_{y-1}
    if (r.y <= na) {
      d.gradient(up) += t.du;
      d.hessian(up, up) += t.duu;
      d.hessian.block(up, na, 1, nb) -= (t.duu + t.dul) * z.transpose();
    }
    if (r.y >= 2) {
      d.gradient(low) += t.dl;
      d.hessian(low, low) += t.dll;
      d.hessian.block(low, na, 1, nb) -= (t.dul + t.dll) * z.transpose();
    }
    if (r.y <= na && r.y >= 2) {
      d.hessian(up, low) += t.dul;
      d.hessian(low, up) += t.dul;
    }
    d.gradient.tail(nb) -= (t.du + t.dl) * z;
    d.hessian.bottomRightCorner(nb, nb).noalias() += (t.duu + 2.0 * t.dul + t.dll) * z * z.transpose();
  });
  d.hessian.bottomLeftCorner(nb, na) = d.hessian.topRightCorner(na, nb).transpose();
  return d;
}

FitResult<MediatorModel> fit_mediator(const Dataset& data, const FitOptions& options) {
  const std::size_t n = data.size();
  const std::size_t p = data.covariate_dim();
  std::size_t ones = 0;
  Eigen::MatrixXd design(n, 2 + p);
  for (std::size_t i = 0; i < n; ++i) {
    design.row(i) = mediator_row(data[i]).transpose();
    ones += static_cast<std::size_t>(data[i].m);
  }
  if (ones == 0 || ones == n) {
    throw FitError(FitFailure::single_mediator_value,
                   "mediator fit: M takes a single value in the data");
  }
  check_rank(design, "mediator fit");

  auto evaluate = [&](const Eigen::VectorXd& theta) {
    const LoglikDerivatives d = mediator_derivatives(unpack_mediator(theta), data);
    return Evaluation{d.value, d.gradient, d.hessian, d.gradient, theta};
  };
  auto value = [&](const Eigen::VectorXd& theta) {
    return loglik_mediator(unpack_mediator(theta), data);
  };

  const NewtonOutcome opt = newton_maximize(Eigen::VectorXd::Zero(2 + p), evaluate, value,
                                            options, "mediator fit");
  FitResult<MediatorModel> fit;
  fit.model = unpack_mediator(opt.theta);
  fit.loglik = opt.at.value;
  fit.gradient_norm = max_norm(opt.at.natural_gradient);
  fit.iterations = opt.iterations;
  fit.covariance = invert_information(opt.at.hessian);
  fit.standard_errors = standard_errors_from(fit.covariance);
  fit.converged = opt.converged;
  return fit;
}

FitResult<OutcomeModel> fit_outcome(const Dataset& data, const FitOptions& options) {
  const int J = data.levels();
  const std::size_t n = data.size();
  const std::size_t p = data.covariate_dim();

  std::vector<std::size_t> counts(static_cast<std::size_t>(J), 0);
  for (const auto& r : data.records()) ++counts[static_cast<std::size_t>(r.y - 1)];
  for (int j = 1; j <= J; ++j) {
    if (counts[static_cast<std::size_t>(j - 1)] == 0) {
      throw FitError(FitFailure::empty_category,
                     "outcome fit: level " + std::to_string(j) + " of " + std::to_string(J) +
                         " is never observed");
    }
  }

  Eigen::MatrixXd design(n, 4 + p);
  for (std::size_t i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design.row(i).tail(3 + p) = outcome_row(data[i]).transpose();
  }
  check_rank(design, "outcome fit");

  // Start at the empirical marginal cumulative logits with zero slopes.
  const Eigen::Index k = J - 1 + 3 + static_cast<Eigen::Index>(p);
  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(k);
  double cum = 0.0;
  double previous_alpha = 0.0;
  for (int j = 1; j < J; ++j) {
    cum += static_cast<double>(counts[static_cast<std::size_t>(j - 1)]);
    const double alpha = logit(cum / static_cast<double>(n));
    theta0(j - 1) = j == 1 ? alpha : std::log(alpha - previous_alpha);
    previous_alpha = alpha;
  }

  auto natural_model = [J](const Eigen::VectorXd& theta) {
    return unpack_outcome(outcome_natural(theta, J), J);
  };
  auto evaluate = [&](const Eigen::VectorXd& theta) {
    const OutcomeModel model = natural_model(theta);
    const LoglikDerivatives d = outcome_derivatives(model, data);
    const Eigen::MatrixXd jac = outcome_jacobian(theta, J);
    Evaluation e;
    e.value = d.value;
    e.gradient = jac.transpose() * d.gradient;
    e.hessian = jac.transpose() * d.hessian * jac;
    for (int q = 1; q < J - 1; ++q) {
      e.hessian(q, q) += std::exp(theta(q)) * d.gradient.segment(q, J - 1 - q).sum();
    }
    e.natural_gradient = d.gradient;
    e.natural = pack(model);
    return e;
  };
  auto value = [&](const Eigen::VectorXd& theta) {
    try {
      return loglik_outcome(natural_model(theta), data);
    } catch (const ValidationError&) {
      return kNegInf;  // thresholds collapsed numerically
    }
  };

  NewtonOutcome opt;
  try {
    opt = newton_maximize(theta0, evaluate, value, options, "outcome fit");
  } catch (const ValidationError& e) {
    throw FitError(FitFailure::ordering_violation,
                   std::string("outcome fit: thresholds lost strict ordering: ") + e.what());
  }

  FitResult<OutcomeModel> fit;
  fit.model = natural_model(opt.theta);
  fit.loglik = opt.at.value;
  fit.gradient_norm = max_norm(opt.at.natural_gradient);
  fit.iterations = opt.iterations;
  // Delta method from the working parameterization.
  const Eigen::MatrixXd jac = outcome_jacobian(opt.theta, J);
  fit.covariance = jac * invert_information(opt.at.hessian) * jac.transpose();
  fit.standard_errors = standard_errors_from(fit.covariance);
  fit.converged = opt.converged;
  return fit;
}

}  // namespace ordmed
