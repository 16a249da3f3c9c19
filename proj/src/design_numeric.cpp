#include "tomoplan/design_numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

constexpr double kActiveWeight = 1e-12;
constexpr double kArmijo = 1e-4;

struct Inverses {
  Eigen::MatrixXd inv;
  Eigen::MatrixXd inv2;
};

Inverses fisher_inverses(const Eigen::MatrixXd& F) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (F + F.transpose()));
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const double top = ev.maxCoeff();
  if (!(top > 0.0) || ev.minCoeff() < kSingularRatio * top) {
    throw SingularityError("Fisher information is singular at this design");
  }
  const Eigen::MatrixXd& V = solver.eigenvectors();
  Inverses out;
  out.inv = V * ev.cwiseInverse().asDiagonal() * V.transpose();
  out.inv2 = V * ev.cwiseInverse().cwiseAbs2().asDiagonal() * V.transpose();
  return out;
}

Eigen::VectorXd expand_blocks(const Eigen::VectorXd& per_block, const std::vector<int>& offsets) {
  Eigen::VectorXd out(offsets.back());
  for (std::size_t g = 0; g + 1 < offsets.size(); ++g) {
    out.segment(offsets[g], offsets[g + 1] - offsets[g]).setConstant(per_block(g));
  }
  return out;
}

}  // namespace

CrbObjective::CrbObjective(Eigen::MatrixXd rows, Eigen::VectorXd outcome_weights, std::vector<int> offsets)
    : rows_(std::move(rows)), weights_(std::move(outcome_weights)), offsets_(std::move(offsets)) {
  if (offsets_.size() < 2 || offsets_.back() != rows_.rows() || weights_.size() != rows_.rows()) {
    throw DimensionError("objective rows, weights and configuration blocks disagree in size");
  }
}

Eigen::MatrixXd CrbObjective::fisher(const Eigen::VectorXd& lambda) const {
  return weighted_gram(rows_, expand_blocks(lambda, offsets_).cwiseProduct(weights_));
}

double CrbObjective::value(const Eigen::VectorXd& lambda) const {
  return fisher_bundle(fisher(lambda)).crb;
}

void CrbObjective::derivatives(const Eigen::VectorXd& lambda, Eigen::VectorXd& gradient,
                               Eigen::MatrixXd* hessian) const {
  const Inverses fi = fisher_inverses(fisher(lambda));
  const Eigen::MatrixXd S2 = rows_ * fi.inv2 * rows_.transpose();
  const int m = size();
  gradient.resize(m);
  for (int g = 0; g < m; ++g) {
    double acc = 0.0;
    for (int a = offsets_[g]; a < offsets_[g + 1]; ++a) acc += weights_(a) * S2(a, a);
    gradient(g) = -acc;
  }
  if (!hessian) return;
  const Eigen::MatrixXd S1 = rows_ * fi.inv * rows_.transpose();
  const Eigen::MatrixXd prod = weights_.asDiagonal() * S1.cwiseProduct(S2) * weights_.asDiagonal();
  hessian->resize(m, m);
  for (int g = 0; g < m; ++g) {
    for (int d = 0; d < m; ++d) {
      (*hessian)(g, d) = 2.0 * prod.block(offsets_[g], offsets_[d], offsets_[g + 1] - offsets_[g],
                                          offsets_[d + 1] - offsets_[d]).sum();
    }
  }
  *hessian = 0.5 * (*hessian + hessian->transpose());
}

double stationarity_residual(const Eigen::VectorXd& lambda, const Eigen::VectorXd& gradient) {
  const double mean = lambda.dot(gradient);
  Eigen::VectorXd res(lambda.size());
  for (int g = 0; g < lambda.size(); ++g) {
    const double dev = gradient(g) - mean;
    res(g) = lambda(g) > kActiveWeight ? dev : std::min(0.0, dev);
  }
  const double scale = std::abs(mean) > 0.0 ? std::abs(mean) : 1.0;
  return res.norm() / scale;
}

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

Eigen::VectorXd to_lambda(const Eigen::VectorXd& mu) {
  const Eigen::VectorXd sq = mu.cwiseAbs2();
  return sq / sq.sum();
}

}  // namespace

OptimizationResult minimize_on_simplex(const SimplexObjective& objective, const OptimizerSettings& settings) {
  const int m = objective.size();
  if (settings.tolerance <= 0.0) throw ValidationError("optimizer tolerance must be positive");
  if (settings.max_iterations < 1) throw ValidationError("optimizer needs at least one iteration");

  Design start = settings.initial ? *settings.initial : Design::uniform(m);
  check_design(start, m);
  Eigen::VectorXd lambda0 = start.weights;
  if (lambda0.minCoeff() <= 0.0) {
    // zero components can never re-enter under the squared parameterization
    lambda0 = (1.0 - 1e-6) * lambda0 + Eigen::VectorXd::Constant(m, 1e-6 / m);
  }
  Eigen::VectorXd mu = lambda0.cwiseSqrt();
  mu /= mu.norm();

  Eigen::VectorXd lambda = to_lambda(mu);
  double phi = objective.value(lambda);
  if (!std::isfinite(phi)) {
    throw SingularityError("objective is not finite at the initial design");
  }

  Eigen::VectorXd G;
  Eigen::MatrixXd H;
  double residual = std::numeric_limits<double>::infinity();
  bool noise_floor = false;
  int flat_steps = 0;
  int it = 0;
  for (;; ++it) {
    objective.derivatives(lambda, G, &H);
    residual = stationarity_residual(lambda, G);
    if (residual < settings.tolerance) break;
    if (it >= settings.max_iterations) {
      throw ConvergenceError("design optimizer did not converge in " + std::to_string(it) +
                                 " iterations (residual " + sci(residual) + ")",
                             lambda, residual, it);
    }

    // chain rule through lambda = mu^2 / |mu|^2 with |mu| = 1
    const double gbar = lambda.dot(G);
    Eigen::MatrixXd J(m, m);
    for (int k = 0; k < m; ++k) {
      for (int g = 0; g < m; ++g) J(g, k) = 2.0 * mu(k) * ((g == k ? 1.0 : 0.0) - lambda(g));
    }
    const Eigen::VectorXd grad_mu = J.transpose() * G;
    Eigen::MatrixXd H_mu = J.transpose() * H * J;
    for (int k = 0; k < m; ++k) {
      for (int l = 0; l < m; ++l) {
        double c = -4.0 * (G(k) + G(l)) * mu(k) * mu(l) + 8.0 * gbar * mu(k) * mu(l);
        if (k == l) c += 2.0 * (G(k) - gbar);
        H_mu(k, l) += c;
      }
    }
    // phi is scale invariant in mu: solve on the tangent space of the sphere,
    // parking the radial direction on a harmless eigenvalue
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) - mu * mu.transpose();
    Eigen::MatrixXd H_t = P * (0.5 * (H_mu + H_mu.transpose())) * P;
    const double radial = std::max(H_t.diagonal().cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    H_t += radial * mu * mu.transpose();
    const Eigen::VectorXd grad_t = P * grad_mu;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H_t);
    Eigen::VectorXd ev = solver.eigenvalues().cwiseAbs();
    const double floor = std::max(1e-10 * ev.maxCoeff(), std::numeric_limits<double>::min());
    ev = ev.cwiseMax(floor);
    Eigen::VectorXd step = -solver.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                           (solver.eigenvectors().transpose() * grad_t);
    step = P * step;
    const double decrement = -0.5 * grad_t.dot(step);
    const double phi_before = phi;

    bool moved = false;
    for (int attempt = 0; attempt < 2 && !moved; ++attempt) {
      if (attempt == 1) step = -grad_t / std::max(ev.maxCoeff(), std::numeric_limits<double>::min());
      const double slope = grad_mu.dot(step);
      double t = 1.0;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        Eigen::VectorXd trial = mu + t * step;
        const double n = trial.norm();
        if (!(n > 0.0)) continue;
        trial /= n;
        const Eigen::VectorXd lt = to_lambda(trial);
        const double val = objective.value(lt);
        if (!std::isfinite(val)) continue;
        const bool armijo = val <= phi + kArmijo * t * slope;
        const bool flat = k == 0 && val <= phi + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(phi);
        if (armijo || flat) {
          mu = trial;
          lambda = lt;
          phi = val;
          moved = true;
          break;
        }
      }
    }
    // an ill-conditioned F caps the attainable residual: stop once phi
    // no longer decreases and the model predicts nothing above rounding
    const bool negligible = decrement <= 1e3 * std::numeric_limits<double>::epsilon() * std::abs(phi);
    if (moved && phi < phi_before) {
      flat_steps = 0;
    } else if (moved && ++flat_steps >= 3 && negligible) {
      noise_floor = true;
      break;
    }
    if (!moved && negligible) {
      noise_floor = true;
      break;
    }
    if (!moved) {
      throw ConvergenceError("design optimizer line search stalled (residual " + sci(residual) + ")",
                             lambda, residual, it);
    }
  }

  OptimizationResult out;
  out.design = Design{lambda, {}};
  out.objective = phi;
  out.residual = residual;
  out.iterations = it;
  out.eta = -G.mean();
  if (noise_floor) {
    out.design.warnings.push_back("stopped at the rounding floor of the objective (residual " +
                                  sci(residual) + ")");
  }
  for (int g = 0; g < m; ++g) {
    if (lambda(g) <= kActiveWeight) {
      out.design.warnings.push_back("configuration " + std::to_string(g) + " receives zero weight");
    }
  }
  return out;
}

Eigen::VectorXd cost_gradient(const ExperimentSetup& setup, const Design& design,
                              const Eigen::VectorXd& outcome_weights, double eta) {
  check_design(design, setup.config_count());
  const CrbObjective obj(setup.A(), outcome_weights, setup.block_offsets());
  Eigen::VectorXd G;
  obj.derivatives(design.weights, G, nullptr);
  return G.array() + eta;
}

Eigen::MatrixXd cost_hessian(const ExperimentSetup& setup, const Design& design,
                             const Eigen::VectorXd& outcome_weights) {
  check_design(design, setup.config_count());
  const CrbObjective obj(setup.A(), outcome_weights, setup.block_offsets());
  Eigen::VectorXd G;
  Eigen::MatrixXd H;
  obj.derivatives(design.weights, G, &H);
  return H;
}

OptimizationResult optimize_design_weighted(const ExperimentSetup& setup, const Eigen::VectorXd& outcome_weights,
                                            const OptimizerSettings& settings) {
  if (outcome_weights.size() != setup.outcome_count()) {
    throw DimensionError("outcome weights have the wrong length");
  }
  const CrbObjective obj(setup.A(), outcome_weights, setup.block_offsets());
  OptimizationResult res = minimize_on_simplex(obj, settings);
  if (settings.initial) {
    // convex objective; guard against a poor starting point all the same
    const double uniform = obj.value(Design::uniform(setup.config_count()).weights);
    if (uniform < res.objective - 1e-9) {
      OptimizerSettings again = settings;
      again.initial.reset();
      res = minimize_on_simplex(obj, again);
    }
  }
  return res;
}

OptimizationResult optimize_design(const ExperimentSetup& setup, const Eigen::VectorXd& r,
                                   const OptimizerSettings& settings) {
  const Eigen::VectorXd p = probabilities(setup, r);
  return optimize_design_weighted(setup, inverse_probability_weights(setup, p), settings);
}

ShotAllocation round_design(const Design& design, long long n_total) {
  if (n_total < 0) throw ValidationError("total shot count must be nonnegative");
  check_design(design, design.size());
  const int m = design.size();
  ShotAllocation out;
  out.shots.assign(m, 0);
  std::vector<long long> frac_key(m);
  long long assigned = 0;
  for (int g = 0; g < m; ++g) {
    const double exact = static_cast<double>(n_total) * design[g];
    const double base = std::floor(exact);
    out.shots[g] = static_cast<long long>(base);
    assigned += out.shots[g];
    // quantized so that rounding noise cannot break exact ties
    frac_key[g] = std::llround((exact - base) * 1e9);
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac_key[a] > frac_key[b]; });
  for (long long left = n_total - assigned, k = 0; left > 0; --left, ++k) {
    ++out.shots[order[k % m]];
  }
  for (int g = 0; g < m; ++g) {
    if (design[g] > 0.0 && out.shots[g] == 0) out.starved = true;
  }
  return out;
}

}  // namespace tomoplan
