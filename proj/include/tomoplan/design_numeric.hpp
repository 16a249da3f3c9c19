#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

struct OptimizerSettings {
  int max_iterations = 500;
  /// Bound on the relative projected-gradient norm at the returned design.
  double tolerance = 1e-9;
  /// Defaults to the uniform design.
  std::optional<Design> initial;
};

/// A smooth objective over the probability simplex, evaluated in lambda.
class SimplexObjective {
 public:
  virtual ~SimplexObjective() = default;
  virtual int size() const = 0;
  /// +infinity outside the domain (singular F, zero weights that matter).
  virtual double value(const Eigen::VectorXd& lambda) const = 0;
  /// Gradient and (optionally) Hessian with respect to lambda.
  virtual void derivatives(const Eigen::VectorXd& lambda, Eigen::VectorXd& gradient,
                           Eigen::MatrixXd* hessian) const = 0;
};

/// B(lambda) = tr{F^-1} with F = rows^T diag(lambda_expanded * w) rows.
/// rows are the a_ag (Bloch) or z_ag (Cholesky); w are 1/p or the averaged g.
class CrbObjective final : public SimplexObjective {
 public:
  CrbObjective(Eigen::MatrixXd rows, Eigen::VectorXd outcome_weights, std::vector<int> offsets);

  int size() const override { return static_cast<int>(offsets_.size()) - 1; }
  double value(const Eigen::VectorXd& lambda) const override;
  void derivatives(const Eigen::VectorXd& lambda, Eigen::VectorXd& gradient, Eigen::MatrixXd* hessian) const override;

  Eigen::MatrixXd fisher(const Eigen::VectorXd& lambda) const;

 private:
  Eigen::MatrixXd rows_;
  Eigen::VectorXd weights_;
  std::vector<int> offsets_;
};

struct OptimizationResult {
  Design design;
  double objective = 0.0;
  /// Relative norm of the projected gradient at `design`.
  double residual = 0.0;
  int iterations = 0;
  /// Lagrange multiplier from the closed-form line search.
  double eta = 0.0;
};

/// Relative KKT residual of a gradient at lambda (see README for the definition).
double stationarity_residual(const Eigen::VectorXd& lambda, const Eigen::VectorXd& gradient);

/// Modified Newton iteration in mu with lambda = mu^2/|mu|^2.
/// Throws ConvergenceError carrying the best iterate on failure.
OptimizationResult minimize_on_simplex(const SimplexObjective& objective, const OptimizerSettings& settings = {});

/// grad J = eta 1 - diag{tr_a[W A F^-2 A^T]}, W = diag(outcome_weights).
Eigen::VectorXd cost_gradient(const ExperimentSetup& setup, const Design& design,
                              const Eigen::VectorXd& outcome_weights, double eta = 0.0);
Eigen::MatrixXd cost_hessian(const ExperimentSetup& setup, const Design& design,
                             const Eigen::VectorXd& outcome_weights);

/// OED at a known state.
OptimizationResult optimize_design(const ExperimentSetup& setup, const Eigen::VectorXd& r,
                                   const OptimizerSettings& settings = {});
/// OED for fixed outcome weights (1/p at a state, or averaged g).
OptimizationResult optimize_design_weighted(const ExperimentSetup& setup, const Eigen::VectorXd& outcome_weights,
                                            const OptimizerSettings& settings = {});

struct ShotAllocation {
  std::vector<long long> shots;
  /// Some configuration with positive weight receives no shots.
  bool starved = false;
};

/// Largest-remainder rounding of N_tot * lambda; ties go to the lower index.
ShotAllocation round_design(const Design& design, long long n_total);

}  // namespace tomoplan
