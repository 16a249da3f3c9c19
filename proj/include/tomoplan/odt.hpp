#pragma once

#include <Eigen/Dense>

#include "tomoplan/averaging.hpp"
#include "tomoplan/design_numeric.hpp"
#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

struct VarianceMatrix {
  Eigen::MatrixXd V;  // M x M, block sums of v
  Eigen::MatrixXd v;  // covariance of b over the ball, reduced outcomes
  Eigen::MatrixXd W;  // D A~
  Eigen::MatrixXd X;  // A~ * W elementwise
};

/// Ball covariance of the minimal-kernel vector b(r); minimal setups only.
VarianceMatrix variance_matrix(const ExperimentSetup& setup, const AveragingContext& ctx);

/// <<dB^2>> = lambda^-T V lambda^-1; +infinity when a weight that matters is zero.
double crb_variance(const Eigen::MatrixXd& V, const Design& design);

/// f(lambda) = lambda^-T V lambda^-1 as a simplex objective.
class VarianceObjective final : public SimplexObjective {
 public:
  explicit VarianceObjective(Eigen::MatrixXd V) : V_(std::move(V)) {}
  int size() const override { return static_cast<int>(V_.rows()); }
  double value(const Eigen::VectorXd& lambda) const override;
  void derivatives(const Eigen::VectorXd& lambda, Eigen::VectorXd& gradient, Eigen::MatrixXd* hessian) const override;

 private:
  Eigen::MatrixXd V_;
};

/// ||V lambda^-1 - eta lambda^2|| / ||V lambda^-1|| with eta fitted by least squares.
double odt_residual(const Eigen::MatrixXd& V, const Eigen::VectorXd& lambda);

/// Design minimizing the CRB variance over the ball.
OptimizationResult odt_design(const Eigen::MatrixXd& V, const OptimizerSettings& settings = {});

}  // namespace tomoplan
