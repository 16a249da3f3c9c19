#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomoplan/repr.hpp"

namespace tomoplan {

/// Probabilities below this floor on an outcome with positive weight make the
/// Fisher information undefined.
inline constexpr double kProbabilityFloor = 1e-12;
/// F is treated as singular when an eigenvalue falls below this fraction of the largest.
inline constexpr double kSingularRatio = 1e-12;

/// Fractional allocation of shots over configurations; lives on the simplex.
struct Design {
  Eigen::VectorXd weights;
  std::vector<std::string> warnings;

  static Design uniform(int configs);
  /// Normalizes nonnegative weights to sum 1. Throws ValidationError for
  /// negative, non-finite or all-zero input.
  static Design from_weights(const Eigen::VectorXd& weights);

  int size() const { return static_cast<int>(weights.size()); }
  double operator[](int gamma) const { return weights(gamma); }
};

/// Throws ValidationError unless the design has `configs` entries on the simplex (1e-12).
void check_design(const Design& design, int configs);

struct FisherBundle {
  Eigen::MatrixXd F;
  /// tr{F^-1}; +infinity when F is singular.
  double crb = 0.0;
  bool singular = false;
  /// Ascending eigenvalues of F.
  Eigen::VectorXd eigenvalues;
};

/// Sum of inverse eigenvalues with the singularity threshold applied.
FisherBundle fisher_bundle(Eigen::MatrixXd F);

/// F = rows^T diag(outcome_weights) rows, where outcome_weights already
/// include the design (lambda_gamma times 1/p, g, ...).
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& rows, const Eigen::VectorXd& outcome_weights);

/// 1/p_ag at r. Throws SingularityError naming the outcome when p falls below
/// the floor on a configuration whose weight is positive (or any
/// configuration when `active` is empty).
Eigen::VectorXd inverse_probability_weights(const ExperimentSetup& setup, const Eigen::VectorXd& p,
                                            const Eigen::VectorXd& active = {});

/// Fisher information per datum, F = A^T Lambda P^-1 A, with its CRB.
FisherBundle fisher_info(const ExperimentSetup& setup, const Design& design, const Eigen::VectorXd& r);

/// State-independent pieces of the minimal-tomography inverse.
struct MinimalGeometry {
  Eigen::MatrixXd K;      // A~ A~^T
  Eigen::MatrixXd K_inv;
  Eigen::MatrixXd D;      // diagonal blocks of K^-1
  Eigen::VectorXd d;      // diag(K^-1)
};

/// Throws DimensionError for non-minimal setups and SingularityError when A~ is rank deficient.
MinimalGeometry minimal_geometry(const ExperimentSetup& setup);

struct MinimalKernel {
  MinimalGeometry geometry;
  Eigen::VectorXd reduced_p;  // p~
  Eigen::VectorXd b;          // p~ * (d - D p~)
};

MinimalKernel minimal_kernel(const ExperimentSetup& setup, const Eigen::VectorXd& r);

/// B = sum b_ag / lambda_g. A configuration with zero weight and a positive
/// block sum of b yields +infinity.
double crb_minimal(const ExperimentSetup& setup, const Eigen::VectorXd& b, const Design& design);
double crb_minimal(const ExperimentSetup& setup, const MinimalKernel& kernel, const Design& design);

}  // namespace tomoplan
