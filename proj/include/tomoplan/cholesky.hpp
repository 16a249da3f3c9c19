#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tomoplan/design_numeric.hpp"
#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

/// rho = T^dagger T with T upper triangular and real, nonnegative diagonal.
///
/// t stacks vec(Re L) then vec(Im L) for L = T^dagger (column-major, length
/// 2N^2). theta keeps the N(N+1)/2 lower-triangular real entries followed by
/// the N(N-1)/2 strictly-lower imaginary entries, in the order they occur in t.
struct CholeskyState {
  ComplexMatrix T;
  Eigen::VectorXd t;
  Eigen::VectorXd theta;
};

/// Positions in t of the theta entries.
std::vector<int> theta_indices(int dimension);

/// Lower-triangular L with rho = L L^dagger. A pivot at or below 1e-13 leaves
/// its column zero (zeros stay on the diagonal of rank-deficient factors).
ComplexMatrix cholesky_factor(const ComplexMatrix& rho);

/// Throws ValidationError unless rho is Hermitian with unit trace and
/// eigenvalues above -1e-10; tiny negative eigenvalues are clipped first.
CholeskyState cholesky_vector(const ComplexMatrix& rho);
ComplexMatrix theta_to_density(const Eigen::VectorXd& theta, int dimension);

/// Splitter [[1, 1], [-i, i]] kron I_{N^2}.
ComplexMatrix separation_matrix(int dimension);

struct QuadraticForms {
  std::vector<Eigen::MatrixXd> P;  // 2N^2 x 2N^2, one per outcome
  std::vector<Eigen::MatrixXd> Q;  // N^2 x N^2, P restricted to theta
};

/// p_ag = theta^T Q_ag theta
QuadraticForms quadratic_forms(const ExperimentSetup& setup);

/// Rows z_ag = 2 theta^T Q_ag.
Eigen::MatrixXd cholesky_rows(const QuadraticForms& forms, const Eigen::VectorXd& theta);
Eigen::VectorXd cholesky_probabilities(const QuadraticForms& forms, const Eigen::VectorXd& theta);

struct CholeskyFisher {
  FisherBundle bundle;
  std::vector<std::string> warnings;
};

/// F = Z^T Lambda P^-1 Z in theta space.
CholeskyFisher fisher_cholesky(const ExperimentSetup& setup, const QuadraticForms& forms, const Design& design,
                               const Eigen::VectorXd& theta);

enum class Completion { Householder, Svd };

/// Orthonormal columns spanning the complement of theta.
Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& theta, Completion method = Completion::Householder);

/// tr{(U^T F U)^-1}; +infinity when the restricted matrix is singular.
double ccrb(const Eigen::MatrixXd& F, const Eigen::VectorXd& theta, Completion method = Completion::Householder);
/// tr{F^-1} - 1/4; +infinity when F is singular.
double ccrb_closed_form(const Eigen::MatrixXd& F);

/// tr{F^-1} over the simplex with rows Z(theta) and weights 1/p(theta).
CrbObjective cholesky_objective(const ExperimentSetup& setup, const QuadraticForms& forms,
                                const Eigen::VectorXd& theta);

OptimizationResult optimize_design_cholesky(const ExperimentSetup& setup, const QuadraticForms& forms,
                                            const Eigen::VectorXd& theta, const OptimizerSettings& settings = {});

}  // namespace tomoplan
