#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tomoplan {

using ComplexMatrix = Eigen::MatrixXcd;

/// Orthonormal basis of the traceless Hermitian N x N matrices under the trace
/// inner product, built as generalized Gell-Mann matrices.
///
/// Order: all symmetric pairs (E_jk + E_kj)/sqrt(2) for j < k in lexicographic
/// order, then the antisymmetric pairs -i(E_jk - E_kj)/sqrt(2) in the same
/// order, then the diagonal matrices diag(1,...,1,-m,0,...)/sqrt(m(m+1)) for
/// m = 1..N-1. Every Bloch vector, POVM direction and Cholesky index map in the
/// library is expressed in this order.
class HermitianBasis {
 public:
  explicit HermitianBasis(int dimension);

  int dimension() const { return dimension_; }
  /// Number of elements, N^2 - 1.
  int size() const { return static_cast<int>(elements_.size()); }
  const ComplexMatrix& operator[](int j) const { return elements_[j]; }
  const std::vector<ComplexMatrix>& elements() const { return elements_; }

  /// identity_coeff * I + sum_j coeffs_j sigma_j
  ComplexMatrix compose(double identity_coeff, const Eigen::VectorXd& coeffs) const;
  /// Coefficients Re tr{M sigma_j}.
  Eigen::VectorXd project(const ComplexMatrix& m) const;

 private:
  int dimension_;
  std::vector<ComplexMatrix> elements_;
};

HermitianBasis generate_basis(int dimension);

struct BlochState {
  Eigen::VectorXd r;
  bool physical = false;
};

/// r_j = tr{rho sigma_j}. Throws ValidationError unless rho is Hermitian with unit trace.
BlochState density_to_bloch(const ComplexMatrix& rho, const HermitianBasis& basis);
/// rho = I/N + r.sigma
ComplexMatrix bloch_to_density(const Eigen::VectorXd& r, const HermitianBasis& basis);

double min_eigenvalue(const ComplexMatrix& hermitian);
bool is_physical(const Eigen::VectorXd& r, const HermitianBasis& basis, double tolerance = 1e-10);
/// Largest Bloch radius of any state, sqrt((N-1)/N).
double max_bloch_radius(int dimension);

struct PovmOutcome {
  ComplexMatrix matrix;
  double offset = 0.0;         // c
  Eigen::VectorXd direction;   // a
};

/// Pi = c I + a.sigma with c = tr{Pi}/N and a_j = tr{Pi sigma_j}.
/// Throws ValidationError when Pi has an eigenvalue below -1e-10.
PovmOutcome povm_to_affine(const ComplexMatrix& element, const HermitianBasis& basis);

struct MeasurementConfig {
  std::string label;
  std::vector<PovmOutcome> outcomes;
};

/// Labelled POVM matrices for one configuration, before projection.
struct ConfigMatrices {
  std::string label;
  std::vector<ComplexMatrix> elements;
};

/// A fixed set of measurement configurations together with the affine
/// statistics map p = c + A r.
///
/// Construction only projects the matrices onto the basis; it does not check
/// completeness or positivity. Use validate_setup (or require_valid) before
/// trusting the derived quantities.
///
/// Rows of A follow the stored outcome order, configuration by configuration.
/// The reduced matrix A~ drops the final stored outcome of every configuration.
class ExperimentSetup {
 public:
  ExperimentSetup(HermitianBasis basis, std::vector<ConfigMatrices> configs);

  int dimension() const { return basis_.dimension(); }
  int parameter_count() const { return basis_.size(); }
  int config_count() const { return static_cast<int>(configs_.size()); }
  int outcome_count() const { return offsets_.back(); }
  int reduced_count() const { return reduced_offsets_.back(); }
  bool is_minimal() const { return reduced_count() == parameter_count(); }

  const HermitianBasis& basis() const { return basis_; }
  const MeasurementConfig& config(int gamma) const { return configs_[gamma]; }
  const std::vector<MeasurementConfig>& configs() const { return configs_; }

  int block_offset(int gamma) const { return offsets_[gamma]; }
  int block_size(int gamma) const { return offsets_[gamma + 1] - offsets_[gamma]; }
  const std::vector<int>& block_offsets() const { return offsets_; }
  int reduced_offset(int gamma) const { return reduced_offsets_[gamma]; }
  int reduced_block_size(int gamma) const { return reduced_offsets_[gamma + 1] - reduced_offsets_[gamma]; }
  const std::vector<int>& reduced_offsets() const { return reduced_offsets_; }

  int config_of_outcome(int row) const { return config_of_row_[row]; }
  /// Full row index of reduced row i.
  int reduced_to_full(int i) const { return reduced_to_full_[i]; }
  /// Reduced row index of full row, or -1 for the eliminated last outcome.
  int full_to_reduced(int row) const { return full_to_reduced_[row]; }

  const Eigen::MatrixXd& A() const { return a_; }
  const Eigen::VectorXd& c() const { return c_; }
  const Eigen::MatrixXd& reduced_A() const { return a_reduced_; }
  const Eigen::VectorXd& reduced_c() const { return c_reduced_; }

  /// Restrict a full-length outcome vector to the reduced outcomes.
  Eigen::VectorXd reduce(const Eigen::VectorXd& full) const;
  /// Sum a vector over each configuration block (full layout).
  Eigen::VectorXd block_sums(const Eigen::VectorXd& full) const;
  /// Sum a vector over each reduced configuration block.
  Eigen::VectorXd reduced_block_sums(const Eigen::VectorXd& reduced) const;
  /// Per-outcome copy of per-configuration values (the diagonal of Lambda).
  Eigen::VectorXd expand(const Eigen::VectorXd& per_config) const;

 private:
  HermitianBasis basis_;
  std::vector<MeasurementConfig> configs_;
  std::vector<int> offsets_;
  std::vector<int> reduced_offsets_;
  std::vector<int> config_of_row_;
  std::vector<int> reduced_to_full_;
  std::vector<int> full_to_reduced_;
  Eigen::MatrixXd a_;
  Eigen::VectorXd c_;
  Eigen::MatrixXd a_reduced_;
  Eigen::VectorXd c_reduced_;
};

struct Violation {
  std::string kind;    // "dimension", "finite", "hermiticity", "positivity", "completeness", "arity", "basis"
  std::string config;  // configuration label, empty for setup-wide checks
  int outcome = -1;    // outcome index within the configuration, -1 when not applicable
  double magnitude = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Validates raw matrices (dimension, finiteness, Hermiticity, positivity,
/// completeness, arity) and the basis (orthonormality, tracelessness).
ValidationReport validate_setup(const HermitianBasis& basis, const std::vector<ConfigMatrices>& configs);
ValidationReport validate_setup(const ExperimentSetup& setup);
/// Throws ValidationError carrying the report text when the setup is invalid.
void require_valid(const ExperimentSetup& setup);

/// p = c + A r
Eigen::VectorXd probabilities(const ExperimentSetup& setup, const Eigen::VectorXd& r);

}  // namespace tomoplan
