#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomoplan/repr.hpp"

namespace tomoplan {

struct DataRecord {
  std::vector<long long> counts;  // n_ag, full outcome layout
  std::vector<long long> shots;   // N_g
  long long total = 0;            // N_tot
  Eigen::VectorXd frequencies;    // n_ag / N_g (0 where N_g = 0)
  std::uint64_t seed = 0;
  /// Frequencies were set to the exact probabilities instead of being sampled.
  bool exact = false;
};

enum class EstimatorKind { Inversion, LeastSquares, MaxLikelihood };

std::string to_string(EstimatorKind kind);
/// Accepts "inv", "lsq", "ml" and the long names.
EstimatorKind parse_estimator(const std::string& name);

struct Estimate {
  Eigen::VectorXd r;
  EstimatorKind method = EstimatorKind::Inversion;
  bool physical = false;
  int iterations = 0;
  /// The probability floor was applied inside the likelihood iteration.
  bool regularized = false;
  bool converged = true;
};

/// Multinomial counts per configuration from conditional binomial draws, one
/// stream per configuration derived from `seed`. Throws ValidationError when a
/// probability is below -1e-10.
DataRecord sample_data(const ExperimentSetup& setup, const std::vector<long long>& shots, const Eigen::VectorXd& r,
                       std::uint64_t seed);

/// Noiseless record with frequencies equal to p(r).
DataRecord exact_data(const ExperimentSetup& setup, const std::vector<long long>& shots, const Eigen::VectorXd& r);

/// Precomputed Moore-Penrose inverse of A restricted to measured configurations.
class LinearInverter {
 public:
  /// `measured[g]` false drops configuration g. Throws SingularityError when the
  /// remaining rows do not have full column rank.
  LinearInverter(const ExperimentSetup& setup, const std::vector<bool>& measured);
  explicit LinearInverter(const ExperimentSetup& setup);

  Eigen::VectorXd solve(const Eigen::VectorXd& frequencies) const;
  const std::vector<bool>& measured() const { return measured_; }

 private:
  std::vector<int> rows_;
  std::vector<bool> measured_;
  Eigen::MatrixXd pinv_;
  Eigen::VectorXd c_;
};

std::vector<bool> measured_configs(const std::vector<long long>& shots);

Estimate invert(const ExperimentSetup& setup, const DataRecord& data);
Estimate invert(const LinearInverter& inverter, const HermitianBasis& basis, const DataRecord& data);

/// Qubits: rescale to the Bloch ball radius when outside. N > 2: clip negative
/// eigenvalues of rho and renormalize the trace (an extension for larger N).
Estimate least_squares(const Estimate& estimate, const HermitianBasis& basis);

struct MaxLikelihoodSettings {
  int max_iterations = 5000;
  double tolerance = 1e-9;        // trace distance between iterates
  double probability_floor = 1e-12;
  double seed_mixing = 0.05;      // weight of I/N in the starting state
};

/// Symmetrized fixed-point iteration rho -> (R rho + rho R)/2. An already
/// physical `inversion` estimate is returned unchanged.
Estimate max_likelihood(const ExperimentSetup& setup, const DataRecord& data, const Estimate& inversion,
                        const MaxLikelihoodSettings& settings = {});

/// sum_g N_g sum_a pbar_ag ln p_ag(r)
double log_likelihood(const ExperimentSetup& setup, const DataRecord& data, const Eigen::VectorXd& r);

/// (1/2) || rho - sigma ||_1 for Hermitian arguments.
double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma);

}  // namespace tomoplan
