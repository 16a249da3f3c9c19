#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomoplan/estimators.hpp"
#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

/// Product quadrature over the qubit Bloch ball. Radial and polar nodes are
/// Chebyshev extrema (endpoints included) with interpolatory weights for r^2
/// and sin(theta); azimuth nodes are equispaced with equal weights.
struct SphereGrid {
  int n_radial = 0;
  int n_polar = 0;
  int n_azimuth = 0;
  double radius = 0.0;
  std::vector<Eigen::VectorXd> states;  // Bloch vectors
  std::vector<double> r, theta, phi;
  /// Un-normalized: they integrate to the ball volume.
  std::vector<double> weights;

  std::size_t size() const { return states.size(); }
  double volume() const;
  /// weights / volume
  std::vector<double> normalized_weights() const;
  /// Node lies on the surface of the ball (pure state).
  bool on_boundary(std::size_t i) const;
  /// Boundary nodes pulled inwards by a relative 1e-6; others unchanged.
  Eigen::VectorXd interior_state(std::size_t i) const;
};

/// Weights for Chebyshev extrema on [lo, hi] that integrate n-1 degree
/// polynomials times `weight` exactly. Moments come from Gauss-Legendre.
struct NodesWeights {
  std::vector<double> nodes;
  std::vector<double> weights;
};
NodesWeights chebyshev_rule(int n, double lo, double hi, double (*weight)(double));

/// Gauss-Legendre nodes and weights on [-1, 1].
NodesWeights gauss_legendre(int n);

SphereGrid sphere_grid(int n_radial, int n_polar, int n_azimuth);

/// Threads for campaigns: hardware concurrency capped by TOMOPLAN_THREADS.
int campaign_threads();

struct CampaignOptions {
  /// 0 uses campaign_threads().
  int threads = 0;
  /// Frequencies set to p instead of sampled.
  bool exact = false;
  /// Track theta-space MSE of the ML estimate and the constrained bound.
  bool cholesky_metrics = false;
  MaxLikelihoodSettings ml;
};

struct CampaignResult {
  std::vector<EstimatorKind> estimators;
  std::vector<long long> shots;  // rounded allocation
  long long n_total = 0;
  int runs = 0;
  std::uint64_t seed = 0;
  bool starved = false;
  /// B(r)/N_tot with the rounded allocation.
  std::vector<double> crb;
  /// mse[e][s] for estimator e at state s; empty when runs == 0.
  std::vector<std::vector<double>> mse;
  /// Likelihood runs that stopped at the iteration cap, per state.
  std::vector<int> ml_unconverged;
  /// Cholesky mode: theta-space ML error and B_C/N_tot per state.
  std::vector<double> theta_mse;
  std::vector<double> ccrb;

  /// Quadrature averages over the ball.
  double average_crb(const SphereGrid& grid) const;
  double average_mse(const SphereGrid& grid, EstimatorKind kind) const;
};

CampaignResult run_trials(const ExperimentSetup& setup, const Design& design, const SphereGrid& grid,
                          long long n_total, int runs, const std::vector<EstimatorKind>& estimators,
                          std::uint64_t seed, const CampaignOptions& options = {});

enum class Representation { Bloch, Cholesky };

struct BruteForceResult {
  Design design;
  std::vector<int> excluded;  // node indices dropped for singular or failed OEDs
};

/// Quadrature average of per-state OEDs over the grid.
BruteForceResult brute_force_average_oed(const ExperimentSetup& setup, const SphereGrid& grid,
                                         Representation representation);

/// sum |l1 - l2|
double discrepancy(const Eigen::VectorXd& l1, const Eigen::VectorXd& l2);

}  // namespace tomoplan
