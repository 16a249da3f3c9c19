#pragma once

#include <Eigen/Dense>

#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

enum class RadiusMode { Min, Max, Value };

/// R_min = 1/sqrt(N(N-1)), R_max = sqrt((N-1)/N); Value checks v lies between them.
double state_space_radius(int dimension, RadiusMode mode, double value = 0.0);

/// R^2, snapped to the exact rational value when R is R_min or R_max up to rounding.
double radius_squared(int dimension, double radius);

struct SphereMoments {
  double x2 = 0.0;    // <<x^2>>
  double x2y2 = 0.0;  // <<x^2 y^2>>
  double x4 = 0.0;    // <<x^4>> = 3 <<x^2 y^2>>
};

/// Coordinate moments of the uniform ball of radius R in N^2 - 1 dimensions.
SphereMoments sphere_moments(int dimension, double radius);

/// <1/(c + |a| x)> for x the first coordinate of a uniform ball of radius R in
/// `ball_dim` dimensions. c = R|a| is allowed (the integral converges);
/// throws DivergentAverageError when c < R|a| beyond rounding.
double average_inverse_probability(double c, double norm_a, double radius, int ball_dim);

/// Recurrence I_n(a, b) = int_0^R x^n ln(a + b x) dx. For ball_dim = 3 the
/// average above equals 3/(2 R^3) (I_1(c,|a|) - I_1(c,-|a|))/|a|; kept as a cross-check.
double log_moment_integral(int n, double a, double b, double radius);

struct AveragingContext {
  int dimension = 2;
  double radius = 0.0;
  double radius_sq = 0.0;
  Eigen::VectorXd g;  // <1/p_ag>, one per outcome
  SphereMoments moments;
};

/// g for every outcome of the setup, plus moments. Throws DivergentAverageError naming the outcome.
AveragingContext averaging_context(const ExperimentSetup& setup, double radius);
Eigen::VectorXd g_coefficients(const ExperimentSetup& setup, double radius);

/// <F> = A^T Lambda G A
FisherBundle averaged_fisher(const ExperimentSetup& setup, const Design& design, const AveragingContext& ctx);

/// <b> = g~^-1 * (d - f * D g~^-1) for minimal setups.
Eigen::VectorXd averaged_fisher_b(const ExperimentSetup& setup, const AveragingContext& ctx);

/// Average OED from the averaged Fisher information. Closed form for minimal
/// setups, numerical optimization with weights g otherwise.
Design average_oed_fisher(const ExperimentSetup& setup, const AveragingContext& ctx);

/// <<b>> = c~ * (d - D c~) - <<x^2>> diag(D K); minimal setups only.
Eigen::VectorXd averaged_crb_b(const ExperimentSetup& setup, const AveragingContext& ctx);

/// <<B>> = sum <<b>> / lambda
double averaged_crb(const ExperimentSetup& setup, const AveragingContext& ctx, const Design& design);

/// Design minimizing the ball-averaged CRB; minimal setups only.
Design average_oed_crb(const ExperimentSetup& setup, const AveragingContext& ctx);

}  // namespace tomoplan
