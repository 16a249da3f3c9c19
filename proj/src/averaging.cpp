#include "tomoplan/averaging.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tomoplan/design_analytic.hpp"
#include "tomoplan/design_numeric.hpp"
#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

constexpr double kDivergenceTol = 1e-12;
// below this u the ball average is summed as a power series
constexpr double kSeriesBelowQubit = 0.1;
constexpr double kSeriesBelow = 0.75;

double min_radius_sq(int n) { return 1.0 / (static_cast<double>(n) * (n - 1)); }
double max_radius_sq(int n) { return static_cast<double>(n - 1) / n; }

// (1/c) sum_k u^(2k) <t^(2k)> with t uniform on the unit ball's first coordinate
double series_average(double c, double u, int ball_dim) {
  const double u2 = u * u;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 2000; ++k) {
    term *= u2 * (2.0 * k - 1.0) / (ball_dim + 2.0 * k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum / c;
}

// int_{-1}^{1} (1 - t^2)^(k/2) dt
double beta_k(int k) {
  return std::sqrt(M_PI) * std::exp(std::lgamma(0.5 * k + 1.0) - std::lgamma(0.5 * k + 1.5));
}

// L_m(u) = int_{-1}^{1} (1 - t^2)^(m/2) / (1 + u t) dt
double marginal_integral(int m, double u) {
  if (u >= 1.0) {
    if (m < 2) throw DivergentAverageError("ball average diverges on a one-dimensional marginal");
    return beta_k(m - 2);
  }
  const double u2 = u * u;
  double L = (m % 2 == 0) ? std::log1p(2.0 * u / (1.0 - u)) / u : M_PI * (1.0 - std::sqrt(1.0 - u2)) / u2;
  for (int k = (m % 2 == 0) ? 2 : 3; k <= m; k += 2) {
    L = (1.0 - 1.0 / u2) * L + beta_k(k - 2) / u2;
  }
  return L;
}

// ball_dim = 3 closed form
double qubit_average(double c, double u) {
  if (u >= 1.0) return 1.5 / c;
  return 3.0 / (4.0 * c * u * u * u) * (2.0 * u - 2.0 * (1.0 - u * u) * std::atanh(u));
}

}  // namespace

double state_space_radius(int dimension, RadiusMode mode, double value) {
  if (dimension < 2) throw ValidationError("dimension must be at least 2");
  const double lo = std::sqrt(min_radius_sq(dimension));
  const double hi = std::sqrt(max_radius_sq(dimension));
  switch (mode) {
    case RadiusMode::Min:
      return lo;
    case RadiusMode::Max:
      return hi;
    case RadiusMode::Value:
      if (!std::isfinite(value) || value < lo * (1.0 - 1e-12) || value > hi * (1.0 + 1e-12)) {
        std::ostringstream msg;
        msg << "radius " << value << " outside [" << lo << ", " << hi << "] for N = " << dimension;
        throw ValidationError(msg.str());
      }
      return value;
  }
  return lo;
}

double radius_squared(int dimension, double radius) {
  const double sq = radius * radius;
  for (double exact : {min_radius_sq(dimension), max_radius_sq(dimension)}) {
    if (std::abs(sq - exact) <= 8.0 * std::numeric_limits<double>::epsilon() * exact) return exact;
  }
  return sq;
}

SphereMoments sphere_moments(int dimension, double radius) {
  const double r2 = radius_squared(dimension, radius);
  const double D = static_cast<double>(dimension) * dimension - 1.0;
  SphereMoments m;
  m.x2 = r2 / (D + 2.0);
  m.x2y2 = r2 * r2 / ((D + 2.0) * (D + 4.0));
  m.x4 = 3.0 * m.x2y2;
  return m;
}

double average_inverse_probability(double c, double norm_a, double radius, int ball_dim) {
  if (!(c > 0.0)) throw DivergentAverageError("outcome has no identity component; 1/p diverges inside the ball");
  const double reach = radius * norm_a;
  if (c - reach < -kDivergenceTol) {
    std::ostringstream msg;
    msg << "probability reaches " << c - reach << " inside the ball of radius " << radius << "; <1/p> diverges";
    throw DivergentAverageError(msg.str());
  }
  const double u = std::min(1.0, reach / c);
  if (u == 0.0) return 1.0 / c;
  if (ball_dim == 3) {
    return u < kSeriesBelowQubit ? series_average(c, u, 3) : qubit_average(c, u);
  }
  if (u <= kSeriesBelow) return series_average(c, u, ball_dim);
  const int m = ball_dim - 1;
  return marginal_integral(m, u) / (beta_k(m) * c);
}

double log_moment_integral(int n, double a, double b, double radius) {
  const double top = a + b * radius;
  const double edge = top * (std::log(top) - 1.0);
  double I = (edge - a * (std::log(a) - 1.0)) / b;
  for (int k = 1; k <= n; ++k) {
    I = (std::pow(radius, k) / b * (edge + a) + std::pow(radius, k + 1) * k / (k + 1.0) - k * a / b * I) / (k + 1.0);
  }
  return I;
}

Eigen::VectorXd g_coefficients(const ExperimentSetup& setup, double radius) {
  const int N = setup.dimension();
  const int ball_dim = N * N - 1;
  Eigen::VectorXd g(setup.outcome_count());
  for (int row = 0; row < g.size(); ++row) {
    const double c = setup.c()(row);
    const double a = setup.A().row(row).norm();
    try {
      g(row) = average_inverse_probability(c, a, radius, ball_dim);
    } catch (const DivergentAverageError& e) {
      const int gamma = setup.config_of_outcome(row);
      throw DivergentAverageError("outcome " + std::to_string(row - setup.block_offset(gamma)) + " of '" +
                                  setup.config(gamma).label + "': " + e.what());
    }
  }
  return g;
}

AveragingContext averaging_context(const ExperimentSetup& setup, double radius) {
  AveragingContext ctx;
  ctx.dimension = setup.dimension();
  ctx.radius = state_space_radius(ctx.dimension, RadiusMode::Value, radius);
  ctx.radius_sq = radius_squared(ctx.dimension, radius);
  ctx.g = g_coefficients(setup, radius);
  ctx.moments = sphere_moments(ctx.dimension, radius);
  return ctx;
}

FisherBundle averaged_fisher(const ExperimentSetup& setup, const Design& design, const AveragingContext& ctx) {
  check_design(design, setup.config_count());
  return fisher_bundle(weighted_gram(setup.A(), setup.expand(design.weights).cwiseProduct(ctx.g)));
}

Eigen::VectorXd averaged_fisher_b(const ExperimentSetup& setup, const AveragingContext& ctx) {
  const MinimalGeometry geo = minimal_geometry(setup);
  const Eigen::VectorXd ginv = setup.reduce(ctx.g).cwiseInverse();
  const Eigen::VectorXd block_inv = setup.block_sums(ctx.g.cwiseInverse());
  Eigen::VectorXd f(setup.reduced_count());
  for (int i = 0; i < f.size(); ++i) {
    f(i) = 1.0 / block_inv(setup.config_of_outcome(setup.reduced_to_full(i)));
  }
  return ginv.cwiseProduct(geo.d - f.cwiseProduct(geo.D * ginv));
}

Design average_oed_fisher(const ExperimentSetup& setup, const AveragingContext& ctx) {
  if (setup.is_minimal()) {
    return design_from_block_sums(setup, setup.reduced_block_sums(averaged_fisher_b(setup, ctx)),
                                  "average OED (Fisher)");
  }
  return optimize_design_weighted(setup, ctx.g).design;
}

Eigen::VectorXd averaged_crb_b(const ExperimentSetup& setup, const AveragingContext& ctx) {
  const MinimalGeometry geo = minimal_geometry(setup);
  const Eigen::VectorXd& ct = setup.reduced_c();
  const Eigen::MatrixXd DK = geo.D * geo.K;
  return ct.cwiseProduct(geo.d - geo.D * ct) - ctx.moments.x2 * DK.diagonal();
}

double averaged_crb(const ExperimentSetup& setup, const AveragingContext& ctx, const Design& design) {
  return crb_minimal(setup, averaged_crb_b(setup, ctx), design);
}

Design average_oed_crb(const ExperimentSetup& setup, const AveragingContext& ctx) {
  return design_from_block_sums(setup, setup.reduced_block_sums(averaged_crb_b(setup, ctx)), "average OED (CRB)");
}

}  // namespace tomoplan
