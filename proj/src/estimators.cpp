#include "tomoplan/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "tomoplan/errors.hpp"
#include "tomoplan/rng.hpp"

namespace tomoplan {

namespace {

constexpr double kNegativeProbability = 1e-10;
constexpr double kPhysicalTol = 1e-10;

Eigen::VectorXd checked_probabilities(const ExperimentSetup& setup, const Eigen::VectorXd& r) {
  Eigen::VectorXd p = probabilities(setup, r);
  for (int row = 0; row < p.size(); ++row) {
    if (p(row) < -kNegativeProbability) {
      const int g = setup.config_of_outcome(row);
      std::ostringstream msg;
      msg << "state gives probability " << p(row) << " for outcome " << row - setup.block_offset(g) << " of '"
          << setup.config(g).label << "'; it is not physical";
      throw ValidationError(msg.str());
    }
    p(row) = std::clamp(p(row), 0.0, 1.0);
  }
  return p;
}

void check_shots(const ExperimentSetup& setup, const std::vector<long long>& shots) {
  if (static_cast<int>(shots.size()) != setup.config_count()) {
    throw ValidationError("shot allocation has " + std::to_string(shots.size()) + " entries for " +
                          std::to_string(setup.config_count()) + " configurations");
  }
  for (long long n : shots) {
    if (n < 0) throw ValidationError("shot counts must be nonnegative");
  }
}

ComplexMatrix hermitize(const ComplexMatrix& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Inversion:
      return "inv";
    case EstimatorKind::LeastSquares:
      return "lsq";
    case EstimatorKind::MaxLikelihood:
      return "ml";
  }
  return "?";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "inv" || name == "inversion") return EstimatorKind::Inversion;
  if (name == "lsq" || name == "least-squares") return EstimatorKind::LeastSquares;
  if (name == "ml" || name == "max-likelihood") return EstimatorKind::MaxLikelihood;
  throw ValidationError("unknown estimator '" + name + "' (expected inv, lsq or ml)");
}

DataRecord sample_data(const ExperimentSetup& setup, const std::vector<long long>& shots, const Eigen::VectorXd& r,
                       std::uint64_t seed) {
  check_shots(setup, shots);
  const Eigen::VectorXd p = checked_probabilities(setup, r);
  DataRecord data;
  data.shots = shots;
  data.seed = seed;
  data.counts.assign(setup.outcome_count(), 0);
  data.frequencies = Eigen::VectorXd::Zero(setup.outcome_count());
  for (int g = 0; g < setup.config_count(); ++g) {
    data.total += shots[g];
    if (shots[g] == 0) continue;
    CounterRng rng(derive_seed(seed, {static_cast<std::uint64_t>(g)}));
    const int off = setup.block_offset(g);
    const int n = setup.block_size(g);
    long long remaining = shots[g];
    double rest = 1.0;
    for (int a = 0; a + 1 < n && remaining > 0; ++a) {
      const double q = rest > 0.0 ? std::clamp(p(off + a) / rest, 0.0, 1.0) : 0.0;
      std::binomial_distribution<long long> draw(remaining, q);
      const long long k = draw(rng);
      data.counts[off + a] = k;
      remaining -= k;
      rest -= p(off + a);
    }
    data.counts[off + n - 1] += remaining;
    for (int a = 0; a < n; ++a) {
      data.frequencies(off + a) = static_cast<double>(data.counts[off + a]) / shots[g];
    }
  }
  return data;
}

DataRecord exact_data(const ExperimentSetup& setup, const std::vector<long long>& shots, const Eigen::VectorXd& r) {
  check_shots(setup, shots);
  const Eigen::VectorXd p = checked_probabilities(setup, r);
  DataRecord data;
  data.shots = shots;
  data.exact = true;
  data.counts.assign(setup.outcome_count(), 0);
  data.frequencies = Eigen::VectorXd::Zero(setup.outcome_count());
  for (int g = 0; g < setup.config_count(); ++g) {
    data.total += shots[g];
    if (shots[g] == 0) continue;
    for (int row = setup.block_offset(g); row < setup.block_offset(g + 1); ++row) {
      data.frequencies(row) = p(row);
      data.counts[row] = std::llround(p(row) * static_cast<double>(shots[g]));
    }
  }
  return data;
}

std::vector<bool> measured_configs(const std::vector<long long>& shots) {
  std::vector<bool> out(shots.size());
  for (std::size_t g = 0; g < shots.size(); ++g) out[g] = shots[g] > 0;
  return out;
}

LinearInverter::LinearInverter(const ExperimentSetup& setup)
    : LinearInverter(setup, std::vector<bool>(setup.config_count(), true)) {}

LinearInverter::LinearInverter(const ExperimentSetup& setup, const std::vector<bool>& measured)
    : measured_(measured) {
  if (static_cast<int>(measured.size()) != setup.config_count()) {
    throw ValidationError("measured-configuration mask has the wrong length");
  }
  for (int g = 0; g < setup.config_count(); ++g) {
    if (!measured[g]) continue;
    for (int row = setup.block_offset(g); row < setup.block_offset(g + 1); ++row) rows_.push_back(row);
  }
  const int k = setup.parameter_count();
  Eigen::MatrixXd As(rows_.size(), k);
  c_.resize(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    As.row(i) = setup.A().row(rows_[i]);
    c_(i) = setup.c()(rows_[i]);
  }
  if (static_cast<int>(rows_.size()) < k) {
    throw SingularityError("measured outcomes cannot determine all " + std::to_string(k) + " Bloch components");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(k - 1) < 1e-12 * s(0)) {
    throw SingularityError("measurement matrix is rank deficient; linear inversion is undefined");
  }
  pinv_ = svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
}

Eigen::VectorXd LinearInverter::solve(const Eigen::VectorXd& frequencies) const {
  Eigen::VectorXd y(rows_.size());
  for (std::size_t i = 0; i < rows_.size(); ++i) y(i) = frequencies(rows_[i]) - c_(i);
  return pinv_ * y;
}

Estimate invert(const LinearInverter& inverter, const HermitianBasis& basis, const DataRecord& data) {
  Estimate est;
  est.method = EstimatorKind::Inversion;
  est.r = inverter.solve(data.frequencies);
  est.physical = is_physical(est.r, basis, kPhysicalTol);
  return est;
}

Estimate invert(const ExperimentSetup& setup, const DataRecord& data) {
  const LinearInverter inverter(setup, measured_configs(data.shots));
  return invert(inverter, setup.basis(), data);
}

Estimate least_squares(const Estimate& estimate, const HermitianBasis& basis) {
  Estimate out = estimate;
  out.method = EstimatorKind::LeastSquares;
  out.iterations = 0;
  if (basis.dimension() == 2) {
    const double radius = max_bloch_radius(2);
    const double norm = estimate.r.norm();
    if (norm > radius) out.r = estimate.r * (radius / norm);
    out.physical = true;
    return out;
  }
  if (is_physical(estimate.r, basis, kPhysicalTol)) {
    out.physical = true;
    return out;
  }
  // nearest-state stand-in: clip the spectrum
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(bloch_to_density(estimate.r, basis));
  Eigen::VectorXd ev = solver.eigenvalues().cwiseMax(0.0);
  ev /= ev.sum();
  const ComplexMatrix rho = solver.eigenvectors() * ev.cast<std::complex<double>>().asDiagonal() *
                            solver.eigenvectors().adjoint();
  out.r = basis.project(rho);
  out.physical = true;
  return out;
}

double trace_distance(const ComplexMatrix& rho, const ComplexMatrix& sigma) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitize(rho - sigma), Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

double log_likelihood(const ExperimentSetup& setup, const DataRecord& data, const Eigen::VectorXd& r) {
  const Eigen::VectorXd p = probabilities(setup, r);
  double total = 0.0;
  for (int row = 0; row < p.size(); ++row) {
    const double pbar = data.frequencies(row);
    if (pbar <= 0.0) continue;
    const long long n = data.shots[setup.config_of_outcome(row)];
    total += static_cast<double>(n) * pbar * std::log(std::max(p(row), 1e-300));
  }
  return total;
}

Estimate max_likelihood(const ExperimentSetup& setup, const DataRecord& data, const Estimate& inversion,
                        const MaxLikelihoodSettings& settings) {
  Estimate out = inversion;
  out.method = EstimatorKind::MaxLikelihood;
  out.iterations = 0;
  if (inversion.physical) return out;
  if (data.total <= 0) throw ValidationError("maximum likelihood needs at least one shot");

  const HermitianBasis& basis = setup.basis();
  const int N = basis.dimension();
  const ComplexMatrix mixed = ComplexMatrix::Identity(N, N) / static_cast<double>(N);
  const Estimate seed = least_squares(inversion, basis);
  ComplexMatrix rho = (1.0 - settings.seed_mixing) * bloch_to_density(seed.r, basis) + settings.seed_mixing * mixed;

  std::vector<double> weight(setup.config_count());
  for (int g = 0; g < setup.config_count(); ++g) {
    weight[g] = static_cast<double>(data.shots[g]) / static_cast<double>(data.total);
  }

  out.converged = false;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    ComplexMatrix R = ComplexMatrix::Zero(N, N);
    for (int g = 0; g < setup.config_count(); ++g) {
      if (weight[g] == 0.0) continue;
      for (int row = setup.block_offset(g); row < setup.block_offset(g + 1); ++row) {
        const double pbar = data.frequencies(row);
        if (pbar <= 0.0) continue;
        const ComplexMatrix& Pi = setup.config(g).outcomes[row - setup.block_offset(g)].matrix;
        double phat = (Pi.transpose().cwiseProduct(rho)).sum().real();
        if (phat < settings.probability_floor) {
          phat = settings.probability_floor;
          out.regularized = true;
        }
        R += (weight[g] * pbar / phat) * Pi;
      }
    }
    ComplexMatrix next = hermitize(0.5 * (R * rho + rho * R));
    next /= next.trace().real();
    for (double t = 0.5; min_eigenvalue(next) < -kPhysicalTol && t > 1e-12; t *= 0.5) {
      next = hermitize(rho + t * (next - rho));
      next /= next.trace().real();
    }
    if (!next.allFinite() || std::abs(next.trace().real() - 1.0) > 1e-10) {
      throw NumericalError("likelihood iteration lost unit trace");
    }
    const double step = trace_distance(next, rho);
    rho = std::move(next);
    out.iterations = it;
    if (step < settings.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.r = basis.project(rho);
  out.physical = min_eigenvalue(rho) >= -kPhysicalTol;
  return out;
}

}  // namespace tomoplan
