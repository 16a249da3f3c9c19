// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls the closed forms under test; they rely on sampling,
// enumeration, finite differences or direct matrix algebra.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomoplan/repr.hpp"

namespace oracle {

using tomoplan::ComplexMatrix;
using tomoplan::ConfigMatrices;
using tomoplan::ExperimentSetup;
using tomoplan::HermitianBasis;
using cd = std::complex<double>;
using Rng = std::mt19937_64;

inline ComplexMatrix projector(const Eigen::VectorXcd& v) { return v * v.adjoint(); }

inline ComplexMatrix pauli(int k) {
  ComplexMatrix m(2, 2);
  switch (k) {
    case 0: m << 0, 1, 1, 0; break;
    case 1: m << 0, cd(0, -1), cd(0, 1), 0; break;
    default: m << 1, 0, 0, -1; break;
  }
  return m;
}

/// Three projective Pauli measurements; outcome 0 is the +1 eigenprojector.
inline std::vector<ConfigMatrices> mub_configs() {
  std::vector<ConfigMatrices> out;
  const char* labels[] = {"x", "y", "z"};
  for (int k = 0; k < 3; ++k) {
    const ComplexMatrix I = ComplexMatrix::Identity(2, 2);
    out.push_back({labels[k], {0.5 * (I + pauli(k)), 0.5 * (I - pauli(k))}});
  }
  return out;
}

inline ExperimentSetup mub_setup() { return ExperimentSetup(HermitianBasis(2), mub_configs()); }

inline ComplexMatrix haar_unitary(int n, Rng& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = cd(g(rng), g(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const cd d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

/// Binary POVM {U diag(e) U^dag, I - ...} with e iid uniform on [lo, hi].
inline ConfigMatrices random_binary_config(int n, Rng& rng, const std::string& label, double lo = 0.0,
                                           double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  const ComplexMatrix U = haar_unitary(n, rng);
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) e(i) = u(rng);
  const ComplexMatrix P = U * e.cast<cd>().asDiagonal() * U.adjoint();
  return {label, {P, ComplexMatrix::Identity(n, n) - P}};
}

/// Projective measurement in a Haar-random basis.
inline ConfigMatrices random_projective_config(int n, Rng& rng, const std::string& label) {
  const ComplexMatrix U = haar_unitary(n, rng);
  ConfigMatrices c{label, {}};
  for (int i = 0; i < n; ++i) c.elements.push_back(projector(U.col(i)));
  return c;
}

inline ExperimentSetup random_binary_qubit_setup(Rng& rng, int configs = 3) {
  std::vector<ConfigMatrices> cs;
  for (int k = 0; k < configs; ++k) cs.push_back(random_binary_config(2, rng, "c" + std::to_string(k)));
  return ExperimentSetup(HermitianBasis(2), cs);
}

/// Uniform point in the d-ball of radius R.
inline Eigen::VectorXd ball_point(int d, double R, Rng& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd x(d);
  for (int i = 0; i < d; ++i) x(i) = g(rng);
  return x.normalized() * (R * std::pow(u(rng), 1.0 / d));
}

/// Random Bloch vector of a qubit with |r| <= frac * R_2.
inline Eigen::VectorXd random_qubit_state(Rng& rng, double frac = 0.9) {
  return ball_point(3, frac / std::sqrt(2.0), rng);
}

/// Random density matrix: Wishart with `rank` columns.
inline ComplexMatrix random_density(int n, int rank, Rng& rng) {
  std::normal_distribution<double> g;
  ComplexMatrix G(n, rank);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < rank; ++j) G(i, j) = cd(g(rng), g(rng));
  ComplexMatrix rho = G * G.adjoint();
  return rho / rho.trace().real();
}

/// Five-point central differences of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    auto at = [&](double s) {
      Eigen::VectorXd y = x;
      y(i) += s * h;
      return f(y);
    };
    g(i) = (at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12.0 * h);
  }
  return g;
}

/// Five-point central differences of a vector function, column i = d/dx_i.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::MatrixXd J;
  for (int i = 0; i < x.size(); ++i) {
    auto at = [&](double s) {
      Eigen::VectorXd y = x;
      y(i) += s * h;
      return f(y);
    };
    const Eigen::VectorXd d = (at(-2) - 8 * at(-1) + 8 * at(1) - at(2)) / (12.0 * h);
    if (J.size() == 0) J.resize(d.size(), x.size());
    J.col(i) = d;
  }
  return J;
}

/// Explicit outer-product Fisher information sum_ag lambda_g / p a a^T.
inline Eigen::MatrixXd fisher_outer_sum(const ExperimentSetup& setup, const Eigen::VectorXd& lambda,
                                        const Eigen::VectorXd& r) {
  const int k = setup.parameter_count();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(k, k);
  for (int g = 0; g < setup.config_count(); ++g) {
    for (const auto& out : setup.config(g).outcomes) {
      const double p = out.offset + out.direction.dot(r);
      F += lambda(g) / p * out.direction * out.direction.transpose();
    }
  }
  return F;
}

/// Direct trace probability tr{Pi rho}.
inline double trace_probability(const ComplexMatrix& Pi, const ComplexMatrix& rho) { return (Pi * rho).trace().real(); }

/// B(lambda) by explicit inversion of the outer-product sum.
inline double crb_direct(const ExperimentSetup& setup, const Eigen::VectorXd& lambda, const Eigen::VectorXd& r) {
  return fisher_outer_sum(setup, lambda, r).inverse().trace();
}

/// Fisher information per shot from exhaustive enumeration of all outcome
/// sequences of a binary-configuration experiment with `shots[g]` trials each:
/// E[grad L grad L^T] / N_tot.
inline Eigen::MatrixXd fisher_by_enumeration(const ExperimentSetup& setup, const std::vector<int>& shots,
                                             const Eigen::VectorXd& r) {
  const int k = setup.parameter_count();
  std::vector<std::pair<int, int>> trials;  // (config, trial)
  for (int g = 0; g < setup.config_count(); ++g)
    for (int t = 0; t < shots[g]; ++t) trials.push_back({g, t});
  const int T = static_cast<int>(trials.size());
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(k, k);
  std::vector<int> outcome(T, 0);
  // odometer over all outcome sequences
  while (true) {
    double prob = 1.0;
    Eigen::VectorXd score = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < T; ++i) {
      const auto& out = setup.config(trials[i].first).outcomes[outcome[i]];
      const double p = out.offset + out.direction.dot(r);
      prob *= p;
      score += out.direction / p;
    }
    F += prob * score * score.transpose();
    int i = 0;
    while (i < T) {
      const int n = static_cast<int>(setup.config(trials[i].first).outcomes.size());
      if (++outcome[i] < n) break;
      outcome[i] = 0;
      ++i;
    }
    if (i == T) break;
  }
  return F / T;
}

}  // namespace oracle
