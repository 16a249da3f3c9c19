#include "tomoplan/cholesky.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

constexpr double kZeroPivot = 1e-13;
using cd = std::complex<double>;

Eigen::MatrixXd restrict(const Eigen::MatrixXd& P, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) Q(i, j) = P(idx[i], idx[j]);
  }
  return Q;
}

}  // namespace

std::vector<int> theta_indices(int dimension) {
  const int n = dimension;
  std::vector<int> idx;
  idx.reserve(n * n);
  for (int col = 0; col < n; ++col) {
    for (int row = col; row < n; ++row) idx.push_back(col * n + row);
  }
  for (int col = 0; col < n; ++col) {
    for (int row = col + 1; row < n; ++row) idx.push_back(n * n + col * n + row);
  }
  return idx;
}

ComplexMatrix cholesky_factor(const ComplexMatrix& rho) {
  const int n = static_cast<int>(rho.rows());
  ComplexMatrix A = 0.5 * (rho + rho.adjoint());
  ComplexMatrix L = ComplexMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double pivot = A(k, k).real();
    if (pivot <= kZeroPivot) continue;
    const double root = std::sqrt(pivot);
    L(k, k) = root;
    for (int i = k + 1; i < n; ++i) L(i, k) = A(i, k) / root;
    for (int j = k + 1; j < n; ++j) {
      for (int i = j; i < n; ++i) A(i, j) -= L(i, k) * std::conj(L(j, k));
    }
  }
  return L;
}

CholeskyState cholesky_vector(const ComplexMatrix& rho) {
  const int n = static_cast<int>(rho.rows());
  if (rho.cols() != n || n < 1) throw DimensionError("density matrix must be square");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-10) throw ValidationError("density matrix trace differs from 1");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(0.5 * (rho + rho.adjoint()));
  Eigen::VectorXd ev = solver.eigenvalues();
  if (ev.minCoeff() < -1e-10) {
    throw ValidationError("density matrix has eigenvalue " + std::to_string(ev.minCoeff()));
  }
  ComplexMatrix clipped = rho;
  if (ev.minCoeff() < 0.0) {
    ev = ev.cwiseMax(0.0);
    ev /= ev.sum();
    clipped = solver.eigenvectors() * ev.cast<cd>().asDiagonal() * solver.eigenvectors().adjoint();
  }
  const ComplexMatrix L = cholesky_factor(clipped);
  CholeskyState s;
  s.T = L.adjoint();
  s.t.resize(2 * n * n);
  for (int col = 0; col < n; ++col) {
    for (int row = 0; row < n; ++row) {
      s.t(col * n + row) = L(row, col).real();
      s.t(n * n + col * n + row) = L(row, col).imag();
    }
  }
  const std::vector<int> idx = theta_indices(n);
  s.theta.resize(n * n);
  for (int i = 0; i < n * n; ++i) s.theta(i) = s.t(idx[i]);
  return s;
}

ComplexMatrix theta_to_density(const Eigen::VectorXd& theta, int dimension) {
  const int n = dimension;
  if (theta.size() != n * n) throw DimensionError("theta must have N^2 entries");
  const std::vector<int> idx = theta_indices(n);
  ComplexMatrix L = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n * n; ++i) {
    const int t = idx[i];
    const bool imag = t >= n * n;
    const int flat = imag ? t - n * n : t;
    const int col = flat / n;
    const int row = flat % n;
    if (imag) {
      L(row, col) += cd(0.0, theta(i));
    } else {
      L(row, col) += theta(i);
    }
  }
  return L * L.adjoint();
}

ComplexMatrix separation_matrix(int dimension) {
  const int m = dimension * dimension;
  ComplexMatrix S = ComplexMatrix::Zero(2 * m, 2 * m);
  for (int i = 0; i < m; ++i) {
    S(i, i) = 1.0;
    S(i, m + i) = 1.0;
    S(m + i, i) = cd(0.0, -1.0);
    S(m + i, m + i) = cd(0.0, 1.0);
  }
  return S;
}

QuadraticForms quadratic_forms(const ExperimentSetup& setup) {
  const int n = setup.dimension();
  const int m = n * n;
  const std::vector<int> idx = theta_indices(n);
  QuadraticForms forms;
  for (const MeasurementConfig& cfg : setup.configs()) {
    for (const PovmOutcome& out : cfg.outcomes) {
      // G = I kron Pi acting on vec(L)
      ComplexMatrix G = ComplexMatrix::Zero(m, m);
      for (int b = 0; b < n; ++b) G.block(b * n, b * n, n, n) = out.matrix;
      Eigen::MatrixXd P(2 * m, 2 * m);
      P << G.real(), -G.imag(), G.imag(), G.real();
      forms.Q.push_back(restrict(P, idx));
      forms.P.push_back(std::move(P));
    }
  }
  return forms;
}

Eigen::MatrixXd cholesky_rows(const QuadraticForms& forms, const Eigen::VectorXd& theta) {
  Eigen::MatrixXd Z(forms.Q.size(), theta.size());
  for (std::size_t row = 0; row < forms.Q.size(); ++row) Z.row(row) = 2.0 * (forms.Q[row] * theta).transpose();
  return Z;
}

Eigen::VectorXd cholesky_probabilities(const QuadraticForms& forms, const Eigen::VectorXd& theta) {
  Eigen::VectorXd p(forms.Q.size());
  for (std::size_t row = 0; row < forms.Q.size(); ++row) p(row) = theta.dot(forms.Q[row] * theta);
  return p;
}

CholeskyFisher fisher_cholesky(const ExperimentSetup& setup, const QuadraticForms& forms, const Design& design,
                               const Eigen::VectorXd& theta) {
  check_design(design, setup.config_count());
  const Eigen::VectorXd p = cholesky_probabilities(forms, theta);
  const Eigen::VectorXd w = inverse_probability_weights(setup, p, design.weights);
  const Eigen::MatrixXd Z = cholesky_rows(forms, theta);
  CholeskyFisher out;
  out.bundle = fisher_bundle(weighted_gram(Z, setup.expand(design.weights).cwiseProduct(w)));
  if (out.bundle.singular) {
    out.warnings.push_back("Cholesky Fisher information is singular; the state is close to pure");
  }
  return out;
}

Eigen::MatrixXd orthogonal_complement(const Eigen::VectorXd& theta, Completion method) {
  const int n = static_cast<int>(theta.size());
  if (!(theta.norm() > 0.0)) throw ValidationError("theta must be nonzero");
  if (method == Completion::Householder) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(theta);
    const Eigen::MatrixXd Qfull = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return Qfull.rightCols(n - 1);
  }
  const Eigen::VectorXd u = theta.normalized();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(n, n) - u * u.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(proj, Eigen::ComputeFullU);
  return svd.matrixU().leftCols(n - 1);
}

double ccrb(const Eigen::MatrixXd& F, const Eigen::VectorXd& theta, Completion method) {
  const Eigen::MatrixXd U = orthogonal_complement(theta, method);
  return fisher_bundle(U.transpose() * F * U).crb;
}

double ccrb_closed_form(const Eigen::MatrixXd& F) {
  const FisherBundle b = fisher_bundle(F);
  return b.singular ? std::numeric_limits<double>::infinity() : b.crb - 0.25;
}

CrbObjective cholesky_objective(const ExperimentSetup& setup, const QuadraticForms& forms,
                                const Eigen::VectorXd& theta) {
  const Eigen::VectorXd p = cholesky_probabilities(forms, theta);
  return CrbObjective(cholesky_rows(forms, theta), inverse_probability_weights(setup, p), setup.block_offsets());
}

OptimizationResult optimize_design_cholesky(const ExperimentSetup& setup, const QuadraticForms& forms,
                                            const Eigen::VectorXd& theta, const OptimizerSettings& settings) {
  return minimize_on_simplex(cholesky_objective(setup, forms, theta), settings);
}

}  // namespace tomoplan
