#include "tomoplan/repr.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

constexpr double kHermiticityTolerance = 1e-10;
constexpr double kPositivityTolerance = 1e-10;
constexpr double kCompletenessTolerance = 1e-10;
constexpr double kBasisTolerance = 1e-12;

double hermiticity_defect(const ComplexMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

HermitianBasis::HermitianBasis(int dimension) : dimension_(dimension) {
  if (dimension < 2) {
    throw ValidationError("basis dimension must be at least 2, got " + std::to_string(dimension));
  }
  const int n = dimension;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const std::complex<double> i(0.0, 1.0);
  elements_.reserve(n * n - 1);

  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      ComplexMatrix s = ComplexMatrix::Zero(n, n);
      s(j, k) = inv_sqrt2;
      s(k, j) = inv_sqrt2;
      elements_.push_back(std::move(s));
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      ComplexMatrix s = ComplexMatrix::Zero(n, n);
      // -i (E_jk - E_kj) / sqrt(2)
      s(j, k) = -i * inv_sqrt2;
      s(k, j) = i * inv_sqrt2;
      elements_.push_back(std::move(s));
    }
  }
  for (int m = 1; m < n; ++m) {
    ComplexMatrix s = ComplexMatrix::Zero(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m) * (m + 1));
    for (int d = 0; d < m; ++d) s(d, d) = scale;
    s(m, m) = -m * scale;
    elements_.push_back(std::move(s));
  }
}

ComplexMatrix HermitianBasis::compose(double identity_coeff, const Eigen::VectorXd& coeffs) const {
  ComplexMatrix out = identity_coeff * ComplexMatrix::Identity(dimension_, dimension_);
  for (int j = 0; j < size(); ++j) out += coeffs(j) * elements_[j];
  return out;
}

Eigen::VectorXd HermitianBasis::project(const ComplexMatrix& m) const {
  Eigen::VectorXd out(size());
  // tr{M sigma} = sum_kl M_kl sigma_lk = sum_kl M_kl conj(sigma_kl) for Hermitian sigma
  for (int j = 0; j < size(); ++j) out(j) = (m.array() * elements_[j].array().conjugate()).sum().real();
  return out;
}

HermitianBasis generate_basis(int dimension) { return HermitianBasis(dimension); }

double min_eigenvalue(const ComplexMatrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

double max_bloch_radius(int dimension) { return std::sqrt((dimension - 1.0) / dimension); }

bool is_physical(const Eigen::VectorXd& r, const HermitianBasis& basis, double tolerance) {
  return min_eigenvalue(bloch_to_density(r, basis)) >= -tolerance;
}

BlochState density_to_bloch(const ComplexMatrix& rho, const HermitianBasis& basis) {
  const int n = basis.dimension();
  if (rho.rows() != n || rho.cols() != n) {
    throw ValidationError("density matrix has shape " + std::to_string(rho.rows()) + "x" +
                          std::to_string(rho.cols()) + ", expected " + std::to_string(n) + "x" +
                          std::to_string(n));
  }
  if (const double defect = hermiticity_defect(rho); defect > kHermiticityTolerance) {
    throw ValidationError("density matrix is not Hermitian (defect " + std::to_string(defect) + ")");
  }
  if (const double trace_err = std::abs(rho.trace() - 1.0); trace_err > 1e-10) {
    throw ValidationError("density matrix trace differs from 1 by " + std::to_string(trace_err));
  }
  BlochState state;
  state.r = basis.project(rho);
  state.physical = min_eigenvalue(rho) >= -kPositivityTolerance;
  return state;
}

ComplexMatrix bloch_to_density(const Eigen::VectorXd& r, const HermitianBasis& basis) {
  if (r.size() != basis.size()) {
    throw ValidationError("Bloch vector has length " + std::to_string(r.size()) + ", expected " +
                          std::to_string(basis.size()));
  }
  return basis.compose(1.0 / basis.dimension(), r);
}

PovmOutcome povm_to_affine(const ComplexMatrix& element, const HermitianBasis& basis) {
  const int n = basis.dimension();
  if (element.rows() != n || element.cols() != n) {
    throw ValidationError("POVM element has the wrong shape");
  }
  if (const double defect = hermiticity_defect(element); defect > kHermiticityTolerance) {
    throw ValidationError("POVM element is not Hermitian (defect " + std::to_string(defect) + ")");
  }
  if (const double low = min_eigenvalue(element); low < -kPositivityTolerance) {
    throw ValidationError("POVM element has negative eigenvalue " + std::to_string(low));
  }
  return PovmOutcome{element, element.trace().real() / n, basis.project(element)};
}

ExperimentSetup::ExperimentSetup(HermitianBasis basis, std::vector<ConfigMatrices> configs)
    : basis_(std::move(basis)) {
  const int n = basis_.dimension();
  const int dof = basis_.size();
  offsets_.push_back(0);
  reduced_offsets_.push_back(0);
  for (auto& raw : configs) {
    if (raw.elements.empty()) throw ValidationError("configuration '" + raw.label + "' has no outcomes");
    MeasurementConfig cfg;
    cfg.label = raw.label;
    for (auto& m : raw.elements) {
      if (m.rows() != n || m.cols() != n) {
        throw ValidationError("configuration '" + raw.label + "' holds a " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()) + " matrix, expected " + std::to_string(n) + "x" +
                              std::to_string(n));
      }
      // Projection without checks; validate_setup reports any defects.
      cfg.outcomes.push_back(PovmOutcome{m, m.trace().real() / n, basis_.project(m)});
    }
    const int count = static_cast<int>(cfg.outcomes.size());
    offsets_.push_back(offsets_.back() + count);
    reduced_offsets_.push_back(reduced_offsets_.back() + count - 1);
    configs_.push_back(std::move(cfg));
  }

  const int total = offsets_.back();
  const int reduced = reduced_offsets_.back();
  a_.resize(total, dof);
  c_.resize(total);
  a_reduced_.resize(reduced, dof);
  c_reduced_.resize(reduced);
  config_of_row_.resize(total);
  full_to_reduced_.assign(total, -1);
  reduced_to_full_.resize(reduced);

  for (int g = 0; g < config_count(); ++g) {
    const auto& outcomes = configs_[g].outcomes;
    for (int alpha = 0; alpha < static_cast<int>(outcomes.size()); ++alpha) {
      const int row = offsets_[g] + alpha;
      a_.row(row) = outcomes[alpha].direction.transpose();
      c_(row) = outcomes[alpha].offset;
      config_of_row_[row] = g;
      if (alpha + 1 < static_cast<int>(outcomes.size())) {
        const int rrow = reduced_offsets_[g] + alpha;
        a_reduced_.row(rrow) = a_.row(row);
        c_reduced_(rrow) = c_(row);
        full_to_reduced_[row] = rrow;
        reduced_to_full_[rrow] = row;
      }
    }
  }
}

Eigen::VectorXd ExperimentSetup::reduce(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(reduced_count());
  for (int i = 0; i < reduced_count(); ++i) out(i) = full(reduced_to_full_[i]);
  return out;
}

Eigen::VectorXd ExperimentSetup::block_sums(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(config_count());
  for (int g = 0; g < config_count(); ++g) out(g) = full.segment(offsets_[g], block_size(g)).sum();
  return out;
}

Eigen::VectorXd ExperimentSetup::reduced_block_sums(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd out(config_count());
  for (int g = 0; g < config_count(); ++g) {
    out(g) = reduced.segment(reduced_offsets_[g], reduced_block_size(g)).sum();
  }
  return out;
}

Eigen::VectorXd ExperimentSetup::expand(const Eigen::VectorXd& per_config) const {
  Eigen::VectorXd out(outcome_count());
  for (int g = 0; g < config_count(); ++g) out.segment(offsets_[g], block_size(g)).setConstant(per_config(g));
  return out;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    os << v.kind;
    if (!v.config.empty()) os << " [" << v.config << (v.outcome >= 0 ? "#" + std::to_string(v.outcome) : "") << "]";
    os << ": " << v.message << " (magnitude " << v.magnitude << ")\n";
  }
  return os.str();
}

ValidationReport validate_setup(const HermitianBasis& basis, const std::vector<ConfigMatrices>& configs) {
  ValidationReport report;
  const int n = basis.dimension();

  // Basis: traceless, orthonormal.
  double worst_trace = 0.0, worst_gram = 0.0;
  for (int j = 0; j < basis.size(); ++j) {
    worst_trace = std::max(worst_trace, std::abs(basis[j].trace()));
    for (int k = 0; k < basis.size(); ++k) {
      const double gram = (basis[j] * basis[k]).trace().real();
      worst_gram = std::max(worst_gram, std::abs(gram - (j == k ? 1.0 : 0.0)));
    }
  }
  if (worst_trace > kBasisTolerance) {
    report.violations.push_back({"basis", "", -1, worst_trace, "basis element is not traceless"});
  }
  if (worst_gram > kBasisTolerance) {
    report.violations.push_back({"basis", "", -1, worst_gram, "basis is not orthonormal"});
  }
  if (configs.empty()) report.violations.push_back({"arity", "", -1, 0.0, "setup has no configurations"});

  for (const auto& cfg : configs) {
    if (cfg.elements.size() < 2) {
      report.violations.push_back({"arity", cfg.label, -1, static_cast<double>(cfg.elements.size()),
                                   "configuration needs at least two outcomes"});
    }
    ComplexMatrix total = ComplexMatrix::Zero(n, n);
    bool shapes_ok = true;
    for (int alpha = 0; alpha < static_cast<int>(cfg.elements.size()); ++alpha) {
      const auto& m = cfg.elements[alpha];
      if (m.rows() != n || m.cols() != n) {
        report.violations.push_back({"dimension", cfg.label, alpha, static_cast<double>(m.rows()),
                                     "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                         ", expected " + std::to_string(n) + "x" + std::to_string(n)});
        shapes_ok = false;
        continue;
      }
      if (!m.allFinite()) {
        report.violations.push_back({"finite", cfg.label, alpha, 0.0, "matrix has non-finite entries"});
        shapes_ok = false;
        continue;
      }
      if (const double defect = hermiticity_defect(m); defect > kHermiticityTolerance) {
        report.violations.push_back({"hermiticity", cfg.label, alpha, defect, "element is not Hermitian"});
      } else if (const double low = min_eigenvalue(m); low < -kPositivityTolerance) {
        report.violations.push_back({"positivity", cfg.label, alpha, low, "element has a negative eigenvalue"});
      }
      total += m;
    }
    if (!shapes_ok) continue;
    const double sum_c = total.trace().real() / n;
    if (std::abs(sum_c - 1.0) > kCompletenessTolerance) {
      std::ostringstream msg;
      msg << "identity components sum to " << sum_c << ", expected 1";
      report.violations.push_back({"completeness", cfg.label, -1, sum_c, msg.str()});
    }
    const double sum_a = basis.project(total).norm();
    if (sum_a > kCompletenessTolerance) {
      report.violations.push_back({"completeness", cfg.label, -1, sum_a, "Bloch directions do not sum to zero"});
    }
  }
  return report;
}

ValidationReport validate_setup(const ExperimentSetup& setup) {
  std::vector<ConfigMatrices> raw;
  raw.reserve(setup.config_count());
  for (const auto& cfg : setup.configs()) {
    ConfigMatrices m{cfg.label, {}};
    for (const auto& o : cfg.outcomes) m.elements.push_back(o.matrix);
    raw.push_back(std::move(m));
  }
  return validate_setup(setup.basis(), raw);
}

void require_valid(const ExperimentSetup& setup) {
  const auto report = validate_setup(setup);
  if (!report.ok()) throw ValidationError("invalid experiment setup:\n" + report.to_string());
}

Eigen::VectorXd probabilities(const ExperimentSetup& setup, const Eigen::VectorXd& r) {
  if (r.size() != setup.parameter_count()) {
    throw ValidationError("Bloch vector has length " + std::to_string(r.size()) + ", expected " +
                          std::to_string(setup.parameter_count()));
  }
  return setup.c() + setup.A() * r;
}

}  // namespace tomoplan
