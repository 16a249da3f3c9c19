#include "tomoplan/fisher.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "tomoplan/errors.hpp"

namespace tomoplan {

Design Design::uniform(int configs) {
  if (configs < 1) throw ValidationError("a design needs at least one configuration");
  return Design{Eigen::VectorXd::Constant(configs, 1.0 / configs), {}};
}

Design Design::from_weights(const Eigen::VectorXd& weights) {
  if (weights.size() == 0) throw ValidationError("empty design");
  if (!weights.allFinite()) throw ValidationError("design weights must be finite");
  if (weights.minCoeff() < 0.0) throw ValidationError("design weights must be nonnegative");
  const double total = weights.sum();
  if (!(total > 0.0)) throw ValidationError("design weights sum to zero");
  return Design{weights / total, {}};
}

void check_design(const Design& design, int configs) {
  if (design.size() != configs) {
    throw ValidationError("design has " + std::to_string(design.size()) + " weights for " + std::to_string(configs) +
                          " configurations");
  }
  if (!design.weights.allFinite() || design.weights.minCoeff() < 0.0) {
    throw ValidationError("design weights must be finite and nonnegative");
  }
  if (std::abs(design.weights.sum() - 1.0) > 1e-12) {
    throw ValidationError("design weights must sum to 1");
  }
}

FisherBundle fisher_bundle(Eigen::MatrixXd F) {
  FisherBundle out;
  F = 0.5 * (F + F.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(F, Eigen::EigenvaluesOnly);
  out.eigenvalues = solver.eigenvalues();
  const double top = out.eigenvalues.size() ? out.eigenvalues.maxCoeff() : 0.0;
  const double low = out.eigenvalues.size() ? out.eigenvalues.minCoeff() : 0.0;
  if (!(top > 0.0) || low < kSingularRatio * top) {
    out.singular = true;
    out.crb = std::numeric_limits<double>::infinity();
  } else {
    out.crb = out.eigenvalues.cwiseInverse().sum();
  }
  out.F = std::move(F);
  return out;
}

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& rows, const Eigen::VectorXd& outcome_weights) {
  return rows.transpose() * outcome_weights.asDiagonal() * rows;
}

Eigen::VectorXd inverse_probability_weights(const ExperimentSetup& setup, const Eigen::VectorXd& p,
                                            const Eigen::VectorXd& active) {
  Eigen::VectorXd w(p.size());
  for (int row = 0; row < p.size(); ++row) {
    const int g = setup.config_of_outcome(row);
    const bool used = active.size() == 0 || active(g) > 0.0;
    if (p(row) < kProbabilityFloor) {
      if (used) {
        std::ostringstream msg;
        msg << "probability " << p(row) << " of outcome " << row - setup.block_offset(g) << " in configuration '"
            << setup.config(g).label << "' is below the floor; the Fisher information is singular";
        throw SingularityError(msg.str());
      }
      w(row) = 0.0;
    } else {
      w(row) = 1.0 / p(row);
    }
  }
  return w;
}

FisherBundle fisher_info(const ExperimentSetup& setup, const Design& design, const Eigen::VectorXd& r) {
  check_design(design, setup.config_count());
  const Eigen::VectorXd p = probabilities(setup, r);
  const Eigen::VectorXd w = inverse_probability_weights(setup, p, design.weights);
  const Eigen::VectorXd lambda = setup.expand(design.weights);
  return fisher_bundle(weighted_gram(setup.A(), lambda.cwiseProduct(w)));
}

MinimalGeometry minimal_geometry(const ExperimentSetup& setup) {
  if (!setup.is_minimal()) {
    throw DimensionError("setup is not minimal: " + std::to_string(setup.reduced_count()) +
                         " independent outcomes for " + std::to_string(setup.parameter_count()) + " parameters");
  }
  MinimalGeometry geo;
  const Eigen::MatrixXd& At = setup.reduced_A();
  geo.K = At * At.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(At);
  if (lu.rank() < At.rows()) {
    throw SingularityError("reduced measurement matrix is rank deficient (rank " + std::to_string(lu.rank()) +
                           " of " + std::to_string(At.rows()) + ")");
  }
  geo.K_inv = geo.K.ldlt().solve(Eigen::MatrixXd::Identity(geo.K.rows(), geo.K.cols()));
  geo.K_inv = 0.5 * (geo.K_inv + geo.K_inv.transpose());
  geo.D = Eigen::MatrixXd::Zero(geo.K.rows(), geo.K.cols());
  for (int g = 0; g < setup.config_count(); ++g) {
    const int off = setup.reduced_offset(g);
    const int len = setup.reduced_block_size(g);
    geo.D.block(off, off, len, len) = geo.K_inv.block(off, off, len, len);
  }
  geo.d = geo.K_inv.diagonal();
  return geo;
}

MinimalKernel minimal_kernel(const ExperimentSetup& setup, const Eigen::VectorXd& r) {
  MinimalKernel kernel;
  kernel.geometry = minimal_geometry(setup);
  kernel.reduced_p = setup.reduce(probabilities(setup, r));
  const auto& geo = kernel.geometry;
  kernel.b = kernel.reduced_p.cwiseProduct(geo.d - geo.D * kernel.reduced_p);
  return kernel;
}

double crb_minimal(const ExperimentSetup& setup, const Eigen::VectorXd& b, const Design& design) {
  check_design(design, setup.config_count());
  const Eigen::VectorXd sums = setup.reduced_block_sums(b);
  double total = 0.0;
  for (int g = 0; g < setup.config_count(); ++g) {
    if (design[g] > 0.0) {
      total += sums(g) / design[g];
    } else if (sums(g) > 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return total;
}

double crb_minimal(const ExperimentSetup& setup, const MinimalKernel& kernel, const Design& design) {
  return crb_minimal(setup, kernel.b, design);
}

}  // namespace tomoplan
