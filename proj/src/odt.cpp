#include "tomoplan/odt.hpp"

#include <cmath>
#include <limits>

#include "tomoplan/errors.hpp"

namespace tomoplan {

VarianceMatrix variance_matrix(const ExperimentSetup& setup, const AveragingContext& ctx) {
  const MinimalGeometry geo = minimal_geometry(setup);
  const Eigen::MatrixXd& At = setup.reduced_A();
  const Eigen::VectorXd& ct = setup.reduced_c();
  const double m2 = ctx.moments.x2;
  const double m22 = ctx.moments.x2y2;

  VarianceMatrix out;
  out.W = geo.D * At;
  out.X = At.cwiseProduct(out.W);
  const Eigen::VectorXd S = out.X.rowwise().sum();
  const Eigen::VectorXd e = geo.d - geo.D * ct;
  // linear part of b(r)
  const Eigen::MatrixXd ell = e.asDiagonal() * At - ct.asDiagonal() * out.W;
  const Eigen::MatrixXd WWt = out.W * out.W.transpose();
  const Eigen::MatrixXd AWt = At * out.W.transpose();

  out.v = m2 * ell * ell.transpose() +
          m22 * (S * S.transpose() + geo.K.cwiseProduct(WWt) + AWt.cwiseProduct(AWt.transpose())) -
          m2 * m2 * S * S.transpose();
  out.v = 0.5 * (out.v + out.v.transpose());

  const int m = setup.config_count();
  out.V.resize(m, m);
  for (int g = 0; g < m; ++g) {
    for (int d = g; d < m; ++d) {
      out.V(g, d) = out.v.block(setup.reduced_offset(g), setup.reduced_offset(d), setup.reduced_block_size(g),
                                setup.reduced_block_size(d)).sum();
      out.V(d, g) = out.V(g, d);
    }
  }
  return out;
}

double crb_variance(const Eigen::MatrixXd& V, const Design& design) {
  check_design(design, static_cast<int>(V.rows()));
  Eigen::VectorXd inv(design.size());
  for (int g = 0; g < design.size(); ++g) {
    if (design[g] > 0.0) {
      inv(g) = 1.0 / design[g];
    } else {
      if (V.row(g).cwiseAbs().maxCoeff() > 0.0) return std::numeric_limits<double>::infinity();
      inv(g) = 0.0;
    }
  }
  return inv.dot(V * inv);
}

double VarianceObjective::value(const Eigen::VectorXd& lambda) const {
  if (lambda.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd inv = lambda.cwiseInverse();
  return inv.dot(V_ * inv);
}

void VarianceObjective::derivatives(const Eigen::VectorXd& lambda, Eigen::VectorXd& gradient,
                                    Eigen::MatrixXd* hessian) const {
  if (lambda.minCoeff() <= 0.0) throw SingularityError("CRB variance is undefined at a zero weight");
  const Eigen::VectorXd inv = lambda.cwiseInverse();
  const Eigen::VectorXd Vi = V_ * inv;
  const Eigen::VectorXd inv2 = inv.cwiseAbs2();
  gradient = -2.0 * Vi.cwiseProduct(inv2);
  if (!hessian) return;
  *hessian = 2.0 * inv2.asDiagonal() * V_ * inv2.asDiagonal();
  hessian->diagonal() += 4.0 * Vi.cwiseProduct(inv2).cwiseProduct(inv);
}

double odt_residual(const Eigen::MatrixXd& V, const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd Vi = V * lambda.cwiseInverse();
  const Eigen::VectorXd l2 = lambda.cwiseAbs2();
  const double eta = l2.dot(Vi) / l2.squaredNorm();
  const double scale = Vi.norm();
  return scale > 0.0 ? (Vi - eta * l2).norm() / scale : 0.0;
}

OptimizationResult odt_design(const Eigen::MatrixXd& V, const OptimizerSettings& settings) {
  if (V.rows() != V.cols() || V.rows() == 0) throw DimensionError("variance matrix must be square and nonempty");
  if (!(V.cwiseAbs().maxCoeff() > 0.0)) throw ValidationError("variance matrix is zero; every design is optimal");
  const VarianceObjective obj(V);
  return minimize_on_simplex(obj, settings);
}

}  // namespace tomoplan
