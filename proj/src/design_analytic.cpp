#include "tomoplan/design_analytic.hpp"

#include <cmath>
#include <sstream>

#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

constexpr double kConditioningFloor = 1e-9;

void flag_conditioning(const ExperimentSetup& setup, const Eigen::VectorXd& p, Design& design) {
  for (int row = 0; row < p.size(); ++row) {
    if (p(row) < kConditioningFloor) {
      const int g = setup.config_of_outcome(row);
      std::ostringstream msg;
      msg << "outcome " << row - setup.block_offset(g) << " of '" << setup.config(g).label
          << "' has probability " << p(row) << "; the CRB is close to singular";
      design.warnings.push_back(msg.str());
    }
  }
}

}  // namespace

Design design_from_block_sums(const ExperimentSetup& setup, const Eigen::VectorXd& block_sums,
                              const std::string& what) {
  const double scale = block_sums.cwiseAbs().maxCoeff();
  Eigen::VectorXd root(block_sums.size());
  for (int g = 0; g < block_sums.size(); ++g) {
    double s = block_sums(g);
    if (s < 0.0) {
      if (s < -1e-12 * scale) {
        std::ostringstream msg;
        msg << what << ": block sum " << s << " for configuration '" << setup.config(g).label
            << "' is negative, no real design exists";
        throw DegenerateDesignError(msg.str());
      }
      s = 0.0;
    }
    root(g) = std::sqrt(s);
  }
  if (!(root.sum() > 0.0)) throw DegenerateDesignError(what + ": every block sum vanishes");
  return Design{root / root.sum(), {}};
}

Design minimal_oed(const ExperimentSetup& setup, const Eigen::VectorXd& r) {
  const MinimalKernel kernel = minimal_kernel(setup, r);
  Design design = design_from_block_sums(setup, setup.reduced_block_sums(kernel.b), "minimal OED");
  flag_conditioning(setup, probabilities(setup, r), design);
  return design;
}

void require_binary(const ExperimentSetup& setup) {
  for (int g = 0; g < setup.config_count(); ++g) {
    if (setup.block_size(g) != 2) {
      throw DimensionError("configuration '" + setup.config(g).label + "' has " +
                           std::to_string(setup.block_size(g)) + " outcomes; a binary setup is required");
    }
  }
}

Design minimal_oed_binary(const ExperimentSetup& setup, const Eigen::VectorXd& r) {
  require_binary(setup);
  const MinimalGeometry geo = minimal_geometry(setup);
  const Eigen::VectorXd pt = setup.reduce(probabilities(setup, r));
  Eigen::VectorXd sums(setup.config_count());
  for (int g = 0; g < setup.config_count(); ++g) {
    const double q = pt(g);
    sums(g) = geo.d(g) * q * (1.0 - q);
  }
  Design design = design_from_block_sums(setup, sums, "binary minimal OED");
  flag_conditioning(setup, probabilities(setup, r), design);
  return design;
}

}  // namespace tomoplan
