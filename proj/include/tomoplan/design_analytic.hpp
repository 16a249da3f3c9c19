#pragma once

#include <string>

#include <Eigen/Dense>

#include "tomoplan/fisher.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

/// lambda_g proportional to sqrt(block_sums_g), normalized. Block sums within
/// -1e-12 (relative) of zero are clamped; anything more negative raises
/// DegenerateDesignError mentioning `what`.
Design design_from_block_sums(const ExperimentSetup& setup, const Eigen::VectorXd& block_sums,
                              const std::string& what);

/// Closed-form OED for minimal tomography at state r.
Design minimal_oed(const ExperimentSetup& setup, const Eigen::VectorXd& r);

/// Same design for all-binary minimal setups, sqrt(d_g p_g (1 - p_g)).
/// Throws DimensionError when a configuration is not binary.
Design minimal_oed_binary(const ExperimentSetup& setup, const Eigen::VectorXd& r);

/// DimensionError unless every configuration has exactly two outcomes.
void require_binary(const ExperimentSetup& setup);

}  // namespace tomoplan
