#include <doctest.h>

#include <limits>

#include "oracles.hpp"
#include "tomoplan/errors.hpp"
#include "tomoplan/fisher.hpp"

using namespace tomoplan;

namespace {

ExperimentSetup swap_last_outcomes(const ExperimentSetup& s) {
  std::vector<ConfigMatrices> cs;
  for (const auto& cfg : s.configs()) {
    ConfigMatrices c{cfg.label, {}};
    for (auto it = cfg.outcomes.rbegin(); it != cfg.outcomes.rend(); ++it) c.elements.push_back(it->matrix);
    cs.push_back(c);
  }
  return ExperimentSetup(s.basis(), cs);
}

Eigen::VectorXd random_simplex(int m, oracle::Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd w(m);
  for (int i = 0; i < m; ++i) w(i) = u(rng);
  return w / w.sum();
}

}  // namespace

TEST_CASE("MUB Fisher information at the origin") {
  const ExperimentSetup mub = oracle::mub_setup();
  const FisherBundle fb = fisher_info(mub, Design::uniform(3), Eigen::VectorXd::Zero(3));
  CHECK((fb.F - (2.0 / 3.0) * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(fb.crb == doctest::Approx(4.5).epsilon(1e-14));
  CHECK_FALSE(fb.singular);
}

TEST_CASE("too few directions give a singular Fisher matrix") {
  auto cs = oracle::mub_configs();
  cs.pop_back();
  const ExperimentSetup s(HermitianBasis(2), cs);
  const FisherBundle fb = fisher_info(s, Design::uniform(2), Eigen::VectorXd::Zero(3));
  CHECK(fb.singular);
  CHECK(fb.crb == std::numeric_limits<double>::infinity());
}

TEST_CASE("factored Fisher matches the outer-product sum and is linear in lambda") {
  oracle::Rng rng(21);
  for (int t = 0; t < 25; ++t) {
    const ExperimentSetup s = oracle::random_binary_qubit_setup(rng, 3 + t % 3);
    const Eigen::VectorXd r = oracle::random_qubit_state(rng);
    const Eigen::VectorXd l1 = random_simplex(s.config_count(), rng);
    const Eigen::VectorXd l2 = random_simplex(s.config_count(), rng);
    const Eigen::MatrixXd F1 = fisher_info(s, Design{l1, {}}, r).F;
    CHECK((F1 - oracle::fisher_outer_sum(s, l1, r)).cwiseAbs().maxCoeff() < 1e-10);
    const double c = 0.3;
    const Eigen::MatrixXd Fmix = fisher_info(s, Design{c * l1 + (1 - c) * l2, {}}, r).F;
    CHECK((Fmix - c * F1 - (1 - c) * fisher_info(s, Design{l2, {}}, r).F).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("zero probability with positive weight names the outcome") {
  const ExperimentSetup mub = oracle::mub_setup();
  const Eigen::VectorXd up = Eigen::Vector3d(0, 0, 1.0 / std::sqrt(2.0));
  try {
    fisher_info(mub, Design::uniform(3), up);
    FAIL("expected a singularity error");
  } catch (const SingularityError& e) {
    CHECK(std::string(e.what()).find("'z'") != std::string::npos);
  }
  // the z configuration unused: no error, but F is rank deficient
  const FisherBundle fb = fisher_info(mub, Design{Eigen::Vector3d(0.5, 0.5, 0.0), {}}, up);
  CHECK(fb.singular);
}

TEST_CASE("minimal kernel for MUB") {
  const ExperimentSetup mub = oracle::mub_setup();
  const MinimalKernel k = minimal_kernel(mub, Eigen::VectorXd::Zero(3));
  CHECK((k.geometry.d.array() - 2.0).abs().maxCoeff() < 1e-12);
  CHECK((k.b.array() - 0.5).abs().maxCoeff() < 1e-12);
  CHECK((k.geometry.K - mub.reduced_A() * mub.reduced_A().transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(crb_minimal(mub, k, Design::uniform(3)) == doctest::Approx(4.5));
}

TEST_CASE("kernel CRB equals tr F^-1 and is invariant to the eliminated outcome") {
  oracle::Rng rng(8);
  for (int t = 0; t < 30; ++t) {
    const ExperimentSetup s = oracle::random_binary_qubit_setup(rng);
    const Eigen::VectorXd r = t == 0 ? Eigen::VectorXd::Zero(3) : oracle::random_qubit_state(rng);
    const Design d{random_simplex(3, rng), {}};
    const double direct = oracle::crb_direct(s, d.weights, r);
    const double kernel = crb_minimal(s, minimal_kernel(s, r), d);
    CHECK(std::abs(kernel - direct) < 1e-8 * direct);
    const ExperimentSetup swapped = swap_last_outcomes(s);
    CHECK(std::abs(crb_minimal(swapped, minimal_kernel(swapped, r), d) - direct) < 1e-8 * direct);
  }
  // a qutrit projective configuration plus binary ones: non-binary D blocks
  for (int t = 0; t < 10; ++t) {
    std::vector<ConfigMatrices> cs;
    for (int k = 0; k < 2; ++k) cs.push_back(oracle::random_projective_config(3, rng, "p" + std::to_string(k)));
    for (int k = 0; k < 4; ++k) cs.push_back(oracle::random_binary_config(3, rng, "b" + std::to_string(k)));
    const ExperimentSetup s(HermitianBasis(3), cs);
    REQUIRE(s.is_minimal());
    const Eigen::VectorXd r = density_to_bloch(oracle::random_density(3, 3, rng), s.basis()).r;
    const Design d{random_simplex(6, rng), {}};
    const double direct = fisher_info(s, d, r).crb;
    CHECK(std::abs(crb_minimal(s, minimal_kernel(s, r), d) - direct) < 1e-8 * direct);
  }
}

TEST_CASE("kernel preconditions and crb_minimal edge cases") {
  oracle::Rng rng(2);
  const ExperimentSetup four = oracle::random_binary_qubit_setup(rng, 4);
  CHECK_THROWS_AS(minimal_kernel(four, Eigen::VectorXd::Zero(3)), DimensionError);

  const ExperimentSetup mub = oracle::mub_setup();
  CHECK(crb_minimal(mub, Eigen::Vector3d(0.5, 0.5, 0.5), Design::uniform(3)) == doctest::Approx(4.5));
  CHECK(crb_minimal(mub, Eigen::Vector3d::Zero(), Design::uniform(3)) == 0.0);
  CHECK(crb_minimal(mub, Eigen::Vector3d(0.5, 0.5, 0.5), Design{Eigen::Vector3d(0, 0.5, 0.5), {}}) ==
        std::numeric_limits<double>::infinity());

  // two parallel binary configurations: rank deficient A~
  auto cs = oracle::mub_configs();
  cs[1] = cs[0];
  cs[1].label = "x2";
  CHECK_THROWS_AS(minimal_kernel(ExperimentSetup(HermitianBasis(2), cs), Eigen::VectorXd::Zero(3)),
                  SingularityError);
}

TEST_CASE("Fisher information agrees with exhaustive enumeration") {
  oracle::Rng rng(99);
  for (int t = 0; t < 5; ++t) {
    const ExperimentSetup s = oracle::random_binary_qubit_setup(rng);
    const Eigen::VectorXd r = oracle::random_qubit_state(rng);
    const std::vector<int> shots = {2, 1, 3};
    const Eigen::VectorXd lambda = Eigen::Vector3d(2, 1, 3) / 6.0;
    const Eigen::MatrixXd enumerated = oracle::fisher_by_enumeration(s, shots, r);
    CHECK((enumerated - fisher_info(s, Design{lambda, {}}, r).F).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("designs live on the simplex") {
  CHECK_THROWS_AS(check_design(Design{Eigen::Vector3d(0.5, 0.5, 0.5), {}}, 3), ValidationError);
  CHECK_THROWS_AS(check_design(Design::uniform(2), 3), ValidationError);
  CHECK_THROWS_AS(Design::from_weights(Eigen::Vector2d(1, -1)), ValidationError);
  CHECK(Design::from_weights(Eigen::Vector2d(1, 3))[1] == doctest::Approx(0.75));
}
