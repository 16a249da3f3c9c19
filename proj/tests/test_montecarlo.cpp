#include <doctest.h>

#include <cstdlib>

#include "oracles.hpp"
#include "tomoplan/averaging.hpp"
#include "tomoplan/errors.hpp"
#include "tomoplan/montecarlo.hpp"

using namespace tomoplan;

namespace {

const double kR2 = 1 / std::sqrt(2.0);

double integrate(const SphereGrid& g, const std::function<double(const Eigen::VectorXd&)>& f) {
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) acc += g.weights[i] * f(g.states[i]);
  return acc;
}

double unit(double) { return 1.0; }

}  // namespace

TEST_CASE("quadrature rules") {
  const NodesWeights gl = gauss_legendre(64);
  double sum = 0.0, x4 = 0.0;
  for (int i = 0; i < 64; ++i) {
    sum += gl.weights[i];
    x4 += gl.weights[i] * std::pow(gl.nodes[i], 4);
  }
  CHECK(sum == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x4 == doctest::Approx(0.4).epsilon(1e-14));

  // n nodes integrate degree n-1 exactly against the weight
  const NodesWeights cr = chebyshev_rule(6, 0.0, 2.0, unit);
  for (int k = 0; k < 6; ++k) {
    double acc = 0.0;
    for (int i = 0; i < 6; ++i) acc += cr.weights[i] * std::pow(cr.nodes[i], k);
    CHECK(acc == doctest::Approx(std::pow(2.0, k + 1) / (k + 1)).epsilon(1e-12));
  }
  CHECK(cr.nodes.front() == doctest::Approx(0.0));
  CHECK(cr.nodes.back() == doctest::Approx(2.0));
}

TEST_CASE("sphere grid") {
  const SphereGrid g = sphere_grid(6, 6, 6);
  CHECK(g.size() == 216);
  const double vol = 4.0 / 3.0 * M_PI * std::pow(kR2, 3);
  CHECK(std::abs(integrate(g, [](const Eigen::VectorXd&) { return 1.0; }) - vol) < 1e-10);
  CHECK(std::abs(g.volume() - vol) < 1e-10);
  const double x2 = integrate(g, [](const Eigen::VectorXd& r) { return r(0) * r(0); });
  CHECK(std::abs(x2 / (0.1 * vol) - 1) < 1e-2);
  double nsum = 0.0;
  for (double w : g.normalized_weights()) nsum += w;
  CHECK(nsum == doctest::Approx(1.0).epsilon(1e-14));

  int boundary = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.states[i].norm() <= kR2 * (1 + 1e-12));
    if (g.on_boundary(i)) {
      ++boundary;
      CHECK(g.interior_state(i).norm() == doctest::Approx(kR2 * (1 - 1e-6)).epsilon(1e-12));
    } else {
      CHECK(g.interior_state(i) == g.states[i]);
    }
  }
  CHECK(boundary == 36);
}

TEST_CASE("campaign basics") {
  const ExperimentSetup mub = oracle::mub_setup();
  const SphereGrid g = sphere_grid(3, 3, 4);
  const auto all = std::vector<EstimatorKind>{EstimatorKind::Inversion, EstimatorKind::LeastSquares,
                                              EstimatorKind::MaxLikelihood};

  const CampaignResult none = run_trials(mub, Design::uniform(3), g, 1000, 0, all, 1);
  CHECK(none.mse.empty());
  REQUIRE(none.crb.size() == g.size());
  for (std::size_t s = 0; s < g.size(); ++s) CHECK(none.crb[s] > 0.0);
  CHECK(none.shots == std::vector<long long>{334, 333, 333});

  CampaignOptions exact;
  exact.exact = true;
  const CampaignResult zero = run_trials(mub, Design::uniform(3), g, 1000, 3, all, 1, exact);
  for (const auto& col : zero.mse)
    for (double v : col) CHECK(v < 1e-20);

  CampaignOptions one, many;
  one.threads = 1;
  many.threads = 3;
  const CampaignResult a = run_trials(mub, Design::uniform(3), g, 200, 20, all, 42, one);
  const CampaignResult b = run_trials(mub, Design::uniform(3), g, 200, 20, all, 42, many);
  CHECK(a.mse == b.mse);
  CHECK(a.crb == b.crb);
  const CampaignResult c = run_trials(mub, Design::uniform(3), g, 200, 20, all, 43, one);
  CHECK(a.mse != c.mse);
}

TEST_CASE("inversion tracks the CRB") {
  oracle::Rng rng(3);
  const ExperimentSetup s = oracle::random_binary_qubit_setup(rng);
  const SphereGrid g = sphere_grid(4, 4, 4);
  const CampaignResult res = run_trials(s, Design::uniform(3), g, 1000, 400, {EstimatorKind::Inversion}, 5);
  const double ratio = res.average_mse(g, EstimatorKind::Inversion) / res.average_crb(g);
  MESSAGE("inversion MSE / CRB on a small grid: " << ratio);
  CHECK(std::abs(ratio - 1) < 0.2);
}

TEST_CASE("brute-force average OED") {
  const ExperimentSetup mub = oracle::mub_setup();
  const BruteForceResult bf = brute_force_average_oed(mub, sphere_grid(6, 6, 6), Representation::Bloch);
  // the product grid is not symmetric under axis permutations
  CHECK((bf.design.weights.array() - 1.0 / 3).abs().maxCoeff() < 2e-3);

  oracle::Rng rng(4);
  for (int t = 0; t < 5; ++t) {
    const ExperimentSetup s = oracle::random_binary_qubit_setup(rng);
    const BruteForceResult six = brute_force_average_oed(s, sphere_grid(6, 6, 6), Representation::Bloch);
    const BruteForceResult eight = brute_force_average_oed(s, sphere_grid(8, 8, 8), Representation::Bloch);
    const Design crb_route = average_oed_crb(s, averaging_context(s, kR2));
    MESSAGE("grid 6 vs 8: " << discrepancy(six.design.weights, eight.design.weights)
                            << ", brute force vs <<B>> design: " << discrepancy(eight.design.weights, crb_route.weights));
    CHECK(discrepancy(six.design.weights, eight.design.weights) < 1e-3);
    CHECK(discrepancy(eight.design.weights, crb_route.weights) < 0.05);
    const BruteForceResult chol = brute_force_average_oed(s, sphere_grid(6, 6, 6), Representation::Cholesky);
    CHECK(std::abs(chol.design.weights.sum() - 1) < 1e-12);
  }
}

TEST_CASE("discrepancy") {
  CHECK(discrepancy(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(1, 0, 0)) == 0.0);
  CHECK(discrepancy(Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)) == 2.0);
  CHECK(discrepancy(Eigen::Vector3d(0.5, 0.3, 0.2), Eigen::Vector3d(0.4, 0.4, 0.2)) == doctest::Approx(0.2));
  CHECK_THROWS_AS(discrepancy(Eigen::Vector3d(1, 0, 0), Eigen::Vector2d(1, 0)), DimensionError);
}
