#include "tomoplan/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

#include <Eigen/Eigenvalues>

#include "tomoplan/cholesky.hpp"
#include "tomoplan/design_analytic.hpp"
#include "tomoplan/design_numeric.hpp"
#include "tomoplan/errors.hpp"
#include "tomoplan/rng.hpp"

namespace tomoplan {

namespace {

constexpr double kBoundaryShrink = 1e-6;
constexpr int kMomentOrder = 64;

double radial_weight(double r) { return r * r; }
double polar_weight(double t) { return std::sin(t); }

std::vector<int> estimator_slots(const std::vector<EstimatorKind>& kinds) {
  std::vector<int> slot(3, -1);
  for (std::size_t e = 0; e < kinds.size(); ++e) slot[static_cast<int>(kinds[e])] = static_cast<int>(e);
  return slot;
}

template <typename Fn>
void parallel_states(std::size_t count, int threads, Fn&& fn) {
  threads = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (threads == 1) {
    for (std::size_t s = 0; s < count; ++s) fn(s);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t s = t; s < count; s += threads) fn(s);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

double SphereGrid::volume() const { return 4.0 / 3.0 * M_PI * radius * radius * radius; }

std::vector<double> SphereGrid::normalized_weights() const {
  std::vector<double> w(weights);
  const double v = volume();
  for (double& x : w) x /= v;
  return w;
}

bool SphereGrid::on_boundary(std::size_t i) const { return r[i] >= radius * (1.0 - 1e-12); }

Eigen::VectorXd SphereGrid::interior_state(std::size_t i) const {
  return on_boundary(i) ? Eigen::VectorXd(states[i] * (1.0 - kBoundaryShrink)) : states[i];
}

NodesWeights gauss_legendre(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(J);
  NodesWeights out;
  for (int i = 0; i < n; ++i) {
    out.nodes.push_back(solver.eigenvalues()(i));
    const double v = solver.eigenvectors()(0, i);
    out.weights.push_back(2.0 * v * v);
  }
  return out;
}

NodesWeights chebyshev_rule(int n, double lo, double hi, double (*weight)(double)) {
  if (n < 2) throw ValidationError("a Chebyshev rule needs at least 2 nodes");
  const double half = 0.5 * (hi - lo);
  const NodesWeights gl = gauss_legendre(kMomentOrder);
  Eigen::VectorXd moments = Eigen::VectorXd::Zero(n);
  for (int q = 0; q < kMomentOrder; ++q) {
    const double s = gl.nodes[q];
    const double w = gl.weights[q] * weight(lo + half * (s + 1.0)) * half;
    const double a = std::acos(std::clamp(s, -1.0, 1.0));
    for (int k = 0; k < n; ++k) moments(k) += w * std::cos(k * a);
  }
  Eigen::MatrixXd V(n, n);
  NodesWeights out;
  for (int j = 0; j < n; ++j) {
    const double a = M_PI * (n - 1 - j) / (n - 1);  // ascending nodes
    const double s = std::cos(a);
    out.nodes.push_back(lo + half * (s + 1.0));
    for (int k = 0; k < n; ++k) V(k, j) = std::cos(k * a);
  }
  const Eigen::VectorXd w = V.partialPivLu().solve(moments);
  out.weights.assign(w.data(), w.data() + n);
  return out;
}

SphereGrid sphere_grid(int n_radial, int n_polar, int n_azimuth) {
  if (n_radial < 2 || n_polar < 2 || n_azimuth < 2) throw ValidationError("grid counts must each be at least 2");
  SphereGrid grid;
  grid.n_radial = n_radial;
  grid.n_polar = n_polar;
  grid.n_azimuth = n_azimuth;
  grid.radius = max_bloch_radius(2);
  const NodesWeights radial = chebyshev_rule(n_radial, 0.0, grid.radius, radial_weight);
  const NodesWeights polar = chebyshev_rule(n_polar, 0.0, M_PI, polar_weight);
  const double dphi = 2.0 * M_PI / n_azimuth;
  for (int i = 0; i < n_radial; ++i) {
    for (int j = 0; j < n_polar; ++j) {
      for (int k = 0; k < n_azimuth; ++k) {
        const double r = radial.nodes[i];
        const double th = polar.nodes[j];
        const double ph = dphi * k;
        Eigen::VectorXd v(3);
        v << r * std::sin(th) * std::cos(ph), r * std::sin(th) * std::sin(ph), r * std::cos(th);
        grid.states.push_back(v);
        grid.r.push_back(r);
        grid.theta.push_back(th);
        grid.phi.push_back(ph);
        grid.weights.push_back(radial.weights[i] * polar.weights[j] * dphi);
      }
    }
  }
  return grid;
}

int campaign_threads() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* env = std::getenv("TOMOPLAN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

double CampaignResult::average_crb(const SphereGrid& grid) const {
  double acc = 0.0;
  const double v = grid.volume();
  for (std::size_t s = 0; s < crb.size(); ++s) {
    if (grid.weights[s] != 0.0) acc += grid.weights[s] / v * crb[s];
  }
  return acc;
}

double CampaignResult::average_mse(const SphereGrid& grid, EstimatorKind kind) const {
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    if (estimators[e] != kind) continue;
    if (mse.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    const double v = grid.volume();
    for (std::size_t s = 0; s < mse[e].size(); ++s) {
      if (grid.weights[s] != 0.0) acc += grid.weights[s] / v * mse[e][s];
    }
    return acc;
  }
  throw ValidationError("estimator " + to_string(kind) + " was not part of the campaign");
}

CampaignResult run_trials(const ExperimentSetup& setup, const Design& design, const SphereGrid& grid,
                          long long n_total, int runs, const std::vector<EstimatorKind>& estimators,
                          std::uint64_t seed, const CampaignOptions& options) {
  if (setup.dimension() != 2) throw DimensionError("campaigns run on qubit grids only");
  if (runs < 0) throw ValidationError("run count must be nonnegative");
  if (n_total < 1) throw ValidationError("total shot count must be positive");
  check_design(design, setup.config_count());

  CampaignResult res;
  res.estimators = estimators;
  res.n_total = n_total;
  res.runs = runs;
  res.seed = seed;
  const ShotAllocation alloc = round_design(design, n_total);
  res.shots = alloc.shots;
  res.starved = alloc.starved;
  Eigen::VectorXd frac(setup.config_count());
  for (int g = 0; g < frac.size(); ++g) frac(g) = static_cast<double>(alloc.shots[g]) / n_total;
  const Design rounded{frac, {}};

  const std::size_t S = grid.size();
  const std::vector<int> slot = estimator_slots(estimators);
  const bool want_lsq = slot[1] >= 0;
  const bool want_ml = slot[2] >= 0 || options.cholesky_metrics;
  res.crb.assign(S, 0.0);
  if (runs > 0) res.mse.assign(estimators.size(), std::vector<double>(S, 0.0));
  res.ml_unconverged.assign(S, 0);
  QuadraticForms forms;
  if (options.cholesky_metrics) {
    forms = quadratic_forms(setup);
    res.theta_mse.assign(S, 0.0);
    res.ccrb.assign(S, 0.0);
  }
  const LinearInverter inverter(setup, measured_configs(alloc.shots));
  const HermitianBasis& basis = setup.basis();
  const double dn = static_cast<double>(n_total);

  parallel_states(S, options.threads > 0 ? options.threads : campaign_threads(), [&](std::size_t s) {
    const Eigen::VectorXd inner = grid.interior_state(s);
    res.crb[s] = fisher_info(setup, rounded, inner).crb / dn;
    Eigen::VectorXd theta_true;
    if (options.cholesky_metrics) {
      const CholeskyState cs = cholesky_vector(bloch_to_density(inner, basis));
      const CholeskyFisher cf = fisher_cholesky(setup, forms, rounded, cs.theta);
      res.ccrb[s] = ccrb(cf.bundle.F, cs.theta) / dn;
      theta_true = cholesky_vector(bloch_to_density(grid.states[s], basis)).theta;
    }
    if (runs == 0) return;
    const Eigen::VectorXd& r = grid.states[s];
    double acc[3] = {0.0, 0.0, 0.0};
    double theta_acc = 0.0;
    for (int k = 0; k < runs; ++k) {
      const std::uint64_t key = derive_seed(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(k)});
      const DataRecord data = options.exact ? exact_data(setup, alloc.shots, r) : sample_data(setup, alloc.shots, r, key);
      const Estimate inv = invert(inverter, basis, data);
      acc[0] += (inv.r - r).squaredNorm();
      if (want_lsq) acc[1] += (least_squares(inv, basis).r - r).squaredNorm();
      if (want_ml) {
        const Estimate ml = max_likelihood(setup, data, inv, options.ml);
        acc[2] += (ml.r - r).squaredNorm();
        if (!ml.converged) ++res.ml_unconverged[s];
        if (options.cholesky_metrics) {
          theta_acc += (cholesky_vector(bloch_to_density(ml.r, basis)).theta - theta_true).squaredNorm();
        }
      }
    }
    for (int kind = 0; kind < 3; ++kind) {
      if (slot[kind] >= 0) res.mse[slot[kind]][s] = acc[kind] / runs;
    }
    if (options.cholesky_metrics) res.theta_mse[s] = theta_acc / runs;
  });
  return res;
}

BruteForceResult brute_force_average_oed(const ExperimentSetup& setup, const SphereGrid& grid,
                                         Representation representation) {
  if (setup.dimension() != 2) throw DimensionError("brute-force averaging is implemented for qubits only");
  QuadraticForms forms;
  if (representation == Representation::Cholesky) forms = quadratic_forms(setup);
  BruteForceResult out;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(setup.config_count());
  double total = 0.0;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const double w = grid.weights[s];
    if (w == 0.0) continue;
    const Eigen::VectorXd r = grid.interior_state(s);
    try {
      Design local;
      if (representation == Representation::Bloch) {
        local = setup.is_minimal() ? minimal_oed(setup, r) : optimize_design(setup, r).design;
      } else {
        const CholeskyState cs = cholesky_vector(bloch_to_density(r, setup.basis()));
        local = optimize_design_cholesky(setup, forms, cs.theta).design;
      }
      acc += w * local.weights;
      total += w;
    } catch (const NumericalError&) {
      out.excluded.push_back(static_cast<int>(s));
    }
  }
  if (!(total > 0.0)) throw SingularityError("every grid node failed the per-state OED");
  acc = acc.cwiseMax(0.0);
  out.design = Design{acc / acc.sum(), {}};
  if (!out.excluded.empty()) {
    out.design.warnings.push_back(std::to_string(out.excluded.size()) + " grid nodes excluded");
  }
  return out;
}

double discrepancy(const Eigen::VectorXd& l1, const Eigen::VectorXd& l2) {
  if (l1.size() != l2.size()) throw DimensionError("designs have different lengths");
  return (l1 - l2).cwiseAbs().sum();
}

}  // namespace tomoplan
