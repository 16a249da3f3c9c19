#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tomoplan/averaging.hpp"
#include "tomoplan/cholesky.hpp"
#include "tomoplan/cli.hpp"
#include "tomoplan/design_analytic.hpp"
#include "tomoplan/design_numeric.hpp"
#include "tomoplan/errors.hpp"
#include "tomoplan/io.hpp"
#include "tomoplan/montecarlo.hpp"
#include "tomoplan/odt.hpp"

namespace py = pybind11;
using namespace tomoplan;

namespace {

ExperimentSetup make_setup(int dimension, const std::vector<std::vector<ComplexMatrix>>& configs,
                           std::vector<std::string> labels) {
  std::vector<ConfigMatrices> cs;
  for (std::size_t g = 0; g < configs.size(); ++g) {
    cs.push_back({g < labels.size() ? labels[g] : "config" + std::to_string(g), configs[g]});
  }
  ExperimentSetup setup(HermitianBasis(dimension), std::move(cs));
  require_valid(setup);
  return setup;
}

double radius_arg(const ExperimentSetup& setup, const py::object& radius) {
  if (py::isinstance<py::str>(radius)) {
    const auto s = radius.cast<std::string>();
    if (s == "min") return state_space_radius(setup.dimension(), RadiusMode::Min);
    if (s == "max") return state_space_radius(setup.dimension(), RadiusMode::Max);
    throw ValidationError("radius must be 'min', 'max' or a number");
  }
  return state_space_radius(setup.dimension(), RadiusMode::Value, radius.cast<double>());
}

py::dict result_dict(const OptimizationResult& r) {
  py::dict d;
  d["weights"] = r.design.weights;
  d["objective"] = r.objective;
  d["residual"] = r.residual;
  d["iterations"] = r.iterations;
  d["warnings"] = r.design.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Experiment design and Monte-Carlo benchmarking for quantum state tomography.";
  m.attr("__version__") = TOMOPLAN_VERSION;

  auto base = py::register_exception<Error>(m, "TomoplanError");
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", validation.ptr());
  auto numerical = py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", numerical.ptr());
  py::register_exception<DegenerateDesignError>(m, "DegenerateDesignError", numerical.ptr());
  py::register_exception<DivergentAverageError>(m, "DivergentAverageError", numerical.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", numerical.ptr());

  py::class_<ExperimentSetup>(m, "Setup")
      .def(py::init(&make_setup), py::arg("dimension"), py::arg("configs"), py::arg("labels") = std::vector<std::string>{})
      .def_static("load", &load_setup, py::arg("path"))
      .def_property_readonly("dimension", &ExperimentSetup::dimension)
      .def_property_readonly("config_count", &ExperimentSetup::config_count)
      .def_property_readonly("outcome_count", &ExperimentSetup::outcome_count)
      .def_property_readonly("is_minimal", &ExperimentSetup::is_minimal)
      .def_property_readonly("A", &ExperimentSetup::A)
      .def_property_readonly("c", &ExperimentSetup::c)
      .def("probabilities", [](const ExperimentSetup& s, const Eigen::VectorXd& r) { return probabilities(s, r); })
      .def("__repr__", [](const ExperimentSetup& s) {
        std::ostringstream os;
        os << "<Setup N=" << s.dimension() << ", " << s.config_count() << " configurations>";
        return os.str();
      });

  m.def("bloch_to_density", [](const Eigen::VectorXd& r, int n) { return bloch_to_density(r, HermitianBasis(n)); },
        py::arg("r"), py::arg("dimension"));
  m.def("density_to_bloch", [](const ComplexMatrix& rho) {
    return density_to_bloch(rho, HermitianBasis(static_cast<int>(rho.rows()))).r;
  });

  m.def(
      "fisher_info",
      [](const ExperimentSetup& s, const Eigen::VectorXd& lambda, const Eigen::VectorXd& r) {
        const FisherBundle b = fisher_info(s, Design::from_weights(lambda), r);
        return py::make_tuple(b.F, b.crb);
      },
      py::arg("setup"), py::arg("weights"), py::arg("r"), "Fisher matrix and tr F^-1 for a design at state r.");

  m.def(
      "minimal_oed", [](const ExperimentSetup& s, const Eigen::VectorXd& r) { return minimal_oed(s, r).weights; },
      py::arg("setup"), py::arg("r"));
  m.def(
      "optimize_design", [](const ExperimentSetup& s, const Eigen::VectorXd& r) { return result_dict(optimize_design(s, r)); },
      py::arg("setup"), py::arg("r"));
  m.def(
      "average_oed_fisher",
      [](const ExperimentSetup& s, const py::object& radius) {
        return average_oed_fisher(s, averaging_context(s, radius_arg(s, radius))).weights;
      },
      py::arg("setup"), py::arg("radius") = "max");
  m.def(
      "average_oed_crb",
      [](const ExperimentSetup& s, const py::object& radius) {
        return average_oed_crb(s, averaging_context(s, radius_arg(s, radius))).weights;
      },
      py::arg("setup"), py::arg("radius") = "max");
  m.def(
      "averaged_crb",
      [](const ExperimentSetup& s, const Eigen::VectorXd& lambda, const py::object& radius) {
        return averaged_crb(s, averaging_context(s, radius_arg(s, radius)), Design::from_weights(lambda));
      },
      py::arg("setup"), py::arg("weights"), py::arg("radius") = "max");
  m.def(
      "variance_matrix",
      [](const ExperimentSetup& s, const py::object& radius) {
        return variance_matrix(s, averaging_context(s, radius_arg(s, radius))).V;
      },
      py::arg("setup"), py::arg("radius") = "max");
  m.def(
      "odt_design", [](const Eigen::MatrixXd& V) { return result_dict(odt_design(V)); }, py::arg("V"));
  m.def(
      "cholesky_design",
      [](const ExperimentSetup& s, const Eigen::VectorXd& r) {
        const CholeskyState cs = cholesky_vector(bloch_to_density(r, s.basis()));
        return result_dict(optimize_design_cholesky(s, quadratic_forms(s), cs.theta));
      },
      py::arg("setup"), py::arg("r"));
  m.def(
      "sphere_moments",
      [](int n, double radius) {
        const SphereMoments mo = sphere_moments(n, radius);
        return py::make_tuple(mo.x2, mo.x2y2, mo.x4);
      },
      py::arg("dimension"), py::arg("radius"));

  m.def(
      "run_trials",
      [](const ExperimentSetup& s, const Eigen::VectorXd& lambda, std::vector<int> grid, long long ntot, int runs,
         const std::vector<std::string>& estimators, std::uint64_t seed, int threads) {
        if (grid.size() != 3) throw ValidationError("grid needs three node counts");
        std::vector<EstimatorKind> kinds;
        for (const auto& e : estimators) kinds.push_back(parse_estimator(e));
        const SphereGrid g = sphere_grid(grid[0], grid[1], grid[2]);
        CampaignOptions opts;
        opts.threads = threads;
        CampaignResult res;
        {
          py::gil_scoped_release release;
          res = run_trials(s, Design::from_weights(lambda), g, ntot, runs, kinds, seed, opts);
        }
        py::dict out;
        out["crb"] = res.crb;
        out["average_crb"] = res.average_crb(g);
        py::dict mse, avg;
        for (std::size_t k = 0; k < kinds.size() && !res.mse.empty(); ++k) {
          mse[py::str(to_string(kinds[k]))] = res.mse[k];
          avg[py::str(to_string(kinds[k]))] = res.average_mse(g, kinds[k]);
        }
        out["mse"] = mse;
        out["average_mse"] = avg;
        out["shots"] = res.shots;
        return out;
      },
      py::arg("setup"), py::arg("weights"), py::arg("grid") = std::vector<int>{6, 6, 6}, py::arg("ntot") = 1000,
      py::arg("runs") = 100, py::arg("estimators") = std::vector<std::string>{"inv"}, py::arg("seed") = 1,
      py::arg("threads") = 0);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run a tomoplan command; returns (exit code, stdout, stderr).");
}
