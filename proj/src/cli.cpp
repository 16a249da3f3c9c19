#include "tomoplan/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tomoplan/averaging.hpp"
#include "tomoplan/cholesky.hpp"
#include "tomoplan/design_analytic.hpp"
#include "tomoplan/design_numeric.hpp"
#include "tomoplan/errors.hpp"
#include "tomoplan/estimators.hpp"
#include "tomoplan/io.hpp"
#include "tomoplan/montecarlo.hpp"
#include "tomoplan/odt.hpp"

#ifndef TOMOPLAN_VERSION
#define TOMOPLAN_VERSION "dev"
#endif

namespace tomoplan {

namespace {

class UsageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct DesignArgs {
  std::string spec, method, state, radius = "min", out;
  bool timestamp = false;
};

struct SimulateArgs {
  std::string spec, design, grid = "6,6,6", estimators = "inv,lsq,ml", out;
  long long ntot = 1000;
  int runs = 2000;
  std::uint64_t seed = 1;
  bool compare_uniform = false, cholesky = false, exact = false, timestamp = false;
};

const std::vector<std::string> kMethods = {"oed", "avg-oed-fisher", "avg-oed-crb", "odt", "oed-cholesky"};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

Json base_manifest(const std::string& command, const std::vector<std::string>& args, bool timestamp) {
  Json m = Json::object();
  m["tool"] = "tomoplan";
  m["version"] = TOMOPLAN_VERSION;
  m["command"] = command;
  m["args"] = args;
  if (timestamp) m["timestamp"] = utc_now();
  return m;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(number_json(v(i)));
  return a;
}

Json warnings_json(const std::vector<std::string>& w) {
  Json a = Json::array();
  for (const auto& s : w) a.push_back(s);
  return a;
}

double parse_radius(const std::string& text, int dimension) {
  if (text == "min") return state_space_radius(dimension, RadiusMode::Min);
  if (text == "max") return state_space_radius(dimension, RadiusMode::Max);
  double v = 0.0;
  std::size_t used = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw UsageError("--radius expects min, max or a number, got '" + text + "'");
  return state_space_radius(dimension, RadiusMode::Value, v);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::string summary_path(const std::string& csv) {
  const std::string ext = ".csv";
  if (csv.size() > ext.size() && csv.compare(csv.size() - ext.size(), ext.size(), ext) == 0) {
    return csv.substr(0, csv.size() - ext.size()) + ".json";
  }
  return csv + ".json";
}

int cmd_validate(const std::string& spec_path, std::ostream& out) {
  const SetupSpec spec = parse_setup_spec(read_json_file(spec_path));
  const HermitianBasis basis(spec.dimension);
  const ValidationReport report = validate_setup(basis, spec.configs);
  if (report.ok()) {
    const ExperimentSetup setup(basis, spec.configs);
    out << "valid: N = " << setup.dimension() << ", " << setup.config_count() << " configurations, "
        << setup.outcome_count() << " outcomes" << (setup.is_minimal() ? " (minimal)" : "") << "\n";
    return kExitOk;
  }
  out << report.to_string();
  return kExitValidation;
}

int cmd_design(const DesignArgs& a, std::ostream& out) {
  if (std::find(kMethods.begin(), kMethods.end(), a.method) == kMethods.end()) {
    throw UsageError("unknown method '" + a.method + "'");
  }
  const bool needs_state = a.method == "oed" || a.method == "oed-cholesky";
  if (needs_state && a.state.empty()) throw UsageError("method " + a.method + " requires --state");
  if (!needs_state && !a.state.empty()) throw UsageError("method " + a.method + " averages over states; drop --state");

  const ExperimentSetup setup = load_setup(a.spec);
  const int m = setup.config_count();
  const Design uniform = Design::uniform(m);

  std::vector<std::string> args = {"design", "--spec", a.spec, "--method", a.method};
  Json parameters = Json::object();
  Json inputs = Json::object();
  inputs["spec"] = a.spec;
  if (needs_state) {
    args.insert(args.end(), {"--state", a.state});
    inputs["state"] = a.state;
  } else {
    args.insert(args.end(), {"--radius", a.radius});
    parameters["radius"] = a.radius;
  }

  Design design;
  std::string objective_name;
  double objective = 0.0;
  Json diag = Json::object();

  if (needs_state) {
    const Eigen::VectorXd r = parse_state(read_json_file(a.state), setup.basis());
    if (a.method == "oed") {
      const OptimizationResult res = optimize_design(setup, r);
      design = res.design;
      objective_name = "B";
      objective = res.objective;
      diag["residual"] = res.residual;
      diag["iterations"] = res.iterations;
      diag["eta"] = res.eta;
      diag["uniform_objective"] = number_json(fisher_info(setup, uniform, r).crb);
      if (setup.is_minimal()) {
        const Design analytic = minimal_oed(setup, r);
        diag["analytic_linf"] = (analytic.weights - design.weights).cwiseAbs().maxCoeff();
      }
    } else {
      const QuadraticForms forms = quadratic_forms(setup);
      const CholeskyState cs = cholesky_vector(bloch_to_density(r, setup.basis()));
      const OptimizationResult res = optimize_design_cholesky(setup, forms, cs.theta);
      design = res.design;
      const Eigen::MatrixXd F = fisher_cholesky(setup, forms, design, cs.theta).bundle.F;
      objective_name = "B_C";
      objective = ccrb(F, cs.theta);
      diag["closed_form"] = number_json(ccrb_closed_form(F));
      diag["residual"] = res.residual;
      diag["iterations"] = res.iterations;
      diag["uniform_objective"] =
          number_json(ccrb(fisher_cholesky(setup, forms, uniform, cs.theta).bundle.F, cs.theta));
    }
  } else {
    const double radius = parse_radius(a.radius, setup.dimension());
    const AveragingContext ctx = averaging_context(setup, radius);
    diag["radius_value"] = radius;
    if (a.method == "avg-oed-fisher") {
      design = average_oed_fisher(setup, ctx);
      objective_name = "<B>";
      objective = averaged_fisher(setup, design, ctx).crb;
      diag["route"] = setup.is_minimal() ? "closed-form" : "numerical";
      diag["uniform_objective"] = number_json(averaged_fisher(setup, uniform, ctx).crb);
    } else if (a.method == "avg-oed-crb") {
      design = average_oed_crb(setup, ctx);
      objective_name = "<<B>>";
      objective = averaged_crb(setup, ctx, design);
      diag["uniform_objective"] = number_json(averaged_crb(setup, ctx, uniform));
    } else {
      const VarianceMatrix vm = variance_matrix(setup, ctx);
      const OptimizationResult res = odt_design(vm.V);
      design = res.design;
      objective_name = "<<dB^2>>";
      objective = res.objective;
      diag["residual"] = odt_residual(vm.V, design.weights);
      diag["iterations"] = res.iterations;
      diag["averaged_crb"] = number_json(averaged_crb(setup, ctx, design));
      diag["uniform_objective"] = number_json(crb_variance(vm.V, uniform));
    }
  }
  diag["warnings"] = warnings_json(design.warnings);

  Json manifest = base_manifest("design", args, a.timestamp);
  manifest["inputs"] = inputs;
  manifest["parameters"] = parameters;

  Json doc = Json::object();
  doc["method"] = a.method;
  doc["lambda"] = vector_json(design.weights);
  doc["objective"] = Json{{"name", objective_name}, {"value", number_json(objective)}};
  doc["diagnostics"] = diag;
  doc["manifest"] = manifest;
  const std::string text = doc.dump(2) + "\n";
  if (!a.out.empty()) write_text_file(a.out, text);

  out << a.method << ": lambda =";
  for (int g = 0; g < m; ++g) out << ' ' << format_number(design[g]);
  out << "\n" << objective_name << " = " << format_number(objective) << "\n";
  return kExitOk;
}

Json campaign_summary(const SphereGrid& grid, const CampaignResult& res) {
  Json avg = Json::object();
  avg["crb"] = number_json(res.average_crb(grid));
  if (!res.mse.empty()) {
    Json mse = Json::object(), rms = Json::object();
    for (EstimatorKind e : res.estimators) {
      const double v = res.average_mse(grid, e);
      mse[to_string(e)] = number_json(v);
      rms[to_string(e)] = number_json(std::sqrt(v));
    }
    avg["mse"] = mse;
    avg["rms"] = rms;
    if (std::find(res.estimators.begin(), res.estimators.end(), EstimatorKind::Inversion) != res.estimators.end()) {
      avg["ratio_inv_to_crb"] = number_json(res.average_mse(grid, EstimatorKind::Inversion) / res.average_crb(grid));
    }
    int unconverged = 0;
    for (int u : res.ml_unconverged) unconverged += u;
    avg["ml_unconverged"] = unconverged;
  }
  if (!res.ccrb.empty()) {
    double c = 0.0, t = 0.0;
    const std::vector<double> w = grid.normalized_weights();
    for (std::size_t s = 0; s < grid.size(); ++s) {
      if (w[s] == 0.0) continue;
      c += w[s] * res.ccrb[s];
      if (!res.theta_mse.empty()) t += w[s] * res.theta_mse[s];
    }
    avg["ccrb"] = number_json(c);
    if (!res.mse.empty()) avg["theta_mse_ml"] = number_json(t);
  }
  Json shots = Json::array();
  for (long long n : res.shots) shots.push_back(n);
  Json out = Json::object();
  out["shots"] = shots;
  out["starved"] = res.starved;
  out["averages"] = avg;
  return out;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  const ExperimentSetup setup = load_setup(a.spec);
  const Design design = parse_design(read_json_file(a.design));
  if (design.size() != setup.config_count()) {
    throw ValidationError("design has " + std::to_string(design.size()) + " weights but the setup has " +
                          std::to_string(setup.config_count()) + " configurations");
  }
  const std::vector<std::string> g = split(a.grid, ',');
  if (g.size() != 3) throw UsageError("--grid expects r,polar,azimuth");
  int counts[3];
  for (int i = 0; i < 3; ++i) {
    try {
      counts[i] = std::stoi(g[i]);
    } catch (const std::exception&) {
      throw UsageError("--grid entries must be integers");
    }
  }
  std::vector<EstimatorKind> kinds;
  for (const std::string& name : split(a.estimators, ',')) {
    const EstimatorKind k = parse_estimator(name);
    if (std::find(kinds.begin(), kinds.end(), k) == kinds.end()) kinds.push_back(k);
  }
  if (a.runs < 0) throw UsageError("--runs must be nonnegative");

  std::vector<std::string> args = {"simulate", "--spec", a.spec, "--design", a.design, "--grid", a.grid,
                                   "--ntot", std::to_string(a.ntot), "--runs", std::to_string(a.runs),
                                   "--estimators", a.estimators, "--seed", std::to_string(a.seed)};
  if (a.compare_uniform) args.push_back("--compare-uniform");
  if (a.cholesky) args.push_back("--cholesky");
  if (a.exact) args.push_back("--exact");
  Json manifest = base_manifest("simulate", args, a.timestamp);
  manifest["inputs"] = Json{{"spec", a.spec}, {"design", a.design}};
  manifest["parameters"] = Json{{"grid", {counts[0], counts[1], counts[2]}},
                                {"ntot", a.ntot},
                                {"runs", a.runs},
                                {"estimators", a.estimators},
                                {"compare_uniform", a.compare_uniform},
                                {"cholesky", a.cholesky},
                                {"exact", a.exact}};
  manifest["seed"] = a.seed;
  manifest["lambda"] = vector_json(design.weights);

  const SphereGrid grid = sphere_grid(counts[0], counts[1], counts[2]);
  CampaignOptions opts;
  opts.exact = a.exact;
  opts.cholesky_metrics = a.cholesky;
  const CampaignResult res = run_trials(setup, design, grid, a.ntot, a.runs, kinds, a.seed, opts);

  Json summary = campaign_summary(grid, res);
  if (a.compare_uniform) {
    const CampaignResult uni =
        run_trials(setup, Design::uniform(setup.config_count()), grid, a.ntot, a.runs, kinds, a.seed, opts);
    Json u = campaign_summary(grid, uni);
    if (!res.mse.empty()) {
      Json imp = Json::object();
      for (EstimatorKind e : kinds) {
        const double reduction = 1.0 - std::sqrt(res.average_mse(grid, e) / uni.average_mse(grid, e));
        imp[to_string(e)] = number_json(100.0 * reduction);
      }
      summary["improvement_percent"] = imp;
    }
    summary["uniform"] = u;
  }
  Json doc = Json::object();
  doc["manifest"] = manifest;
  for (auto it = summary.begin(); it != summary.end(); ++it) doc[it.key()] = it.value();

  if (a.out.empty()) throw UsageError("simulate requires --out");
  write_text_file(a.out, campaign_csv(grid, res, manifest));
  write_text_file(summary_path(a.out), doc.dump(2) + "\n");

  out << "states: " << grid.size() << ", runs: " << a.runs << ", avg CRB/N_tot = "
      << format_number(res.average_crb(grid)) << "\n";
  if (!res.mse.empty()) {
    for (EstimatorKind e : kinds) out << "avg MSE(" << to_string(e) << ") = " << format_number(res.average_mse(grid, e)) << "\n";
  }
  out << "wrote " << a.out << " and " << summary_path(a.out) << "\n";
  return kExitOk;
}

Json manifest_from_file(const std::string& path) {
  const std::string text = read_text_file(path);
  if (text.rfind("# ", 0) == 0) {
    const std::size_t eol = text.find('\n');
    return parse_json_text(text.substr(2, eol == std::string::npos ? std::string::npos : eol - 2), path);
  }
  const Json doc = parse_json_text(text, path);
  if (!doc.contains("manifest")) throw ValidationError(path + ": no manifest found");
  return doc["manifest"];
}

}  // namespace

int run_cli(const std::vector<std::string>& input, std::ostream& out, std::ostream& err) {
  CLI::App app{"tomoplan: experiment design and Monte-Carlo benchmarking for quantum state tomography"};
  app.set_version_flag("--version", TOMOPLAN_VERSION);
  app.require_subcommand(1);

  std::string validate_spec;
  auto* validate = app.add_subcommand("validate", "check a measurement setup file");
  validate->add_option("--spec", validate_spec, "setup JSON")->required();

  DesignArgs da;
  auto* design = app.add_subcommand("design", "compute an experiment design");
  design->add_option("--spec", da.spec, "setup JSON")->required();
  design->add_option("--method", da.method, "oed | avg-oed-fisher | avg-oed-crb | odt | oed-cholesky")->required();
  design->add_option("--state", da.state, "state JSON (oed, oed-cholesky)");
  design->add_option("--radius", da.radius, "min | max | value (averaging methods)");
  design->add_option("--out", da.out, "design JSON to write");
  design->add_flag("--timestamp", da.timestamp, "record the wall-clock time in the manifest");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "run a Monte-Carlo campaign over a Bloch-ball grid");
  simulate->add_option("--spec", sa.spec, "setup JSON")->required();
  simulate->add_option("--design", sa.design, "design JSON")->required();
  simulate->add_option("--grid", sa.grid, "radial,polar,azimuth node counts");
  simulate->add_option("--ntot", sa.ntot, "measurements per run");
  simulate->add_option("--runs", sa.runs, "runs per grid state");
  simulate->add_option("--estimators", sa.estimators, "comma list of inv, lsq, ml");
  simulate->add_option("--seed", sa.seed, "master seed");
  simulate->add_option("--out", sa.out, "CSV output; the summary goes next to it as .json")->required();
  simulate->add_flag("--compare-uniform", sa.compare_uniform, "also run the uniform design and report improvement");
  simulate->add_flag("--cholesky", sa.cholesky, "track theta-space errors and the constrained bound");
  simulate->add_flag("--exact", sa.exact, "use exact probabilities instead of sampled counts");
  simulate->add_flag("--timestamp", sa.timestamp, "record the wall-clock time in the manifest");

  std::string replay_manifest, replay_out;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in an output file");
  replay->add_option("--manifest", replay_manifest, "design JSON, campaign CSV or summary JSON")->required();
  replay->add_option("--out", replay_out, "output path (defaults to the manifest file)");

  std::vector<std::string> reversed(input.rbegin(), input.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << TOMOPLAN_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_spec, out);
    if (design->parsed()) return cmd_design(da, out);
    if (simulate->parsed()) return cmd_simulate(sa, out);
    if (replay->parsed()) {
      const Json manifest = manifest_from_file(replay_manifest);
      if (!manifest.contains("args") || !manifest["args"].is_array()) {
        throw ValidationError(replay_manifest + ": manifest lacks the recorded arguments");
      }
      std::vector<std::string> args = manifest["args"].get<std::vector<std::string>>();
      std::string target = replay_out.empty() ? replay_manifest : replay_out;
      if (args.empty() || args[0] == "replay") throw ValidationError("manifest does not describe a runnable command");
      if (args[0] == "simulate" && replay_out.empty() && summary_path(target) == target + ".json") {
        throw UsageError("replaying a campaign summary needs --out for the CSV");
      }
      args.insert(args.end(), {"--out", target});
      return run_cli(args, out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitValidation;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace tomoplan
