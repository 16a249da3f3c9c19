#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "tomoplan/cli.hpp"
#include "tomoplan/design_analytic.hpp"
#include "tomoplan/io.hpp"

using namespace tomoplan;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("tomoplan_cli_" + std::to_string(oracle::Rng(std::random_device{}())()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    write_text_file(path(name), text);
    return path(name);
  }
  std::string write_setup(const std::string& name, int n, const std::vector<ConfigMatrices>& cs) const {
    return write(name, setup_spec_to_json(SetupSpec{n, cs}).dump(1));
  }
};

}  // namespace

TEST_CASE("validate") {
  Scratch s;
  const std::string mub = s.write_setup("mub.json", 2, oracle::mub_configs());
  Run r = cli({"validate", "--spec", mub});
  CHECK(r.code == 0);
  CHECK(r.out.find("minimal") != std::string::npos);

  std::vector<ConfigMatrices> bad = oracle::mub_configs();
  bad[1].elements[0] *= 1.2;
  r = cli({"validate", "--spec", s.write_setup("bad.json", 2, bad)});
  CHECK(r.code == 1);
  CHECK(r.out.find("completeness") != std::string::npos);

  std::string text = read_text_file(mub);
  text = text.substr(0, text.size() / 2);
  r = cli({"validate", "--spec", s.write("cut.json", text)});
  CHECK(r.code == 1);
  CHECK(r.err.find("parse error") != std::string::npos);
  CHECK(r.err.find("cut.json:") != std::string::npos);

  CHECK(cli({"validate", "--spec", s.path("missing.json")}).code == 1);
}

TEST_CASE("design methods") {
  Scratch s;
  const std::string mub = s.write_setup("mub.json", 2, oracle::mub_configs());
  const std::string out = s.path("d.json");
  Run r = cli({"design", "--spec", mub, "--method", "avg-oed-crb", "--radius", "max", "--out", out});
  REQUIRE(r.code == 0);
  const Json doc = read_json_file(out);
  CHECK(doc["method"] == "avg-oed-crb");
  for (const auto& l : doc["lambda"]) CHECK(std::abs(l.get<double>() - 1.0 / 3.0) < 1e-9);
  CHECK(doc["objective"]["name"] == "<<B>>");
  CHECK(doc.contains("manifest"));

  oracle::Rng rng(41);
  std::vector<ConfigMatrices> cs;
  for (const char* l : {"a", "b", "c"}) cs.push_back(oracle::random_binary_config(2, rng, l));
  const ExperimentSetup soft(HermitianBasis(2), cs);
  const std::string spec = s.write_setup("soft.json", 2, cs);
  const Eigen::VectorXd rstate = oracle::random_qubit_state(rng, 0.5);
  const std::string state = s.write("state.json", Json{{"bloch", {rstate(0), rstate(1), rstate(2)}}}.dump());
  r = cli({"design", "--spec", spec, "--method", "oed", "--state", state, "--out", out});
  REQUIRE(r.code == 0);
  const Design d = parse_design(read_json_file(out));
  CHECK((d.weights - minimal_oed(soft, rstate).weights).cwiseAbs().maxCoeff() < 1e-6);

  for (const char* m : {"avg-oed-fisher", "odt"}) {
    r = cli({"design", "--spec", spec, "--method", m, "--radius", "min"});
    CHECK(r.code == 0);
  }
  r = cli({"design", "--spec", spec, "--method", "oed-cholesky", "--state", state});
  CHECK(r.code == 0);

  // state with an averaging method, and missing state
  r = cli({"design", "--spec", spec, "--method", "avg-oed-crb", "--state", state});
  CHECK(r.code == 1);
  CHECK(r.err.find("usage error") != std::string::npos);
  r = cli({"design", "--spec", spec, "--method", "oed"});
  CHECK(r.code == 1);
  CHECK(r.err.find("requires --state") != std::string::npos);
  CHECK(cli({"design", "--spec", spec, "--method", "nope"}).code == 1);
}

TEST_CASE("odt needs a minimal setup") {
  Scratch s;
  std::vector<ConfigMatrices> cs = oracle::mub_configs();
  cs.push_back(cs[0]);
  cs.back().label = "extra";
  const Run r = cli({"design", "--spec", s.write_setup("four.json", 2, cs), "--method", "odt"});
  CHECK(r.code == 1);
  CHECK(r.err.find("not minimal") != std::string::npos);
}

TEST_CASE("simulate and replay") {
  Scratch s;
  const std::string mub = s.write_setup("mub.json", 2, oracle::mub_configs());
  const std::string design = s.write("u.json", Json{{"lambda", {1.0 / 3, 1.0 / 3, 1.0 / 3}}}.dump());

  Run r = cli({"simulate", "--spec", mub, "--design", design, "--grid", "2,2,2", "--runs", "0", "--out",
               s.path("zero.csv")});
  REQUIRE(r.code == 0);
  std::istringstream csv(read_text_file(s.path("zero.csv")));
  std::string manifest_line, header;
  std::getline(csv, manifest_line);
  std::getline(csv, header);
  CHECK(manifest_line.rfind("# ", 0) == 0);
  CHECK(header == "index,r,theta,phi,weight,x,y,z,crb");

  const std::vector<std::string> args = {"simulate", "--spec",  mub,         "--design", design,     "--grid",
                                         "2,2,3",    "--runs",  "20",        "--ntot",   "200",      "--seed",
                                         "7",        "--estimators", "inv,ml", "--compare-uniform"};
  auto with_out = [&](const std::string& p) {
    std::vector<std::string> a = args;
    a.insert(a.end(), {"--out", p});
    return a;
  };
  REQUIRE(cli(with_out(s.path("a.csv"))).code == 0);
  REQUIRE(cli(with_out(s.path("b.csv"))).code == 0);
  CHECK(read_text_file(s.path("a.csv")) == read_text_file(s.path("b.csv")));
  CHECK(read_text_file(s.path("a.json")) == read_text_file(s.path("b.json")));
  const Json summary = read_json_file(s.path("a.json"));
  CHECK(summary.contains("manifest"));

  REQUIRE(cli({"replay", "--manifest", s.path("a.csv"), "--out", s.path("c.csv")}).code == 0);
  CHECK(read_text_file(s.path("a.csv")) == read_text_file(s.path("c.csv")));
  CHECK(read_text_file(s.path("a.json")) == read_text_file(s.path("c.json")));

  const std::string d1 = s.path("d1.json");
  REQUIRE(cli({"design", "--spec", mub, "--method", "avg-oed-fisher", "--radius", "max", "--out", d1}).code == 0);
  REQUIRE(cli({"replay", "--manifest", d1, "--out", s.path("d2.json")}).code == 0);
  CHECK(read_text_file(d1) == read_text_file(s.path("d2.json")));

  // mismatched design length
  const std::string two = s.write("two.json", Json{{"lambda", {0.5, 0.5}}}.dump());
  CHECK(cli({"simulate", "--spec", mub, "--design", two, "--runs", "0", "--out", s.path("x.csv")}).code == 1);
}
