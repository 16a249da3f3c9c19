#include "tomoplan/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tomoplan/errors.hpp"

namespace tomoplan {

namespace {

using cd = std::complex<double>;

Eigen::MatrixXd real_matrix(const Json& doc, int n, const std::string& where) {
  if (!doc.is_array() || static_cast<int>(doc.size()) != n) {
    throw ValidationError(where + ": expected " + std::to_string(n) + " rows");
  }
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    const Json& row = doc[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n) {
      throw ValidationError(where + ": row " + std::to_string(i) + " must have " + std::to_string(n) + " entries");
    }
    for (int j = 0; j < n; ++j) {
      if (!row[j].is_number()) throw ValidationError(where + ": entry (" + std::to_string(i) + "," +
                                                     std::to_string(j) + ") is not a number");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

Json real_matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // locate the byte for a line/column message with the offending line
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    if (byte > text.size()) byte = text.size();
    int line = 1;
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < byte; ++i) {
      if (text[i] == '\n') {
        ++line;
        line_start = i + 1;
      }
    }
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string::npos) line_end = text.size();
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << (byte - line_start + 1) << ": parse error: " << e.what() << "\n  "
        << text.substr(line_start, line_end - line_start);
    throw ValidationError(msg.str());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

Json read_json_file(const std::string& path) { return parse_json_text(read_text_file(path), path); }

ComplexMatrix parse_complex_matrix(const Json& doc, int n, const std::string& where) {
  if (!doc.is_object() || !doc.contains("re")) throw ValidationError(where + ": expected an object with \"re\"");
  const Eigen::MatrixXd re = real_matrix(doc["re"], n, where + ".re");
  Eigen::MatrixXd im = Eigen::MatrixXd::Zero(n, n);
  if (doc.contains("im")) im = real_matrix(doc["im"], n, where + ".im");
  ComplexMatrix m(n, n);
  m.real() = re;
  m.imag() = im;
  return m;
}

Json complex_matrix_to_json(const ComplexMatrix& m) {
  Json out = Json::object();
  out["re"] = real_matrix_json(m.real());
  if (m.imag().cwiseAbs().maxCoeff() > 0.0) out["im"] = real_matrix_json(m.imag());
  return out;
}

SetupSpec parse_setup_spec(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("setup: top level must be an object");
  if (!doc.contains("dimension") || !doc["dimension"].is_number_integer()) {
    throw ValidationError("setup: missing integer \"dimension\"");
  }
  SetupSpec spec;
  spec.dimension = doc["dimension"].get<int>();
  if (spec.dimension < 2) throw ValidationError("setup: dimension must be at least 2");
  if (!doc.contains("configurations") || !doc["configurations"].is_array() || doc["configurations"].empty()) {
    throw ValidationError("setup: \"configurations\" must be a nonempty array");
  }
  int index = 0;
  for (const Json& cfg : doc["configurations"]) {
    ConfigMatrices cm;
    cm.label = cfg.contains("label") && cfg["label"].is_string() ? cfg["label"].get<std::string>()
                                                                   : "config" + std::to_string(index);
    if (!cfg.contains("elements") || !cfg["elements"].is_array()) {
      throw ValidationError("setup: configuration '" + cm.label + "' needs an \"elements\" array");
    }
    int k = 0;
    for (const Json& el : cfg["elements"]) {
      cm.elements.push_back(parse_complex_matrix(el, spec.dimension, cm.label + "[" + std::to_string(k++) + "]"));
    }
    spec.configs.push_back(std::move(cm));
    ++index;
  }
  return spec;
}

Json setup_spec_to_json(const SetupSpec& spec) {
  Json doc = Json::object();
  doc["dimension"] = spec.dimension;
  Json configs = Json::array();
  for (const ConfigMatrices& cm : spec.configs) {
    Json c = Json::object();
    c["label"] = cm.label;
    Json els = Json::array();
    for (const ComplexMatrix& m : cm.elements) els.push_back(complex_matrix_to_json(m));
    c["elements"] = els;
    configs.push_back(c);
  }
  doc["configurations"] = configs;
  return doc;
}

ExperimentSetup load_setup(const std::string& path) {
  SetupSpec spec = parse_setup_spec(read_json_file(path));
  HermitianBasis basis(spec.dimension);
  const ValidationReport report = validate_setup(basis, spec.configs);
  if (!report.ok()) throw ValidationError(path + ": invalid setup\n" + report.to_string());
  return ExperimentSetup(std::move(basis), std::move(spec.configs));
}

Eigen::VectorXd parse_state(const Json& doc, const HermitianBasis& basis) {
  if (!doc.is_object()) throw ValidationError("state: top level must be an object");
  Eigen::VectorXd r;
  if (doc.contains("bloch")) {
    const Json& b = doc["bloch"];
    if (!b.is_array() || static_cast<int>(b.size()) != basis.size()) {
      throw ValidationError("state: \"bloch\" must have " + std::to_string(basis.size()) + " entries");
    }
    r.resize(basis.size());
    for (int j = 0; j < basis.size(); ++j) {
      if (!b[j].is_number()) throw ValidationError("state: bloch entries must be numbers");
      r(j) = b[j].get<double>();
    }
  } else if (doc.contains("density")) {
    r = density_to_bloch(parse_complex_matrix(doc["density"], basis.dimension(), "state.density"), basis).r;
  } else {
    throw ValidationError("state: expected \"bloch\" or \"density\"");
  }
  if (!is_physical(r, basis)) throw ValidationError("state: not a physical density matrix");
  return r;
}

Design parse_design(const Json& doc) {
  if (!doc.is_object() || !doc.contains("lambda") || !doc["lambda"].is_array()) {
    throw ValidationError("design: missing \"lambda\" array");
  }
  const Json& l = doc["lambda"];
  Eigen::VectorXd w(l.size());
  for (std::size_t g = 0; g < l.size(); ++g) {
    if (!l[g].is_number()) throw ValidationError("design: lambda entries must be numbers");
    w(g) = l[g].get<double>();
  }
  Design d = Design::from_weights(w);
  if (std::abs(w.sum() - 1.0) > 1e-9) throw ValidationError("design: lambda does not sum to 1");
  return d;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

Json number_json(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

std::string campaign_csv(const SphereGrid& grid, const CampaignResult& result, const Json& manifest) {
  std::ostringstream os;
  os << "# " << manifest.dump() << "\n";
  os << "index,r,theta,phi,weight,x,y,z,crb";
  if (!result.mse.empty()) {
    for (EstimatorKind e : result.estimators) os << ",mse_" << to_string(e);
  }
  const bool chol = !result.ccrb.empty();
  if (chol) {
    os << ",ccrb";
    if (!result.mse.empty()) os << ",theta_mse_ml";
  }
  os << "\n";
  for (std::size_t s = 0; s < grid.size(); ++s) {
    os << s << ',' << format_number(grid.r[s]) << ',' << format_number(grid.theta[s]) << ','
       << format_number(grid.phi[s]) << ',' << format_number(grid.weights[s]);
    for (int j = 0; j < 3; ++j) os << ',' << format_number(grid.states[s](j));
    os << ',' << format_number(result.crb[s]);
    for (const auto& col : result.mse) os << ',' << format_number(col[s]);
    if (chol) {
      os << ',' << format_number(result.ccrb[s]);
      if (!result.mse.empty()) os << ',' << format_number(result.theta_mse[s]);
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace tomoplan
