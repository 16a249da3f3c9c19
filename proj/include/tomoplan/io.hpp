#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tomoplan/fisher.hpp"
#include "tomoplan/montecarlo.hpp"
#include "tomoplan/repr.hpp"

namespace tomoplan {

using Json = nlohmann::ordered_json;

/// Reads and parses a JSON file; ValidationError carries path:line:column.
Json read_json_file(const std::string& path);
Json parse_json_text(const std::string& text, const std::string& origin);

struct SetupSpec {
  int dimension = 0;
  std::vector<ConfigMatrices> configs;
};

/// {"dimension": N, "configurations": [{"label": s, "elements": [{"re": [[..]], "im": [[..]]}]}]}
SetupSpec parse_setup_spec(const Json& doc);
Json setup_spec_to_json(const SetupSpec& spec);

/// Loads, validates and builds the setup. Throws ValidationError with the report on violations.
ExperimentSetup load_setup(const std::string& path);

/// {"bloch": [...]} or {"density": {"re": [[..]], "im": [[..]]}}; returns the Bloch vector.
Eigen::VectorXd parse_state(const Json& doc, const HermitianBasis& basis);

ComplexMatrix parse_complex_matrix(const Json& doc, int dimension, const std::string& where);
Json complex_matrix_to_json(const ComplexMatrix& m);

/// Reads "lambda" from a design document.
Design parse_design(const Json& doc);

/// %.17g, with "inf", "-inf" and "nan" spelled out.
std::string format_number(double x);
/// JSON number, or the strings "inf"/"nan" for non-finite values.
Json number_json(double x);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// One row per grid node; first line "# <manifest>".
std::string campaign_csv(const SphereGrid& grid, const CampaignResult& result, const Json& manifest);

}  // namespace tomoplan
