#pragma once

#include <json.hpp>

#include <Eigen/Dense>

#include <string>

namespace treesmpc::json_io {

using nlohmann::json;

/// Reads a whole file into a string; throws IoError.
std::string read_text_file(const std::string& path);
/// Writes text to a file, replacing it; throws IoError.
void write_text_file(const std::string& path, const std::string& text);

/// Parses text as JSON; throws ParseError naming `what` on failure.
json parse(const std::string& text, const std::string& what);

/// Array of finite numbers -> vector. `name` is used in error messages.
Eigen::VectorXd to_vector(const json& node, const std::string& name);
/// Array of equally sized row arrays -> matrix. An empty array gives 0x0.
Eigen::MatrixXd to_matrix(const json& node, const std::string& name);

json from_vector(const Eigen::VectorXd& v);
json from_matrix(const Eigen::MatrixXd& m);

}  // namespace treesmpc::json_io
