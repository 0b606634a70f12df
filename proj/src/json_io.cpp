#include "treesmpc/json_io.hpp"

#include "treesmpc/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace treesmpc::json_io {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failure on '" + path + "'");
}

json parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

namespace {

double to_number(const json& node, const std::string& name) {
  if (!node.is_number()) throw ParseError(name + ": expected a number");
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ParseError(name + ": non-finite number");
  return v;
}

}  // namespace

Eigen::VectorXd to_vector(const json& node, const std::string& name) {
  if (!node.is_array()) throw ParseError(name + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = to_number(node[i], name + "[" + std::to_string(i) + "]");
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& node, const std::string& name) {
  if (!node.is_array()) throw ParseError(name + ": expected an array of row arrays");
  if (node.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t rows = node.size();
  if (!node[0].is_array()) throw ParseError(name + ": expected an array of row arrays");
  const std::size_t cols = node[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = node[r];
    if (!row.is_array() || row.size() != cols) {
      throw ParseError(name + ": row " + std::to_string(r) + " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          to_number(row[c], name + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

json from_vector(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json from_matrix(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace treesmpc::json_io
