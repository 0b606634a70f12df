#include "treesmpc/network_model.hpp"

#include "treesmpc/errors.hpp"
#include "treesmpc/json_io.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace treesmpc {

const Vector& NetworkModel::alpha2(std::int64_t k) const {
  const auto period = static_cast<std::int64_t>(alpha2_schedule.size());
  return alpha2_schedule[static_cast<std::size_t>(((k % period) + period) % period)];
}

Vector NetworkModel::price(std::int64_t k) const { return alpha1 + alpha2(k); }

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void expect_shape(std::vector<std::string>& issues, const char* name, const Matrix& m, Eigen::Index rows,
                  Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    issues.push_back(std::string(name) + " has shape " + shape(m) + ", expected " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
}

void expect_size(std::vector<std::string>& issues, const std::string& name, const Vector& v,
                 Eigen::Index n) {
  if (v.size() != n) {
    issues.push_back(name + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

void expect_ordered(std::vector<std::string>& issues, const char* lo_name, const Vector& lo,
                    const char* hi_name, const Vector& hi) {
  if (lo.size() != hi.size()) return;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (lo(i) > hi(i)) {
      std::ostringstream os;
      os << lo_name << "[" << i << "] = " << lo(i) << " exceeds " << hi_name << "[" << i << "] = " << hi(i);
      issues.push_back(os.str());
    }
  }
}

void check_dims(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

}  // namespace

void validate_network(const NetworkModel& m) {
  std::vector<std::string> issues;
  const Eigen::Index nx = m.A.rows();
  const Eigen::Index nu = m.B.cols();
  const Eigen::Index nd = m.Gd.cols();
  const Eigen::Index ne = m.E.rows();

  if (nx == 0) issues.emplace_back("A is empty");
  expect_shape(issues, "A", m.A, nx, nx);
  expect_shape(issues, "B", m.B, nx, nu);
  expect_shape(issues, "Gd", m.Gd, nx, nd);
  if (ne < 1) issues.emplace_back("E must have at least one row (n_e >= 1)");
  expect_shape(issues, "E", m.E, ne, nu);
  expect_shape(issues, "Ed", m.Ed, ne, nd);
  expect_size(issues, "u_min", m.u_min, nu);
  expect_size(issues, "u_max", m.u_max, nu);
  expect_size(issues, "x_min", m.x_min, nx);
  expect_size(issues, "x_max", m.x_max, nx);
  expect_size(issues, "x_s", m.x_s, nx);
  expect_size(issues, "alpha1", m.alpha1, nu);
  expect_shape(issues, "Wu", m.Wu, nu, nu);

  if (m.alpha2_schedule.empty()) issues.emplace_back("alpha2_schedule is empty");
  for (std::size_t k = 0; k < m.alpha2_schedule.size(); ++k) {
    expect_size(issues, "alpha2_schedule[" + std::to_string(k) + "]", m.alpha2_schedule[k], nu);
  }

  expect_ordered(issues, "u_min", m.u_min, "u_max", m.u_max);
  expect_ordered(issues, "x_min", m.x_min, "x_max", m.x_max);
  if (m.x_s.size() == nx && m.x_min.size() == nx && m.x_max.size() == nx) {
    for (Eigen::Index i = 0; i < nx; ++i) {
      if (m.x_s(i) < m.x_min(i) || m.x_s(i) > m.x_max(i)) {
        std::ostringstream os;
        os << "x_s[" << i << "] = " << m.x_s(i) << " outside [x_min, x_max] = [" << m.x_min(i) << ", "
           << m.x_max(i) << "]";
        issues.push_back(os.str());
      }
    }
  }

  if (!(m.W_alpha > 0.0)) issues.emplace_back("W_alpha must be positive");
  if (!(m.Wx > 0.0)) issues.emplace_back("Wx must be positive");
  if (!(m.gamma_d > 0.0)) issues.emplace_back("gamma_d must be positive");

  if (m.Wu.rows() == nu && m.Wu.cols() == nu && nu > 0) {
    const double scale = std::max(1.0, m.Wu.cwiseAbs().maxCoeff());
    if ((m.Wu - m.Wu.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      issues.emplace_back("Wu is not symmetric");
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(m.Wu, Eigen::EigenvaluesOnly);
      if (!(eig.eigenvalues().minCoeff() > 0.0)) {
        std::ostringstream os;
        os << "Wu is not positive definite (minimum eigenvalue " << eig.eigenvalues().minCoeff() << ")";
        issues.push_back(os.str());
      }
    }
  }

  if (ne >= 1 && m.E.cols() == nu && nu > 0) {
    if (ne > nu) {
      issues.emplace_back("E not full row rank (more junctions than inputs)");
    } else {
      Eigen::ColPivHouseholderQR<Matrix> qr(m.E.transpose());
      qr.setThreshold(1e-10);
      if (qr.rank() < ne) issues.emplace_back("E not full row rank");
    }
  }

  if (!issues.empty()) throw ValidationError(std::move(issues));
}

NetworkModel load_network(std::string_view source) {
  using json_io::json;
  const json doc = json_io::parse(std::string(source), "network document");
  if (!doc.is_object()) throw ParseError("network document: expected a JSON object");

  static constexpr const char* kKeys[] = {"A",     "B",     "Gd",     "E",      "Ed",
                                          "u_min", "u_max", "x_min",  "x_max",  "x_s",
                                          "alpha1", "alpha2_schedule", "W_alpha", "Wu", "Wx",
                                          "gamma_d"};
  for (const char* key : kKeys) {
    if (!doc.contains(key)) throw ParseError(std::string("network document: missing key '") + key + "'");
  }

  auto scalar = [&](const char* key) {
    const json& v = doc.at(key);
    if (!v.is_number()) throw ParseError(std::string(key) + ": expected a number");
    return v.get<double>();
  };

  NetworkModel m;
  m.A = json_io::to_matrix(doc.at("A"), "A");
  m.B = json_io::to_matrix(doc.at("B"), "B");
  m.Gd = json_io::to_matrix(doc.at("Gd"), "Gd");
  m.E = json_io::to_matrix(doc.at("E"), "E");
  m.Ed = json_io::to_matrix(doc.at("Ed"), "Ed");
  m.u_min = json_io::to_vector(doc.at("u_min"), "u_min");
  m.u_max = json_io::to_vector(doc.at("u_max"), "u_max");
  m.x_min = json_io::to_vector(doc.at("x_min"), "x_min");
  m.x_max = json_io::to_vector(doc.at("x_max"), "x_max");
  m.x_s = json_io::to_vector(doc.at("x_s"), "x_s");
  m.alpha1 = json_io::to_vector(doc.at("alpha1"), "alpha1");
  const json& sched = doc.at("alpha2_schedule");
  if (!sched.is_array()) throw ParseError("alpha2_schedule: expected an array of vectors");
  for (std::size_t k = 0; k < sched.size(); ++k) {
    m.alpha2_schedule.push_back(json_io::to_vector(sched[k], "alpha2_schedule[" + std::to_string(k) + "]"));
  }
  m.W_alpha = scalar("W_alpha");
  m.Wu = json_io::to_matrix(doc.at("Wu"), "Wu");
  m.Wx = scalar("Wx");
  m.gamma_d = scalar("gamma_d");

  validate_network(m);
  return m;
}

NetworkModel load_network_file(const std::string& path) {
  return load_network(json_io::read_text_file(path));
}

Vector simulate_step(const NetworkModel& model, const Vector& x, const Vector& u, const Vector& d) {
  check_dims(x, model.nx(), "x");
  check_dims(u, model.nu(), "u");
  check_dims(d, model.nd(), "d");
  return model.A * x + model.B * u + model.Gd * d;
}

Vector junction_residual(const NetworkModel& model, const Vector& u, const Vector& d) {
  check_dims(u, model.nu(), "u");
  check_dims(d, model.nd(), "d");
  return model.E * u + model.Ed * d;
}

double distance_above(const Vector& x, const Vector& lower) {
  return (lower - x).cwiseMax(0.0).norm();
}

double distance_to_box(const Vector& x, const Vector& lo, const Vector& hi) {
  return (x - x.cwiseMax(lo).cwiseMin(hi)).norm();
}

StageCost stage_cost(const NetworkModel& model, const Vector& x, const Vector& u, const Vector& u_prev,
                     std::int64_t k) {
  check_dims(x, model.nx(), "x");
  check_dims(u, model.nu(), "u");
  check_dims(u_prev, model.nu(), "u_prev");
  if (k < 0) throw DimensionError("time index must be nonnegative");
  StageCost c;
  c.economic = model.W_alpha * model.price(k).dot(u);
  const Vector du = u - u_prev;
  c.smoothing = du.dot(model.Wu * du);
  c.safety = model.Wx * distance_above(x, model.x_s);
  return c;
}

}  // namespace treesmpc
