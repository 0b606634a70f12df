#include "instances.hpp"

namespace testing_support {

using treesmpc::NetworkModel;
using treesmpc::ScenarioTree;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Matrix gaussian(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

NetworkModel random_network(std::mt19937_64& rng, int nx, int nu, int nd) {
  NetworkModel m;
  m.A = Matrix::Identity(nx, nx) + gaussian(rng, nx, nx, 0.05);
  m.B = gaussian(rng, nx, nu, 0.5);
  m.Gd = -gaussian(rng, nx, nd, 0.5).cwiseAbs();
  m.E.resize(1, nu);
  for (int i = 0; i < nu; ++i) m.E(0, i) = (uniform(rng, 0, 1) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.5, 1.5);
  m.Ed = gaussian(rng, 1, nd, 0.3);
  m.u_min.resize(nu);
  m.u_max.resize(nu);
  for (int i = 0; i < nu; ++i) {
    m.u_min(i) = -uniform(rng, 2.0, 4.0);
    m.u_max(i) = uniform(rng, 2.0, 4.0);
  }
  m.x_min = Vector::Zero(nx);
  m.x_max = Vector::Constant(nx, 10.0);
  m.x_s.resize(nx);
  for (int i = 0; i < nx; ++i) m.x_s(i) = uniform(rng, 2.0, 4.0);
  m.alpha1.resize(nu);
  for (int i = 0; i < nu; ++i) m.alpha1(i) = uniform(rng, 0.1, 1.0);
  for (int k = 0; k < 3; ++k) {
    Vector a(nu);
    for (int i = 0; i < nu; ++i) a(i) = uniform(rng, 0.0, 1.0);
    m.alpha2_schedule.push_back(a);
  }
  m.W_alpha = 1.0;
  const Matrix M = gaussian(rng, nu, nu);
  m.Wu = M * M.transpose() / nu + 0.5 * Matrix::Identity(nu, nu);
  m.Wx = uniform(rng, 1.0, 5.0);
  m.gamma_d = uniform(rng, 5.0, 20.0);
  return m;
}

ScenarioTree random_tree(std::mt19937_64& rng, const std::vector<int>& branching, int horizon, int nd,
                         double eps_scale) {
  const std::vector<int> sizes = treesmpc::stage_sizes(branching, horizon);
  int total = 0;
  for (int s : sizes) total += s;
  std::vector<double> probs(static_cast<std::size_t>(total), 1.0);
  Matrix eps = gaussian(rng, nd, total, eps_scale);
  eps.col(0).setZero();

  int parent_begin = 0;
  int begin = 1;
  for (int j = 1; j <= horizon; ++j) {
    const int b = (j - 1 < static_cast<int>(branching.size())) ? branching[static_cast<std::size_t>(j) - 1] : 1;
    for (int a = 0; a < sizes[static_cast<std::size_t>(j) - 1]; ++a) {
      std::vector<double> w(static_cast<std::size_t>(b));
      double sum = 0.0;
      for (auto& x : w) sum += (x = uniform(rng, 0.2, 1.0));
      for (int c = 0; c < b; ++c) {
        probs[static_cast<std::size_t>(begin + a * b + c)] =
            probs[static_cast<std::size_t>(parent_begin + a)] * w[static_cast<std::size_t>(c)] / sum;
      }
    }
    parent_begin = begin;
    begin += sizes[static_cast<std::size_t>(j)];
  }
  return treesmpc::build_tree(branching, eps, probs, horizon);
}

Instance random_instance(std::uint64_t seed, const InstanceLimits& limits) {
  std::mt19937_64 rng(seed);
  for (;;) {
    const int nx = uniform_int(rng, 1, limits.max_nx);
    const int nu = uniform_int(rng, 2, limits.max_nu);
    const int nd = uniform_int(rng, 1, limits.max_nd);
    const int N = uniform_int(rng, 1, limits.max_horizon);
    std::vector<int> branching;
    int scenarios = 1;
    for (int j = 0; j < N; ++j) {
      int b = uniform_int(rng, 1, 3);
      while (scenarios * b > limits.max_scenarios) --b;
      branching.push_back(b);
      scenarios *= b;
    }
    const std::vector<int> sizes = treesmpc::stage_sizes(branching, N);
    int nodes = 0;
    for (int s : sizes) nodes += s;
    if ((nodes - 1) * (nx + nu) > limits.max_variables) continue;

    NetworkModel model = random_network(rng, nx, nu, nd);
    ScenarioTree tree = random_tree(rng, branching, N, nd);
    treesmpc::DemandForecast f;
    f.k = uniform_int(rng, 0, 5);
    f.d_hat.resize(nd, N);
    for (Eigen::Index i = 0; i < f.d_hat.size(); ++i) f.d_hat.data()[i] = uniform(rng, 0.5, 1.5);
    Vector p(nx);
    for (int i = 0; i < nx; ++i) p(i) = uniform(rng, 1.0, 9.0);
    Vector q(nu);
    for (int i = 0; i < nu; ++i) q(i) = uniform(rng, -1.0, 1.0);
    return Instance{std::move(model), std::move(tree), std::move(f), std::move(p), std::move(q)};
  }
}

}  // namespace testing_support
