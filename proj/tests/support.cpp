#include "support.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "trilqg/plant.hpp"

namespace testsup {

TriangularPlant plant_p1() {
  // Unit process and measurement noise on independent channels, the exact
  // transpose-dual of the cost data F = [1; 0], H = [0; 1].
  Matrix A(1, 1), B(1, 1), C(1, 1), F(2, 1), H(2, 1), W(1, 2), V(1, 2);
  A << -1.0;
  B << 1.0;
  C << 1.0;
  F << 1.0, 0.0;
  H << 0.0, 1.0;
  W << 1.0, 0.0;
  V << 0.0, 1.0;
  return TriangularPlant{A, B, C, F, H, W, V, Partition({1}), Partition({1}),
                         Partition({1})};
}

TriangularPlant plant_p2() {
  Matrix A(2, 2);
  A << -1.0, 0.0, 1.0, -2.0;
  Matrix B = Matrix::Identity(2, 2);
  Matrix C = Matrix::Identity(2, 2);
  Matrix F(4, 2), H(4, 2);
  F << Matrix::Identity(2, 2), Matrix::Zero(2, 2);
  H << Matrix::Zero(2, 2), Matrix::Identity(2, 2);
  Matrix W = Matrix::Identity(2, 2);
  Matrix V = Matrix::Identity(2, 2);
  return TriangularPlant{A,
                         B,
                         C,
                         F,
                         H,
                         W,
                         V,
                         Partition({1, 1}),
                         Partition({1, 1}),
                         Partition({1, 1})};
}

namespace {

Matrix random_lbt(std::mt19937_64& rng, const Partition& rp,
                  const Partition& cp) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix M(rp.total(), cp.total());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = gauss(rng);
  }
  for (int i = 1; i <= rp.count(); ++i) {
    for (int j = i + 1; j <= cp.count(); ++j) {
      BlockRange r = range_block(rp, i);
      BlockRange c = range_block(cp, j);
      M.block(r.start, c.start, r.length(), c.length()).setZero();
    }
  }
  return M;
}

}  // namespace

TriangularPlant random_plant(std::mt19937_64& rng, std::vector<int> np,
                             std::vector<int> mp, std::vector<int> pp) {
  Partition Pn(np), Pm(mp), Pp(pp);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index n = Pn.total(), m = Pm.total(), p = Pp.total();

  Matrix A = random_lbt(rng, Pn, Pn);
  Matrix B = random_lbt(rng, Pn, Pm);
  Matrix C = random_lbt(rng, Pp, Pn);
  Matrix F = Matrix::Zero(n + m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) F(i, j) = gauss(rng);
  }
  Matrix H = Matrix::Zero(n + m, m);
  H.bottomRows(m).setIdentity();
  Matrix W = Matrix::Zero(n, n + p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) W(i, j) = gauss(rng);
  }
  Matrix V = Matrix::Zero(p, n + p);
  V.rightCols(p).setIdentity();
  return TriangularPlant{A, B, C, F, H, W, V, Pn, Pm, Pp};
}

TriangularPlant random_valid_plant(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> nplayers(2, 3);
  std::uniform_int_distribution<int> bsize(1, 3);
  for (int attempt = 0; attempt < 200; ++attempt) {
    const int N = nplayers(rng);
    std::vector<int> np, mp, pp;
    for (int i = 0; i < N; ++i) {
      np.push_back(bsize(rng));
      mp.push_back(bsize(rng));
      pp.push_back(bsize(rng));
    }
    TriangularPlant P = random_plant(rng, np, mp, pp);
    if (validate(P).all_pass()) return P;
  }
  throw std::runtime_error("no valid random plant after 200 attempts");
}

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(TRILQG_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CliResult out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed");
  while (fgets(buf.data(), buf.size(), pipe)) out.stdout_text += buf.data();
  const int status = pclose(pipe);
  out.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

std::string fresh_dir(const std::string& tag) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("trilqg_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

double max_abs(const Matrix& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace testsup
