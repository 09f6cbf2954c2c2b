#include "trilqg/synthesis.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace trilqg {

namespace {

using Json = nlohmann::ordered_json;

// B E^{down i} K_i, an n x n map.
Matrix b_down_k(const TriangularPlant& P, const GainSet& g, int i) {
  return sub(P.B, {0, P.np.total()}, range_down(P.mp, i)) * g.K[i];
}

Controller make_controller(const TriangularPlant& P, Matrix AK, Matrix BK,
                           Matrix CK) {
  return Controller{StateSpace::strictly_proper(std::move(AK), std::move(BK),
                                                std::move(CK)),
                    P.np, P.mp, P.pp};
}

}  // namespace

Controller build_controller(const TriangularPlant& P, const GainSet& g) {
  const int N = P.players();
  const Eigen::Index n = P.np.total();
  const Eigen::Index p = P.pp.total();
  const Eigen::Index m = P.mp.total();

  Matrix AK = Matrix::Zero(n * N, n * N);
  Matrix BK = Matrix::Zero(n * N, p);
  Matrix CK = Matrix::Zero(m, n * N);

  // zeta diag{B^{down k} K_k} mu collapses to first differences along each
  // block column, so A_K is itself lower block triangular.
  for (int i = 1; i <= N; ++i) {
    const Eigen::Index ri = (i - 1) * n;
    AK.block(ri, ri, n, n) =
        P.A + g.L[i] * sub(P.C, range_up(P.pp, i), {0, n}) + b_down_k(P, g, i);
    for (int j = 1; j < i; ++j) {
      Matrix blk = b_down_k(P, g, j) - b_down_k(P, g, j + 1);
      AK.block(ri, (j - 1) * n, n, n) = blk;
    }
    BK.block(ri, 0, n, range_up(P.pp, i).length()) = -g.L[i];
  }
  for (int j = 1; j <= N; ++j) {
    Matrix Cj = Matrix::Zero(m, n);
    BlockRange mj = range_down(P.mp, j);
    Cj.middleRows(mj.start, mj.length()) += g.K[j];
    if (j + 1 <= N) {
      BlockRange mj1 = range_down(P.mp, j + 1);
      Cj.middleRows(mj1.start, mj1.length()) -= g.K[j + 1];
    }
    CK.middleCols((j - 1) * n, n) = Cj;
  }
  return make_controller(P, std::move(AK), std::move(BK), std::move(CK));
}

Controller build_controller_incidence(const TriangularPlant& P,
                                      const GainSet& g) {
  const int N = P.players();
  const Eigen::Index n = P.np.total();
  const Eigen::Index p = P.pp.total();
  const Eigen::Index m = P.mp.total();
  IncidencePair inc = incidence_zeta_mu(n, N);

  Matrix AK = Matrix::Zero(n * N, n * N);
  Matrix diagB = Matrix::Zero(n * N, n * N);
  for (int i = 1; i <= N; ++i) {
    const Eigen::Index ri = (i - 1) * n;
    AK.block(ri, ri, n, n) =
        P.A + g.L[i] * sub(P.C, range_up(P.pp, i), {0, n});
    diagB.block(ri, ri, n, n) = b_down_k(P, g, i);
  }
  AK += inc.zeta * diagB * inc.mu;

  Matrix BK(n * N, p);
  Matrix CKrow(m, n * N);
  Matrix Ip = Matrix::Identity(p, p);
  Matrix Im = Matrix::Identity(m, m);
  for (int i = 1; i <= N; ++i) {
    BlockRange pu = range_up(P.pp, i);
    BK.middleRows((i - 1) * n, n) =
        -g.L[i] * Ip.middleRows(pu.start, pu.length());
    BlockRange md = range_down(P.mp, i);
    CKrow.middleCols((i - 1) * n, n) =
        Im.middleCols(md.start, md.length()) * g.K[i];
  }
  Matrix CK = CKrow * inc.mu;
  return make_controller(P, std::move(AK), std::move(BK), std::move(CK));
}

StateSpace ClosedLoop::g11() const { return StateSpace::strictly_proper(A, W, F); }
StateSpace ClosedLoop::g12() const { return StateSpace(A, B, F, H); }
StateSpace ClosedLoop::g21() const { return StateSpace(A, W, C, V); }
StateSpace ClosedLoop::g22() const { return StateSpace::strictly_proper(A, B, C); }

ClosedLoop closed_loop(const TriangularPlant& P, const Controller& ctrl) {
  const Eigen::Index n = P.np.total();
  const int N = P.players();
  const Eigen::Index nK = ctrl.sys.states();
  if (nK != n * N || ctrl.sys.inputs() != P.pp.total() ||
      ctrl.sys.outputs() != P.mp.total()) {
    throw Error(ErrorCode::DimensionMismatch,
                "controller dimensions do not match the plant");
  }
  ClosedLoop cl;
  cl.n = n;
  cl.N = N;
  cl.A.resize(nK + n, nK + n);
  cl.A << ctrl.sys.A, ctrl.sys.B * P.C, P.B * ctrl.sys.C, P.A;
  cl.B.resize(nK + n, P.mp.total());
  cl.B << Matrix::Zero(nK, P.mp.total()), P.B;
  cl.W.resize(nK + n, P.W.cols());
  cl.W << ctrl.sys.B * P.V, P.W;
  cl.F.resize(P.F.rows(), nK + n);
  cl.F << P.H * ctrl.sys.C, P.F;
  cl.C.resize(P.pp.total(), nK + n);
  cl.C << Matrix::Zero(P.pp.total(), nK), P.C;
  cl.H = P.H;
  cl.V = P.V;

  const double alpha = spectral_abscissa(cl.A);
  if (alpha >= -1e-10) {
    throw Error(ErrorCode::UnstableClosedLoop,
                "closed-loop spectral abscissa " + std::to_string(alpha),
                alpha);
  }
  return cl;
}

Matrix block_triangularize(const ClosedLoop& cl, int N, Eigen::Index n) {
  if (cl.A.rows() != n * (N + 1)) {
    throw Error(ErrorCode::DimensionMismatch,
                "closed-loop state dimension is not n(N+1)");
  }
  IncidencePair inc = incidence_bar(n, N);
  return inc.mu * cl.A * inc.zeta;
}

CostBreakdown optimal_cost(const TriangularPlant& P, const GainSet& g) {
  const int N = P.players();
  CostBreakdown out;
  const double cnt2 =
      (P.W.transpose() * g.X[1] * P.W).trace() +
      (P.psi() * g.K[1] * g.Y[N] * g.K[1].transpose()).trace();
  double dcnt2 = 0.0;
  for (int j = 1; j <= N - 1; ++j) {
    Matrix D = P.H * g.K[1] -
               sub(P.H, {0, P.H.rows()}, range_down(P.mp, j + 1)) * g.K[j + 1];
    dcnt2 += (D * g.Y[j] * D.transpose()).trace();
  }
  out.j_cnt = std::sqrt(std::max(0.0, cnt2));
  out.j_dcnt = std::sqrt(std::max(0.0, dcnt2));
  out.j_opt = std::sqrt(out.j_cnt * out.j_cnt + out.j_dcnt * out.j_dcnt);
  return out;
}

namespace {

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::SchemaError, name + " must be a non-empty array");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array()) {
      throw Error(ErrorCode::SchemaError, name + " rows must be arrays");
    }
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols || cols == 0) {
      throw Error(ErrorCode::SchemaError, name + " has ragged rows");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!row[k].is_number()) {
        throw Error(ErrorCode::SchemaError, name + " has a non-numeric entry");
      }
      M(i, k) = row[k].get<double>();
    }
  }
  require_finite(M, name.c_str());
  return M;
}

std::vector<int> sizes_from_json(const Json& j, const std::string& name) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::SchemaError, name + " must be a non-empty array");
  }
  std::vector<int> out;
  for (const Json& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw Error(ErrorCode::SchemaError,
                  name + " entries must be positive integers");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

std::string save_controller(const Controller& ctrl) {
  Json j;
  j["state_sizes"] = ctrl.np.sizes();
  j["input_sizes"] = ctrl.mp.sizes();
  j["output_sizes"] = ctrl.pp.sizes();
  j["A_K"] = matrix_to_json(ctrl.sys.A);
  j["B_K"] = matrix_to_json(ctrl.sys.B);
  j["C_K"] = matrix_to_json(ctrl.sys.C);
  return j.dump(2) + "\n";
}

Controller load_controller(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::SchemaError, "top-level document must be an object");
  }
  static const std::set<std::string> allowed = {
      "state_sizes", "input_sizes", "output_sizes", "A_K", "B_K", "C_K"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw Error(ErrorCode::SchemaError, "unknown field '" + it.key() + "'");
    }
  }
  for (const std::string& key : allowed) {
    if (!j.contains(key)) {
      throw Error(ErrorCode::SchemaError, "missing field '" + key + "'");
    }
  }
  Partition np(sizes_from_json(j["state_sizes"], "state_sizes"));
  Partition mp(sizes_from_json(j["input_sizes"], "input_sizes"));
  Partition pp(sizes_from_json(j["output_sizes"], "output_sizes"));
  Matrix AK = matrix_from_json(j["A_K"], "A_K");
  Matrix BK = matrix_from_json(j["B_K"], "B_K");
  Matrix CK = matrix_from_json(j["C_K"], "C_K");
  const Eigen::Index nK = np.total() * np.count();
  if (AK.rows() != nK || AK.cols() != nK || BK.rows() != nK ||
      BK.cols() != pp.total() || CK.rows() != mp.total() || CK.cols() != nK) {
    throw Error(ErrorCode::SchemaError,
                "controller matrices inconsistent with partitions");
  }
  return Controller{StateSpace::strictly_proper(std::move(AK), std::move(BK),
                                                std::move(CK)),
                    np, mp, pp};
}

Controller load_controller_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_controller(ss.str());
}

}  // namespace trilqg
