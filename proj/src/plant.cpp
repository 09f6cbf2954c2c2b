#include "trilqg/plant.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace trilqg {

namespace {

using Json = nlohmann::ordered_json;

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
    throw Error(ErrorCode::SchemaError, name + " must be a non-empty array of rows");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix M;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || row.empty()) {
      throw Error(ErrorCode::SchemaError, name + " row " + std::to_string(i) +
                                              " must be a non-empty array");
    }
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      M.resize(rows, cols);
    }
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorCode::SchemaError,
                  name + " has rows of unequal length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (!row[k].is_number()) {
        throw Error(ErrorCode::SchemaError,
                    name + " entry (" + std::to_string(i) + "," +
                        std::to_string(k) + ") is not a number");
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
  std::vector<int> sizes;
  for (const Json& v : j) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
      throw Error(ErrorCode::SchemaError,
                  name + " entries must be positive integers");
    }
    sizes.push_back(v.get<int>());
  }
  return sizes;
}

void check_dims(const TriangularPlant& P) {
  const Eigen::Index n = P.np.total();
  const Eigen::Index m = P.mp.total();
  const Eigen::Index p = P.pp.total();
  auto want = [](const Matrix& M, Eigen::Index r, Eigen::Index c,
                 const char* name) {
    if (M.rows() != r || M.cols() != c) {
      throw Error(ErrorCode::SchemaError,
                  std::string(name) + " has shape " + std::to_string(M.rows()) +
                      "x" + std::to_string(M.cols()) + ", expected " +
                      std::to_string(r) + "x" + std::to_string(c));
    }
  };
  if (P.np.count() != P.mp.count() || P.np.count() != P.pp.count()) {
    throw Error(ErrorCode::SchemaError,
                "state/input/output partitions must share the player count");
  }
  want(P.A, n, n, "A");
  want(P.B, n, m, "B");
  want(P.C, p, n, "C");
  if (P.F.cols() != n) {
    throw Error(ErrorCode::SchemaError, "F must have n columns");
  }
  want(P.H, P.F.rows(), m, "H");
  if (P.W.rows() != n) {
    throw Error(ErrorCode::SchemaError, "W must have n rows");
  }
  want(P.V, p, P.W.cols(), "V");
}

void check_structure(const TriangularPlant& P) {
  struct Item {
    const Matrix* M;
    const Partition* rp;
    const Partition* cp;
    const char* name;
  };
  const Item items[] = {{&P.A, &P.np, &P.np, "A"},
                        {&P.B, &P.np, &P.mp, "B"},
                        {&P.C, &P.pp, &P.np, "C"}};
  for (const Item& it : items) {
    if (!is_lbt(*it.M, *it.rp, *it.cp)) {
      throw Error(ErrorCode::StructureError,
                  std::string(it.name) +
                      " is not lower block triangular (defect " +
                      std::to_string(lbt_defect(*it.M, *it.rp, *it.cp)) + ")");
    }
  }
}

// Hautus test over eigenvalues at or near the closed right half plane.
ValidationCheck hautus_check(const std::string& name, const Matrix& Ai,
                             const Matrix& Gi, bool column_form) {
  ValidationCheck out{name, true, 0.0, ""};
  const double thr = 1e-8 * std::max(1.0, Ai.norm());
  Eigen::EigenSolver<Matrix> es(Ai, false);
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_eig;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    if (lam.real() < -1e-9) continue;
    ComplexMatrix test;
    if (column_form) {
      // stabilizability: [A - lam I, B] full row rank
      test.resize(Ai.rows(), Ai.cols() + Gi.cols());
      test << Ai.cast<std::complex<double>>(), Gi.cast<std::complex<double>>();
      test.topLeftCorner(Ai.rows(), Ai.cols()).diagonal().array() -= lam;
    } else {
      // detectability: [A - lam I; C] full column rank
      test.resize(Ai.rows() + Gi.rows(), Ai.cols());
      test.topRows(Ai.rows()) = Ai.cast<std::complex<double>>();
      test.topRows(Ai.rows()).diagonal().array() -= lam;
      test.bottomRows(Gi.rows()) = Gi.cast<std::complex<double>>();
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(test);
    const double s = svd.singularValues().minCoeff();
    if (s < worst) {
      worst = s;
      std::ostringstream os;
      os << "eigenvalue " << lam.real() << (lam.imag() < 0 ? "-" : "+")
         << std::abs(lam.imag()) << "j";
      worst_eig = os.str();
    }
  }
  if (std::isinf(worst)) {
    // No eigenvalues near the closed right half plane; margin records how
    // far the rightmost mode sits from the test boundary.
    out.margin = -1e-9 - spectral_abscissa(Ai);
    out.detail = "no modes near the closed right half plane";
    return out;
  }
  out.margin = worst;
  out.pass = worst > thr;
  out.detail = worst_eig;
  return out;
}

// Distance of the ARE Hamiltonian spectrum to the imaginary axis; the
// frequency-domain full-rank assumption fails exactly when that distance
// collapses.
ValidationCheck axis_check(const std::string& name, const Matrix& Ab,
                           const Matrix& R, const Matrix& Qb) {
  ValidationCheck out{name, true, 0.0, ""};
  const Eigen::Index n = Ab.rows();
  Matrix ham(2 * n, 2 * n);
  ham << Ab, -R, -Qb, -Ab.transpose();
  Eigen::EigenSolver<Matrix> es(ham, false);
  const double min_axis = es.eigenvalues().real().cwiseAbs().minCoeff();
  const double scale = std::max(1.0, ham.norm());
  out.margin = min_axis / scale;
  out.pass = out.margin >= 1e-8;
  if (!out.pass) {
    out.detail = "Hamiltonian eigenvalue within " + std::to_string(min_axis) +
                 " of the imaginary axis";
  }
  return out;
}

}  // namespace

bool ValidationReport::all_pass() const {
  for (const ValidationCheck& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

std::string ValidationReport::to_json() const {
  Json j;
  j["schema_version"] = 1;
  j["all_pass"] = all_pass();
  Json arr = Json::array();
  for (const ValidationCheck& c : checks) {
    Json e;
    e["name"] = c.name;
    e["pass"] = c.pass;
    e["margin"] = c.margin;
    if (!c.detail.empty()) e["detail"] = c.detail;
    arr.push_back(std::move(e));
  }
  j["checks"] = std::move(arr);
  return j.dump(2) + "\n";
}

ValidationReport validate(const TriangularPlant& P) {
  ValidationReport rep;
  const int N = P.players();

  for (int i = 1; i <= N; ++i) {
    BlockRange rn = range_block(P.np, i);
    BlockRange rm = range_block(P.mp, i);
    BlockRange rp = range_block(P.pp, i);
    Matrix Aii = sub(P.A, rn, rn);
    rep.checks.push_back(hautus_check(
        "stabilizable_block_" + std::to_string(i), Aii, sub(P.B, rn, rm),
        /*column_form=*/true));
    rep.checks.push_back(hautus_check(
        "detectable_block_" + std::to_string(i), Aii, sub(P.C, rp, rn),
        /*column_form=*/false));
  }

  auto rank_check = [](const std::string& name, const Matrix& M,
                       bool need_rows_ge_cols) {
    ValidationCheck c{name, false, 0.0, ""};
    const bool shape_ok =
        need_rows_ge_cols ? M.rows() >= M.cols() : M.cols() >= M.rows();
    if (!shape_ok) {
      c.detail = "wrong shape for the required rank";
      return c;
    }
    Eigen::JacobiSVD<Matrix> svd(M);
    const double smax = svd.singularValues().maxCoeff();
    const double smin = svd.singularValues().minCoeff();
    c.margin = smax > 0.0 ? smin / smax : 0.0;
    c.pass = smax > 0.0 && smin > 1e-10 * smax;
    return c;
  };
  rep.checks.push_back(rank_check("H_full_column_rank", P.H, true));
  rep.checks.push_back(rank_check("V_full_row_rank", P.V, false));

  // Assumption 1.2 / 1.4 via Hamiltonian axis distance.  Needs the
  // respective weighting factor to be invertible first.
  {
    ValidationCheck c{"assumption_1_2_imaginary_axis", false, 0.0, ""};
    Eigen::SelfAdjointEigenSolver<Matrix> es(P.psi());
    if (es.eigenvalues().minCoeff() <=
        1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
      c.detail = "Psi = H'H singular, Hamiltonian undefined";
    } else {
      Matrix PsiInv = es.eigenvectors() *
                      es.eigenvalues().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
      Matrix HtF = P.H.transpose() * P.F;
      Matrix Ab = P.A - P.B * PsiInv * HtF;
      Matrix R = P.B * PsiInv * P.B.transpose();
      Matrix Qb = P.F.transpose() * P.F - HtF.transpose() * PsiInv * HtF;
      c = axis_check("assumption_1_2_imaginary_axis", Ab, R,
                     0.5 * (Qb + Qb.transpose()));
    }
    rep.checks.push_back(c);
  }
  {
    ValidationCheck c{"assumption_1_4_imaginary_axis", false, 0.0, ""};
    Eigen::SelfAdjointEigenSolver<Matrix> es(P.phi());
    if (es.eigenvalues().minCoeff() <=
        1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())) {
      c.detail = "Phi = VV' singular, Hamiltonian undefined";
    } else {
      Matrix PhiInv = es.eigenvectors() *
                      es.eigenvalues().cwiseInverse().asDiagonal() *
                      es.eigenvectors().transpose();
      Matrix WVt = P.W * P.V.transpose();
      Matrix Ab = P.A - WVt * PhiInv * P.C;
      Matrix Rd = P.C.transpose() * PhiInv * P.C;
      Matrix Qd = P.W * P.W.transpose() - WVt * PhiInv * WVt.transpose();
      c = axis_check("assumption_1_4_imaginary_axis", Ab.transpose(), Rd,
                     0.5 * (Qd + Qd.transpose()));
    }
    rep.checks.push_back(c);
  }

  const struct {
    const Matrix* M;
    const Partition* rp;
    const Partition* cp;
    const char* name;
  } items[] = {{&P.A, &P.np, &P.np, "A_lbt"},
               {&P.B, &P.np, &P.mp, "B_lbt"},
               {&P.C, &P.pp, &P.np, "C_lbt"}};
  for (const auto& it : items) {
    ValidationCheck c{it.name, false, 0.0, ""};
    c.margin = lbt_defect(*it.M, *it.rp, *it.cp);
    c.pass = is_lbt(*it.M, *it.rp, *it.cp);
    rep.checks.push_back(c);
  }
  return rep;
}

TriangularPlant load_plant(const std::string& text) {
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
      "state_sizes", "input_sizes", "output_sizes", "A", "B",
      "C",           "F",           "H",            "W", "V"};
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

  TriangularPlant P{Matrix(),
                    Matrix(),
                    Matrix(),
                    Matrix(),
                    Matrix(),
                    Matrix(),
                    Matrix(),
                    Partition(sizes_from_json(j["state_sizes"], "state_sizes")),
                    Partition(sizes_from_json(j["input_sizes"], "input_sizes")),
                    Partition(sizes_from_json(j["output_sizes"], "output_sizes"))};
  P.A = matrix_from_json(j["A"], "A");
  P.B = matrix_from_json(j["B"], "B");
  P.C = matrix_from_json(j["C"], "C");
  P.F = matrix_from_json(j["F"], "F");
  P.H = matrix_from_json(j["H"], "H");
  P.W = matrix_from_json(j["W"], "W");
  P.V = matrix_from_json(j["V"], "V");

  check_dims(P);
  check_structure(P);
  return P;
}

TriangularPlant load_plant_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return load_plant(ss.str());
}

std::string save_plant(const TriangularPlant& P) {
  Json j;
  j["state_sizes"] = P.np.sizes();
  j["input_sizes"] = P.mp.sizes();
  j["output_sizes"] = P.pp.sizes();
  j["A"] = matrix_to_json(P.A);
  j["B"] = matrix_to_json(P.B);
  j["C"] = matrix_to_json(P.C);
  j["F"] = matrix_to_json(P.F);
  j["H"] = matrix_to_json(P.H);
  j["W"] = matrix_to_json(P.W);
  j["V"] = matrix_to_json(P.V);
  return j.dump(2) + "\n";
}

}  // namespace trilqg
