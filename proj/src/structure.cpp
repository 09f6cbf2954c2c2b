#include "trilqg/structure.hpp"

namespace trilqg {

Partition::Partition(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) {
    throw Error(ErrorCode::SchemaError, "partition needs at least one block");
  }
  offsets_.reserve(sizes_.size() + 1);
  offsets_.push_back(0);
  for (int s : sizes_) {
    if (s < 1) {
      throw Error(ErrorCode::SchemaError, "partition blocks must be >= 1");
    }
    offsets_.push_back(offsets_.back() + s);
  }
}

int Partition::size(int block) const {
  if (block < 1 || block > count()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "block " + std::to_string(block) + " outside 1.." +
                    std::to_string(count()));
  }
  return sizes_[block - 1];
}

Eigen::Index Partition::offset(int block) const {
  if (block < 1 || block > count() + 1) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "block " + std::to_string(block) + " outside 1.." +
                    std::to_string(count() + 1));
  }
  return offsets_[block - 1];
}

BlockRange range_up(const Partition& p, int i) {
  if (i < 1 || i > p.count()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "range_up block " + std::to_string(i));
  }
  return {0, p.offset(i + 1)};
}

BlockRange range_down(const Partition& p, int i) {
  if (i < 1 || i > p.count()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "range_down block " + std::to_string(i));
  }
  return {p.offset(i), p.total()};
}

BlockRange range_block(const Partition& p, int i) {
  if (i < 1 || i > p.count()) {
    throw Error(ErrorCode::IndexOutOfBounds,
                "range_block block " + std::to_string(i));
  }
  return {p.offset(i), p.offset(i + 1)};
}

Matrix sub(const Matrix& M, BlockRange rows, BlockRange cols) {
  if (rows.start < 0 || rows.end > M.rows() || cols.start < 0 ||
      cols.end > M.cols() || rows.start > rows.end ||
      cols.start > cols.end) {
    throw Error(ErrorCode::IndexOutOfBounds, "submatrix range outside matrix");
  }
  return M.block(rows.start, cols.start, rows.length(), cols.length());
}

double lbt_defect(const Matrix& M, const Partition& rowp,
                  const Partition& colp) {
  if (rowp.count() != colp.count() || M.rows() != rowp.total() ||
      M.cols() != colp.total()) {
    throw Error(ErrorCode::DimensionMismatch, "is_lbt partition dimensions");
  }
  double worst = 0.0;
  for (int i = 1; i <= rowp.count(); ++i) {
    for (int j = i + 1; j <= colp.count(); ++j) {
      BlockRange r = range_block(rowp, i);
      BlockRange c = range_block(colp, j);
      worst = std::max(
          worst, M.block(r.start, c.start, r.length(), c.length())
                     .cwiseAbs()
                     .maxCoeff());
    }
  }
  return worst;
}

bool is_lbt(const Matrix& M, const Partition& rowp, const Partition& colp,
            double tol) {
  if (tol < 0.0) {
    const double scale = M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
    tol = 1e-9 * (1.0 + scale);
  }
  return lbt_defect(M, rowp, colp) <= tol;
}

namespace {

IncidencePair band_pair(Eigen::Index n, int blocks) {
  const Eigen::Index dim = n * blocks;
  IncidencePair out;
  out.zeta = Matrix::Zero(dim, dim);
  out.mu = Matrix::Zero(dim, dim);
  for (int i = 0; i < blocks; ++i) {
    for (int j = 0; j <= i; ++j) {
      out.zeta.block(i * n, j * n, n, n) = Matrix::Identity(n, n);
    }
    out.mu.block(i * n, i * n, n, n) = Matrix::Identity(n, n);
    if (i > 0) {
      out.mu.block(i * n, (i - 1) * n, n, n) = -Matrix::Identity(n, n);
    }
  }
  return out;
}

}  // namespace

IncidencePair incidence_zeta_mu(Eigen::Index n, int N) {
  if (n < 1 || N < 1) {
    throw Error(ErrorCode::DimensionMismatch, "incidence dimensions");
  }
  return band_pair(n, N);
}

IncidencePair incidence_bar(Eigen::Index n, int N) {
  if (n < 1 || N < 1) {
    throw Error(ErrorCode::DimensionMismatch, "incidence dimensions");
  }
  return band_pair(n, N + 1);
}

Matrix selector_up(const Partition& p, int i) {
  BlockRange r = range_up(p, i);
  return Matrix::Identity(p.total(), p.total())
      .middleCols(r.start, r.length());
}

Matrix selector_down(const Partition& p, int i) {
  BlockRange r = range_down(p, i);
  return Matrix::Identity(p.total(), p.total())
      .middleCols(r.start, r.length());
}

}  // namespace trilqg
