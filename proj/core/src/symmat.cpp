#include "nsdp/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace nsdp {

namespace {

constexpr int kMaxSweeps = 30;
constexpr double kOffDiagonalTol = 1e-13;

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) sum += 2.0 * a(i, j) * a(i, j);
  }
  return std::sqrt(sum);
}

// Cyclic Jacobi. Throws with block index `block` on non-convergence.
SymEigen jacobi_eigen(const SymMatrix& sym, std::size_t block) {
  const auto n = static_cast<Eigen::Index>(sym.order());
  Eigen::MatrixXd a = sym.dense();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

  const double threshold = kOffDiagonalTol * a.norm();
  int sweep = 0;
  while (off_diagonal_norm(a) > threshold) {
    if (sweep == kMaxSweeps) throw EigenNonConvergence(block, sweep);
    ++sweep;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p, q) rotation
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return a(i, i) > a(j, j);
  });

  SymEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
    out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
  }
  return out;
}

}  // namespace

EigenNonConvergence::EigenNonConvergence(std::size_t block, int sweeps)
    : std::runtime_error("symmetric eigen solver did not converge in block " +
                         std::to_string(block) + " after " +
                         std::to_string(sweeps) + " Jacobi sweeps"),
      block_(block) {}

// ---------------------------------------------------------------- SymMatrix

SymMatrix::SymMatrix(std::size_t order)
    : order_(order), packed_(order * (order + 1) / 2, 0.0) {}

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(rows.size()) {
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != order_) {
      throw std::invalid_argument("SymMatrix: rows must form a square matrix");
    }
    std::size_t j = 0;
    for (double value : row) {
      if (j >= i) {
        at(i, j) = value;
      } else if (value != (*this)(i, j)) {
        throw std::invalid_argument("SymMatrix: input is not symmetric");
      }
      ++j;
    }
    ++i;
  }
}

SymMatrix SymMatrix::identity(std::size_t order) {
  SymMatrix m(order);
  for (std::size_t i = 0; i < order; ++i) m.at(i, i) = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
  SymMatrix m(diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m.at(i, i) = diag[i];
  return m;
}

SymMatrix SymMatrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("SymMatrix::from_dense: matrix is not square");
  }
  const auto n = static_cast<std::size_t>(a.rows());
  SymMatrix m(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i <= j; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const auto jj = static_cast<Eigen::Index>(j);
      m.at(i, j) = 0.5 * (a(ii, jj) + a(jj, ii));
    }
  }
  return m;
}

Eigen::MatrixXd SymMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(order_);
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double value = (*this)(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      out(i, j) = value;
      out(j, i) = value;
    }
  }
  return out;
}

double SymMatrix::trace() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < order_; ++i) sum += (*this)(i, i);
  return sum;
}

double SymMatrix::frobenius_norm() const { return std::sqrt(inner(*this, *this)); }

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) { return axpy(1.0, other); }

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) { return axpy(-1.0, other); }

SymMatrix& SymMatrix::operator*=(double scale) {
  for (double& value : packed_) value *= scale;
  return *this;
}

SymMatrix& SymMatrix::axpy(double scale, const SymMatrix& other) {
  if (other.order_ != order_) {
    throw DimensionMismatch("SymMatrix: orders " + std::to_string(order_) +
                            " and " + std::to_string(other.order_) + " differ");
  }
  for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] += scale * other.packed_[k];
  return *this;
}

double inner(const SymMatrix& a, const SymMatrix& b) {
  if (a.order() != b.order()) {
    throw DimensionMismatch("inner: orders " + std::to_string(a.order()) +
                            " and " + std::to_string(b.order()) + " differ");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < a.order(); ++j) {
    for (std::size_t i = 0; i < j; ++i) sum += 2.0 * a(i, j) * b(i, j);
    sum += a(j, j) * b(j, j);
  }
  return sum;
}

// ----------------------------------------------------------- BlockSymMatrix

BlockSymMatrix::BlockSymMatrix(std::vector<SymMatrix> blocks) : blocks_(std::move(blocks)) {}

BlockSymMatrix BlockSymMatrix::zeros(std::span<const std::size_t> dims) {
  std::vector<SymMatrix> blocks;
  blocks.reserve(dims.size());
  for (std::size_t d : dims) blocks.emplace_back(d);
  return BlockSymMatrix(std::move(blocks));
}

BlockSymMatrix BlockSymMatrix::identity(std::span<const std::size_t> dims) {
  std::vector<SymMatrix> blocks;
  blocks.reserve(dims.size());
  for (std::size_t d : dims) blocks.push_back(SymMatrix::identity(d));
  return BlockSymMatrix(std::move(blocks));
}

std::vector<std::size_t> BlockSymMatrix::dims() const {
  std::vector<std::size_t> out;
  out.reserve(blocks_.size());
  for (const auto& b : blocks_) out.push_back(b.order());
  return out;
}

std::size_t BlockSymMatrix::total_order() const {
  std::size_t m = 0;
  for (const auto& b : blocks_) m += b.order();
  return m;
}

bool BlockSymMatrix::conformable(const BlockSymMatrix& other) const {
  if (blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].order() != other.blocks_[b].order()) return false;
  }
  return true;
}

void BlockSymMatrix::require_conformable(const BlockSymMatrix& other) const {
  if (!conformable(other)) {
    throw DimensionMismatch("BlockSymMatrix: block layouts differ");
  }
}

double BlockSymMatrix::trace() const {
  double sum = 0.0;
  for (const auto& b : blocks_) sum += b.trace();
  return sum;
}

double BlockSymMatrix::frobenius_norm() const { return std::sqrt(inner(*this, *this)); }

BlockSymMatrix& BlockSymMatrix::operator+=(const BlockSymMatrix& other) {
  return axpy(1.0, other);
}

BlockSymMatrix& BlockSymMatrix::operator-=(const BlockSymMatrix& other) {
  return axpy(-1.0, other);
}

BlockSymMatrix& BlockSymMatrix::operator*=(double scale) {
  for (auto& b : blocks_) b *= scale;
  return *this;
}

BlockSymMatrix& BlockSymMatrix::axpy(double scale, const BlockSymMatrix& other) {
  require_conformable(other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b].axpy(scale, other.blocks_[b]);
  return *this;
}

BlockSymMatrix& BlockSymMatrix::add_identity(double scale) {
  for (auto& b : blocks_) {
    for (std::size_t i = 0; i < b.order(); ++i) b.at(i, i) += scale;
  }
  return *this;
}

double inner(const BlockSymMatrix& a, const BlockSymMatrix& b) {
  if (!a.conformable(b)) throw DimensionMismatch("inner: block layouts differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.num_blocks(); ++k) sum += inner(a.block(k), b.block(k));
  return sum;
}

// ------------------------------------------------------------- spectral ops

std::vector<double> EigenDecomposition::eigenvalues() const {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.values.begin(), b.values.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

SymEigen sym_eigen(const SymMatrix& a) { return jacobi_eigen(a, 0); }

EigenDecomposition sym_eigen(const BlockSymMatrix& a) {
  EigenDecomposition out;
  out.blocks.reserve(a.num_blocks());
  for (std::size_t b = 0; b < a.num_blocks(); ++b) {
    out.blocks.push_back(jacobi_eigen(a.block(b), b));
  }
  return out;
}

double lambda_max(const SymMatrix& a) {
  if (a.order() == 0) throw DimensionMismatch("lambda_max: empty matrix");
  if (a.order() == 1) return a(0, 0);
  return sym_eigen(a).values(0);
}

double lambda_max(const BlockSymMatrix& a) {
  if (a.total_order() == 0) throw DimensionMismatch("lambda_max: empty matrix");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < a.num_blocks(); ++b) {
    const SymMatrix& blk = a.block(b);
    if (blk.order() == 0) continue;
    const double value = blk.order() == 1 ? blk(0, 0) : jacobi_eigen(blk, b).values(0);
    best = std::max(best, value);
  }
  return best;
}

double lambda_min(const SymMatrix& a) { return -lambda_max(-a); }

double lambda_min(const BlockSymMatrix& a) { return -lambda_max(-a); }

SymMatrix reconstruct(const SymEigen& eig) {
  return SymMatrix::from_dense(eig.vectors * eig.values.asDiagonal() *
                               eig.vectors.transpose());
}

SymMatrix project_neg(const SymMatrix& a) {
  SymEigen eig = sym_eigen(a);
  eig.values = eig.values.cwiseMin(0.0);
  return reconstruct(eig);
}

BlockSymMatrix project_neg(const BlockSymMatrix& a) {
  EigenDecomposition eig = sym_eigen(a);
  std::vector<SymMatrix> blocks;
  blocks.reserve(eig.blocks.size());
  for (auto& b : eig.blocks) {
    b.values = b.values.cwiseMin(0.0);
    blocks.push_back(reconstruct(b));
  }
  return BlockSymMatrix(std::move(blocks));
}

}  // namespace nsdp
