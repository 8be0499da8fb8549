#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace nsdp {

/// Raised when the Jacobi sweep cap is reached before the off-diagonal mass
/// drops below threshold. Carries the index of the offending block.
class EigenNonConvergence : public std::runtime_error {
 public:
  EigenNonConvergence(std::size_t block, int sweeps);
  std::size_t block() const { return block_; }

 private:
  std::size_t block_;
};

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/**
 * Dense real symmetric matrix stored as a packed upper triangle.
 *
 * Element (i, j) and (j, i) share storage, so every value of this type is
 * exactly symmetric.
 */
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t order);
  /// Row-major nested list; throws std::invalid_argument when not symmetric.
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static SymMatrix identity(std::size_t order);
  static SymMatrix diagonal(std::span<const double> diag);
  static SymMatrix diagonal(std::initializer_list<double> diag);
  /// Takes the symmetric part (A + A^T) / 2 of a square dense matrix.
  static SymMatrix from_dense(const Eigen::MatrixXd& a);

  std::size_t order() const { return order_; }

  double operator()(std::size_t i, std::size_t j) const {
    return packed_[index(i, j)];
  }
  double& at(std::size_t i, std::size_t j) { return packed_[index(i, j)]; }

  Eigen::MatrixXd dense() const;

  double trace() const;
  double frobenius_norm() const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator-=(const SymMatrix& other);
  SymMatrix& operator*=(double scale);
  /// this += scale * other
  SymMatrix& axpy(double scale, const SymMatrix& other);

  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  friend SymMatrix operator*(SymMatrix a, double s) { return a *= s; }
  friend SymMatrix operator-(SymMatrix a) { return a *= -1.0; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    // column-major packed upper: column j holds rows 0..j
    return j * (j + 1) / 2 + i;
  }

  std::size_t order_ = 0;
  std::vector<double> packed_;
};

/// Frobenius inner product tr(A^T B).
double inner(const SymMatrix& a, const SymMatrix& b);

/**
 * Block-diagonal symmetric matrix. The block layout (count and orders) is
 * fixed at construction; arithmetic and inner products require conformable
 * layouts and throw DimensionMismatch otherwise.
 */
class BlockSymMatrix {
 public:
  BlockSymMatrix() = default;
  explicit BlockSymMatrix(std::vector<SymMatrix> blocks);

  static BlockSymMatrix zeros(std::span<const std::size_t> dims);
  static BlockSymMatrix identity(std::span<const std::size_t> dims);

  std::size_t num_blocks() const { return blocks_.size(); }
  const SymMatrix& block(std::size_t b) const { return blocks_[b]; }
  SymMatrix& block(std::size_t b) { return blocks_[b]; }
  const std::vector<SymMatrix>& blocks() const { return blocks_; }

  std::vector<std::size_t> dims() const;
  /// Sum of block orders.
  std::size_t total_order() const;
  bool conformable(const BlockSymMatrix& other) const;

  double trace() const;
  double frobenius_norm() const;

  BlockSymMatrix& operator+=(const BlockSymMatrix& other);
  BlockSymMatrix& operator-=(const BlockSymMatrix& other);
  BlockSymMatrix& operator*=(double scale);
  BlockSymMatrix& axpy(double scale, const BlockSymMatrix& other);
  /// Adds scale * I to every block.
  BlockSymMatrix& add_identity(double scale);

  friend BlockSymMatrix operator+(BlockSymMatrix a, const BlockSymMatrix& b) {
    return a += b;
  }
  friend BlockSymMatrix operator-(BlockSymMatrix a, const BlockSymMatrix& b) {
    return a -= b;
  }
  friend BlockSymMatrix operator*(double s, BlockSymMatrix a) { return a *= s; }
  friend BlockSymMatrix operator*(BlockSymMatrix a, double s) { return a *= s; }
  friend BlockSymMatrix operator-(BlockSymMatrix a) { return a *= -1.0; }

 private:
  void require_conformable(const BlockSymMatrix& other) const;

  std::vector<SymMatrix> blocks_;
};

double inner(const BlockSymMatrix& a, const BlockSymMatrix& b);

/// Spectral decomposition of one symmetric block: A = P diag(values) P^T,
/// values sorted nonincreasing, columns of P the matching eigenvectors.
struct SymEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

struct EigenDecomposition {
  std::vector<SymEigen> blocks;

  /// Multiset union of block eigenvalues, sorted nonincreasing.
  std::vector<double> eigenvalues() const;
};

SymEigen sym_eigen(const SymMatrix& a);
EigenDecomposition sym_eigen(const BlockSymMatrix& a);

double lambda_max(const SymMatrix& a);
double lambda_max(const BlockSymMatrix& a);
double lambda_min(const SymMatrix& a);
double lambda_min(const BlockSymMatrix& a);

/// Orthogonal projection onto the negative semidefinite cone.
SymMatrix project_neg(const SymMatrix& a);
BlockSymMatrix project_neg(const BlockSymMatrix& a);

/// Rebuilds P diag(values) P^T from a (possibly modified) decomposition.
SymMatrix reconstruct(const SymEigen& eig);

}  // namespace nsdp
