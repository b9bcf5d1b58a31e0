#pragma once

// Small dense kernels for the crumb samplers. Everything here is O(p^2) or
// better per call and works on std::vector<double> / std::span<const double>.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace crumbs {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

/// Upper-triangular Cholesky factor R with positive diagonal, so that R^T R
/// is symmetric positive definite. Storage is row-major p x p; the strictly
/// lower triangle is always zero.
class TriangularFactor {
 public:
  /// sigma * I.
  static TriangularFactor scaled_identity(std::size_t dim, double scale);

  /// Validates triangularity, positive diagonal and finiteness.
  static TriangularFactor from_rows(const std::vector<Vector>& rows);

  std::size_t dim() const noexcept { return dim_; }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * dim_ + j];
  }
  std::span<const double> data() const noexcept { return entries_; }

  /// c * R for c > 0.
  TriangularFactor scaled(double c) const;

  /// R v.
  Vector multiply(std::span<const double> v) const;
  /// R^T v.
  Vector multiply_transpose(std::span<const double> v) const;
  /// R^T R v, the precision applied to v.
  Vector gram_multiply(std::span<const double> v) const;

  /// Dense R^T R, for diagnostics and tests.
  std::vector<Vector> gram() const;

  /// In-place Givens update to the factor of R^T R + v v^T. `v` is consumed.
  void rank_one_update(std::span<double> v);

 private:
  TriangularFactor(std::size_t dim, Vector entries)
      : dim_(dim), entries_(std::move(entries)) {}

  double& at(std::size_t i, std::size_t j) { return entries_[i * dim_ + j]; }

  std::size_t dim_ = 0;
  Vector entries_;
};

/// Cholesky factor of R^T R + v v^T (LINPACK DCHUD-style Givens sweep).
TriangularFactor chud(const TriangularFactor& r, std::span<const double> v);

/// Solves R x = b by back substitution.
Vector solve_upper(const TriangularFactor& r, std::span<const double> b);

/// Solves R^T x = b by forward substitution.
Vector solve_upper_transpose(const TriangularFactor& r,
                             std::span<const double> b);

/// Upper factor R with R^T R = a for a symmetric matrix `a`; nullopt when
/// `a` is not numerically positive definite. O(p^3), for setup paths only.
std::optional<TriangularFactor> cholesky_upper(const std::vector<Vector>& a);

/// A p x k matrix (k <= p - 1) of orthonormal columns, stored column by
/// column.
class OrthonormalColumns {
 public:
  explicit OrthonormalColumns(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t ncols() const noexcept { return columns_.size(); }
  bool full() const noexcept { return ncols() + 1 >= dim_; }
  std::span<const double> column(std::size_t j) const { return columns_[j]; }

 private:
  friend OrthonormalColumns append_orthonormal_column(
      const OrthonormalColumns&, std::span<const double>);
  friend void append_orthonormal_column_inplace(OrthonormalColumns&,
                                                std::span<const double>);

  std::size_t dim_;
  std::vector<Vector> columns_;
};

/// v - J J^T v (or v itself when J has no columns).
Vector project_orthogonal(const OrthonormalColumns& j,
                          std::span<const double> v);

/// [J, g/|g|]. `g` must already be orthogonal to the columns of J.
/// Throws DegenerateDirection when |g| < 1e-12 and InvalidInput when J is
/// already at p - 1 columns.
OrthonormalColumns append_orthonormal_column(const OrthonormalColumns& j,
                                             std::span<const double> g);
void append_orthonormal_column_inplace(OrthonormalColumns& j,
                                       std::span<const double> g);

}  // namespace crumbs
