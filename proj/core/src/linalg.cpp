#include "crumbs/linalg.hpp"

#include <cmath>
#include <string>

#include "crumbs/error.hpp"

namespace crumbs {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw InvalidInput(std::string(what) + ": expected length " +
                       std::to_string(expected) + ", got " +
                       std::to_string(got));
  }
}

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) {
    throw InvalidInput(std::string(what) + ": non-finite entry");
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

TriangularFactor TriangularFactor::scaled_identity(std::size_t dim,
                                                   double scale) {
  if (dim == 0) throw InvalidInput("TriangularFactor: dimension must be > 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidInput("TriangularFactor: scale must be positive and finite");
  }
  Vector e(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = scale;
  return TriangularFactor(dim, std::move(e));
}

TriangularFactor TriangularFactor::from_rows(const std::vector<Vector>& rows) {
  const std::size_t p = rows.size();
  if (p == 0) throw InvalidInput("TriangularFactor: dimension must be > 0");
  Vector e(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    require_dim(p, rows[i].size(), "TriangularFactor row");
    require_finite(rows[i], "TriangularFactor");
    for (std::size_t j = 0; j < p; ++j) {
      if (j < i && rows[i][j] != 0.0) {
        throw InvalidInput("TriangularFactor: entry below the diagonal");
      }
      e[i * p + j] = rows[i][j];
    }
    if (!(rows[i][i] > 0.0)) {
      throw InvalidInput("TriangularFactor: diagonal must be positive");
    }
  }
  return TriangularFactor(p, std::move(e));
}

TriangularFactor TriangularFactor::scaled(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidInput("TriangularFactor::scaled: factor must be positive");
  }
  Vector e = entries_;
  for (double& x : e) x *= c;
  return TriangularFactor(dim_, std::move(e));
}

Vector TriangularFactor::multiply(std::span<const double> v) const {
  require_dim(dim_, v.size(), "TriangularFactor::multiply");
  Vector out(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &entries_[i * dim_];
    double s = 0.0;
    for (std::size_t j = i; j < dim_; ++j) s += row[j] * v[j];
    out[i] = s;
  }
  return out;
}

Vector TriangularFactor::multiply_transpose(std::span<const double> v) const {
  require_dim(dim_, v.size(), "TriangularFactor::multiply_transpose");
  Vector out(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double* row = &entries_[i * dim_];
    const double vi = v[i];
    for (std::size_t j = i; j < dim_; ++j) out[j] += row[j] * vi;
  }
  return out;
}

Vector TriangularFactor::gram_multiply(std::span<const double> v) const {
  return multiply_transpose(multiply(v));
}

std::vector<Vector> TriangularFactor::gram() const {
  std::vector<Vector> g(dim_, Vector(dim_, 0.0));
  for (std::size_t i = 0; i < dim_; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      double s = 0.0;
      const std::size_t kmax = std::min(i, j);
      for (std::size_t k = 0; k <= kmax; ++k) {
        s += entries_[k * dim_ + i] * entries_[k * dim_ + j];
      }
      g[i][j] = s;
    }
  }
  return g;
}

void TriangularFactor::rank_one_update(std::span<double> v) {
  // Row j of R is rotated against the running remainder of v so that the
  // j-th entry of v is annihilated; r_jj stays positive because hypot > 0.
  for (std::size_t j = 0; j < dim_; ++j) {
    const double rjj = at(j, j);
    const double vj = v[j];
    if (vj == 0.0) continue;
    const double r = std::hypot(rjj, vj);
    const double c = rjj / r;
    const double s = vj / r;
    at(j, j) = r;
    double* row = &entries_[j * dim_];
    for (std::size_t k = j + 1; k < dim_; ++k) {
      const double rk = row[k];
      const double vk = v[k];
      row[k] = c * rk + s * vk;
      v[k] = c * vk - s * rk;
    }
  }
}

TriangularFactor chud(const TriangularFactor& r, std::span<const double> v) {
  require_dim(r.dim(), v.size(), "chud");
  require_finite(v, "chud");
  TriangularFactor out = r;
  Vector work(v.begin(), v.end());
  out.rank_one_update(work);
  return out;
}

Vector solve_upper(const TriangularFactor& r, std::span<const double> b) {
  const std::size_t p = r.dim();
  require_dim(p, b.size(), "solve_upper");
  require_finite(b, "solve_upper");
  Vector x(b.begin(), b.end());
  const auto d = r.data();
  for (std::size_t ii = p; ii-- > 0;) {
    const double* row = &d[ii * p];
    double s = x[ii];
    for (std::size_t j = ii + 1; j < p; ++j) s -= row[j] * x[j];
    x[ii] = s / row[ii];
  }
  return x;
}

Vector solve_upper_transpose(const TriangularFactor& r,
                             std::span<const double> b) {
  const std::size_t p = r.dim();
  require_dim(p, b.size(), "solve_upper_transpose");
  require_finite(b, "solve_upper_transpose");
  // Column-oriented forward substitution: R^T is lower triangular and its
  // column i is row i of R.
  Vector x(b.begin(), b.end());
  const auto d = r.data();
  for (std::size_t i = 0; i < p; ++i) {
    const double* row = &d[i * p];
    x[i] /= row[i];
    const double xi = x[i];
    for (std::size_t j = i + 1; j < p; ++j) x[j] -= row[j] * xi;
  }
  return x;
}

std::optional<TriangularFactor> cholesky_upper(const std::vector<Vector>& a) {
  const std::size_t p = a.size();
  if (p == 0) return std::nullopt;
  std::vector<Vector> r(p, Vector(p, 0.0));
  for (std::size_t i = 0; i < p; ++i) {
    if (a[i].size() != p) throw InvalidInput("cholesky_upper: not square");
    double d = a[i][i];
    for (std::size_t k = 0; k < i; ++k) d -= r[k][i] * r[k][i];
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    r[i][i] = std::sqrt(d);
    for (std::size_t j = i + 1; j < p; ++j) {
      double s = a[i][j];
      for (std::size_t k = 0; k < i; ++k) s -= r[k][i] * r[k][j];
      r[i][j] = s / r[i][i];
    }
  }
  return TriangularFactor::from_rows(r);
}

OrthonormalColumns::OrthonormalColumns(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidInput("OrthonormalColumns: dimension must be > 0");
}

Vector project_orthogonal(const OrthonormalColumns& j,
                          std::span<const double> v) {
  require_dim(j.dim(), v.size(), "project_orthogonal");
  Vector out(v.begin(), v.end());
  for (std::size_t c = 0; c < j.ncols(); ++c) {
    const auto col = j.column(c);
    const double coef = dot(col, v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coef * col[i];
  }
  return out;
}

void append_orthonormal_column_inplace(OrthonormalColumns& j,
                                       std::span<const double> g) {
  require_dim(j.dim(), g.size(), "append_orthonormal_column");
  require_finite(g, "append_orthonormal_column");
  if (j.full()) {
    throw InvalidInput("append_orthonormal_column: already p - 1 columns");
  }
  const double n = norm(g);
  if (n < 1e-12) {
    throw DegenerateDirection("append_orthonormal_column: |g| < 1e-12");
  }
  Vector col(g.begin(), g.end());
  for (double& x : col) x /= n;
  j.columns_.push_back(std::move(col));
}

OrthonormalColumns append_orthonormal_column(const OrthonormalColumns& j,
                                             std::span<const double> g) {
  OrthonormalColumns out = j;
  append_orthonormal_column_inplace(out, g);
  return out;
}

}  // namespace crumbs
