#include "pmflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pmflow {

SparseMatrix SparseMatrix::from_triplets(int n, const std::vector<Triplet>& entries,
                                         bool symmetric) {
  if (n <= 0) throw std::invalid_argument("SparseMatrix: n must be positive");
  for (const auto& t : entries) {
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw std::out_of_range("SparseMatrix: triplet index (" + std::to_string(t.row) +
                              "," + std::to_string(t.col) + ") outside " +
                              std::to_string(n) + "x" + std::to_string(n));
  }

  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (entries[a].row != entries[b].row) return entries[a].row < entries[b].row;
    return entries[a].col < entries[b].col;
  });

  SparseMatrix m;
  m.n_rows_ = m.n_cols_ = n;
  m.symmetric_ = symmetric;
  m.row_ptr_.assign(static_cast<std::size_t>(n) + 1, 0);
  m.col_idx_.reserve(entries.size());
  m.values_.reserve(entries.size());

  int cur_row = -1, cur_col = -1;
  for (std::size_t k : order) {
    const Triplet& t = entries[k];
    if (t.row == cur_row && t.col == cur_col) {
      m.values_.back() += t.value; // coalesce duplicates
    } else {
      m.col_idx_.push_back(t.col);
      m.values_.push_back(t.value);
      cur_row = t.row;
      cur_col = t.col;
      m.row_ptr_[static_cast<std::size_t>(t.row) + 1]++;
    }
  }
  for (int i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];

  if (symmetric) {
    // Pattern check: (i,j) present implies (j,i) present.
    for (int i = 0; i < n; ++i) {
      for (int k = m.row_ptr_[i]; k < m.row_ptr_[i + 1]; ++k) {
        const int j = m.col_idx_[k];
        if (j == i) continue;
        const auto begin = m.col_idx_.begin() + m.row_ptr_[j];
        const auto end = m.col_idx_.begin() + m.row_ptr_[j + 1];
        if (!std::binary_search(begin, end, i))
          throw std::invalid_argument("SparseMatrix: pattern not symmetric at (" +
                                      std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  return m;
}

double SparseMatrix::diagonal(int i) const {
  if (i < 0 || i >= n_rows_) throw std::out_of_range("SparseMatrix: diagonal index");
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_idx_[k] == i) return values_[k];
  return 0.0;
}

std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != A.cols())
    throw std::invalid_argument("spmv: dimension mismatch");
  std::vector<double> y(static_cast<std::size_t>(A.rows()), 0.0);
  const auto& rp = A.row_ptr();
  const auto& ci = A.col_idx();
  const auto& va = A.values();
  for (int i = 0; i < A.rows(); ++i) {
    double acc = 0.0;
    for (int k = rp[i]; k < rp[i + 1]; ++k) acc += va[k] * x[ci[k]];
    y[i] = acc;
  }
  return y;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

double norm_inf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

CgError::CgError(double residual_, int iterations_)
    : std::runtime_error("CG did not converge: residual " + std::to_string(residual_) +
                         " after " + std::to_string(iterations_) + " iterations"),
      residual(residual_),
      iterations(iterations_) {}

CgResult solve_cg(const SparseMatrix& A, const std::vector<double>& b,
                  const CgOptions& opts) {
  const int n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("solve_cg: matrix must be square");
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("solve_cg: rhs dimension mismatch");
  if (opts.x0 && static_cast<int>(opts.x0->size()) != n)
    throw std::invalid_argument("solve_cg: warm start dimension mismatch");

  const double bnorm = norm2(b);
  if (bnorm == 0.0) return {std::vector<double>(static_cast<std::size_t>(n), 0.0), 0};

  std::vector<double> inv_diag(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double d = A.diagonal(i);
    if (!(d > 0.0))
      throw std::invalid_argument("solve_cg: non-positive diagonal at row " +
                                  std::to_string(i));
    inv_diag[i] = 1.0 / d;
  }

  std::vector<double> x = opts.x0 ? *opts.x0
                                  : std::vector<double>(static_cast<std::size_t>(n), 0.0);
  std::vector<double> r = spmv(A, x);
  for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];

  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n + 100;
  double rnorm = norm2(r);
  if (rnorm / bnorm <= opts.tol) return {std::move(x), 0};

  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  std::vector<double> p = z;
  double rz = dot(r, z);

  for (int iter = 1; iter <= max_iter; ++iter) {
    const std::vector<double> Ap = spmv(A, p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) throw CgError(rnorm / bnorm, iter);
    const double alpha = rz / pAp;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    rnorm = norm2(r);
    if (rnorm / bnorm <= opts.tol) return {std::move(x), iter};
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw CgError(rnorm / bnorm, max_iter);
}

} // namespace pmflow
