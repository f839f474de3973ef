#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pmflow {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

// Compressed sparse row matrix. Built once per assembly from triplets;
// duplicate entries are summed.
class SparseMatrix {
public:
  SparseMatrix() = default;

  // Square matrix from triplets. If `symmetric` is set the sparsity pattern
  // is verified to be structurally symmetric.
  static SparseMatrix from_triplets(int n, const std::vector<Triplet>& entries,
                                    bool symmetric = false);

  int rows() const { return n_rows_; }
  int cols() const { return n_cols_; }
  bool symmetric() const { return symmetric_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }

  double diagonal(int i) const;

private:
  int n_rows_ = 0;
  int n_cols_ = 0;
  bool symmetric_ = false;
  std::vector<int> row_ptr_;
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

// y = A x. Throws on dimension mismatch.
std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);
double norm_inf(const std::vector<double>& v);

struct CgResult {
  std::vector<double> x;
  int iterations = 0;
};

// Raised when CG fails to reach the requested tolerance.
struct CgError : std::runtime_error {
  CgError(double residual_, int iterations_);
  double residual;
  int iterations;
};

struct CgOptions {
  double tol = 1e-10; // relative: ||b - A x|| / ||b||
  int max_iter = 0;   // 0: 10 n + 100
  const std::vector<double>* x0 = nullptr;
};

// Jacobi-preconditioned conjugate gradient for SPD systems.
CgResult solve_cg(const SparseMatrix& A, const std::vector<double>& b,
                  const CgOptions& opts = {});

} // namespace pmflow
