#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <pmflow/linalg.hpp>

using namespace pmflow;

namespace {

// Dense reference for small matrices.
std::vector<double> dense_mv(const std::vector<std::vector<double>>& a,
                             const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

SparseMatrix tridiag(int n, double diag, double off) {
  std::vector<Triplet> entries;
  for (int i = 0; i < n; ++i) {
    entries.push_back({i, i, diag});
    if (i + 1 < n) {
      entries.push_back({i, i + 1, off});
      entries.push_back({i + 1, i, off});
    }
  }
  return SparseMatrix::from_triplets(n, entries, true);
}

} // namespace

TEST_SUITE("linalg") {

TEST_CASE("from_triplets accumulates duplicates and spmv matches dense") {
  std::vector<Triplet> entries = {
      {0, 0, 2.0}, {0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 4.0}, {2, 2, 5.0},
  };
  const SparseMatrix a = SparseMatrix::from_triplets(3, entries, true);
  const std::vector<std::vector<double>> dense = {
      {3.0, -1.0, 0.0}, {-1.0, 4.0, 0.0}, {0.0, 0.0, 5.0}};
  const std::vector<double> x = {1.5, -2.0, 0.25};
  const std::vector<double> y = spmv(a, x);
  const std::vector<double> ref = dense_mv(dense, x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-15));
}

TEST_CASE("from_triplets rejects bad input") {
  CHECK_THROWS_AS(SparseMatrix::from_triplets(0, {}, false), std::invalid_argument);
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, {{0, 2, 1.0}}, false),
                  std::out_of_range);
  // Asymmetric pattern flagged as symmetric.
  std::vector<Triplet> bad = {{0, 0, 1.0}, {1, 1, 1.0}, {0, 1, -1.0}};
  CHECK_THROWS_AS(SparseMatrix::from_triplets(2, bad, true), std::invalid_argument);
}

TEST_CASE("vector kernels") {
  const std::vector<double> a = {3.0, -4.0, 12.0};
  const std::vector<double> b = {1.0, 2.0, -2.0};
  CHECK(dot(a, b) == doctest::Approx(3.0 - 8.0 - 24.0));
  CHECK(norm2(a) == doctest::Approx(13.0));
  CHECK(norm_inf(a) == doctest::Approx(12.0));
  CHECK_THROWS_AS(dot(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("cg solves an SPD tridiagonal system to tight tolerance") {
  const int n = 64;
  const SparseMatrix a = tridiag(n, 2.5, -1.0);
  std::mt19937 gen(42);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> x_true(n);
  for (double& v : x_true) v = dist(gen);
  const std::vector<double> rhs = spmv(a, x_true);

  const CgResult res = solve_cg(a, rhs, {});
  REQUIRE(res.x.size() == x_true.size());
  for (int i = 0; i < n; ++i) CHECK(res.x[i] == doctest::Approx(x_true[i]).epsilon(1e-8));

  // Residual meets the relative tolerance.
  std::vector<double> r = spmv(a, res.x);
  for (int i = 0; i < n; ++i) r[i] -= rhs[i];
  CHECK(norm2(r) <= 1e-10 * norm2(rhs) * 1.01);
}

TEST_CASE("cg warm start converges in zero iterations at the solution") {
  const SparseMatrix a = tridiag(8, 3.0, -1.0);
  std::vector<double> x_true(8, 1.0);
  const std::vector<double> rhs = spmv(a, x_true);
  CgOptions opts;
  opts.x0 = &x_true;
  const CgResult res = solve_cg(a, rhs, opts);
  CHECK(res.iterations == 0);
}

TEST_CASE("cg reports divergence through CgError") {
  // Indefinite matrix: CG breaks down or stalls within the iteration cap.
  std::vector<Triplet> entries = {{0, 0, 1.0}, {1, 1, -1.0}};
  const SparseMatrix a = SparseMatrix::from_triplets(2, entries, true);
  CgOptions opts;
  opts.max_iter = 4;
  CHECK_THROWS_AS(solve_cg(a, {1.0, 1.0}, opts), CgError);
}

TEST_CASE("cg input validation") {
  const SparseMatrix a = tridiag(4, 2.0, -1.0);
  CHECK_THROWS_AS(solve_cg(a, std::vector<double>(3, 1.0), {}), std::invalid_argument);
  CgOptions opts;
  const std::vector<double> x0(5, 0.0);
  opts.x0 = &x0;
  CHECK_THROWS_AS(solve_cg(a, std::vector<double>(4, 1.0), opts), std::invalid_argument);
}

} // TEST_SUITE
