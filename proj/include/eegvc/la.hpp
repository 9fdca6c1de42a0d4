#pragma once

#include <cstddef>
#include <vector>

namespace eegvc::la {

// C (m x n) = alpha * op(A) * op(B) + beta * C, all row-major.
// op(A) is m x k, op(B) is k x n; lda/ldb/ldc are the row strides of the
// stored (untransposed) arrays.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc);

// y (m) = alpha * op(A) * x + beta * y, A row-major m x n when not transposed.
void gemv(bool trans, std::size_t m, std::size_t n, double alpha, const double* a,
          std::size_t lda, const double* x, double beta, double* y);

// Solve A x = b in place for a small dense system (partial-pivot Gaussian
// elimination). A is n x n row-major and is destroyed; b becomes x.
void solve_dense(std::size_t n, std::vector<double>& a, std::vector<double>& b);

}  // namespace eegvc::la
