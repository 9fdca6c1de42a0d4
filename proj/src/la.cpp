#include "eegvc/la.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

#ifdef EEGVC_HAVE_CBLAS
#include <cblas.h>
#endif

namespace eegvc::la {

#ifdef EEGVC_HAVE_CBLAS

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(lda), b, static_cast<int>(ldb), beta, c,
              static_cast<int>(ldc));
}

void gemv(bool trans, std::size_t m, std::size_t n, double alpha, const double* a,
          std::size_t lda, const double* x, double beta, double* y) {
  cblas_dgemv(CblasRowMajor, trans ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), alpha, a, static_cast<int>(lda), x, 1, beta, y, 1);
}

#else

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b,
          std::size_t ldb, double beta, double* c, std::size_t ldc) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? a[p * lda + i] : a[i * lda + p];
        const double bv = trans_b ? b[j * ldb + p] : b[p * ldb + j];
        acc += av * bv;
      }
      c[i * ldc + j] = alpha * acc + beta * c[i * ldc + j];
    }
  }
}

void gemv(bool trans, std::size_t m, std::size_t n, double alpha, const double* a,
          std::size_t lda, const double* x, double beta, double* y) {
  const std::size_t out = trans ? n : m;
  const std::size_t in = trans ? m : n;
  for (std::size_t i = 0; i < out; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j) {
      acc += (trans ? a[j * lda + i] : a[i * lda + j]) * x[j];
    }
    y[i] = alpha * acc + beta * y[i];
  }
}

#endif

void solve_dense(std::size_t n, std::vector<double>& a, std::vector<double>& b) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    }
    if (std::fabs(a[piv * n + col]) < 1e-300) {
      throw std::runtime_error("solve_dense: singular matrix");
    }
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
      std::swap(b[piv], b[col]);
    }
    const double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= a[i * n + j] * b[j];
    b[i] = acc / a[i * n + i];
  }
}

}  // namespace eegvc::la
