#pragma once

#include <cblas.h>

namespace sigma {

// Row-major GEMM/GEMV wrappers, overloaded on the scalar type so templated
// model code can pick the right BLAS routine. Leading dimensions are the row
// strides of the untransposed matrices.
inline void blas_gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
                      int lda, const float* b, int ldb, float beta, float* c, int ldc) {
    cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

inline void blas_gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
                      int lda, const double* b, int ldb, double beta, double* c, int ldc) {
    cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
                m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}

// y[n] = x[k] @ w[k, n]. A single-row product whose rounding depends only on
// (k, n) and the operands, never on neighbouring rows of a larger block.
inline void blas_row_times_matrix(int k, int n, const float* x, const float* w, float* y) {
    cblas_sgemv(CblasRowMajor, CblasTrans, k, n, 1.0f, w, n, x, 1, 0.0f, y, 1);
}

inline void blas_row_times_matrix(int k, int n, const double* x, const double* w, double* y) {
    cblas_dgemv(CblasRowMajor, CblasTrans, k, n, 1.0, w, n, x, 1, 0.0, y, 1);
}

// Y[m, n] = X[m, k] @ W[k, n].
template <typename Real>
void matmul(int m, int n, int k, const Real* x, const Real* w, Real* y) {
    blas_gemm(false, false, m, n, k, Real(1), x, k, w, n, Real(0), y, n);
}

// Y[m, k] = dY[m, n] @ W[k, n]^T.
template <typename Real>
void matmul_nt(int m, int n, int k, const Real* dy, const Real* w, Real* dx) {
    blas_gemm(false, true, m, k, n, Real(1), dy, n, w, n, Real(0), dx, k);
}

// dW[k, n] += X[m, k]^T @ dY[m, n].
template <typename Real>
void matmul_tn_acc(int m, int n, int k, const Real* x, const Real* dy, Real* dw) {
    blas_gemm(true, false, k, n, m, Real(1), x, k, dy, n, Real(1), dw, n);
}

}  // namespace sigma
