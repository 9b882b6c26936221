#include "core/determinant.hpp"

#include <cmath>
#include <utility>

#include "core/errors.hpp"

namespace patchflow {

Mat complementary_submatrix(const Mat& A, int i, int j) {
  const int n = static_cast<int>(A.rows());
  require(n >= 2 && A.cols() == n, "complementary submatrix needs a square matrix with n >= 2");
  require(i >= 0 && i < n && j >= 0 && j < n, "submatrix index out of range");
  Mat S(n - 1, n - 1);
  for (int r = 0, rr = 0; r < n; ++r) {
    if (r == i) continue;
    for (int c = 0, cc = 0; c < n; ++c) {
      if (c == j) continue;
      S(rr, cc++) = A(r, c);
    }
    ++rr;
  }
  return S;
}

double det_small(const double* a, int n) {
  switch (n) {
    case 0: return 1.0;
    case 1: return a[0];
    case 2: return a[0] * a[3] - a[1] * a[2];
    case 3:
      return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
             a[2] * (a[3] * a[7] - a[4] * a[6]);
    default: break;
  }
  double m[256];
  for (int k = 0; k < n * n; ++k) m[k] = a[k];
  double d = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r * n + c]) > std::abs(m[piv * n + c])) piv = r;
    if (m[piv * n + c] == 0.0) return 0.0;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(m[c * n + k], m[piv * n + k]);
      d = -d;
    }
    d *= m[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      const double f = m[r * n + c] / m[c * n + c];
      for (int k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
    }
  }
  return d;
}

double det(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && n <= 16, "det needs a square matrix of size <= 16");
  double a[256];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = A(i, j);
  return det_small(a, n);
}

double det_derivative(const double* dx, const double* dy, int n) {
  require(n >= 2 && n <= 16, "det_derivative needs 2 <= n <= 16");
  double sub[225];
  double total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (dy[i * n + j] == 0.0) continue;
      int k = 0;
      for (int r = 0; r < n; ++r) {
        if (r == i) continue;
        for (int c = 0; c < n; ++c)
          if (c != j) sub[k++] = dx[r * n + c];
      }
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      total += sign * dy[i * n + j] * det_small(sub, n - 1);
    }
  return total;
}

double det_derivative(const Mat& DX, const Mat& DY) {
  const int n = static_cast<int>(DX.rows());
  if (DX.cols() != n || DY.rows() != n || DY.cols() != n)
    fail(ErrorCode::dimension_mismatch, "det_derivative needs two n x n matrices");
  double a[256], b[256];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      a[i * n + j] = DX(i, j);
      b[i * n + j] = DY(i, j);
    }
  return det_derivative(a, b, n);
}

double det_sum_expansion(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n && B.rows() == n && B.cols() == n && n <= 16, "det_sum_expansion needs n x n matrices");
  double total = 0.0;
  Mat M(n, n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    for (int r = 0; r < n; ++r) M.row(r) = ((mask >> r) & 1u) ? B.row(r) : A.row(r);
    total += det(M);
  }
  return total;
}

}  // namespace patchflow
