#pragma once

#include "core/kernels.hpp"

namespace patchflow {

/// A with row i and column j erased.
Mat complementary_submatrix(const Mat& A, int i, int j);

/// det(A) by partial-pivot LU; exact 1x1, 2x2 and 3x3 formulas.
double det(const Mat& A);
double det_small(const double* a, int n);  // row-major n*n

/// d/de det(DX + e DY) at e = 0 as the signed cofactor sum
/// sum_{i,j} (-1)^{i+j} DY(i,j) det(DX^c_{i,j}).
double det_derivative(const Mat& DX, const Mat& DY);
double det_derivative(const double* dx, const double* dy, int n);

/// det(A + B) as the sum over row subsets S of det of the matrix taking rows
/// S from B and the rest from A.
double det_sum_expansion(const Mat& A, const Mat& B);

}  // namespace patchflow
