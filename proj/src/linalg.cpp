#include "fastpca/linalg.hpp"

#include <cstdio>

#include "fastpca/errors.hpp"

namespace fastpca {

Matrix gaussian_matrix(int rows, int cols, Rng& rng) {
  Matrix g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = rng.gaussian();
  return g;
}

Matrix orthonormalize(const Matrix& a) {
  if (a.rows() < a.cols())
    throw ValidationError("orthonormalize: more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topRows(a.cols());
  for (int j = 0; j < a.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Matrix random_orthonormal(int rows, int cols, Rng& rng) {
  return orthonormalize(gaussian_matrix(rows, cols, rng));
}

void normalize_columns(Matrix& a) {
  for (int j = 0; j < a.cols(); ++j) {
    const double n = a.col(j).norm();
    if (n == 0.0)
      throw ValidationError("normalize_columns: column " + std::to_string(j) +
                            " is zero");
    a.col(j) /= n;
  }
}

void fix_column_signs(Matrix& a) {
  for (int j = 0; j < a.cols(); ++j) {
    int imax = 0;
    a.col(j).cwiseAbs().maxCoeff(&imax);
    if (a(imax, j) < 0.0) a.col(j) = -a.col(j);
  }
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace fastpca
