#ifndef FASTPCA_LINALG_HPP
#define FASTPCA_LINALG_HPP

#include <Eigen/Dense>
#include <string>

#include "fastpca/rng.hpp"

namespace fastpca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// d x n matrix of i.i.d. standard normals drawn column-major.
Matrix gaussian_matrix(int rows, int cols, Rng& rng);

// Thin-QR orthonormal factor, sign-fixed so the R diagonal is positive.
// Applied to a gaussian matrix this gives a Haar-distributed frame.
Matrix orthonormalize(const Matrix& a);
Matrix random_orthonormal(int rows, int cols, Rng& rng);

void normalize_columns(Matrix& a);

// Flips each column so its largest-magnitude entry is positive. Used only
// when comparing estimates against ground truth (the iterations themselves
// never impose a sign convention).
void fix_column_signs(Matrix& a);

// Shortest-round-trip decimal rendering (17 significant digits).
std::string format_g17(double v);

}  // namespace fastpca

#endif
