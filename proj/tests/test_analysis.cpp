#include <doctest.h>

#include <cmath>

#include "fastpca/analysis.hpp"
#include "fastpca/consensus_pca.hpp"
#include "fastpca/errors.hpp"
#include "fastpca/network.hpp"

using namespace fastpca;

namespace {

Spectrum diag_spectrum(const std::vector<double>& lam) {
  Vector v = Eigen::Map<const Vector>(lam.data(), lam.size());
  return eig_sym(Matrix(v.asDiagonal()));
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("angle_error: alignment, sign invariance, orthogonality") {
  const Spectrum truth = diag_spectrum({3, 2, 1});
  const Matrix qk = truth.eigenvectors.leftCols(2);

  CHECK(angle_error({qk, qk}, truth, 2) == doctest::Approx(0.0));
  CHECK(angle_error({Matrix(-qk)}, truth, 2) == doctest::Approx(0.0));

  // Swap the two columns: each estimate is orthogonal to its target.
  Matrix swapped(3, 2);
  swapped.col(0) = qk.col(1);
  swapped.col(1) = qk.col(0);
  CHECK(angle_error({swapped}, truth, 2) == doctest::Approx(1.0));
}

TEST_CASE("angle_error: invariant under per-column scaling") {
  const Spectrum truth = diag_spectrum({2, 1.2, 0.6, 0.3});
  Rng rng(9);
  for (int rep = 0; rep < 10; ++rep) {
    const Matrix x = gaussian_matrix(4, 2, rng);
    Matrix scaled = x;
    scaled.col(0) *= rng.uniform(0.01, 50.0);
    scaled.col(1) *= -rng.uniform(0.01, 50.0);
    CHECK(angle_error({x}, truth, 2) ==
          doctest::Approx(angle_error({scaled}, truth, 2)).epsilon(1e-12));
  }
}

TEST_CASE("angle_error: zero column rejected") {
  const Spectrum truth = diag_spectrum({1, 0.5});
  CHECK_THROWS_AS(angle_error({Matrix::Zero(2, 1)}, truth, 1),
                  ValidationError);
}

TEST_CASE("consensus_error: identical nodes and a hand case") {
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  CHECK(consensus_error(std::vector<Matrix>{e1, e1}).sum() == 0.0);

  // x1 = e1, x2 = -e1: mean 0, each deviation has norm 1, sum is 2.
  const Vector per_k = consensus_error(std::vector<Matrix>{e1, Matrix(-e1)});
  CHECK(per_k.size() == 1);
  CHECK(per_k(0) == doctest::Approx(2.0));
}

TEST_CASE("eigen_coefficients: basis expansion sums to one") {
  const Spectrum truth = diag_spectrum({4, 3, 2, 1});
  const Vector z = eigen_coefficients(truth.eigenvectors.col(2), truth);
  CHECK(std::abs(z(2)) == doctest::Approx(1.0));

  Vector mix = (truth.eigenvectors.col(0) + truth.eigenvectors.col(1)) /
               std::sqrt(2.0);
  const Vector zm = eigen_coefficients(mix, truth);
  CHECK(std::abs(zm(0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(zm(1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(std::abs(zm(2)) < 1e-14);

  Rng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    Vector x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.gaussian();
    CHECK(eigen_coefficients(x, truth).squaredNorm() ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(eigen_coefficients(Vector::Zero(4), truth), ValidationError);
}

TEST_CASE("coefficient_decay_check: diag(3,2,1), k=1, alpha=0.1") {
  const Spectrum truth = diag_spectrum({3, 2, 1});
  const Matrix c = truth.eigenvectors * truth.eigenvalues.asDiagonal() *
                   truth.eigenvectors.transpose();
  const double alpha = 0.1;

  Vector x(3);
  x << 0.2, 0.5, 1.0;
  x /= x.norm();
  std::vector<Vector> zs;
  for (int t = 0; t < 150; ++t) {
    zs.push_back(eigen_coefficients(x, truth));
    x = oracle_krasulina_step(c, Matrix(3, 0), x, alpha);
  }
  const DecayReport report = coefficient_decay_check(zs, 1, alpha, truth);
  CHECK(report.rho_bound == doctest::Approx(std::pow(1.2 / 1.3, 2)));
  CHECK(report.upper_ok);
  CHECK(report.lower_steps == 0);  // k = 1: lower sum is empty, vacuous
  CHECK(report.lower_ok);
  CHECK(report.upper_steps > 50);
  CHECK(report.worst_upper_ratio <= report.rho_bound * 1.05);
}

TEST_CASE("coefficient_decay_check: rejects bad alpha and zero z_kk") {
  const Spectrum truth = diag_spectrum({2, 1});
  std::vector<Vector> zs(5, Vector::Ones(2) / std::sqrt(2.0));
  CHECK_THROWS_AS(coefficient_decay_check(zs, 1, 0.5, truth),
                  ValidationError);  // alpha >= 1/lambda_1

  std::vector<Vector> dead(5, Vector::Zero(2));
  dead[0](1) = 1.0;
  CHECK_THROWS_AS(coefficient_decay_check(dead, 1, 0.1, truth),
                  ValidationError);  // z_{k,k}^(0) = 0
}

TEST_CASE("coefficient_decay_check: 20 random admissible draws pass") {
  Rng rng(77);
  int checked = 0;
  for (int draw = 0; draw < 20; ++draw) {
    const int d = 5;
    std::vector<double> lam(d);
    double v = 1.0;
    for (int l = 0; l < d; ++l) {
      lam[l] = v;
      v *= rng.uniform(0.4, 0.9);
    }
    const Spectrum truth = diag_spectrum(lam);
    const Matrix c = truth.eigenvectors * truth.eigenvalues.asDiagonal() *
                     truth.eigenvectors.transpose();
    const int k = 1 + static_cast<int>(rng.next_below(3));
    const double alpha = rng.uniform(0.05, 0.95) / lam[0];

    Vector x(d);
    do {
      for (int i = 0; i < d; ++i) x(i) = rng.gaussian();
    } while (std::abs(x(k - 1)) < 1e-3 * x.norm());
    x /= x.norm();

    std::vector<Vector> zs;
    const Matrix prefix = truth.eigenvectors.leftCols(k - 1);
    for (int t = 0; t < 120; ++t) {
      zs.push_back(eigen_coefficients(x, truth));
      x = oracle_krasulina_step(c, prefix, x, alpha);
    }
    const DecayReport report = coefficient_decay_check(zs, k, alpha, truth);
    CHECK(report.lower_ok);
    CHECK(report.upper_ok);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("step_size_bound: plug-in arithmetic and the K=1 denominator") {
  // (1 - 0.5)/42 * (1/9)^2 = 0.5 / 3402.
  const double bound = step_size_bound({1.0, 0.5, 0.25}, 1, 0.0);
  CHECK(bound == doctest::Approx(0.5 / 3402.0).epsilon(1e-15));
  CHECK(bound == doctest::Approx(1.4697236919459142e-4).epsilon(1e-12));

  // The general formula at K=1 has (1+5)(1+6) = 42 baked in.
  const double general =
      (1.0 - 0.5) / ((1 + 5) * (1 + 6)) * std::pow((1.0 - 0.0) / 9.0, 2);
  CHECK(bound == doctest::Approx(general).epsilon(1e-15));
}

TEST_CASE("step_size_bound: limits and rejection") {
  CHECK(step_size_bound({1.0, 0.5}, 1, 0.999999) <
        step_size_bound({1.0, 0.5}, 1, 0.5));
  CHECK_THROWS_AS(step_size_bound({1.0, 1.0, 0.5}, 2, 0.0), ValidationError);
  CHECK_THROWS_AS(step_size_bound({1.0, 0.5}, 1, 1.0), ValidationError);
  CHECK_THROWS_AS(step_size_bound({1.0, 0.5}, 2, 0.0), ValidationError);
}

TEST_CASE("step_size_bound: monotone in gap, beta and K") {
  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const double beta = rng.uniform(0.0, 0.9);
    const double gap_small = rng.uniform(0.05, 0.3);
    const double gap_big = gap_small + rng.uniform(0.05, 0.3);
    const std::vector<double> wide{1.0, 1.0 - gap_big, 0.1};
    const std::vector<double> narrow{1.0, 1.0 - gap_small, 0.1};
    CHECK(step_size_bound(wide, 1, beta) >= step_size_bound(narrow, 1, beta));
    CHECK(step_size_bound(narrow, 1, beta) >=
          step_size_bound(narrow, 1, beta + 0.05));

    const std::vector<double> lam{1.0, 0.8, 0.6, 0.4, 0.2};
    CHECK(step_size_bound(lam, 1, beta) >= step_size_bound(lam, 2, beta));
    CHECK(step_size_bound(lam, 2, beta) >= step_size_bound(lam, 3, beta));
  }
}

TEST_CASE("p_spectral_radius: alpha=0 sits exactly at the boundary") {
  CHECK(p_spectral_radius(0.0, 1, 0.9, 0.5, 1.0, 0.0) == 1.0);
  CHECK(p_spectral_radius(0.0, 2, 0.9, 0.5, 1.0, 0.7) == 1.0);
}

TEST_CASE("p_spectral_radius: contraction below the step-size bound") {
  const double bound = step_size_bound({1.0, 0.5}, 1, 0.0);
  const double rho = p_spectral_radius(0.9 * bound, 1, 1.0, 0.5, 1.0, 0.0);
  CHECK(rho < 1.0);
  CHECK(rho > 0.0);

  Rng rng(19);
  for (int draw = 0; draw < 50; ++draw) {
    const int d = 4;
    std::vector<double> lam(d);
    double v = rng.uniform(0.5, 3.0);
    for (int l = 0; l < d; ++l) {
      lam[l] = v;
      v *= rng.uniform(0.4, 0.85);
    }
    const int k = 1 + static_cast<int>(rng.next_below(3));
    const double beta = rng.uniform(0.0, 0.95);
    const double alpha = 0.9 * step_size_bound(lam, k, beta);
    CHECK(p_spectral_radius(alpha, k, lam[k - 1], lam[k], lam[0], beta) < 1.0);
  }
}

TEST_CASE("lipschitz_probe: zero matrix and the k=1 / k=3 bounds") {
  CHECK(lipschitz_probe(Matrix::Zero(4, 4), 1, Matrix(4, 0), 100, 3) == 0.0);

  Vector lam(4);
  lam << 2, 1, 0.5, 0.25;
  const Spectrum truth = eig_sym(Matrix(lam.asDiagonal()));
  const Matrix c = Matrix(lam.asDiagonal());

  const double r1 = lipschitz_probe(c, 1, Matrix(4, 0), 10000, 4);
  CHECK(r1 <= 6.0 * 2.0);
  CHECK(r1 > 1.0);  // the probes do find genuinely steep directions

  const double r3 =
      lipschitz_probe(c, 3, truth.eigenvectors.leftCols(2), 10000, 5);
  CHECK(r3 <= 8.0 * 2.0);
}

TEST_CASE("rate_fit: exact geometric series") {
  std::vector<double> series;
  for (int t = 0; t < 60; ++t) series.push_back(std::pow(0.5, t));
  const RateReport report = rate_fit(series);
  CHECK(report.rho_hat == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  // Window ends before the sub-1e-12 plateau.
  CHECK(report.window_end <= 41);
}

TEST_CASE("rate_fit: constant series has rho 1") {
  const std::vector<double> series(50, 0.25);
  const RateReport report = rate_fit(series);
  CHECK(report.rho_hat == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.r_squared == doctest::Approx(1.0));
}

TEST_CASE("rate_fit: rejects short or invalid series") {
  CHECK_THROWS_AS(rate_fit(std::vector<double>(10, 0.5)), ValidationError);
  CHECK_THROWS_AS(rate_fit({}), ValidationError);
  std::vector<double> negative(30, 0.5);
  negative[7] = -1.0;
  CHECK_THROWS_AS(rate_fit(negative), ValidationError);
  // All mass below the noise floor: nothing to fit.
  CHECK_THROWS_AS(rate_fit(std::vector<double>(30, 1e-14)), ValidationError);
}

TEST_CASE("trace CSV: header, row shape, 17-digit floats") {
  Trace trace;
  TraceRow row;
  row.t = 3;
  row.comm_units = 7;
  row.angle_error = 1.0 / 3.0;
  row.consensus_per_k = Vector::Constant(2, 0.5);
  row.tracker_per_k = Vector::Constant(2, 1e-11);
  row.dist_per_k = Vector::Constant(2, 0.25);
  trace.rows.push_back(row);

  const std::string csv = trace_to_csv(trace);
  CHECK(csv.find("t,comm_units,angle_error,consensus_err,tracker_resid,"
                 "dist_opt\n") == 0);
  CHECK(csv.find("3,7,0.33333333333333331,1,9.9999999999999994e-12,0.25\n") !=
        std::string::npos);
}

}  // TEST_SUITE
