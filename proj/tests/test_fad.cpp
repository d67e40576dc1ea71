// Copyright 2026 The fadprof Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "fadprof/fad.hpp"
#include "support.hpp"

using namespace fadprof;
using fadprof::testing::diagonal_gaussian;
using fadprof::testing::make_set;
using fadprof::testing::random_matrix;

namespace {

GaussianStats gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  GaussianStats g;
  g.mean = std::move(mean);
  g.cov = std::move(cov);
  g.n = 100;
  return g;
}

Eigen::MatrixXd random_spd(int d, std::uint64_t key) {
  const Eigen::MatrixXd a = random_matrix(d, d, key);
  return a * a.transpose() / d + 0.1 * Eigen::MatrixXd::Identity(d, d);
}

/// Independent route: tr((A B)^(1/2)) via the Denman-Beavers iteration on the
/// non-symmetric product, no eigendecomposition involved.
double trace_sqrt_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd y = a * b;
  Eigen::MatrixXd z = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 0; i < 100; ++i) {
    const Eigen::MatrixXd y_next = 0.5 * (y + z.inverse());
    const Eigen::MatrixXd z_next = 0.5 * (z + y.inverse());
    const double change = (y_next - y).norm();
    y = y_next;
    z = z_next;
    if (change < 1e-14 * y.norm()) break;
  }
  return y.trace();
}

double oracle_fad(const GaussianStats& a, const GaussianStats& b) {
  return (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt_product(a.cov, b.cov);
}

}  // namespace

TEST(Frechet, OneDimensionalClosedForm) {
  // (0, 1) vs (3, 4): 9 + 1 + 4 - 2*2 = 10.
  const auto a = gaussian(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto b = gaussian(Eigen::VectorXd::Constant(1, 3.0), Eigen::MatrixXd::Constant(1, 1, 4.0));
  EXPECT_NEAR(frechet_distance(a, b).value, 10.0, 1e-9);
}

TEST(Frechet, DiagonalClosedForm) {
  const int d = 16;
  Eigen::VectorXd va(d), vb(d), ma(d), mb(d);
  double expected = 0.0;
  for (int i = 0; i < d; ++i) {
    va(i) = 0.5 + i;
    vb(i) = 2.0 + 0.25 * i;
    ma(i) = 0.1 * i;
    mb(i) = -0.2 * i;
    expected += std::pow(ma(i) - mb(i), 2) + std::pow(std::sqrt(va(i)) - std::sqrt(vb(i)), 2);
  }
  const auto r = frechet_distance(gaussian(ma, va.asDiagonal()), gaussian(mb, vb.asDiagonal()));
  EXPECT_NEAR(r.value, expected, 1e-9 * expected);
  EXPECT_NEAR(r.mean_term + r.trace_term, r.value, 1e-12);
}

TEST(Frechet, MatchesDenmanBeaversOracleOnDenseCovariances) {
  for (std::uint64_t k = 0; k < 5; ++k) {
    const int d = 12;
    const auto a = gaussian(random_matrix(d, 1, 100 + k), random_spd(d, 200 + k));
    const auto b = gaussian(random_matrix(d, 1, 300 + k), random_spd(d, 400 + k));
    const double expected = oracle_fad(a, b);
    EXPECT_NEAR(frechet_distance(a, b).value, expected, 1e-8 * std::max(1.0, expected));
  }
}

TEST(Frechet, IdenticalInputsGiveZero) {
  const auto set = make_set(random_matrix(400, 32, 5));
  const auto r = fad_from_sets(set, set);
  EXPECT_LT(r.value, 1e-6);
  EXPECT_GE(r.value, 0.0);
}

TEST(Frechet, Symmetric) {
  const auto a = make_set(random_matrix(300, 24, 6));
  const auto b = make_set(random_matrix(300, 24, 7) * 1.5);
  EXPECT_NEAR(fad_from_sets(a, b).value, fad_from_sets(b, a).value, 1e-8);
}

TEST(Frechet, PureMeanShift) {
  const Eigen::MatrixXd rows = random_matrix(500, 20, 8);
  const Eigen::RowVectorXd v = random_matrix(1, 20, 9);
  const Eigen::MatrixXd shifted = rows.rowwise() + v;
  // Use double-precision statistics directly so float storage does not
  // enter the comparison.
  const auto r = frechet_distance(fit_gaussian(rows), fit_gaussian(shifted));
  EXPECT_NEAR(r.value, v.squaredNorm(), 1e-6);
}

TEST(Frechet, RotationInvariant) {
  const Eigen::MatrixXd a = random_matrix(400, 16, 10);
  const Eigen::MatrixXd b = random_matrix(400, 16, 11) * 0.7;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(16, 16, 12));
  const Eigen::MatrixXd q = qr.householderQ();
  const double base = frechet_distance(fit_gaussian(a), fit_gaussian(b)).value;
  const double rotated = frechet_distance(fit_gaussian(Eigen::MatrixXd(a * q)), fit_gaussian(Eigen::MatrixXd(b * q))).value;
  EXPECT_NEAR(rotated, base, 1e-6 * base);
}

TEST(Frechet, SampledDiagonalGaussiansApproachClosedForm) {
  const int d = 64;
  Eigen::VectorXd ma = Eigen::VectorXd::Zero(d), mb(d), va = Eigen::VectorXd::Ones(d), vb(d);
  double expected = 0.0;
  for (int i = 0; i < d; ++i) {
    mb(i) = 0.5;
    vb(i) = std::pow(1.0 + i / 64.0, 2);
    expected += 0.25 + std::pow(1.0 - std::sqrt(vb(i)), 2);
  }
  const auto a = make_set(diagonal_gaussian(ma, va, 5000, 21));
  const auto b = make_set(diagonal_gaussian(mb, vb, 5000, 22));
  EXPECT_NEAR(fad_from_sets(a, b).value, expected, 0.05 * expected);
}

TEST(Frechet, CovarianceUsesUnbiasedDivisor) {
  Eigen::MatrixXd rows(2, 1);
  rows << 0.0, 2.0;
  EXPECT_DOUBLE_EQ(fit_gaussian(rows).cov(0, 0), 2.0);
}

TEST(Frechet, RankDeficientCovarianceIsFinite) {
  // 10 samples in 32 dimensions: singular covariances.
  const auto a = make_set(random_matrix(10, 32, 13));
  const auto b = make_set(random_matrix(10, 32, 14));
  const auto r = fad_from_sets(a, b);
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_GE(r.value, 0.0);
}

TEST(Frechet, RegularizationRecordsRidge) {
  const auto a = make_set(random_matrix(10, 32, 15));
  const auto b = make_set(random_matrix(10, 32, 16));
  const auto r = fad_from_sets(a, b, FadOptions{true});
  EXPECT_GT(r.diagnostics.ridge, 0.0);
  EXPECT_TRUE(r.diagnostics.any_event());
}

TEST(Frechet, NegativeValueIsClampedAndRecorded) {
  // Covariance with a negative eigenvalue forces the clamp path.
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.0, 0.0, -1e-3;
  const auto a = gaussian(Eigen::VectorXd::Zero(2), bad);
  const auto r = frechet_distance(a, a);
  EXPECT_GE(r.value, 0.0);
  EXPECT_GT(r.diagnostics.clamped_cov_eigenvalues, 0);
  EXPECT_NEAR(r.mean_term + r.trace_term, r.value, 1e-12);
}

TEST(Frechet, Errors) {
  const auto a = make_set(random_matrix(10, 4, 17));
  const auto b = make_set(random_matrix(10, 5, 18));
  EXPECT_THROW(fad_from_sets(a, b), Error);
  auto c = make_set(random_matrix(10, 4, 19), "other");
  EXPECT_THROW(fad_from_sets(a, c), Error);
  EXPECT_THROW(fit_gaussian(Eigen::MatrixXd(1, 4)), Error);
}
