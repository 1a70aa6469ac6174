#include "adalista/core.hpp"
#include "adalista/serialization.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace adalista;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

} // namespace

TEST(SoftThreshold, ClosedForm) {
  EXPECT_TRUE(soft_threshold(vec({1.2, -0.3}), 0.5).isApprox(vec({0.7, 0.0}), 1e-15));
  EXPECT_EQ(soft_threshold(vec({2.0, -2.0}), 0.0), vec({2.0, -2.0}));
  EXPECT_EQ(soft_threshold(vec({0.5}), 1.0)[0], 0.0);
}

TEST(SoftThreshold, KinkIsExactlyZero) {
  const Vector out = soft_threshold(vec({0.25, -0.25}), 0.25);
  EXPECT_EQ(out[0], 0.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(SoftThreshold, NegativeThetaRejected) {
  EXPECT_THROW(soft_threshold(vec({1.0}), -0.1), std::invalid_argument);
}

TEST(SoftThreshold, ContractionProperty) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.0, 2.0);
  for (int t = 0; t < 500; ++t) {
    const Vector u = testutil::gaussian_vec(9, rng), v = testutil::gaussian_vec(9, rng);
    const double theta = th(rng);
    EXPECT_LE((soft_threshold(u, theta) - soft_threshold(v, theta)).norm(), (u - v).norm() + 1e-15);
  }
}

TEST(SoftThreshold, ShrinkageInequality) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 2.0);
  std::uniform_real_distribution<double> th(0.0, 3.0);
  for (int t = 0; t < 5000; ++t) {
    const double x1 = n(rng), x2 = n(rng), theta = th(rng);
    const double s = soft_threshold(vec({x1 + x2}), theta)[0];
    EXPECT_LE(std::abs(s - x1), theta + std::abs(x2) + 1e-12);
  }
}

TEST(LassoObjective, Examples) {
  const Dictionary I(Matrix::Identity(2, 2));
  EXPECT_DOUBLE_EQ(lasso_objective(vec({1, 0}), I, vec({1, 0}), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(lasso_objective(vec({1, 0}), I, vec({0, 0}), 1.0), 0.5);
}

TEST(LassoObjective, MatchesDefinitionAndIsNonnegative) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 50; ++t) {
    const Matrix D = testutil::gaussian(4, 6, rng);
    const Vector y = testutil::gaussian_vec(4, rng), x = testutil::gaussian_vec(6, rng);
    double resid = 0.0;
    for (Index i = 0; i < 4; ++i) {
      double r = y[i];
      for (Index j = 0; j < 6; ++j) r -= D(i, j) * x[j];
      resid += r * r;
    }
    double l1 = 0.0;
    for (Index j = 0; j < 6; ++j) l1 += std::abs(x[j]);
    const double v = lasso_objective(y, Dictionary(D), x, 0.3);
    EXPECT_NEAR(v, 0.5 * resid + 0.3 * l1, 1e-12);
    EXPECT_GE(v, 0.0);
  }
}

TEST(LassoObjective, DimensionMismatch) {
  const Dictionary D(Matrix::Identity(2, 3));
  EXPECT_THROW(lasso_objective(vec({1, 0}), D, vec({1, 0}), 1.0), std::invalid_argument);
  EXPECT_THROW(lasso_objective(vec({1, 0, 0}), D, vec({1, 0, 0}), 1.0), std::invalid_argument);
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm_sq(Matrix::Identity(2, 2)), 1.0, 1e-12);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 1.0;
  EXPECT_NEAR(spectral_norm_sq(d), 4.0, 4e-8);
  EXPECT_EQ(spectral_norm_sq(Matrix::Zero(3, 4)), 0.0);
}

TEST(SpectralNorm, MatchesEigensolver) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 50; ++t) {
    const Matrix D = testutil::gaussian(3, 5, rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(D.transpose() * D);
    const double truth = es.eigenvalues().maxCoeff();
    EXPECT_NEAR(spectral_norm_sq(D), truth, 1e-6 * truth);
  }
}

TEST(SpectralNorm, BoundsEveryUnitDirection) {
  std::mt19937_64 rng(15);
  const Matrix D = testutil::gaussian(6, 9, rng);
  const double L = spectral_norm_sq(D);
  for (int t = 0; t < 1000; ++t) {
    Vector c = testutil::gaussian_vec(9, rng);
    c /= c.norm();
    EXPECT_LE((D * c).squaredNorm(), L * (1.0 + 1e-8));
  }
}

TEST(NormalizeColumns, Examples) {
  Matrix d(2, 1);
  d << 3.0, 4.0;
  const Matrix n = normalize_columns(d);
  EXPECT_NEAR(n(0, 0), 0.6, 1e-15);
  EXPECT_NEAR(n(1, 0), 0.8, 1e-15);
  EXPECT_LE(testutil::max_abs_diff(normalize_columns(n), n), 1e-12);
}

TEST(NormalizeColumns, RandomNorms) {
  std::mt19937_64 rng(16);
  const Dictionary D = normalize_columns(Dictionary(testutil::gaussian(5, 7, rng)));
  EXPECT_TRUE(D.column_normalized());
  for (Index j = 0; j < 7; ++j) EXPECT_NEAR(D.matrix().col(j).norm(), 1.0, 1e-12);
}

TEST(NormalizeColumns, ZeroColumnRejected) {
  Matrix d = Matrix::Ones(3, 2);
  d.col(1).setZero();
  EXPECT_THROW(normalize_columns(d), std::invalid_argument);
}

TEST(Dictionary, Invariants) {
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Dictionary{bad}, std::invalid_argument);
  EXPECT_THROW(Dictionary(Matrix::Ones(2, 2), true), std::invalid_argument);
  EXPECT_NO_THROW(Dictionary(Matrix::Identity(3, 3), true));
}

TEST(Serialization, MatrixRoundTripIsRowMajor) {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6.5;
  const Json j = to_json(m);
  EXPECT_EQ(j.at("rows"), 2);
  EXPECT_EQ(j.at("cols"), 3);
  EXPECT_EQ(j.at("data")[1].get<double>(), 2.0);
  EXPECT_EQ(j.at("data")[3].get<double>(), 4.0);
  EXPECT_EQ(matrix_from_json(j), m);
}

TEST(Serialization, FullPrecisionRoundTrip) {
  std::mt19937_64 rng(17);
  const Matrix m = testutil::gaussian(4, 5, rng);
  EXPECT_EQ(matrix_from_json(parse_json_text(to_json(m).dump(), "mem")), m);
  const Vector v = testutil::gaussian_vec(6, rng);
  EXPECT_EQ(vector_from_json(to_json(v)), v);
}

TEST(Serialization, MalformedInput) {
  EXPECT_THROW(matrix_from_json(Json{{"rows", 2}, {"cols", 2}, {"data", {1, 2, 3}}}), std::invalid_argument);
  EXPECT_THROW(parse_json_text("{\"rows\": 1,", "broken"), std::runtime_error);
}
