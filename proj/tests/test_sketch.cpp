#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "connsig/error.hpp"
#include "connsig/rng.hpp"
#include "connsig/sketch.hpp"

using namespace connsig;
using namespace connsig::sketch;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd a(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) a(i, j) = rng.normal();
  return a;
}

// Leverage from a full SVD of A itself, independent of the library route.
VectorXd svd_leverage(const MatrixXd& a) {
  Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double tol = s(0) * double(std::max(a.rows(), a.cols())) * std::ldexp(1.0, -52);
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > tol) ++r;
  return svd.matrixU().leftCols(r).rowwise().squaredNorm();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return static_cast<ErrorKind>(0);
}

}  // namespace

TEST(ColumnBasis, IdentityIsItsOwnBasis) {
  const ColumnBasis b = orthonormal_column_basis(FeatureMatrix(MatrixXd::Identity(3, 3)));
  EXPECT_EQ(b.rank, 3);
  EXPECT_TRUE(b.basis.cwiseAbs().isApprox(MatrixXd::Identity(3, 3), 1e-12));
}

TEST(ColumnBasis, SingleColumnIsNormalized) {
  MatrixXd a(3, 1);
  a << 1, 2, 2;
  const ColumnBasis b = orthonormal_column_basis(FeatureMatrix(a));
  ASSERT_EQ(b.rank, 1);
  const double sign = b.basis(0, 0) > 0 ? 1.0 : -1.0;
  EXPECT_NEAR(sign * b.basis(0, 0), 1.0 / 3, 1e-14);
  EXPECT_NEAR(sign * b.basis(1, 0), 2.0 / 3, 1e-14);
  EXPECT_NEAR(sign * b.basis(2, 0), 2.0 / 3, 1e-14);
  EXPECT_NEAR(b.basis.col(0).squaredNorm(), 1.0, 1e-14);
}

TEST(ColumnBasis, RankDeficientColumns) {
  MatrixXd a(3, 2);
  a << 1, 2, 2, 4, 3, 6;
  EXPECT_EQ(orthonormal_column_basis(FeatureMatrix(a)).rank, 1);
}

TEST(ColumnBasis, ZeroMatrixFails) {
  try {
    orthonormal_column_basis(FeatureMatrix(MatrixXd::Zero(4, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "zero matrix has no column basis");
  }
}

TEST(ColumnBasis, OrthonormalOnTallRandom) {
  const MatrixXd a = random_matrix(400, 12, 5);
  const ColumnBasis b = orthonormal_column_basis(FeatureMatrix(a));
  EXPECT_EQ(b.rank, 12);
  EXPECT_LT((b.basis.transpose() * b.basis - MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 1e-8);
  // spans A: projecting A onto the basis loses nothing
  EXPECT_LT((a - b.basis * (b.basis.transpose() * a)).norm(), 1e-10 * a.norm());
}

TEST(Leverage, SpecExamples) {
  EXPECT_TRUE(leverage_scores(FeatureMatrix(MatrixXd::Identity(3, 3))).scores.isApprox(VectorXd::Ones(3), 1e-12));
  MatrixXd col(3, 1);
  col << 1, 2, 2;
  const VectorXd s = leverage_scores(FeatureMatrix(col)).scores;
  EXPECT_NEAR(s(0), 1.0 / 9, 1e-14);
  EXPECT_NEAR(s(1), 4.0 / 9, 1e-14);
  EXPECT_NEAR(s(2), 4.0 / 9, 1e-14);
  MatrixXd z(3, 2);
  z << 1, 0, 0, 1, 0, 0;
  const LeverageProfile p = leverage_scores(FeatureMatrix(z));
  EXPECT_NEAR(p.scores(0), 1.0, 1e-14);
  EXPECT_NEAR(p.scores(1), 1.0, 1e-14);
  EXPECT_EQ(p.scores(2), 0.0);
  EXPECT_EQ(p.ranking, (std::vector<Eigen::Index>{0, 1, 2}));
}

TEST(Leverage, DuplicateRowsScoreIdentically) {
  MatrixXd a = random_matrix(50, 4, 9);
  a.row(17) = a.row(3);
  const VectorXd s = leverage_scores(FeatureMatrix(a)).scores;
  EXPECT_EQ(s(3), s(17));
}

TEST(Leverage, MatchesSvdOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const MatrixXd a = random_matrix(30, 6, 1000 + seed);
    const LeverageProfile p = leverage_scores(FeatureMatrix(a));
    EXPECT_LT((p.scores - svd_leverage(a)).cwiseAbs().maxCoeff(), 1e-8) << "seed " << seed;
  }
}

TEST(Leverage, RankDeficientMatchesOracle) {
  MatrixXd a = random_matrix(40, 3, 4) * random_matrix(3, 7, 6);  // rank 3
  const LeverageProfile p = leverage_scores(FeatureMatrix(a));
  EXPECT_EQ(p.rank, 3);
  EXPECT_NEAR(p.scores.sum(), 3.0, 1e-6);
  EXPECT_LT((p.scores - svd_leverage(a)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Distributions, NormSquaredExamples) {
  MatrixXd a(2, 2);
  a << 3, 4, 0, 0;
  EXPECT_TRUE(norm_squared_distribution(FeatureMatrix(a)).probabilities().isApprox(VectorXd::Unit(2, 0)));
  EXPECT_TRUE(norm_squared_distribution(FeatureMatrix(MatrixXd::Identity(2, 2)))
                  .probabilities()
                  .isApprox(VectorXd::Constant(2, 0.5)));
  MatrixXd b(3, 2);
  b << 1, 1, 2, 2, 3, 3;
  const VectorXd p = norm_squared_distribution(FeatureMatrix(b)).probabilities();
  EXPECT_NEAR(p(0), 1.0 / 14, 1e-15);
  EXPECT_NEAR(p(1), 2.0 / 7, 1e-15);
  EXPECT_NEAR(p(2), 9.0 / 14, 1e-15);
}

TEST(Distributions, ZeroMassFails) {
  try {
    norm_squared_distribution(FeatureMatrix(MatrixXd::Zero(2, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "cannot normalize zero mass");
  }
  EXPECT_THROW(leverage_distribution(FeatureMatrix(MatrixXd::Zero(2, 2))), Error);
}

TEST(Distributions, LeverageExamples) {
  EXPECT_TRUE(leverage_distribution(FeatureMatrix(MatrixXd::Identity(3, 3)))
                  .probabilities()
                  .isApprox(VectorXd::Constant(3, 1.0 / 3), 1e-14));
  MatrixXd col(3, 1);
  col << 1, 2, 2;
  const VectorXd p = leverage_distribution(FeatureMatrix(col)).probabilities();
  EXPECT_NEAR(p(1), 4.0 / 9, 1e-14);
  MatrixXd z(3, 2);
  z << 1, 0, 0, 1, 0, 0;
  const VectorXd q = leverage_distribution(FeatureMatrix(z)).probabilities();
  EXPECT_NEAR(q(0), 0.5, 1e-14);
  EXPECT_EQ(q(2), 0.0);
}

TEST(Distributions, Validation) {
  EXPECT_THROW(SamplingDistribution(VectorXd::Constant(2, 0.4)), Error);
  VectorXd neg(2);
  neg << 1.5, -0.5;
  EXPECT_THROW(SamplingDistribution{neg}, Error);
  EXPECT_THROW(FeatureMatrix(MatrixXd(0, 3)), Error);
  MatrixXd bad = MatrixXd::Ones(2, 2);
  bad(1, 1) = NAN;
  EXPECT_THROW(FeatureMatrix{bad}, Error);
}

TEST(RowSample, DegenerateDistribution) {
  const MatrixXd a = random_matrix(3, 2, 1);
  const SketchMatrix s = row_sample(FeatureMatrix(a), 4, SamplingDistribution(VectorXd::Unit(3, 0)), 7);
  ASSERT_EQ(s.values.rows(), 4);
  for (Eigen::Index t = 0; t < 4; ++t) {
    EXPECT_EQ(s.source_rows[static_cast<std::size_t>(t)], 0);
    EXPECT_TRUE(s.values.row(t).isApprox(0.5 * a.row(0)));
  }
}

TEST(RowSample, UniformSingleDraw) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SketchMatrix s = row_sample(FeatureMatrix(MatrixXd::Identity(2, 2)), 1,
                                      SamplingDistribution(VectorXd::Constant(2, 0.5)), seed);
    const Eigen::Index i = s.source_rows[0];
    EXPECT_NEAR(s.values(0, i), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(s.values(0, 1 - i), 0.0);
  }
}

TEST(RowSample, SeedDeterminesSketch) {
  const FeatureMatrix a(random_matrix(20, 5, 2));
  const auto p = norm_squared_distribution(a);
  const SketchMatrix x = row_sample(a, 8, p, 99), y = row_sample(a, 8, p, 99), z = row_sample(a, 8, p, 100);
  EXPECT_EQ(x.source_rows, y.source_rows);
  EXPECT_EQ(x.values, y.values);
  EXPECT_NE(x.source_rows, z.source_rows);
}

TEST(RowSample, Errors) {
  const FeatureMatrix a(random_matrix(3, 2, 1));
  EXPECT_EQ(kind_of([&] { row_sample(a, 0, norm_squared_distribution(a), 1); }), ErrorKind::usage);
  EXPECT_EQ(kind_of([&] { row_sample(a, 2, SamplingDistribution(VectorXd::Constant(4, 0.25)), 1); }),
            ErrorKind::usage);
}

TEST(TopT, SpecExamples) {
  LeverageProfile p;
  p.scores = VectorXd(3);
  p.scores << 0.5, 0.9, 0.1;
  p.ranking = rank_descending(p.scores);
  EXPECT_EQ(top_t_features(p, 2), (std::vector<Eigen::Index>{1, 0}));
  EXPECT_EQ(top_t_features(p, 3), p.ranking);
  p.scores << 0.4, 0.4, 0.4;
  p.ranking = rank_descending(p.scores);
  EXPECT_EQ(top_t_features(p, 2), (std::vector<Eigen::Index>{0, 1}));
  try {
    top_t_features(p, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "budget exceeds feature count");
  }
}
