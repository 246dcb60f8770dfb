#pragma once

// Row-subset selection for tall feature matrices: norm-squared and leverage
// sampling distributions, the randomized row sketch, and the deterministic
// top-t leverage ("principal features") selection.

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace connsig::sketch {

/// Dense m x n matrix with features as rows and observations as columns.
class FeatureMatrix {
 public:
  /// Throws on an empty matrix or a non-finite entry.
  explicit FeatureMatrix(Eigen::MatrixXd values);

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  Eigen::MatrixXd values_;
};

/// Probability vector over the rows of a FeatureMatrix.
class SamplingDistribution {
 public:
  /// Throws unless entries are non-negative and sum to 1 within 1e-10.
  explicit SamplingDistribution(Eigen::VectorXd probabilities);

  const Eigen::VectorXd& probabilities() const noexcept { return probabilities_; }
  Eigen::Index size() const noexcept { return probabilities_.size(); }

 private:
  Eigen::VectorXd probabilities_;
};

struct SketchMatrix {
  Eigen::MatrixXd values;               // s x n, row t = A(source_rows[t], :) / sqrt(s p_i)
  std::vector<Eigen::Index> source_rows;  // draw order
};

struct LeverageProfile {
  Eigen::VectorXd scores;
  std::vector<Eigen::Index> ranking;  // descending score, ties by ascending index
  Eigen::Index rank = 0;
};

struct ColumnBasis {
  Eigen::MatrixXd basis;  // m x rank, orthonormal columns
  Eigen::Index rank = 0;
};

/// Singular values above sigma_max * max(m, n) * 2^-52 count toward the rank.
double rank_tolerance(double sigma_max, Eigen::Index rows, Eigen::Index cols);

/// Orthonormal basis of the column space of `a`.
///
/// Cost is O(m n^2): a Householder QR of `a` followed by an SVD of the n x n
/// triangular factor fixes the rank and the right singular pairs. The basis is
/// then formed as U = A V S^-1 (plus one Cholesky-QR refinement), so each row of
/// U is a function of the matching row of A alone: identical feature rows get
/// bit-identical leverage scores and zero rows get exactly zero.
ColumnBasis orthonormal_column_basis(const FeatureMatrix& a);

/// Squared row norms of the orthonormal column basis, with the derived ranking.
LeverageProfile leverage_scores(const FeatureMatrix& a);

/// Orders indices by descending score; equal scores keep ascending index order.
std::vector<Eigen::Index> rank_descending(const Eigen::VectorXd& scores);

/// p_i proportional to the squared Euclidean norm of row i.
SamplingDistribution norm_squared_distribution(const FeatureMatrix& a);

/// p_i = l_i / sum(l), i.e. leverage normalized by the numerical rank.
SamplingDistribution leverage_distribution(const FeatureMatrix& a);

/// s i.i.d. draws (with replacement) from `p`; each kept row is rescaled by
/// 1/sqrt(s p_i) so that E[S^T S] = A^T A.
SketchMatrix row_sample(const FeatureMatrix& a, std::size_t s, const SamplingDistribution& p,
                        std::uint64_t seed);

/// First t entries of the profile's ranking.
std::vector<Eigen::Index> top_t_features(const LeverageProfile& profile, std::size_t t);

}  // namespace connsig::sketch
