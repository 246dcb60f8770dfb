#include "connsig/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "connsig/error.hpp"
#include "connsig/rng.hpp"

namespace connsig::sketch {

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) fail_data("feature matrix must be nonempty");
  if (!values_.allFinite()) fail_data("feature matrix contains non-finite entries");
}

SamplingDistribution::SamplingDistribution(Eigen::VectorXd probabilities)
    : probabilities_(std::move(probabilities)) {
  if (probabilities_.size() == 0) fail_data("sampling distribution is empty");
  if (!probabilities_.allFinite() || (probabilities_.array() < 0.0).any())
    fail_data("sampling distribution has negative or non-finite entries");
  if (std::abs(probabilities_.sum() - 1.0) > 1e-10)
    fail_data("sampling distribution does not sum to 1");
}

double rank_tolerance(double sigma_max, Eigen::Index rows, Eigen::Index cols) {
  return sigma_max * static_cast<double>(std::max(rows, cols)) * 0x1.0p-52;
}

ColumnBasis orthonormal_column_basis(const FeatureMatrix& fm) {
  const Eigen::MatrixXd& a = fm.values();
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (a.isZero(0.0)) fail_numeric("zero matrix has no column basis");

  // Right singular pairs of A from a small square factor: R (n x n) when A is
  // tall, A itself otherwise. Both share A's singular values and V.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd;
  if (m >= n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    svd.compute(r, Eigen::ComputeFullV);
  } else {
    svd.compute(a, Eigen::ComputeThinV);
  }
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = rank_tolerance(sigma(0), m, n);
  Eigen::Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > tol) ++rank;
  if (rank == 0) fail_numeric("zero matrix has no column basis");

  Eigen::MatrixXd w = svd.matrixV().leftCols(rank) * sigma.head(rank).cwiseInverse().asDiagonal();
  Eigen::MatrixXd u = a * w;

  // One Cholesky-QR pass restores orthonormality lost to ill-conditioning.
  // It right-multiplies by a fixed r x r matrix, keeping U row-local.
  const Eigen::MatrixXd gram = u.transpose() * u;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd correction = Eigen::MatrixXd::Identity(rank, rank);
    l.triangularView<Eigen::Lower>().transpose().solveInPlace<Eigen::OnTheRight>(correction);
    w = w * correction;
    u = a * w;
  }
  return {std::move(u), rank};
}

std::vector<Eigen::Index> rank_descending(const Eigen::VectorXd& scores) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return scores(x) > scores(y); });
  return order;
}

LeverageProfile leverage_scores(const FeatureMatrix& a) {
  ColumnBasis cb = orthonormal_column_basis(a);
  LeverageProfile profile;
  profile.scores = cb.basis.rowwise().squaredNorm();
  profile.ranking = rank_descending(profile.scores);
  profile.rank = cb.rank;
  return profile;
}

SamplingDistribution norm_squared_distribution(const FeatureMatrix& a) {
  Eigen::VectorXd mass = a.values().rowwise().squaredNorm();
  const double total = mass.sum();
  if (!(total > 0.0)) fail_numeric("cannot normalize zero mass");
  return SamplingDistribution(mass / total);
}

SamplingDistribution leverage_distribution(const FeatureMatrix& a) {
  if (a.values().isZero(0.0)) fail_numeric("cannot normalize zero mass");
  LeverageProfile profile = leverage_scores(a);
  return SamplingDistribution(profile.scores / profile.scores.sum());
}

SketchMatrix row_sample(const FeatureMatrix& a, std::size_t s, const SamplingDistribution& p,
                        std::uint64_t seed) {
  if (s == 0) fail_usage("sketch size must be positive");
  if (p.size() != a.rows())
    fail_usage("distribution length " + std::to_string(p.size()) + " does not match " +
               std::to_string(a.rows()) + " rows");

  const Eigen::VectorXd& prob = p.probabilities();
  std::vector<double> cumulative(static_cast<std::size_t>(prob.size()));
  std::partial_sum(prob.begin(), prob.end(), cumulative.begin());
  const double total = cumulative.back();

  // upper_bound never lands on a zero-probability row: its cumulative value
  // equals its predecessor's, so any u below it is claimed earlier.
  Rng rng(seed);
  SketchMatrix out;
  out.values.resize(static_cast<Eigen::Index>(s), a.cols());
  out.source_rows.reserve(s);
  for (std::size_t t = 0; t < s; ++t) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) it = std::prev(it);
    auto i = static_cast<Eigen::Index>(it - cumulative.begin());
    while (prob(i) <= 0.0 && i > 0) --i;  // guards the u == total rounding edge
    const double scale = 1.0 / std::sqrt(static_cast<double>(s) * prob(i));
    out.values.row(static_cast<Eigen::Index>(t)) = scale * a.values().row(i);
    out.source_rows.push_back(i);
  }
  return out;
}

std::vector<Eigen::Index> top_t_features(const LeverageProfile& profile, std::size_t t) {
  if (t == 0) fail_usage("feature budget must be positive");
  if (t > profile.ranking.size()) fail_usage("budget exceeds feature count");
  return {profile.ranking.begin(), profile.ranking.begin() + static_cast<std::ptrdiff_t>(t)};
}

}  // namespace connsig::sketch
