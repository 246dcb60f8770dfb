#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "connsig/connectome.hpp"
#include "connsig/error.hpp"
#include "connsig/rng.hpp"
#include "connsig/stats.hpp"

using namespace connsig;
using namespace connsig::stats;

namespace {

// P[X >= k] by walking every n-subset of an N-set whose first K items are
// successes. Counts are exact integers; one division at the end.
double enumerate_sf(int k, int K, int n, int N) {
  std::uint64_t hit = 0, total = 0;
  const std::uint32_t success_mask = (1u << K) - 1u;
  for (std::uint32_t s = 0; s < (1u << N); ++s) {
    if (std::popcount(s) != n) continue;
    ++total;
    if (std::popcount(s & success_mask) >= k) ++hit;
  }
  return double(hit) / double(total);
}

}  // namespace

TEST(Hypergeom, EnumerationOracleUpTo12) {
  double worst = 0;
  for (int N = 1; N <= 12; ++N)
    for (int K = 0; K <= N; ++K)
      for (int n = 0; n <= N; ++n)
        for (int k = 0; k <= std::min(K, n); ++k)
          worst = std::max(worst, std::abs(hypergeom_sf(k, K, n, N) - enumerate_sf(k, K, n, N)));
  EXPECT_LE(worst, 1e-12);
}

TEST(Hypergeom, ComplementUpTo500) {
  Rng rng(3);
  double worst = 0;
  for (int trial = 0; trial < 4000; ++trial) {
    const auto N = static_cast<std::int64_t>(1 + rng.below(500));
    const auto K = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N) + 1));
    const auto n = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N) + 1));
    const std::int64_t lo = std::max<std::int64_t>(0, n + K - N), hi = std::min(K, n);
    const std::int64_t k = lo + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    const double lower = k == 0 ? 0.0 : hypergeom_cdf(k - 1, K, n, N);
    worst = std::max(worst, std::abs(hypergeom_sf(k, K, n, N) + lower - 1.0));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(Hypergeom, MonotoneAndTiny) {
  // N near 10^7, tail far below 1e-300 still ordered in log space
  const std::int64_t N = 10'000'000, K = 5000, n = 5000;
  double prev = 0.0;
  for (std::int64_t k = 1; k <= 260; k += 7) {
    const double lp = hypergeom_log_sf(k, K, n, N);
    EXPECT_LE(lp, prev);
    prev = lp;
  }
  EXPECT_LT(prev / std::log(10.0), -300);
  EXPECT_EQ(hypergeom_sf(0, K, n, N), 1.0);
}

TEST(Hypergeom, Errors) {
  EXPECT_THROW(hypergeom_sf(1, 5, 3, 4), Error);
  EXPECT_THROW(hypergeom_sf(4, 3, 5, 10), Error);
}

TEST(LogAdd, Basics) {
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_add(ninf, ninf), ninf);
  EXPECT_EQ(log_add(ninf, 1.5), 1.5);
  EXPECT_NEAR(log_add(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15);
  EXPECT_NEAR(log_add(-1000.0, -1000.0), -1000.0 + std::log(2.0), 1e-12);
}

TEST(Recurrence, BinomialWhenSizesEqual) {
  const std::vector<std::size_t> sizes(20, 10);
  const std::vector<double> tail = recurrence_log_tail(sizes, 100);
  ASSERT_EQ(tail.size(), 21u);
  EXPECT_EQ(tail[0], 0.0);
  // binomial(20, 0.1) upper tail, summed directly
  for (int k = 0; k <= 20; ++k) {
    double s = 0;
    for (int j = k; j <= 20; ++j) s += std::exp(std::lgamma(21) - std::lgamma(j + 1) - std::lgamma(21 - j)) *
                                       std::pow(0.1, j) * std::pow(0.9, 20 - j);
    EXPECT_NEAR(std::exp(tail[static_cast<std::size_t>(k)]), s, 1e-12) << k;
  }
}

TEST(Recurrence, ThreeSetExample) {
  // feature present in all 3 sets of size t from E: p = (t / E)^3
  const std::vector<std::size_t> sizes(3, 20);
  EXPECT_NEAR(std::exp(recurrence_log_tail(sizes, 100)[3]), 0.008, 1e-15);
}

TEST(Recurrence, MatchesSimulation) {
  // sets drawn uniformly; observed frequency of "feature 0 appears >= k times"
  const std::size_t E = 30, B = 12;
  const std::vector<std::size_t> sizes{3, 5, 7, 2, 9, 4, 6, 8, 3, 5, 1, 10};
  const auto tail = recurrence_log_tail(sizes, E);
  Rng rng(77);
  const int reps = 200000;
  std::vector<int> count(B + 1, 0);
  for (int r = 0; r < reps; ++r) {
    int c = 0;
    for (std::size_t b = 0; b < B; ++b) c += rng.below(E) < sizes[b] ? 1 : 0;
    ++count[static_cast<std::size_t>(c)];
  }
  int at_least = 0;
  for (int k = static_cast<int>(B); k >= 0; --k) {
    at_least += count[static_cast<std::size_t>(k)];
    const double p = std::exp(tail[static_cast<std::size_t>(k)]);
    const double se = std::sqrt(p * (1 - p) / reps) + 1e-12;
    EXPECT_NEAR(double(at_least) / reps, p, 5 * se + 1e-6) << k;
  }
}

TEST(Recurrence, AllSetsMaximal) {
  std::vector<std::vector<std::int64_t>> sets(1000);
  for (std::size_t b = 0; b < sets.size(); ++b) {
    sets[b].push_back(7);
    for (std::int64_t j = 0; j < 99; ++j) sets[b].push_back(100 + static_cast<std::int64_t>((b * 99 + j) % 60000));
  }
  const EnrichmentSet out = recurrent_features(sets, 64620, 1e-300);
  EXPECT_TRUE(std::binary_search(out.passed.begin(), out.passed.end(), 7));
  for (const auto& r : out.results)
    if (r.item_id == 7) {
      EXPECT_LT(r.log10_p, -300);
    }
}

TEST(Recurrence, SingleAppearanceRejected) {
  std::vector<std::vector<std::int64_t>> sets(1000);
  sets[0] = {42};
  for (std::size_t b = 1; b < sets.size(); ++b) sets[b] = {1000 + static_cast<std::int64_t>(b)};
  const EnrichmentSet out = recurrent_features(sets, 64620, 1e-20);
  EXPECT_TRUE(out.passed.empty());
}

TEST(Recurrence, MonotoneInThreshold) {
  Rng rng(5);
  std::vector<std::vector<std::int64_t>> sets(50);
  for (auto& s : sets) {
    for (std::size_t i : rng.sample_without_replacement(200, 15)) s.push_back(static_cast<std::int64_t>(i));
    s.push_back(3);  // 3 and 4 recur often
    if (rng.uniform() < 0.6) s.push_back(4);
  }
  std::set<std::int64_t> prev;
  for (double th : {1e-30, 1e-10, 1e-3, 0.05, 0.5}) {
    const auto out = recurrent_features(sets, 250, th);
    const std::set<std::int64_t> now(out.passed.begin(), out.passed.end());
    EXPECT_TRUE(std::includes(now.begin(), now.end(), prev.begin(), prev.end()));
    prev = now;
  }
  EXPECT_TRUE(prev.count(3));
}

TEST(RegionEnrichment, StarOnHub) {
  const std::int64_t R = 20;
  std::vector<std::int64_t> edges;
  for (Eigen::Index j = 1; j < R; ++j) edges.push_back(connectome::edge_index(0, j, R));
  const EnrichmentSet out = region_enrichment(edges, R, 1e-6);
  EXPECT_EQ(out.passed, (std::vector<std::int64_t>{0}));
  ASSERT_EQ(out.results.size(), static_cast<std::size_t>(R));
  EXPECT_EQ(out.results[0].observed, R - 1);
  // K = R-1, n = R-1, N = R(R-1)/2: every incident edge drawn
  EXPECT_NEAR(out.results[0].log10_p,
              hypergeom_log_sf(R - 1, R - 1, R - 1, R * (R - 1) / 2) / std::log(10.0), 1e-12);
}

TEST(RegionEnrichment, UniformEdgesDoNotPass) {
  const std::int64_t R = 90, E = R * (R - 1) / 2;
  double min_log10 = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<std::int64_t> edges;
    for (std::size_t e : rng.sample_without_replacement(static_cast<std::size_t>(E), 150))
      edges.push_back(static_cast<std::int64_t>(e));
    std::sort(edges.begin(), edges.end());
    const auto out = region_enrichment(edges, R, 1e-20);
    EXPECT_TRUE(out.passed.empty());
    for (const auto& r : out.results) min_log10 = std::min(min_log10, r.log10_p);
  }
  EXPECT_GT(min_log10, -10);  // far above 1e-20
}

TEST(RegionEnrichment, RelabelingPermutesPvalues) {
  const std::int64_t R = 12;
  Rng rng(9);
  std::vector<std::int64_t> perm(R);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::int64_t>(perm));
  std::vector<std::int64_t> edges, relabeled;
  for (std::size_t e : rng.sample_without_replacement(66, 20)) {
    edges.push_back(static_cast<std::int64_t>(e));
    auto [i, j] = connectome::edge_regions(static_cast<Eigen::Index>(e), R);
    auto a = perm[static_cast<std::size_t>(i)], b = perm[static_cast<std::size_t>(j)];
    relabeled.push_back(connectome::edge_index(std::min(a, b), std::max(a, b), R));
  }
  std::sort(edges.begin(), edges.end());
  std::sort(relabeled.begin(), relabeled.end());
  const auto x = region_enrichment(edges, R, 0.05), y = region_enrichment(relabeled, R, 0.05);
  for (std::int64_t r = 0; r < R; ++r)
    EXPECT_EQ(x.results[static_cast<std::size_t>(r)].log10_p,
              y.results[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])].log10_p);
}

TEST(EmpiricalP, AddOneRule) {
  const TrialReport null = make_trial_report({10, 20, 30, 40}, 5, 1);
  EXPECT_DOUBLE_EQ(empirical_pvalue(50, null).empirical_p, 1.0 / 5);
  EXPECT_DOUBLE_EQ(empirical_pvalue(30, null).empirical_p, 3.0 / 5);
  EXPECT_DOUBLE_EQ(empirical_pvalue(0, null).empirical_p, 1.0);
  double prev = 2;
  for (double obs = 0; obs <= 50; obs += 2.5) {
    const double p = empirical_pvalue(obs, null).empirical_p;
    EXPECT_LE(p, prev);
    prev = p;
  }
}

TEST(DegreeFilter, Examples) {
  const std::int64_t R = 8;
  std::vector<std::int64_t> star;
  for (Eigen::Index j = 1; j <= 5; ++j) star.push_back(connectome::edge_index(0, j, R));
  EXPECT_EQ(degree_filter(star, R, 5), star);
  EXPECT_TRUE(degree_filter(star, R, 6).empty());
  std::vector<std::int64_t> mixed = star;
  mixed.push_back(connectome::edge_index(6, 7, R));
  EXPECT_EQ(degree_filter(mixed, R, 0), mixed);
  EXPECT_EQ(degree_filter(mixed, R, 2), star);
  const auto deg = edge_degrees(mixed, R);
  EXPECT_EQ(deg[0], 5);
  EXPECT_EQ(deg[7], 1);
}
