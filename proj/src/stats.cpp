#include "connsig/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "connsig/connectome.hpp"
#include "connsig/error.hpp"

namespace connsig::stats {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(double(n) + 1.0) - std::lgamma(double(k) + 1.0) -
         std::lgamma(double(n - k) + 1.0);
}

struct Support {
  std::int64_t lo, hi;
};

Support check_hypergeom(std::int64_t successes, std::int64_t draws, std::int64_t population) {
  if (population < 0 || successes < 0 || draws < 0 || successes > population ||
      draws > population)
    fail_usage("hypergeometric parameters need 0 <= K <= N and 0 <= n <= N (K=" +
               std::to_string(successes) + ", n=" + std::to_string(draws) +
               ", N=" + std::to_string(population) + ")");
  return {std::max<std::int64_t>(0, draws - (population - successes)),
          std::min(successes, draws)};
}

// Unnormalized log pmf. Dividing by the summed terms rather than C(N, n) keeps
// sf + cdf = 1 to rounding; lgamma's error in C(N, n) alone exceeds 1e-12 at N ~ 500.
double log_term(std::int64_t i, std::int64_t successes, std::int64_t draws, std::int64_t population) {
  return log_choose(successes, i) + log_choose(population - successes, draws - i);
}

double log_total(Support s, std::int64_t successes, std::int64_t draws, std::int64_t population) {
  double acc = kNegInf;
  for (std::int64_t i = s.hi; i >= s.lo; --i) acc = log_add(acc, log_term(i, successes, draws, population));
  return acc;
}

double log_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    fail_usage("p-value threshold must be positive");
  return std::log(threshold);
}

}  // namespace

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

double hypergeom_log_sf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                        std::int64_t population) {
  const Support s = check_hypergeom(successes, draws, population);
  if (k < 0 || k > s.hi)
    fail_usage("hypergeometric tail needs 0 <= k <= min(K, n); got k=" + std::to_string(k));
  if (k <= s.lo) return 0.0;
  double acc = kNegInf;
  for (std::int64_t i = s.hi; i >= k; --i) acc = log_add(acc, log_term(i, successes, draws, population));
  return std::min(acc - log_total(s, successes, draws, population), 0.0);
}

double hypergeom_sf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                    std::int64_t population) {
  return std::exp(hypergeom_log_sf(k, successes, draws, population));
}

double hypergeom_cdf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                     std::int64_t population) {
  const Support s = check_hypergeom(successes, draws, population);
  if (k < s.lo) return 0.0;
  if (k >= s.hi) return 1.0;
  double acc = kNegInf;
  for (std::int64_t i = s.lo; i <= k; ++i) acc = log_add(acc, log_term(i, successes, draws, population));
  return std::min(std::exp(acc - log_total(s, successes, draws, population)), 1.0);
}

std::vector<double> recurrence_log_tail(std::span<const std::size_t> set_sizes,
                                        std::size_t feature_count) {
  if (feature_count == 0) fail_usage("feature count must be positive");
  const std::size_t sets = set_sizes.size();
  // dp[j] = log P[j of the first b sets contain the feature]
  std::vector<double> dp(sets + 1, kNegInf);
  dp[0] = 0.0;
  for (std::size_t b = 0; b < sets; ++b) {
    if (set_sizes[b] > feature_count) fail_usage("selection set larger than the feature count");
    const double p = double(set_sizes[b]) / double(feature_count);
    const double log_in = p > 0.0 ? std::log(p) : kNegInf;
    const double log_out = p < 1.0 ? std::log1p(-p) : kNegInf;
    for (std::size_t j = b + 2; j-- > 0;) {
      const double stay = dp[j] == kNegInf || log_out == kNegInf ? kNegInf : dp[j] + log_out;
      const double join = j == 0 || dp[j - 1] == kNegInf || log_in == kNegInf
                              ? kNegInf
                              : dp[j - 1] + log_in;
      dp[j] = log_add(stay, join);
    }
  }
  std::vector<double> tail(sets + 2, kNegInf);
  for (std::size_t k = sets + 1; k-- > 0;) tail[k] = log_add(tail[k + 1], dp[k]);
  tail.pop_back();
  for (double& v : tail) v = std::min(v, 0.0);
  tail[0] = 0.0;
  return tail;
}

EnrichmentSet recurrent_features(const std::vector<std::vector<std::int64_t>>& feature_sets,
                                 std::size_t feature_count, double threshold) {
  const double log_cut = log_threshold(threshold);
  if (feature_sets.size() < 2) fail_usage("recurrence needs at least 2 feature sets");
  std::vector<std::size_t> sizes;
  std::map<std::int64_t, std::int64_t> counts;
  for (const auto& set : feature_sets) {
    std::vector<std::int64_t> unique(set.begin(), set.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (std::int64_t f : unique) {
      if (f < 0 || f >= static_cast<std::int64_t>(feature_count))
        fail_usage("feature id " + std::to_string(f) + " out of range");
      ++counts[f];
    }
    sizes.push_back(unique.size());
  }
  const std::vector<double> tail = recurrence_log_tail(sizes, feature_count);
  double expected = 0.0;
  for (std::size_t s : sizes) expected += double(s) / double(feature_count);

  EnrichmentSet out;
  for (const auto& [feature, k] : counts) {
    EnrichmentResult r;
    r.item_id = feature;
    r.observed = k;
    r.expected = expected;
    const double lp = tail[static_cast<std::size_t>(k)];
    r.p_value = std::exp(lp);
    r.log10_p = lp / std::log(10.0);
    r.passed = lp < log_cut;
    if (r.passed) out.passed.push_back(feature);
    out.results.push_back(r);
  }
  return out;
}

EnrichmentSet region_enrichment(std::span<const std::int64_t> edges, std::int64_t region_count,
                                double threshold) {
  const double log_cut = log_threshold(threshold);
  if (region_count < 2) fail_usage("region enrichment needs at least 2 regions");
  std::vector<std::int64_t> unique(edges.begin(), edges.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const std::vector<std::int64_t> degree = edge_degrees(unique, region_count);

  const std::int64_t population = region_count * (region_count - 1) / 2;
  const std::int64_t incident = region_count - 1;
  const auto drawn = static_cast<std::int64_t>(unique.size());
  EnrichmentSet out;
  for (std::int64_t r = 0; r < region_count; ++r) {
    EnrichmentResult res;
    res.item_id = r;
    res.observed = degree[static_cast<std::size_t>(r)];
    res.expected = double(drawn) * double(incident) / double(population);
    const double lp = hypergeom_log_sf(res.observed, incident, drawn, population);
    res.p_value = std::exp(lp);
    res.log10_p = lp / std::log(10.0);
    res.passed = lp < log_cut;
    if (res.passed) out.passed.push_back(r);
    out.results.push_back(res);
  }
  return out;
}

NullAccuracyDistribution empirical_pvalue(double observed, const TrialReport& null_trials) {
  NullAccuracyDistribution d;
  d.samples = null_trials.per_trial;
  d.observed = observed;
  const auto at_least =
      std::count_if(d.samples.begin(), d.samples.end(), [&](double s) { return s >= observed; });
  d.empirical_p = double(1 + at_least) / double(d.samples.size() + 1);
  return d;
}

std::vector<std::int64_t> edge_degrees(std::span<const std::int64_t> edges,
                                       std::int64_t region_count) {
  std::vector<std::int64_t> degree(static_cast<std::size_t>(region_count), 0);
  const std::int64_t total = region_count * (region_count - 1) / 2;
  for (std::int64_t e : edges) {
    if (e < 0 || e >= total) fail_usage("edge id " + std::to_string(e) + " out of range");
    const auto [i, j] = connectome::edge_regions(e, region_count);
    ++degree[static_cast<std::size_t>(i)];
    ++degree[static_cast<std::size_t>(j)];
  }
  return degree;
}

std::vector<std::int64_t> degree_filter(std::span<const std::int64_t> edges,
                                        std::int64_t region_count, std::int64_t min_degree) {
  std::vector<std::int64_t> unique(edges.begin(), edges.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const std::vector<std::int64_t> degree = edge_degrees(unique, region_count);
  std::vector<std::int64_t> kept;
  for (std::int64_t e : unique) {
    const auto [i, j] = connectome::edge_regions(e, region_count);
    if (degree[static_cast<std::size_t>(i)] >= min_degree ||
        degree[static_cast<std::size_t>(j)] >= min_degree)
      kept.push_back(e);
  }
  return kept;
}

}  // namespace connsig::stats
