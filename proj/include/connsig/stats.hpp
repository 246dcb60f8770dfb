#pragma once

// Significance machinery: exact hypergeometric tails, recurrence and region
// enrichment, add-one empirical p-values, and degree filtering of edge sets.
// Tail probabilities are accumulated in log space so that thresholds far
// below the double range (1e-50, 1e-300, ...) compare correctly.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "connsig/report.hpp"

namespace connsig::stats {

struct EnrichmentResult {
  std::int64_t item_id = 0;
  std::int64_t observed = 0;
  double expected = 0.0;
  double p_value = 1.0;  // may underflow to 0; log10_p carries the exact magnitude
  double log10_p = 0.0;
  bool passed = false;
};

struct EnrichmentSet {
  std::vector<std::int64_t> passed;       // ascending item ids with p < threshold
  std::vector<EnrichmentResult> results;  // every evaluated item, ascending id
};

struct NullAccuracyDistribution {
  std::vector<double> samples;
  double observed = 0.0;
  double empirical_p = 1.0;
};

/// log(exp(a) + exp(b)) without overflow; -inf acts as zero probability.
double log_add(double a, double b);

/// Natural log of P[X >= k] for X ~ Hypergeometric(N, K, n).
double hypergeom_log_sf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                        std::int64_t population);

/// P[X >= k], summed term by term from the top of the support downward.
double hypergeom_sf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                    std::int64_t population);

/// P[X <= k].
double hypergeom_cdf(std::int64_t k, std::int64_t successes, std::int64_t draws,
                     std::int64_t population);

/// Natural-log upper tails of the recurrence count under the null that set b
/// contains a given feature independently with probability t_b / E. Entry k is
/// log P[X >= k], k = 0..B (Poisson-binomial; binomial when sizes are equal).
std::vector<double> recurrence_log_tail(std::span<const std::size_t> set_sizes,
                                        std::size_t feature_count);

/// Features recurring across selection sets more often than uniform selection
/// explains. Results cover every feature seen at least once.
EnrichmentSet recurrent_features(const std::vector<std::vector<std::int64_t>>& feature_sets,
                                 std::size_t feature_count, double threshold);

/// Regions over-represented among the endpoints of `edges` under the
/// edge-incidence hypergeometric null. Results cover every region.
EnrichmentSet region_enrichment(std::span<const std::int64_t> edges, std::int64_t region_count,
                                double threshold);

/// (1 + #{null >= observed}) / (#null + 1).
NullAccuracyDistribution empirical_pvalue(double observed, const TrialReport& null_trials);

/// Degree of each region within the edge set.
std::vector<std::int64_t> edge_degrees(std::span<const std::int64_t> edges,
                                       std::int64_t region_count);

/// Keeps edges with at least one endpoint of degree >= min_degree, degrees taken
/// over the input set. Output is sorted and duplicate-free.
std::vector<std::int64_t> degree_filter(std::span<const std::int64_t> edges,
                                        std::int64_t region_count, std::int64_t min_degree);

}  // namespace connsig::stats
