#include <gtest/gtest.h>

#include <set>

#include "connsig/error.hpp"
#include "connsig/fingerprint.hpp"
#include "connsig/stats.hpp"
#include "connsig/synth.hpp"

using namespace connsig;
using namespace connsig::synth;

TEST(Synth, DefaultShapes) {
  const SynthCohort c = generate_cohort({});
  EXPECT_EQ(c.g1.subjects(), 50);
  EXPECT_EQ(c.g1.features(), 4005);
  EXPECT_EQ(c.g2.region_count(), 90);
  EXPECT_EQ(c.signature_edges.size(), 60u);
  EXPECT_TRUE(std::is_sorted(c.signature_edges.begin(), c.signature_edges.end()));
  EXPECT_EQ(c.g1.subject_ids().front(), "sub001");
  EXPECT_TRUE(c.task_groups.empty());
}

TEST(Synth, Deterministic) {
  SynthConfig cfg;
  cfg.common_jitter = 0.4;
  const SynthCohort a = generate_cohort(cfg), b = generate_cohort(cfg);
  EXPECT_EQ(a.g1.values(), b.g1.values());
  EXPECT_EQ(a.g2.values(), b.g2.values());
  EXPECT_EQ(a.signature_edges, b.signature_edges);
  cfg.seed = 2;
  EXPECT_NE(generate_cohort(cfg).g1.values(), a.g1.values());
}

TEST(Synth, ValuesInsideOpenInterval) {
  SynthConfig cfg;
  cfg.signature_strength = 3.0;
  const SynthCohort c = generate_cohort(cfg);
  EXPECT_LT(c.g1.values().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LE(c.g2.values().cwiseAbs().maxCoeff(), 0.999);
}

TEST(Synth, NoiseFreeSessionsIdentical) {
  SynthConfig cfg;
  cfg.session_noise = 0;
  const SynthCohort c = generate_cohort(cfg);
  EXPECT_EQ(c.g1.values(), c.g2.values());
}

TEST(Synth, HubLocalization) {
  SynthConfig cfg;
  cfg.signature_regions = 12;
  const SynthCohort c = generate_cohort(cfg);
  ASSERT_EQ(c.hub_regions.size(), 12u);
  const std::set<std::int64_t> hubs(c.hub_regions.begin(), c.hub_regions.end());
  for (std::int64_t e : c.signature_edges) {
    const auto [i, j] = connectome::edge_regions(e, 90);
    EXPECT_TRUE(hubs.count(i) && hubs.count(j));
  }
}

TEST(Synth, Validation) {
  SynthConfig cfg;
  cfg.n_subjects = 1;
  EXPECT_THROW(generate_cohort(cfg), Error);
  cfg = {};
  cfg.n_signature_edges = 5000;
  EXPECT_THROW(generate_cohort(cfg), Error);
  cfg = {};
  cfg.session_noise = -0.1;
  EXPECT_THROW(generate_cohort(cfg), Error);
  cfg = {};
  cfg.signature_regions = 5;  // 10 edges cannot hold 60
  EXPECT_THROW(generate_cohort(cfg), Error);
}

TEST(SynthTasks, DisjointTaskEdges) {
  SynthConfig cfg;
  cfg.n_tasks = 4;
  const SynthCohort c = generate_task_cohort(cfg);
  ASSERT_EQ(c.task_edges.size(), 4u);
  std::set<std::int64_t> seen;
  for (const auto& edges : c.task_edges)
    for (std::int64_t e : edges) EXPECT_TRUE(seen.insert(e).second);
  EXPECT_EQ(c.task_groups.size(), 50u);
  EXPECT_EQ(c.task_groups[0].lr.subject_ids(), c.task_names);
  EXPECT_EQ(c.task_names[0], "task1");
}

TEST(SynthTasks, Errors) {
  SynthConfig cfg;
  cfg.n_tasks = 1;
  EXPECT_THROW(generate_task_cohort(cfg), Error);
  cfg.n_tasks = 3;
  cfg.n_regions = 10;
  cfg.n_signature_edges = 10;
  cfg.n_task_edges = 20;  // 60 > 45
  EXPECT_THROW(generate_task_cohort(cfg), Error);
}

TEST(SynthTasks, AggregateIsMadeOfTaskEdges) {
  // recurrent features across subjects' task matrices are planted task edges
  SynthConfig cfg;
  cfg.n_tasks = 4;
  const SynthCohort c = generate_task_cohort(cfg);
  std::vector<std::vector<std::int64_t>> sets;
  for (const auto& s : c.task_groups) {
    const auto f = fingerprint::select_features(s.lr, 100);
    sets.emplace_back(f.begin(), f.end());
  }
  const auto agg = stats::recurrent_features(sets, static_cast<std::size_t>(c.g1.features()), 1e-10);
  std::set<std::int64_t> uni;
  for (const auto& edges : c.task_edges) uni.insert(edges.begin(), edges.end());
  std::size_t hit = 0;
  for (std::int64_t e : agg.passed) hit += uni.count(e);
  EXPECT_GE(agg.passed.size(), 20u);
  EXPECT_GE(double(hit), 0.95 * double(agg.passed.size())) << hit << " of " << agg.passed.size();
}

TEST(SynthTasks, SessionExchangeable) {
  // swapping sessions leaves identification accuracy about the same
  const SynthCohort c = generate_cohort({});
  const double a = fingerprint::full_matrix_trial(c.g1, c.g2, 0.8, 30, 1).test.mean_accuracy;
  const double b = fingerprint::full_matrix_trial(c.g2, c.g1, 0.8, 30, 1).test.mean_accuracy;
  EXPECT_NEAR(a, b, 10.0);
}

TEST(SynthNames, Padding) {
  EXPECT_EQ(subject_name(0, 50), "sub001");
  EXPECT_EQ(subject_name(1233, 5000), "sub1234");
}
