#pragma once

// Identification protocols on pairs of group matrices. G1 is the gallery, G2
// the probe set: each G2 subject is assigned the G1 subject whose restricted
// edge vector has the highest Pearson correlation with it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "connsig/connectome.hpp"
#include "connsig/report.hpp"
#include "connsig/sketch.hpp"

namespace connsig::fingerprint {

using connectome::GroupMatrix;
using FeatureList = std::vector<Eigen::Index>;

struct MatchResult {
  Eigen::MatrixXd similarity;  // probes (G2 rows) x gallery (G1 rows)
  std::vector<Eigen::Index> predicted;
  std::vector<bool> correct_mask;
  double accuracy_percent = 0.0;
  std::size_t ties = 0;  // probe rows whose maximum is shared
  std::vector<std::string> diagnostics;
};

struct SplitReports {
  TrialReport train;
  TrialReport test;
};

struct SubjectSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Leverage profile of the features x subjects matrix (no centering).
sketch::LeverageProfile feature_leverage(const GroupMatrix& g);

/// Top-t leverage features of the training group.
FeatureList select_features(const GroupMatrix& g_train, std::size_t t);

/// Argmax-correlation identification restricted to `features` (at least 2).
/// A constant restricted vector scores -inf against everything and is noted in
/// diagnostics. Ties resolve to the lowest gallery row and never count as correct.
MatchResult match_groups(const GroupMatrix& g1, const GroupMatrix& g2,
                         std::span<const Eigen::Index> features);

MatchResult full_matrix_match(const GroupMatrix& g1, const GroupMatrix& g2);

/// Seeded uniform split of G1's subjects; the training side gets
/// round(train_fraction * n) of them, and both sides need at least 2.
SubjectSplit draw_split(const std::vector<std::string>& subject_ids, double train_fraction,
                        std::uint64_t seed);

/// Rows of `g` for the given ids, in that order.
GroupMatrix rows_for(const GroupMatrix& g, const std::vector<std::string>& ids);

/// Per trial (seed + trial index): split, select top-t features on the G1
/// training rows, then score training and held-out subjects with them.
SplitReports split_trial(const GroupMatrix& g1, const GroupMatrix& g2, double train_fraction,
                         std::size_t t, std::size_t trials, std::uint64_t seed);

/// Null model: t features drawn uniformly without replacement each trial,
/// matched over all subjects.
TrialReport random_feature_trial(const GroupMatrix& g1, const GroupMatrix& g2, std::size_t t,
                                 std::size_t trials, std::uint64_t seed);

/// Mean held-out accuracy per budget. Every budget sees the same splits as
/// split_trial with the same seed, so each point equals that call's test mean.
SweepCurve sweep_feature_count(const GroupMatrix& g1, const GroupMatrix& g2,
                               std::span<const std::size_t> budgets, std::size_t trials,
                               std::uint64_t seed, double train_fraction = 0.8);

struct PcaAccuracy {
  double train = 0.0;
  double test = 0.0;
};

/// Principal-component denoising baseline. Components come from the centered
/// G1 training rows. Components 1..drop_leading and those past `keep` are
/// removed from every subject vector (training mean as origin); the part of a
/// vector outside the training span is left alone, so drop_leading = 0 with
/// keep = all reproduces full-matrix matching.
PcaAccuracy pca_denoise_match(const GroupMatrix& g1, const GroupMatrix& g2,
                              const SubjectSplit& split, std::size_t drop_leading,
                              std::optional<std::size_t> keep);

SplitReports pca_denoise_trial(const GroupMatrix& g1, const GroupMatrix& g2,
                               std::size_t drop_leading, std::optional<std::size_t> keep,
                               double train_fraction, std::size_t trials, std::uint64_t seed);

/// Full-feature matching on the same splits as split_trial: training subjects
/// and held-out subjects scored separately.
SplitReports full_matrix_trial(const GroupMatrix& g1, const GroupMatrix& g2,
                               double train_fraction, std::size_t trials, std::uint64_t seed);

/// One subject's task connectomes: rows are tasks (same order in both).
struct TaskSubject {
  std::string subject_id;
  GroupMatrix lr;
  GroupMatrix rl;
};

struct TaskReport {
  TrialReport report;
  bool degenerate = false;  // fewer than 2 tasks: identification is vacuous
  std::vector<std::size_t> aggregated_sizes;  // per trial; empty for full-feature runs
  std::vector<std::int64_t> last_aggregate;   // recurrent features of the final trial
};

/// Task identification with features aggregated across training subjects by
/// recurrence significance (see stats::recurrent_features).
TaskReport task_identification(const std::vector<TaskSubject>& subjects, double train_fraction,
                               std::size_t t, double pvalue_threshold, std::size_t trials,
                               std::uint64_t seed);

/// Same splits, matching tasks on every feature.
TaskReport task_identification_full(const std::vector<TaskSubject>& subjects,
                                    double train_fraction, std::size_t trials,
                                    std::uint64_t seed);

}  // namespace connsig::fingerprint
