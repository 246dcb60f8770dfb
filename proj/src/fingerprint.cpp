#include "connsig/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "connsig/error.hpp"
#include "connsig/rng.hpp"
#include "connsig/stats.hpp"

namespace connsig::fingerprint {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Standardized {
  Eigen::MatrixXd unit;     // one centered, unit-norm column per subject
  std::vector<bool> valid;  // false for constant vectors
};

Standardized standardize(const Eigen::MatrixXd& rows, std::span<const Eigen::Index> features) {
  const auto f = static_cast<Eigen::Index>(features.size());
  Standardized s;
  s.unit.resize(f, rows.rows());
  s.valid.assign(static_cast<std::size_t>(rows.rows()), true);
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    auto col = s.unit.col(r);
    for (Eigen::Index k = 0; k < f; ++k) col(k) = rows(r, features[static_cast<std::size_t>(k)]);
    const double scale = std::max(1.0, col.cwiseAbs().maxCoeff());
    col.array() -= col.mean();
    const double norm = col.norm();
    if (norm <= 1e-12 * scale * std::sqrt(double(f))) {
      s.valid[static_cast<std::size_t>(r)] = false;
      col.setZero();
    } else {
      col /= norm;
    }
  }
  return s;
}

void check_features(std::span<const Eigen::Index> features, Eigen::Index feature_count) {
  if (features.size() < 2) fail_usage("correlation needs >=2 features");
  for (Eigen::Index f : features)
    if (f < 0 || f >= feature_count)
      fail_usage("feature index " + std::to_string(f) + " out of range [0, " +
                 std::to_string(feature_count) + ")");
}

/// Identification on raw matrices whose rows are aligned by `probe_truth`:
/// probe r belongs to gallery row probe_truth[r].
MatchResult match_rows(const Eigen::MatrixXd& gallery, const Eigen::MatrixXd& probes,
                       std::span<const Eigen::Index> features,
                       const std::vector<Eigen::Index>& probe_truth,
                       const std::vector<std::string>& gallery_ids,
                       const std::vector<std::string>& probe_ids) {
  const Standardized g = standardize(gallery, features);
  const Standardized p = standardize(probes, features);
  MatchResult m;
  const Eigen::Index np = probes.rows();
  const Eigen::Index ng = gallery.rows();
  for (Eigen::Index c = 0; c < ng; ++c)
    if (!g.valid[static_cast<std::size_t>(c)])
      m.diagnostics.push_back("gallery subject '" + gallery_ids[static_cast<std::size_t>(c)] +
                              "' is constant on the selected features");
  for (Eigen::Index r = 0; r < np; ++r)
    if (!p.valid[static_cast<std::size_t>(r)])
      m.diagnostics.push_back("probe subject '" + probe_ids[static_cast<std::size_t>(r)] +
                              "' is constant on the selected features");

  m.similarity.resize(np, ng);
  for (Eigen::Index r = 0; r < np; ++r)
    for (Eigen::Index c = 0; c < ng; ++c)
      m.similarity(r, c) = p.valid[static_cast<std::size_t>(r)] && g.valid[static_cast<std::size_t>(c)]
                               ? p.unit.col(r).dot(g.unit.col(c))
                               : kNegInf;

  std::size_t correct = 0;
  m.predicted.resize(static_cast<std::size_t>(np));
  m.correct_mask.resize(static_cast<std::size_t>(np));
  for (Eigen::Index r = 0; r < np; ++r) {
    Eigen::Index best = 0;
    std::size_t hits = 1;
    for (Eigen::Index c = 1; c < ng; ++c) {
      const double v = m.similarity(r, c);
      if (v > m.similarity(r, best)) {
        best = c;
        hits = 1;
      } else if (v == m.similarity(r, best)) {
        ++hits;
      }
    }
    const bool tie = hits > 1;
    if (tie) ++m.ties;
    const bool ok = !tie && best == probe_truth[static_cast<std::size_t>(r)];
    m.predicted[static_cast<std::size_t>(r)] = best;
    m.correct_mask[static_cast<std::size_t>(r)] = ok;
    if (ok) ++correct;
  }
  m.accuracy_percent = np == 0 ? 0.0 : 100.0 * double(correct) / double(np);
  return m;
}

std::vector<Eigen::Index> truth_for(const GroupMatrix& g1, const GroupMatrix& g2) {
  if (g1.features() != g2.features())
    fail_data("group matrices have different feature counts (" + std::to_string(g1.features()) +
              " vs " + std::to_string(g2.features()) + ")");
  if (g1.subjects() != g2.subjects())
    fail_data("group matrices hold different subject sets");
  std::vector<Eigen::Index> truth;
  truth.reserve(static_cast<std::size_t>(g2.subjects()));
  for (const auto& id : g2.subject_ids()) {
    auto it = std::find(g1.subject_ids().begin(), g1.subject_ids().end(), id);
    if (it == g1.subject_ids().end())
      fail_data("subject '" + id + "' of the second group is missing from the first");
    truth.push_back(static_cast<Eigen::Index>(it - g1.subject_ids().begin()));
  }
  return truth;
}

FeatureList all_features(Eigen::Index count) {
  FeatureList f(static_cast<std::size_t>(count));
  std::iota(f.begin(), f.end(), Eigen::Index{0});
  return f;
}

void check_trials(std::size_t trials) {
  if (trials == 0) fail_usage("trial count must be positive");
}

struct TrialGroups {
  GroupMatrix g1_train, g2_train, g1_test, g2_test;
};

TrialGroups split_groups(const GroupMatrix& g1, const GroupMatrix& g2, const SubjectSplit& s) {
  return {rows_for(g1, s.train), rows_for(g2, s.train), rows_for(g1, s.test), rows_for(g2, s.test)};
}

}  // namespace

sketch::LeverageProfile feature_leverage(const GroupMatrix& g) {
  return sketch::leverage_scores(sketch::FeatureMatrix(g.values().transpose()));
}

FeatureList select_features(const GroupMatrix& g_train, std::size_t t) {
  return sketch::top_t_features(feature_leverage(g_train), t);
}

MatchResult match_groups(const GroupMatrix& g1, const GroupMatrix& g2,
                         std::span<const Eigen::Index> features) {
  const std::vector<Eigen::Index> truth = truth_for(g1, g2);
  check_features(features, g1.features());
  return match_rows(g1.values(), g2.values(), features, truth, g1.subject_ids(), g2.subject_ids());
}

MatchResult full_matrix_match(const GroupMatrix& g1, const GroupMatrix& g2) {
  const FeatureList all = all_features(g1.features());
  return match_groups(g1, g2, all);
}

SubjectSplit draw_split(const std::vector<std::string>& subject_ids, double train_fraction,
                        std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail_usage("train fraction must lie strictly between 0 and 1");
  const std::size_t n = subject_ids.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * double(n)));
  if (n_train < 2 || n - n_train < 2)
    fail_usage("split of " + std::to_string(n) + " subjects at " + std::to_string(train_fraction) +
               " leaves fewer than 2 subjects on one side");
  std::vector<std::string> order = subject_ids;
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  SubjectSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return s;
}

GroupMatrix rows_for(const GroupMatrix& g, const std::vector<std::string>& ids) {
  std::vector<Eigen::Index> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) rows.push_back(g.row_of(id));
  return g.select_rows(rows);
}

SplitReports split_trial(const GroupMatrix& g1, const GroupMatrix& g2, double train_fraction,
                         std::size_t t, std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  truth_for(g1, g2);
  if (t > static_cast<std::size_t>(g1.features())) fail_usage("budget exceeds feature count");
  std::vector<double> train_acc, test_acc;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const SubjectSplit split = draw_split(g1.subject_ids(), train_fraction, seed + trial);
    const TrialGroups tg = split_groups(g1, g2, split);
    const FeatureList features = select_features(tg.g1_train, t);
    train_acc.push_back(match_groups(tg.g1_train, tg.g2_train, features).accuracy_percent);
    test_acc.push_back(match_groups(tg.g1_test, tg.g2_test, features).accuracy_percent);
  }
  return {make_trial_report(std::move(train_acc), t, seed),
          make_trial_report(std::move(test_acc), t, seed)};
}

TrialReport random_feature_trial(const GroupMatrix& g1, const GroupMatrix& g2, std::size_t t,
                                 std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  const std::vector<Eigen::Index> truth = truth_for(g1, g2);
  const auto e = static_cast<std::size_t>(g1.features());
  if (t > e) fail_usage("budget exceeds feature count");
  if (t < 2) fail_usage("correlation needs >=2 features");
  std::vector<double> acc;
  acc.reserve(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(seed + trial);
    const std::vector<std::size_t> drawn = rng.sample_without_replacement(e, t);
    const FeatureList features(drawn.begin(), drawn.end());
    acc.push_back(match_rows(g1.values(), g2.values(), features, truth, g1.subject_ids(),
                             g2.subject_ids())
                      .accuracy_percent);
  }
  return make_trial_report(std::move(acc), t, seed);
}

SweepCurve sweep_feature_count(const GroupMatrix& g1, const GroupMatrix& g2,
                               std::span<const std::size_t> budgets, std::size_t trials,
                               std::uint64_t seed, double train_fraction) {
  check_trials(trials);
  truth_for(g1, g2);
  if (budgets.empty()) fail_usage("sweep needs at least one budget");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] < 2) fail_usage("correlation needs >=2 features");
    if (budgets[i] > static_cast<std::size_t>(g1.features()))
      fail_usage("budget exceeds feature count");
    if (i > 0 && budgets[i] <= budgets[i - 1]) fail_usage("budgets must be strictly ascending");
  }
  std::vector<double> sums(budgets.size(), 0.0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const SubjectSplit split = draw_split(g1.subject_ids(), train_fraction, seed + trial);
    const TrialGroups tg = split_groups(g1, g2, split);
    const sketch::LeverageProfile profile = feature_leverage(tg.g1_train);
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      const FeatureList features = sketch::top_t_features(profile, budgets[b]);
      sums[b] += match_groups(tg.g1_test, tg.g2_test, features).accuracy_percent;
    }
  }
  SweepCurve curve;
  curve.budgets.assign(budgets.begin(), budgets.end());
  for (double s : sums) curve.accuracies.push_back(s / double(trials));
  return curve;
}

PcaAccuracy pca_denoise_match(const GroupMatrix& g1, const GroupMatrix& g2,
                              const SubjectSplit& split, std::size_t drop_leading,
                              std::optional<std::size_t> keep) {
  truth_for(g1, g2);
  const TrialGroups tg = split_groups(g1, g2, split);
  const Eigen::MatrixXd& x = tg.g1_train.values();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  if (drop_leading >= static_cast<std::size_t>(std::min(x.rows(), x.cols())))
    fail_usage("drop_leading must be below min(training subjects, features)");

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const double tol = sketch::rank_tolerance(sigma(0), centered.rows(), centered.cols());
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(sigma.size()) && sigma(static_cast<Eigen::Index>(rank)) > tol)
    ++rank;
  const std::size_t last = keep ? std::min(*keep, rank) : rank;
  if (drop_leading >= last) fail_usage("empty retained component set");

  std::vector<Eigen::Index> removed;
  for (std::size_t j = 0; j < rank; ++j)
    if (j < drop_leading || j >= last) removed.push_back(static_cast<Eigen::Index>(j));
  Eigen::MatrixXd basis(x.cols(), static_cast<Eigen::Index>(removed.size()));
  for (std::size_t k = 0; k < removed.size(); ++k)
    basis.col(static_cast<Eigen::Index>(k)) = svd.matrixV().col(removed[k]);

  auto denoise = [&](const GroupMatrix& g) {
    if (removed.empty()) return g;
    const Eigen::MatrixXd coeff = (g.values().rowwise() - mean) * basis;
    return GroupMatrix(g.subject_ids(), g.values() - coeff * basis.transpose(), g.region_count());
  };
  PcaAccuracy acc;
  acc.train = full_matrix_match(denoise(tg.g1_train), denoise(tg.g2_train)).accuracy_percent;
  acc.test = full_matrix_match(denoise(tg.g1_test), denoise(tg.g2_test)).accuracy_percent;
  return acc;
}

SplitReports pca_denoise_trial(const GroupMatrix& g1, const GroupMatrix& g2,
                               std::size_t drop_leading, std::optional<std::size_t> keep,
                               double train_fraction, std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  std::vector<double> train_acc, test_acc;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const SubjectSplit split = draw_split(g1.subject_ids(), train_fraction, seed + trial);
    const PcaAccuracy a = pca_denoise_match(g1, g2, split, drop_leading, keep);
    train_acc.push_back(a.train);
    test_acc.push_back(a.test);
  }
  const auto budget = static_cast<std::size_t>(g1.features());
  return {make_trial_report(std::move(train_acc), budget, seed),
          make_trial_report(std::move(test_acc), budget, seed)};
}

SplitReports full_matrix_trial(const GroupMatrix& g1, const GroupMatrix& g2,
                               double train_fraction, std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  truth_for(g1, g2);
  std::vector<double> train_acc, test_acc;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const SubjectSplit split = draw_split(g1.subject_ids(), train_fraction, seed + trial);
    const TrialGroups tg = split_groups(g1, g2, split);
    train_acc.push_back(full_matrix_match(tg.g1_train, tg.g2_train).accuracy_percent);
    test_acc.push_back(full_matrix_match(tg.g1_test, tg.g2_test).accuracy_percent);
  }
  const auto budget = static_cast<std::size_t>(g1.features());
  return {make_trial_report(std::move(train_acc), budget, seed),
          make_trial_report(std::move(test_acc), budget, seed)};
}

namespace {

std::vector<std::string> check_task_subjects(const std::vector<TaskSubject>& subjects) {
  if (subjects.empty()) fail_data("task identification needs subjects");
  const std::vector<std::string>& tasks = subjects.front().lr.subject_ids();
  std::set<std::string> seen;
  for (const TaskSubject& s : subjects) {
    if (!seen.insert(s.subject_id).second) fail_data("duplicate subject id '" + s.subject_id + "'");
    if (s.lr.subject_ids() != tasks || s.rl.subject_ids() != tasks)
      fail_data("subject '" + s.subject_id + "' does not share the task row ordering");
    if (s.lr.features() != subjects.front().lr.features() ||
        s.rl.features() != subjects.front().lr.features())
      fail_data("subject '" + s.subject_id + "' has a different feature count");
  }
  std::vector<std::string> ids;
  for (const TaskSubject& s : subjects) ids.push_back(s.subject_id);
  return ids;
}

template <typename FeatureFn>
TaskReport run_task_trials(const std::vector<TaskSubject>& subjects, double train_fraction,
                           std::size_t trials, std::uint64_t seed, std::size_t budget,
                           FeatureFn&& features_for) {
  check_trials(trials);
  const std::vector<std::string> ids = check_task_subjects(subjects);
  TaskReport out;
  const std::size_t n_tasks = subjects.front().lr.subject_ids().size();
  std::vector<double> acc;
  if (n_tasks < 2) {
    out.degenerate = true;
    acc.assign(trials, 100.0);
    out.report = make_trial_report(std::move(acc), budget, seed);
    return out;
  }
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const SubjectSplit split = draw_split(ids, train_fraction, seed + trial);
    auto lookup = [&](const std::string& id) -> const TaskSubject& {
      return *std::find_if(subjects.begin(), subjects.end(),
                           [&](const TaskSubject& s) { return s.subject_id == id; });
    };
    std::vector<const TaskSubject*> train;
    for (const auto& id : split.train) train.push_back(&lookup(id));
    const FeatureList features = features_for(train, out);
    std::size_t correct = 0, total = 0;
    for (const auto& id : split.test) {
      const TaskSubject& s = lookup(id);
      const MatchResult m = match_groups(s.lr, s.rl, features);
      correct += static_cast<std::size_t>(std::count(m.correct_mask.begin(), m.correct_mask.end(), true));
      total += m.correct_mask.size();
    }
    acc.push_back(100.0 * double(correct) / double(total));
  }
  out.report = make_trial_report(std::move(acc), budget, seed);
  return out;
}

}  // namespace

TaskReport task_identification(const std::vector<TaskSubject>& subjects, double train_fraction,
                               std::size_t t, double pvalue_threshold, std::size_t trials,
                               std::uint64_t seed) {
  check_task_subjects(subjects);
  const auto e = static_cast<std::size_t>(subjects.front().lr.features());
  if (t > e) fail_usage("budget exceeds feature count");
  return run_task_trials(
      subjects, train_fraction, trials, seed, t,
      [&](const std::vector<const TaskSubject*>& train, TaskReport& out) {
        std::vector<std::vector<std::int64_t>> sets;
        for (const TaskSubject* s : train) {
          const FeatureList f = select_features(s->lr, t);
          sets.emplace_back(f.begin(), f.end());
        }
        const stats::EnrichmentSet agg = stats::recurrent_features(sets, e, pvalue_threshold);
        if (agg.passed.size() < 2)
          fail_numeric("threshold too strict: " + std::to_string(agg.passed.size()) +
                       " recurrent feature(s) survive");
        out.aggregated_sizes.push_back(agg.passed.size());
        out.last_aggregate = agg.passed;
        return FeatureList(agg.passed.begin(), agg.passed.end());
      });
}

TaskReport task_identification_full(const std::vector<TaskSubject>& subjects,
                                    double train_fraction, std::size_t trials,
                                    std::uint64_t seed) {
  check_task_subjects(subjects);
  const Eigen::Index e = subjects.front().lr.features();
  const FeatureList all = all_features(e);
  return run_task_trials(subjects, train_fraction, trials, seed, static_cast<std::size_t>(e),
                         [&](const std::vector<const TaskSubject*>&, TaskReport&) { return all; });
}

}  // namespace connsig::fingerprint
