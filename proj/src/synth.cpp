#include "connsig/synth.hpp"

#include <algorithm>
#include <cmath>

#include "connsig/error.hpp"
#include "connsig/rng.hpp"

namespace connsig::synth {

namespace {

// Substream purposes; each draw family gets its own counter stream.
enum Stream : std::uint64_t {
  kBaseline = 1,
  kCommon = 2,
  kSignatureSet = 3,
  kSubjectSignature = 4,
  kSessionNoise = 5,
  kSessionJitter = 6,
  kTaskEdges = 7,
  kTaskPattern = 8,
  kTaskNoise = 9,
};

constexpr double kClamp = 0.999;

std::uint64_t stream(std::uint64_t seed, Stream purpose, std::uint64_t index = 0) {
  return derive_seed(derive_seed(seed, purpose), index);
}

struct Population {
  Eigen::VectorXd baseline;  // mu_e + common pattern, without per-session jitter
  Eigen::VectorXd common;    // c_e
  std::vector<std::int64_t> signature;
  std::vector<std::int64_t> hubs;
  Eigen::MatrixXd subject_signature;  // n_subjects x S
};

Population draw_population(const SynthConfig& cfg) {
  const auto e = static_cast<std::size_t>(connectome::edge_count(static_cast<Eigen::Index>(cfg.n_regions)));
  Population pop;
  pop.baseline.resize(static_cast<Eigen::Index>(e));
  pop.common.resize(static_cast<Eigen::Index>(e));
  Rng base(stream(cfg.seed, kBaseline));
  for (auto& v : pop.baseline) v = base.uniform(-0.3, 0.6);
  Rng common(stream(cfg.seed, kCommon));
  for (auto& v : pop.common) v = common.normal();

  Rng pick(stream(cfg.seed, kSignatureSet));
  if (cfg.signature_regions > 0) {
    const std::vector<std::size_t> hubs = pick.sample_without_replacement(cfg.n_regions, cfg.signature_regions);
    std::vector<Eigen::Index> hub_idx(hubs.begin(), hubs.end());
    std::sort(hub_idx.begin(), hub_idx.end());
    pop.hubs.assign(hub_idx.begin(), hub_idx.end());
    const std::vector<Eigen::Index> candidates =
        connectome::restricted_edge_ids(hub_idx, static_cast<Eigen::Index>(cfg.n_regions));
    for (std::size_t k : pick.sample_without_replacement(candidates.size(), cfg.n_signature_edges))
      pop.signature.push_back(candidates[k]);
  } else {
    for (std::size_t k : pick.sample_without_replacement(e, cfg.n_signature_edges))
      pop.signature.push_back(static_cast<std::int64_t>(k));
  }
  std::sort(pop.signature.begin(), pop.signature.end());

  pop.subject_signature.resize(static_cast<Eigen::Index>(cfg.n_subjects),
                               static_cast<Eigen::Index>(pop.signature.size()));
  for (std::size_t p = 0; p < cfg.n_subjects; ++p) {
    Rng z(stream(cfg.seed, kSubjectSignature, p));
    for (Eigen::Index k = 0; k < pop.subject_signature.cols(); ++k)
      pop.subject_signature(static_cast<Eigen::Index>(p), k) = z.normal();
  }
  return pop;
}

/// Noise-free edge vector of subject p before session effects.
Eigen::VectorXd subject_mean(const SynthConfig& cfg, const Population& pop, std::size_t p) {
  Eigen::VectorXd v = pop.baseline;
  for (std::size_t k = 0; k < pop.signature.size(); ++k)
    v(pop.signature[k]) += cfg.signature_strength *
                           pop.subject_signature(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k));
  return v;
}

void add_session(Eigen::Ref<Eigen::VectorXd> v, const SynthConfig& cfg, const Population& pop,
                 std::uint64_t jitter_seed, std::uint64_t noise_seed) {
  double amplitude = 1.0;
  if (cfg.common_jitter > 0.0) {
    Rng jitter(jitter_seed);
    amplitude += cfg.common_jitter * jitter.normal();
  }
  v += cfg.common_strength * amplitude * pop.common;
  if (cfg.session_noise > 0.0) {
    Rng noise(noise_seed);
    for (auto& x : v) x += cfg.session_noise * noise.normal();
  }
  v = v.cwiseMax(-kClamp).cwiseMin(kClamp);
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_subjects < 2) fail_usage("synthetic cohort needs at least 2 subjects");
  if (cfg.n_regions < 2) fail_usage("synthetic cohort needs at least 2 regions");
  const auto e = static_cast<std::size_t>(connectome::edge_count(static_cast<Eigen::Index>(cfg.n_regions)));
  if (cfg.n_signature_edges > e) fail_usage("signature edge count exceeds R(R-1)/2");
  if (cfg.signature_regions > 0) {
    if (cfg.signature_regions > cfg.n_regions || cfg.signature_regions < 2)
      fail_usage("signature region count must lie in [2, R]");
    if (cfg.n_signature_edges > cfg.signature_regions * (cfg.signature_regions - 1) / 2)
      fail_usage("signature edges do not fit inside the hub regions");
  }
  for (double s : {cfg.signature_strength, cfg.common_strength, cfg.session_noise,
                   cfg.task_strength, cfg.common_jitter})
    if (!(s >= 0.0) || !std::isfinite(s)) fail_usage("strengths must be finite and non-negative");
}

std::string subject_name(std::size_t index, std::size_t count) {
  const std::size_t width = std::max<std::size_t>(3, std::to_string(count).size());
  std::string digits = std::to_string(index + 1);
  return "sub" + std::string(width - digits.size(), '0') + digits;
}

SynthCohort generate_cohort(const SynthConfig& cfg) {
  validate(cfg);
  const Population pop = draw_population(cfg);
  const auto regions = static_cast<Eigen::Index>(cfg.n_regions);
  const Eigen::Index e = connectome::edge_count(regions);
  const auto n = static_cast<Eigen::Index>(cfg.n_subjects);
  Eigen::MatrixXd s1(n, e), s2(n, e);
  std::vector<std::string> ids;
  for (std::size_t p = 0; p < cfg.n_subjects; ++p) {
    ids.push_back(subject_name(p, cfg.n_subjects));
    const Eigen::VectorXd mean = subject_mean(cfg, pop, p);
    for (std::uint64_t q = 0; q < 2; ++q) {
      Eigen::VectorXd v = mean;
      const std::uint64_t slot = 2 * p + q;
      add_session(v, cfg, pop, stream(cfg.seed, kSessionJitter, slot),
                  stream(cfg.seed, kSessionNoise, slot));
      (q == 0 ? s1 : s2).row(static_cast<Eigen::Index>(p)) = v.transpose();
    }
  }
  return SynthCohort{connectome::GroupMatrix(ids, std::move(s1), regions),
                     connectome::GroupMatrix(ids, std::move(s2), regions),
                     pop.signature,
                     pop.hubs,
                     {},
                     {},
                     {}};
}

SynthCohort generate_task_cohort(const SynthConfig& cfg) {
  if (cfg.n_tasks < 2) fail_usage("task cohort needs at least 2 tasks");
  SynthCohort cohort = generate_cohort(cfg);
  const Population pop = draw_population(cfg);
  const auto regions = static_cast<Eigen::Index>(cfg.n_regions);
  const auto e = static_cast<std::size_t>(connectome::edge_count(regions));
  if (cfg.n_tasks * cfg.n_task_edges > e) fail_usage("total planted task edges exceed R(R-1)/2");

  Rng pick(stream(cfg.seed, kTaskEdges));
  const std::vector<std::size_t> planted = pick.sample_without_replacement(e, cfg.n_tasks * cfg.n_task_edges);
  std::vector<Eigen::VectorXd> task_pattern;
  for (std::size_t task = 0; task < cfg.n_tasks; ++task) {
    std::vector<std::int64_t> edges(planted.begin() + static_cast<std::ptrdiff_t>(task * cfg.n_task_edges),
                                    planted.begin() + static_cast<std::ptrdiff_t>((task + 1) * cfg.n_task_edges));
    std::sort(edges.begin(), edges.end());
    Rng pattern(stream(cfg.seed, kTaskPattern, task));
    Eigen::VectorXd add = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e));
    for (std::int64_t edge : edges) add(edge) = cfg.task_strength * pattern.normal();
    task_pattern.push_back(std::move(add));
    cohort.task_edges.push_back(std::move(edges));
    cohort.task_names.push_back("task" + std::to_string(task + 1));
  }

  const auto n_tasks = static_cast<Eigen::Index>(cfg.n_tasks);
  for (std::size_t p = 0; p < cfg.n_subjects; ++p) {
    const Eigen::VectorXd mean = subject_mean(cfg, pop, p);
    Eigen::MatrixXd lr(n_tasks, static_cast<Eigen::Index>(e)), rl(n_tasks, static_cast<Eigen::Index>(e));
    for (std::size_t task = 0; task < cfg.n_tasks; ++task)
      for (std::uint64_t q = 0; q < 2; ++q) {
        Eigen::VectorXd v = mean + task_pattern[task];
        const std::uint64_t slot = (p * cfg.n_tasks + task) * 2 + q;
        add_session(v, cfg, pop, stream(cfg.seed, kSessionJitter, ~slot),
                    stream(cfg.seed, kTaskNoise, slot));
        (q == 0 ? lr : rl).row(static_cast<Eigen::Index>(task)) = v.transpose();
      }
    cohort.task_groups.push_back({subject_name(p, cfg.n_subjects),
                                  connectome::GroupMatrix(cohort.task_names, std::move(lr), regions),
                                  connectome::GroupMatrix(cohort.task_names, std::move(rl), regions)});
  }
  return cohort;
}

}  // namespace connsig::synth
