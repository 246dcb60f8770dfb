#pragma once

// Synthetic two-session cohorts with a known answer key. Edge e of subject p
// in session q is
//
//   clamp(mu_e + s_common * (1 + jitter * xi_pq) * c_e
//         + s_sig * [e in signature] * z_pe + s_noise * eta_pqe, -0.999, 0.999)
//
// mu_e ~ U(-0.3, 0.6) and c_e ~ N(0, 1) are drawn once per cohort, z_pe once
// per subject, eta and xi afresh per session. Task cohorts add
// task_strength * t_{task,e} on each task's planted edge set.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "connsig/connectome.hpp"
#include "connsig/fingerprint.hpp"

namespace connsig::synth {

struct SynthConfig {
  std::size_t n_subjects = 50;
  std::size_t n_regions = 90;
  std::size_t n_signature_edges = 60;
  double signature_strength = 0.25;
  double common_strength = 0.3;
  double session_noise = 0.12;
  std::size_t n_tasks = 0;  // 0 = rest only
  double task_strength = 0.3;
  std::uint64_t seed = 1;

  // Extensions beyond the base model; the defaults reproduce it exactly.
  std::size_t n_task_edges = 40;        // planted edges per task
  std::size_t signature_regions = 0;    // >0: signature edges lie inside this many hub regions
  double common_jitter = 0.0;           // session-specific amplitude of the common pattern
};

/// Throws if S > R(R-1)/2, a strength is negative, or n_subjects < 2.
void validate(const SynthConfig& cfg);

struct SynthCohort {
  connectome::GroupMatrix g1;
  connectome::GroupMatrix g2;
  std::vector<std::int64_t> signature_edges;  // ascending
  std::vector<std::int64_t> hub_regions;      // ascending; empty unless signature_regions > 0
  std::vector<fingerprint::TaskSubject> task_groups;
  std::vector<std::string> task_names;
  std::vector<std::vector<std::int64_t>> task_edges;  // per task, ascending
};

std::string subject_name(std::size_t index, std::size_t count);

SynthCohort generate_cohort(const SynthConfig& cfg);

/// Requires n_tasks >= 2; also fills g1/g2 with the resting cohort.
SynthCohort generate_task_cohort(const SynthConfig& cfg);

}  // namespace connsig::synth
