#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace connsig {

/// Accuracy summary over repeated seeded trials. Accuracies are percentages.
struct TrialReport {
  std::size_t trials = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample (n-1) deviation, 0 for a single trial
  std::vector<double> per_trial;
  std::size_t feature_budget = 0;
  std::uint64_t seed = 0;
};

TrialReport make_trial_report(std::vector<double> per_trial, std::size_t feature_budget,
                              std::uint64_t seed);

/// Mean test accuracy as a function of feature budget.
struct SweepCurve {
  std::vector<std::size_t> budgets;  // strictly ascending
  std::vector<double> accuracies;
};

}  // namespace connsig
