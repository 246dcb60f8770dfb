#include "connsig/report.hpp"

#include <cmath>
#include <numeric>

namespace connsig {

TrialReport make_trial_report(std::vector<double> per_trial, std::size_t feature_budget,
                              std::uint64_t seed) {
  TrialReport r;
  r.trials = per_trial.size();
  r.feature_budget = feature_budget;
  r.seed = seed;
  if (!per_trial.empty()) {
    const double n = static_cast<double>(per_trial.size());
    r.mean_accuracy = std::accumulate(per_trial.begin(), per_trial.end(), 0.0) / n;
    if (per_trial.size() > 1) {
      double ss = 0.0;
      for (double a : per_trial) ss += (a - r.mean_accuracy) * (a - r.mean_accuracy);
      r.std_accuracy = std::sqrt(ss / (n - 1.0));
    }
  }
  r.per_trial = std::move(per_trial);
  return r;
}

}  // namespace connsig
