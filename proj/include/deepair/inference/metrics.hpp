#pragma once

#include <cstddef>
#include <vector>

namespace deepair::inference {

inline constexpr double kMapeEpsilon = 1.0;

struct EvalResult {
  double mape_percent = 0.0;
  std::size_t samples = 0;   // pairs that entered the mean
  std::size_t excluded = 0;  // pairs with truth below epsilon
  std::vector<double> per_step_mape;  // forecast horizons, empty otherwise
  std::vector<std::size_t> per_step_samples;

  double accuracy_percent() const { return 100.0 - mape_percent; }
};

// Mean over all pairs of |truth - pred| / truth * 100. Pairs whose truth is
// below epsilon are excluded and counted; if every pair is excluded the
// metric is undefined and std::domain_error is thrown.
EvalResult mape(const std::vector<double>& predictions, const std::vector<double>& truths,
                double epsilon = kMapeEpsilon);

// Row-major [samples x steps] inputs; also fills the per-step breakdown.
EvalResult mape_by_step(const std::vector<double>& predictions, const std::vector<double>& truths, std::size_t steps,
                        double epsilon = kMapeEpsilon);

double mean_squared_error(const std::vector<double>& predictions, const std::vector<double>& truths);

}  // namespace deepair::inference
