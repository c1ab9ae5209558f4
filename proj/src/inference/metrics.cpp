#include "deepair/inference/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepair::inference {
namespace {

void require_pairs(const std::vector<double>& p, const std::vector<double>& t) {
  if (p.size() != t.size()) {
    throw std::invalid_argument("metric: " + std::to_string(p.size()) + " predictions vs " +
                                std::to_string(t.size()) + " truths");
  }
  if (p.empty()) throw std::invalid_argument("metric: no pairs");
}

}  // namespace

EvalResult mape_by_step(const std::vector<double>& predictions, const std::vector<double>& truths, std::size_t steps,
                        double epsilon) {
  require_pairs(predictions, truths);
  if (steps == 0 || predictions.size() % steps != 0) {
    throw std::invalid_argument("mape: pair count is not a multiple of the step count");
  }
  EvalResult r;
  std::vector<double> step_sum(steps, 0.0);
  r.per_step_samples.assign(steps, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double truth = truths[i];
    if (!std::isfinite(truth) || !std::isfinite(predictions[i])) {
      throw std::invalid_argument("mape: non-finite value at pair " + std::to_string(i));
    }
    if (truth < epsilon) {
      ++r.excluded;
      continue;
    }
    const double ape = std::fabs(truth - predictions[i]) / truth * 100.0;
    total += ape;
    step_sum[i % steps] += ape;
    ++r.per_step_samples[i % steps];
    ++r.samples;
  }
  if (r.samples == 0) {
    throw std::domain_error("mape: all " + std::to_string(r.excluded) + " pairs have truth below " +
                            std::to_string(epsilon));
  }
  r.mape_percent = total / static_cast<double>(r.samples);
  if (steps > 1) {
    for (std::size_t s = 0; s < steps; ++s) {
      r.per_step_mape.push_back(r.per_step_samples[s] ? step_sum[s] / static_cast<double>(r.per_step_samples[s])
                                                      : std::nan(""));
    }
  } else {
    r.per_step_samples.clear();
  }
  return r;
}

EvalResult mape(const std::vector<double>& predictions, const std::vector<double>& truths, double epsilon) {
  return mape_by_step(predictions, truths, 1, epsilon);
}

double mean_squared_error(const std::vector<double>& predictions, const std::vector<double>& truths) {
  require_pairs(predictions, truths);
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += (predictions[i] - truths[i]) * (predictions[i] - truths[i]);
  return s / static_cast<double>(predictions.size());
}

}  // namespace deepair::inference
