#pragma once

#include <cstdint>
#include <string>

namespace coalcount {

enum class Resolution { kingman, tajima, labeled, shape };

const char* resolution_name(Resolution r);
Resolution resolution_from_name(const std::string& name);

/// Estimator weight of one draw at a resolution: minus the draw's log proposal
/// probability, with the class coefficient folded in for the projected
/// resolutions (their proposal is coefficient * base probability).
double combine(Resolution resolution, double base_log_q, double log_coefficient);

/// Streaming mean/variance of weights given as logs. Values are held relative
/// to the running maximum, so any weight scale is safe; constant streams give
/// exactly zero variance.
class WeightAccumulator {
 public:
  /// log_weight must be finite.
  void add(double log_weight);
  void merge(const WeightAccumulator& other);

  std::uint64_t count() const { return count_; }
  double log_mean() const;      // log of the weight average
  double log_sum() const;
  double log_max() const { return shift_; }
  double cv2() const;           // sample variance over squared mean
  double max_weight_share() const;

 private:
  std::uint64_t count_ = 0;
  double shift_ = 0.0;  // current maximum log weight
  double mean_ = 0.0;   // mean of exp(log_weight - shift_)
  double m2_ = 0.0;     // sum of squared deviations, same scale
};

/// Finished estimate. `estimate` and `std_error` carry 6 significant digits in
/// scientific notation, built from the log so magnitudes beyond double range
/// survive; the numeric fields are log10-based for the same reason.
struct CountEstimate {
  Resolution resolution = Resolution::kingman;
  std::uint64_t n_draws = 0;
  std::string estimate;
  double log10_estimate = 0.0;
  std::string std_error;
  double rse = 0.0;   // std error over estimate
  double cv2 = 0.0;   // weight variance over squared mean weight
  double ess = 0.0;   // n_draws / (1 + cv2)
  double q_n = 0.0;   // largest weight's share of the weight sum
};

/// Needs at least two draws.
CountEstimate finalize(const WeightAccumulator& acc, Resolution resolution);

/// Scientific-notation decimal with 6 significant digits for exp(log_value);
/// "0" when log_value is -inf.
std::string decimal_from_log(double log_value);

}  // namespace coalcount
