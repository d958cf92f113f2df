#include "coalcount/estimator.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "coalcount/errors.hpp"

namespace coalcount {

const char* resolution_name(Resolution r) {
  switch (r) {
    case Resolution::kingman: return "kingman";
    case Resolution::tajima: return "tajima";
    case Resolution::labeled: return "labeled";
    case Resolution::shape: return "shape";
  }
  return "?";
}

Resolution resolution_from_name(const std::string& name) {
  if (name == "kingman") return Resolution::kingman;
  if (name == "tajima") return Resolution::tajima;
  if (name == "labeled") return Resolution::labeled;
  if (name == "shape") return Resolution::shape;
  throw ConfigError("unknown resolution '" + name + "'");
}

double combine(Resolution resolution, double base_log_q, double log_coefficient) {
  switch (resolution) {
    case Resolution::kingman:
    case Resolution::tajima:
      return -base_log_q;
    case Resolution::labeled:
    case Resolution::shape:
      return -(base_log_q + log_coefficient);
  }
  return 0.0;
}

void WeightAccumulator::add(double log_weight) {
  if (!std::isfinite(log_weight))
    throw std::invalid_argument("non-finite log weight rejected");
  if (count_ == 0) {
    shift_ = log_weight;
    mean_ = 1.0;
    m2_ = 0.0;
    count_ = 1;
    return;
  }
  if (log_weight > shift_) {
    // Rescale the moments to the new maximum.
    const double scale = std::exp(shift_ - log_weight);
    mean_ *= scale;
    m2_ *= scale * scale;
    shift_ = log_weight;
  }
  const double x = std::exp(log_weight - shift_);
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / double(count_);
  m2_ += delta * (x - mean_);
}

void WeightAccumulator::merge(const WeightAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  double a_mean = mean_, a_m2 = m2_;
  double b_mean = other.mean_, b_m2 = other.m2_;
  const double shift = shift_ > other.shift_ ? shift_ : other.shift_;
  {
    const double sa = std::exp(shift_ - shift);
    a_mean *= sa;
    a_m2 *= sa * sa;
    const double sb = std::exp(other.shift_ - shift);
    b_mean *= sb;
    b_m2 *= sb * sb;
  }
  const double na = double(count_), nb = double(other.count_);
  const double delta = b_mean - a_mean;
  const double total = na + nb;
  shift_ = shift;
  mean_ = a_mean + delta * nb / total;
  m2_ = a_m2 + b_m2 + delta * delta * na * nb / total;
  count_ += other.count_;
}

double WeightAccumulator::log_mean() const {
  if (count_ == 0) return -std::numeric_limits<double>::infinity();
  return shift_ + std::log(mean_);
}

double WeightAccumulator::log_sum() const {
  if (count_ == 0) return -std::numeric_limits<double>::infinity();
  return log_mean() + std::log(double(count_));
}

double WeightAccumulator::cv2() const {
  if (count_ < 2 || mean_ == 0.0) return 0.0;
  const double variance = m2_ / double(count_ - 1);
  return variance / (mean_ * mean_);
}

double WeightAccumulator::max_weight_share() const {
  if (count_ == 0) return 0.0;
  return 1.0 / (double(count_) * mean_);
}

CountEstimate finalize(const WeightAccumulator& acc, Resolution resolution) {
  if (acc.count() < 2) throw ConfigError("estimate needs at least 2 draws");
  CountEstimate out;
  out.resolution = resolution;
  out.n_draws = acc.count();

  const double log_estimate = acc.log_mean();
  out.log10_estimate = log_estimate / std::log(10.0);
  out.estimate = decimal_from_log(log_estimate);

  out.cv2 = acc.cv2();
  out.ess = double(acc.count()) / (1.0 + out.cv2);
  out.q_n = acc.max_weight_share();
  out.rse = std::sqrt(out.cv2 / double(acc.count()));
  // SE = sqrt(Var/n) = estimate * rse, computed in logs to survive any scale.
  const double log_se = out.rse > 0.0 ? log_estimate + std::log(out.rse)
                                      : -std::numeric_limits<double>::infinity();
  out.std_error = decimal_from_log(log_se);
  return out;
}

std::string decimal_from_log(double log_value) {
  if (log_value == -std::numeric_limits<double>::infinity()) return "0";
  const double log10_value = log_value / std::log(10.0);
  double exponent = std::floor(log10_value);
  double mantissa = std::pow(10.0, log10_value - exponent);
  // Rounding to 6 digits can carry the mantissa to 10.
  if (mantissa >= 9.9999995) {
    mantissa = 1.0;
    exponent += 1.0;
  }
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.5fe%+03d", mantissa, int(exponent));
  return buffer;
}

}  // namespace coalcount
