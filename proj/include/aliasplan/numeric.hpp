#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace aliasplan {

/// Floor applied to probabilities before taking a logarithm.
inline constexpr double kWeightFloor = 1e-300;

/// Thrown when an input violates a documented precondition (bad file, bad
/// argument). The CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown when an internal guarantee breaks (bound inversion, loss of
/// positive definiteness). The CLI maps it to exit code 2.
class InvariantViolation : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// The observation has zero likelihood under every hypothesis (eta == 0).
class ObservationImpossible : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

inline double safe_log(double p) { return std::log(p < kWeightFloor ? kWeightFloor : p); }

/// p * ln(p) with the 0 * ln 0 = 0 convention.
inline double xlogx(double p) { return p <= 0.0 ? 0.0 : p * safe_log(p); }

/// Neumaier compensated summation.
class CompensatedSum {
  public:
    void add(double v) {
        const double t = sum_ + v;
        if (!std::isfinite(t)) {
            sum_ = t;
            return;
        }
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    [[nodiscard]] double value() const { return std::isfinite(sum_) ? sum_ + comp_ : sum_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// |a - b| <= rel * max(|a|, |b|, 1).
inline bool approx_equal(double a, double b, double rel) {
    const double scale = std::max({std::abs(a), std::abs(b), 1.0});
    return std::abs(a - b) <= rel * scale;
}

}  // namespace aliasplan
