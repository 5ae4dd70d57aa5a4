#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "awm/analysis.hpp"

namespace awm {

struct RatePoint {
  std::int64_t n = 0;
  double error = 0.0;
};

/// Samples (N, error) with N strictly increasing. Increases of the error by
/// more than `tolerance` are kept but reported by violations().
class RateCurve {
 public:
  RateCurve() = default;
  explicit RateCurve(std::vector<RatePoint> points, double tolerance = 0.0);

  std::span<const RatePoint> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double tolerance() const { return tolerance_; }
  /// Positions i with error[i] > error[i-1] + tolerance.
  std::vector<std::size_t> violations() const;

 private:
  std::vector<RatePoint> points_;
  double tolerance_ = 0.0;
};

/// Weighted contribution 2^{s max(level,0)} |d| of one coefficient.
double contribution(const SparseCoefficientVector::Entry& e, double weight_s);

/// The N entries with the largest weighted contributions.
SparseCoefficientVector threshold_largest(const SparseCoefficientVector& coeffs,
                                          std::int64_t n, double weight_s);

/// Shortest magnitude-ordered prefix whose discarded tail has norm <= eps.
SparseCoefficientVector coarse(const SparseCoefficientVector& coeffs,
                               double eps);

/// Best N-term errors of f from a tree analysis refined until the unresolved
/// tail is below 1% of the smallest reported error.
RateCurve sigma_curve(const FunctionDescriptor& f, BasisKind basis,
                      double weight_s, std::span<const std::int64_t> n_list,
                      int max_level);

/// Uniform-refinement errors: all coefficients below level J kept, N = 2^J.
RateCurve linear_curve(const FunctionDescriptor& f, BasisKind basis,
                       double weight_s, std::span<const int> j_list,
                       int max_level);

inline constexpr double kDefaultRateWindow = 0.5;
inline constexpr std::size_t kMinFitPoints = 4;

/// Least-squares slope of log(error) against log(N) over the trailing
/// `window` fraction of the points. Zero errors are skipped.
double fit_rate(const RateCurve& curve, double window = kDefaultRateWindow);
double fit_loglog_slope(std::span<const double> n, std::span<const double> error,
                        double window = kDefaultRateWindow);

/// True when the log-log slope over the trailing half is at least 1.5 times
/// steeper than over the leading half (e.g. geometric decay in N).
bool is_super_polynomial(const RateCurve& curve);

}  // namespace awm
