#include "awm/nterm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

void require_weight(BasisKind basis, double weight_s) {
  if (weight_s != 0.0 && basis.normalization != Normalization::L2)
    throw DomainError(
        "a nonzero weight needs L2-normalized coefficients; use weight 0 for "
        "bases already normalized in the target norm");
}

// Entries ordered by decreasing weighted contribution, ties by index.
std::vector<SparseCoefficientVector::Entry> by_contribution(
    const SparseCoefficientVector& coeffs, double weight_s) {
  std::vector<SparseCoefficientVector::Entry> sorted(coeffs.begin(), coeffs.end());
  if (weight_s == 0.0) {
    std::sort(sorted.begin(), sorted.end(), magnitude_before);
  } else {
    std::sort(sorted.begin(), sorted.end(), [weight_s](const auto& a, const auto& b) {
      const double ca = contribution(a, weight_s), cb = contribution(b, weight_s);
      if (ca != cb) return ca > cb;
      return a.first < b.first;
    });
  }
  return sorted;
}

// suffix[k] = sum of squared contributions of sorted[k..].
std::vector<double> suffix_squares(
    const std::vector<SparseCoefficientVector::Entry>& sorted, double weight_s) {
  std::vector<double> suffix(sorted.size() + 1, 0.0);
  for (std::size_t k = sorted.size(); k-- > 0;) {
    const double c = contribution(sorted[k], weight_s);
    suffix[k] = suffix[k + 1] + c * c;
  }
  return suffix;
}

double frontier_tail_at_cap(const TreeAnalysis& tree, double weight_s) {
  double sum = 0.0;
  for (const auto& e : tree.frontier) {
    if (e.first.level < tree.max_level) continue;
    const double c = contribution(e, weight_s);
    sum += c * c;
  }
  return kDescendantFactor * std::sqrt(sum);
}

constexpr double kTailFraction = 0.01;
constexpr double kFirstDescendTol = 1e-3;
constexpr double kLastDescendTol = 1e-13;

// Refines the tree analysis until `errors_for` produces errors whose smallest
// positive value dominates the unresolved tail by the required factor.
template <class ErrorsFor>
std::vector<double> resolved_errors(const FunctionDescriptor& f, BasisKind basis,
                                    double weight_s, int max_level,
                                    ErrorsFor errors_for) {
  for (double tol = kFirstDescendTol;; tol *= 0.1) {
    const bool last = tol < kLastDescendTol;
    const TreeAnalysis tree = analyze_tree(
        f, basis, {.max_level = max_level, .descend_tol = last ? 0.0 : tol});
    std::vector<double> errors = errors_for(tree.coefficients);
    double smallest = std::numeric_limits<double>::infinity();
    for (double e : errors)
      if (e > 0.0) smallest = std::min(smallest, e);
    if (!std::isfinite(smallest)) smallest = 0.0;
    const double tail = tree.tail_estimate(weight_s);
    if (tail <= kTailFraction * smallest) return errors;
    const double capped = frontier_tail_at_cap(tree, weight_s);
    if (capped > kTailFraction * smallest || last)
      throw ResolutionError(
          fmt::format("analysis of {} to level {} leaves a tail of {:.3g}, above "
                      "1% of the smallest error {:.3g}",
                      label_of(f), max_level, tail, smallest),
          tail);
  }
}

double raw_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw InsufficientDataError("rate fit needs distinct N values");
  return (n * sxy - sx * sy) / denom;
}

}  // namespace

RateCurve::RateCurve(std::vector<RatePoint> points, double tolerance)
    : points_(std::move(points)), tolerance_(tolerance) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].n <= 0)
      throw DomainError(fmt::format("rate curve N must be positive, got {}", points_[i].n));
    if (!(points_[i].error >= 0.0))
      throw DomainError("rate curve errors must be nonnegative");
    if (i > 0 && points_[i].n <= points_[i - 1].n)
      throw DomainError("rate curve N values must be strictly increasing");
  }
}

std::vector<std::size_t> RateCurve::violations() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 1; i < points_.size(); ++i)
    if (points_[i].error > points_[i - 1].error + tolerance_) out.push_back(i);
  return out;
}

double contribution(const SparseCoefficientVector::Entry& e, double weight_s) {
  return level_weight(e.first, weight_s) * std::abs(e.second);
}

SparseCoefficientVector threshold_largest(const SparseCoefficientVector& coeffs,
                                          std::int64_t n, double weight_s) {
  if (n < 0) throw DomainError(fmt::format("N must be nonnegative, got {}", n));
  require_weight(coeffs.basis(), weight_s);
  if (static_cast<std::size_t>(n) >= coeffs.size()) return coeffs;
  auto sorted = by_contribution(coeffs, weight_s);
  sorted.resize(static_cast<std::size_t>(n));
  return SparseCoefficientVector(coeffs.basis(), std::move(sorted));
}

SparseCoefficientVector coarse(const SparseCoefficientVector& coeffs, double eps) {
  if (!(eps >= 0.0)) throw DomainError("coarse tolerance must be nonnegative");
  auto sorted = coeffs.by_magnitude();
  const auto suffix = suffix_squares(sorted, 0.0);
  std::size_t keep = sorted.size();
  while (keep > 0 && std::sqrt(suffix[keep - 1]) <= eps) --keep;
  sorted.resize(keep);
  return SparseCoefficientVector(coeffs.basis(), std::move(sorted));
}

RateCurve sigma_curve(const FunctionDescriptor& f, BasisKind basis,
                      double weight_s, std::span<const std::int64_t> n_list,
                      int max_level) {
  require_weight(basis, weight_s);
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw DomainError("N_list must be strictly increasing");
  const auto errors = resolved_errors(
      f, basis, weight_s, max_level, [&](const SparseCoefficientVector& c) {
        const auto suffix = suffix_squares(by_contribution(c, weight_s), weight_s);
        std::vector<double> out;
        for (auto n : n_list)
          out.push_back(std::sqrt(suffix[std::min<std::size_t>(n, c.size())]));
        return out;
      });
  std::vector<RatePoint> points;
  for (std::size_t i = 0; i < n_list.size(); ++i) points.push_back({n_list[i], errors[i]});
  return RateCurve(std::move(points), 1e-12);
}

RateCurve linear_curve(const FunctionDescriptor& f, BasisKind basis,
                       double weight_s, std::span<const int> j_list,
                       int max_level) {
  require_weight(basis, weight_s);
  for (std::size_t i = 0; i < j_list.size(); ++i) {
    if (j_list[i] < 0 || j_list[i] > kMaxLevel)
      throw DomainError(fmt::format("level {} out of range", j_list[i]));
    if (i > 0 && j_list[i] <= j_list[i - 1])
      throw DomainError("J_list must be strictly increasing");
  }
  const auto errors = resolved_errors(
      f, basis, weight_s, max_level, [&](const SparseCoefficientVector& c) {
        std::vector<double> out;
        for (int j : j_list) {
          double sum = 0.0;
          for (const auto& e : c)
            if (e.first.level >= j) {
              const double w = contribution(e, weight_s);
              sum += w * w;
            }
          out.push_back(std::sqrt(sum));
        }
        return out;
      });
  std::vector<RatePoint> points;
  for (std::size_t i = 0; i < j_list.size(); ++i)
    points.push_back({std::int64_t{1} << j_list[i], errors[i]});
  return RateCurve(std::move(points), 1e-12);
}

double fit_loglog_slope(std::span<const double> n, std::span<const double> error,
                        double window) {
  if (n.size() != error.size())
    throw DomainError("rate fit needs as many errors as N values");
  if (!(window > 0.0 && window <= 1.0))
    throw DomainError(fmt::format("rate window {} outside (0, 1]", window));
  const auto count = static_cast<std::size_t>(
      std::ceil(window * static_cast<double>(n.size()) - 1e-9));
  std::vector<double> x, y;
  for (std::size_t i = n.size() - count; i < n.size(); ++i) {
    if (!(error[i] > 0.0) || !(n[i] > 0.0)) continue;
    x.push_back(std::log(n[i]));
    y.push_back(std::log(error[i]));
  }
  if (x.size() < kMinFitPoints)
    throw InsufficientDataError(fmt::format(
        "rate fit needs at least {} positive errors in the window, got {}",
        kMinFitPoints, x.size()));
  return raw_slope(x, y);
}

double fit_rate(const RateCurve& curve, double window) {
  std::vector<double> n, e;
  for (const auto& p : curve.points()) {
    n.push_back(static_cast<double>(p.n));
    e.push_back(p.error);
  }
  return fit_loglog_slope(n, e, window);
}

bool is_super_polynomial(const RateCurve& curve) {
  std::vector<double> x, y;
  for (const auto& p : curve.points())
    if (p.error > 0.0) {
      x.push_back(std::log(static_cast<double>(p.n)));
      y.push_back(std::log(p.error));
    }
  if (x.size() < kMinFitPoints)
    throw InsufficientDataError("super-polynomial test needs at least 4 positive errors");
  const std::size_t half = x.size() / 2;
  const std::span<const double> xs(x), ys(y);
  const double lead = raw_slope(xs.first(half), ys.first(half));
  const double trail = raw_slope(xs.subspan(x.size() - half), ys.subspan(x.size() - half));
  return lead < 0.0 && trail <= 1.5 * lead;
}

}  // namespace awm
