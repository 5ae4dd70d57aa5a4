#include "awm/analysis.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

struct Walker {
  const FunctionDescriptor& f;
  BasisKind basis;
  TreeOptions options;
  const PiecewisePolynomial* exact = nullptr;
  std::vector<SparseCoefficientVector::Entry> kept;
  std::vector<SparseCoefficientVector::Entry> frontier;

  // Children can be nonzero only where f is not reproduced exactly.
  bool subtree_may_be_nonzero(WaveletIndex index) const {
    if (!exact) return true;
    const auto shape = exact->local_shape(support(index));
    const int reproduced = basis.family == Family::Haar ? 0 : 1;
    return shape.has_interior_breakpoint || shape.degree > reproduced;
  }

  // Rounding floor of a hat surplus; keeps descent from chasing noise.
  double noise_floor(WaveletIndex index) const {
    if (basis.family == Family::Haar) return 0.0;
    const Interval s = support(index);
    const double m = 0.5 * (s.lo + s.hi);
    const double mag = std::abs(evaluate(f, s.lo)) + std::abs(evaluate(f, m)) +
                       std::abs(evaluate(f, s.hi));
    return 64.0 * std::numeric_limits<double>::epsilon() * mag *
           hat_scale(index, basis.normalization);
  }

  void visit(WaveletIndex index) {
    const double c = coefficient(f, index, basis);
    if (std::abs(c) >= kDropThreshold) kept.push_back({index, c});
    if (index.level < 0) return;
    if (!subtree_may_be_nonzero(index)) return;
    const bool forced = index.level < options.full_level;
    const bool significant =
        std::abs(c) > options.descend_tol &&
        (options.descend_tol == 0.0 || std::abs(c) > noise_floor(index));
    if (index.level >= options.max_level || !(forced || significant)) {
      frontier.push_back({index, c});
      return;
    }
    visit({index.level + 1, 2 * index.position});
    visit({index.level + 1, 2 * index.position + 1});
  }
};

}  // namespace

double level_weight(WaveletIndex index, double s) {
  if (s == 0.0 || index.level <= 0) return 1.0;
  return std::exp2(s * index.level);
}

double coefficient(const FunctionDescriptor& f, WaveletIndex index,
                   BasisKind basis) {
  require_valid(basis);
  require_valid(index);
  const Interval s = support(index);
  if (basis.family == Family::Haar) {
    const std::string context = "coefficient " + to_string(index);
    if (index.level < 0)
      return integrate(f, s, {}, kCoefficientQuadratureTol, context);
    const double mid = 0.5 * (s.lo + s.hi);
    const double amp = std::exp2(0.5 * index.level);
    const double tol = 0.5 * kCoefficientQuadratureTol / amp;
    const double left = integrate(f, {s.lo, mid}, {}, tol, context);
    const double right = integrate(f, {mid, s.hi}, {}, tol, context);
    return amp * (left - right);
  }
  if (index.level < 0)
    throw DomainError("hierarchical hat basis has no level -1 function");
  const double mid = 0.5 * (s.lo + s.hi);
  const double surplus =
      evaluate(f, mid) - 0.5 * (evaluate(f, s.lo) + evaluate(f, s.hi));
  return surplus * hat_scale(index, basis.normalization);
}

double TreeAnalysis::tail_estimate(double weight_s) const {
  double sum = 0.0;
  for (const auto& [index, c] : frontier) {
    const double w = level_weight(index, weight_s) * c;
    sum += w * w;
  }
  return kDescendantFactor * std::sqrt(sum);
}

TreeAnalysis analyze_tree(const FunctionDescriptor& f, BasisKind basis,
                          const TreeOptions& options) {
  require_valid(basis);
  if (options.max_level < 0 || options.max_level > kMaxLevel)
    throw DomainError(fmt::format("max_level {} outside [0, {}]",
                                  options.max_level, kMaxLevel));
  if (basis.family == Family::HierarchicalHat) {
    const double f0 = evaluate(f, 0.0), f1 = evaluate(f, 1.0);
    if (std::abs(f0) > 1e-14 || std::abs(f1) > 1e-14)
      throw DomainError(fmt::format(
          "hat expansion needs f(0) = f(1) = 0, got {} and {}", f0, f1));
  }
  Walker w{f, basis, options, nullptr, {}, {}};
  w.exact = std::get_if<PiecewisePolynomial>(&f);
  if (basis.family == Family::Haar) w.visit(kScalingIndex);
  w.visit({0, 0});
  TreeAnalysis out;
  out.coefficients = SparseCoefficientVector(basis, std::move(w.kept));
  out.frontier = std::move(w.frontier);
  out.max_level = options.max_level;
  return out;
}

SparseCoefficientVector analyze(const FunctionDescriptor& f, BasisKind basis,
                                int max_level) {
  return analyze_tree(f, basis,
                      {.max_level = max_level,
                       .descend_tol = 0.0,
                       .full_level = max_level})
      .coefficients;
}

double reconstruct(const SparseCoefficientVector& coeffs, double x) {
  double sum = 0.0;
  for (const auto& [index, c] : coeffs) sum += c * evaluate(index, coeffs.basis(), x);
  return sum;
}

double norm_equivalent(const SparseCoefficientVector& coeffs, double s) {
  if (s != 0.0 && coeffs.basis().normalization != Normalization::L2)
    throw DomainError("level-weighted norms expect L2-normalized coefficients");
  double sum = 0.0;
  for (const auto& [index, c] : coeffs) {
    const double w = level_weight(index, s) * c;
    sum += w * w;
  }
  return std::sqrt(sum);
}

}  // namespace awm
