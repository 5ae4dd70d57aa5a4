#include "awm/basis.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

// 2^{n/2}, exact up to the rounding of sqrt(2).
double sqrt2_power(int n) {
  const int half = n >= 0 ? n / 2 : -((-n + 1) / 2);
  return std::ldexp(n - 2 * half == 1 ? std::numbers::sqrt2 : 1.0, half);
}

double dyadic(std::int64_t k, int j) {
  return std::ldexp(static_cast<double>(k), -j);
}

void require_hat_index(WaveletIndex index) {
  if (index.level < 0)
    throw DomainError("hierarchical hat basis has no level -1 function");
}

void require_point(double x) {
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError(fmt::format("point {} outside [0,1]", x));
}

}  // namespace

bool is_valid(WaveletIndex index) {
  if (index.level == -1) return index.position == 0;
  if (index.level < 0 || index.level > kMaxLevel) return false;
  return index.position >= 0 &&
         index.position < (std::int64_t{1} << index.level);
}

void require_valid(WaveletIndex index) {
  if (!is_valid(index))
    throw DomainError(fmt::format("invalid wavelet index {}", to_string(index)));
}

std::string to_string(WaveletIndex index) {
  return fmt::format("({},{})", index.level, index.position);
}

void require_valid(BasisKind basis) {
  if (basis.family == Family::Haar && basis.normalization != Normalization::L2)
    throw DomainError("Haar basis supports only L2 normalization");
}

std::string to_string(BasisKind basis) {
  const char* fam = basis.family == Family::Haar ? "haar" : "hat";
  const char* nrm = basis.normalization == Normalization::L2 ? "L2" : "H1semi";
  return fmt::format("{}/{}", fam, nrm);
}

Interval support(WaveletIndex index) {
  require_valid(index);
  if (index.level < 0) return {0.0, 1.0};
  return {dyadic(index.position, index.level),
          dyadic(index.position + 1, index.level)};
}

double hat_scale(WaveletIndex index, Normalization normalization) {
  const int j = index.level;
  return normalization == Normalization::H1Semi ? sqrt2_power(j + 2)
                                                : sqrt2_power(-j);
}

double evaluate(WaveletIndex index, BasisKind basis, double x) {
  require_valid(basis);
  require_valid(index);
  require_point(x);
  if (basis.family == Family::Haar) {
    if (index.level < 0) return 1.0;
    const Interval s = support(index);
    const double mid = 0.5 * (s.lo + s.hi);
    const double amp = sqrt2_power(index.level);
    const bool last = s.hi == 1.0 && x == 1.0;
    if (x < s.lo || (x >= s.hi && !last)) return 0.0;
    return x < mid ? amp : -amp;
  }
  require_hat_index(index);
  const Interval s = support(index);
  if (x <= s.lo || x >= s.hi) return 0.0;
  const double half = 0.5 * s.length();
  const double mid = s.lo + half;
  const double peak1 = x < mid ? (x - s.lo) / half : (s.hi - x) / half;
  return peak1 / hat_scale(index, basis.normalization);
}

double evaluate_derivative(WaveletIndex index, BasisKind basis, double x) {
  require_valid(basis);
  require_valid(index);
  require_point(x);
  if (basis.family == Family::Haar)
    throw DomainError("Haar functions have no derivative in L2");
  require_hat_index(index);
  const Interval s = support(index);
  const bool last = s.hi == 1.0 && x == 1.0;
  if (x < s.lo || (x >= s.hi && !last)) return 0.0;
  const double slope = 2.0 / s.length() / hat_scale(index, basis.normalization);
  return x < s.lo + 0.5 * s.length() ? slope : -slope;
}

PiecewisePolynomial as_piecewise(WaveletIndex index, BasisKind basis) {
  require_valid(basis);
  require_valid(index);
  if (basis.family == Family::Haar) {
    if (index.level < 0) return PiecewisePolynomial::constant(1.0);
    const Interval s = support(index);
    const double mid = 0.5 * (s.lo + s.hi);
    const double amp = sqrt2_power(index.level);
    std::vector<double> bps{0.0};
    std::vector<double> vals;
    if (s.lo > 0.0) {
      bps.push_back(s.lo);
      vals.push_back(0.0);
    }
    bps.push_back(mid);
    vals.push_back(amp);
    vals.push_back(-amp);
    if (s.hi < 1.0) {
      bps.push_back(s.hi);
      vals.push_back(0.0);
    }
    bps.push_back(1.0);
    return PiecewisePolynomial::piecewise_constant(std::move(bps), vals);
  }
  require_hat_index(index);
  const Interval s = support(index);
  const double mid = 0.5 * (s.lo + s.hi);
  const double slope = 2.0 / s.length() / hat_scale(index, basis.normalization);
  const double peak = 1.0 / hat_scale(index, basis.normalization);
  std::vector<double> bps{0.0};
  std::vector<std::vector<double>> pieces;
  if (s.lo > 0.0) {
    bps.push_back(s.lo);
    pieces.push_back({0.0});
  }
  bps.push_back(mid);
  pieces.push_back({0.0, slope});
  pieces.push_back({peak, -slope});
  if (s.hi < 1.0) {
    bps.push_back(s.hi);
    pieces.push_back({0.0});
  }
  bps.push_back(1.0);
  return PiecewisePolynomial(std::move(bps), std::move(pieces));
}

PiecewisePolynomial derivative_piecewise(WaveletIndex index, BasisKind basis) {
  if (basis.family == Family::Haar)
    throw DomainError("Haar functions have no derivative in L2");
  return as_piecewise(index, basis).derivative();
}

bool supports_overlap(WaveletIndex a, WaveletIndex b) {
  if (a.level < 0 || b.level < 0) return true;
  const WaveletIndex& coarse = a.level <= b.level ? a : b;
  const WaveletIndex& fine = a.level <= b.level ? b : a;
  return (fine.position >> (fine.level - coarse.level)) == coarse.position;
}

}  // namespace awm
