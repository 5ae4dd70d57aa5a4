#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

#include "awm/piecewise_polynomial.hpp"

namespace awm {

/// Deepest level whose positions and dyadic coordinates stay exact in int64.
inline constexpr int kMaxLevel = 62;

/// Scale/position pair (j,k). Level -1 is the Haar scaling function e0.
struct WaveletIndex {
  int level = 0;
  std::int64_t position = 0;

  auto operator<=>(const WaveletIndex&) const = default;
};

inline constexpr WaveletIndex kScalingIndex{-1, 0};

bool is_valid(WaveletIndex index);
/// Throws DomainError for an invalid index.
void require_valid(WaveletIndex index);
std::string to_string(WaveletIndex index);

struct WaveletIndexHash {
  std::size_t operator()(WaveletIndex i) const noexcept {
    const auto k = static_cast<std::uint64_t>(i.position);
    return std::hash<std::uint64_t>{}(k * 0x9E3779B97F4A7C15ULL ^
                                      static_cast<std::uint64_t>(i.level + 1));
  }
};

enum class Family { Haar, HierarchicalHat };
enum class Normalization { L2, H1Semi };

/// Haar is L2-orthonormal only. For hats, L2 means the dilation family
/// 2^{j/2} phi(2^j x - k) of the unit-peak tent on [0,1] (uniformly L2
/// stable); H1Semi divides the unit-peak tent by its H1 seminorm.
struct BasisKind {
  Family family = Family::Haar;
  Normalization normalization = Normalization::L2;

  bool operator==(const BasisKind&) const = default;
};

inline constexpr BasisKind kHaar{Family::Haar, Normalization::L2};
inline constexpr BasisKind kHatH1{Family::HierarchicalHat, Normalization::H1Semi};
inline constexpr BasisKind kHatL2{Family::HierarchicalHat, Normalization::L2};

void require_valid(BasisKind basis);
std::string to_string(BasisKind basis);

/// [k 2^-j, (k+1) 2^-j], or [0,1] for the scaling function.
Interval support(WaveletIndex index);

/// Value of the unit-peak tent relative to the normalized basis function:
/// psi_normalized = unit_peak / scale. Haar returns 1.
double hat_scale(WaveletIndex index, Normalization normalization);

/// Basis function value. Haar pieces are right-open; x = 1 belongs to the
/// last piece. Throws DomainError for x outside [0,1].
double evaluate(WaveletIndex index, BasisKind basis, double x);

/// Derivative of a hat function (right-continuous). Haar has none.
double evaluate_derivative(WaveletIndex index, BasisKind basis, double x);

/// Exact piecewise-polynomial representation on [0,1].
PiecewisePolynomial as_piecewise(WaveletIndex index, BasisKind basis);
PiecewisePolynomial derivative_piecewise(WaveletIndex index, BasisKind basis);

/// Supports meet in a set of positive measure (dyadic supports are nested
/// or disjoint).
bool supports_overlap(WaveletIndex a, WaveletIndex b);

}  // namespace awm
