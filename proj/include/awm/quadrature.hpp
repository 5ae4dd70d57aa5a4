#pragma once

#include <functional>
#include <span>
#include <string_view>

#include "awm/piecewise_polynomial.hpp"

namespace awm {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  /// Also accept an error estimate below rel_tol * |integral|.
  double rel_tol = 0.0;
  int max_subintervals = 4000;
};

/// Globally adaptive Gauss-Legendre quadrature. The interval is first split
/// at every point of `forced` lying strictly inside it; afterwards the
/// subinterval with the largest error estimate is bisected until the summed
/// estimate drops below the tolerance. Integrable endpoint singularities are
/// handled by repeated bisection toward the offending point.
///
/// Throws QuadratureError (mentioning `context`) when the subinterval budget
/// runs out.
double integrate_adaptive(const std::function<double(double)>& f,
                          Interval interval, std::span<const double> forced,
                          std::string_view context,
                          const QuadratureOptions& options = {});

}  // namespace awm
