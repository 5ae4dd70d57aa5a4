#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "awm/piecewise_polynomial.hpp"

namespace awm {

/// Closed-form function on [0,1] with the points where it stops being smooth.
/// Derivative and antiderivative are optional; routines that need them report
/// a DomainError when absent.
struct ClosedForm {
  std::string label;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> antiderivative;
  std::vector<double> singular_points;
};

/// Either an exactly integrable piecewise polynomial or a closed form that
/// goes through adaptive quadrature.
using FunctionDescriptor = std::variant<PiecewisePolynomial, ClosedForm>;

double evaluate(const FunctionDescriptor& f, double x);
/// Derivative as a descriptor (piecewise polynomials differentiate exactly).
FunctionDescriptor derivative_of(const FunctionDescriptor& f);
bool has_derivative(const FunctionDescriptor& f);
/// Singular points for closed forms, interior breakpoints for polynomials.
std::vector<double> singular_points(const FunctionDescriptor& f);
bool is_exact(const FunctionDescriptor& f);
std::string label_of(const FunctionDescriptor& f);

/// Integral over the interval: exact for piecewise polynomials, otherwise
/// adaptive Gauss-Legendre with subdivision forced at `extra_cuts` and at the
/// singular points.
double integrate(const FunctionDescriptor& f, Interval interval,
                 const std::vector<double>& extra_cuts, double abs_tol,
                 const std::string& context);

}  // namespace awm
