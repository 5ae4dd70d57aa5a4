#include "awm/function.hpp"

#include <algorithm>

#include "awm/errors.hpp"
#include "awm/quadrature.hpp"

namespace awm {

double evaluate(const FunctionDescriptor& f, double x) {
  if (const auto* p = std::get_if<PiecewisePolynomial>(&f)) return (*p)(x);
  const auto& c = std::get<ClosedForm>(f);
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError("closed-form evaluation outside [0,1]");
  return c.value(x);
}

bool has_derivative(const FunctionDescriptor& f) {
  if (std::holds_alternative<PiecewisePolynomial>(f)) return true;
  return static_cast<bool>(std::get<ClosedForm>(f).derivative);
}

FunctionDescriptor derivative_of(const FunctionDescriptor& f) {
  if (const auto* p = std::get_if<PiecewisePolynomial>(&f))
    return p->derivative();
  const auto& c = std::get<ClosedForm>(f);
  if (!c.derivative)
    throw DomainError("closed form '" + c.label + "' has no derivative");
  return ClosedForm{c.label + "'", c.derivative, {}, c.value,
                    c.singular_points};
}

std::vector<double> singular_points(const FunctionDescriptor& f) {
  if (const auto* p = std::get_if<PiecewisePolynomial>(&f))
    return p->interior_breakpoints();
  return std::get<ClosedForm>(f).singular_points;
}

bool is_exact(const FunctionDescriptor& f) {
  return std::holds_alternative<PiecewisePolynomial>(f);
}

std::string label_of(const FunctionDescriptor& f) {
  if (std::holds_alternative<PiecewisePolynomial>(f))
    return "piecewise-polynomial";
  return std::get<ClosedForm>(f).label;
}

double integrate(const FunctionDescriptor& f, Interval interval,
                 const std::vector<double>& extra_cuts, double abs_tol,
                 const std::string& context) {
  if (const auto* p = std::get_if<PiecewisePolynomial>(&f))
    return integrate_exact(*p, interval);
  const auto& c = std::get<ClosedForm>(f);
  std::vector<double> cuts = extra_cuts;
  cuts.insert(cuts.end(), c.singular_points.begin(), c.singular_points.end());
  return integrate_adaptive(c.value, interval, cuts, context,
                            {.abs_tol = abs_tol});
}

}  // namespace awm
