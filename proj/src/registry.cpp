#include "awm/registry.hpp"

#include <cmath>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

PiecewisePolynomial linear(double c0, double c1) {
  const double c[] = {c0, c1};
  return PiecewisePolynomial::polynomial(c);
}

// u = x^0.7 (1 - x), f = -((1 + b x) u')', G = -(1 + b x) u' with G' = f.
Problem1D singular_problem(const std::string& id, double b) {
  const double p = 0.7;
  const ClosedForm u = power_bump(p);
  const auto du = [p](double x) { return p * std::pow(x, p - 1) - (p + 1) * std::pow(x, p); };
  const auto d2u = [p](double x) {
    return p * (p - 1) * std::pow(x, p - 2) - (p + 1) * p * std::pow(x, p - 1);
  };
  ClosedForm f{fmt::format("-(({}+{}x) u')'", 1, b),
               [=](double x) { return -(b * du(x) + (1.0 + b * x) * d2u(x)); },
               {},
               [=](double x) { return -(1.0 + b * x) * du(x); },
               {0.0}};
  return Problem1D(id, linear(1.0, b), f, FunctionDescriptor(u),
                   reference_coefficients(u));
}

}  // namespace

ClosedForm power_bump(double p) {
  return ClosedForm{fmt::format("x^{}(1-x)", p),
                    [p](double x) { return std::pow(x, p) * (1.0 - x); },
                    [p](double x) { return p * std::pow(x, p - 1) - (p + 1) * std::pow(x, p); },
                    [p](double x) {
                      return std::pow(x, p + 1) / (p + 1) - std::pow(x, p + 2) / (p + 2);
                    },
                    {0.0}};
}

SparseCoefficientVector reference_coefficients(const FunctionDescriptor& u, double descend_tol) {
  return analyze_tree(u, kHatH1, {.max_level = kMaxLevel, .descend_tol = descend_tol})
      .coefficients;
}

std::vector<std::string> registry_ids() {
  return {"jump13", "singular07", "singular07-varcoef", "smooth"};
}

RegistryEntry registry_get(const std::string& id) {
  if (id == "smooth") {
    const double c[] = {0.0, 1.0, -1.0};
    const auto u = PiecewisePolynomial::polynomial(c);
    Problem1D pde("smooth", PiecewisePolynomial::constant(1.0),
                  PiecewisePolynomial::constant(2.0), FunctionDescriptor(u),
                  reference_coefficients(u));
    return {id, "u = x(1-x), a = 1", u, kHatH1, std::move(pde)};
  }
  if (id == "singular07") {
    auto pde = singular_problem(id, 0.0);
    return {id, "u = x^0.7(1-x), a = 1, singular at x = 0", power_bump(0.7), kHatH1,
            std::move(pde)};
  }
  if (id == "singular07-varcoef") {
    auto pde = singular_problem(id, 1.0);
    return {id, "u = x^0.7(1-x), a = 1+x, singular at x = 0", power_bump(0.7), kHatH1,
            std::move(pde)};
  }
  if (id == "jump13") {
    return {id, "f = indicator of [0,1/3), approximation only",
            PiecewisePolynomial::indicator(0.0, 1.0 / 3.0), kHaar, std::nullopt};
  }
  std::string known;
  for (const auto& k : registry_ids()) known += (known.empty() ? "" : ", ") + k;
  throw LookupError(fmt::format("unknown problem '{}'; available: {}", id, known));
}

}  // namespace awm
