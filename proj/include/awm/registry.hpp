#pragma once

#include <optional>
#include <string>
#include <vector>

#include "awm/operator.hpp"

namespace awm {

/// A benchmark problem. PDE problems carry a Problem1D with a manufactured
/// exact solution; approximation-only targets do not.
struct RegistryEntry {
  std::string id;
  std::string description;
  FunctionDescriptor target;  // the function whose rates are measured
  BasisKind basis;            // basis for approximation experiments
  std::optional<Problem1D> pde;
};

/// Descent tolerance of the reference coefficients attached to PDE problems.
inline constexpr double kReferenceTol = 1e-8;

std::vector<std::string> registry_ids();
/// Throws LookupError naming the available ids.
RegistryEntry registry_get(const std::string& id);

/// x^p (1 - x) with derivative and the points where it is not smooth.
ClosedForm power_bump(double p);

/// Hat coefficients of u computed by tree analysis to level 62.
SparseCoefficientVector reference_coefficients(const FunctionDescriptor& u,
                                               double descend_tol = kReferenceTol);

}  // namespace awm
