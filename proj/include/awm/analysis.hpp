#pragma once

#include <vector>

#include "awm/coefficients.hpp"
#include "awm/function.hpp"

namespace awm {

/// Coefficients whose magnitude falls below this are not stored.
inline constexpr double kDropThreshold = 1e-14;
/// Per-coefficient tolerance of the quadrature path.
inline constexpr double kCoefficientQuadratureTol = 1e-12;

/// Expansion coefficient of f for one index. Haar: <f, psi>. Hats: the
/// hierarchical surplus f(mid) - (f(lo) + f(hi)) / 2 in the requested
/// normalization (the hat system is interpolatory, not orthogonal).
double coefficient(const FunctionDescriptor& f, WaveletIndex index,
                   BasisKind basis);

/// Result of a tree-structured analysis. `frontier` lists the evaluated
/// nodes whose children were not visited although they may be nonzero
/// (below the descent tolerance or at the level cap).
struct TreeAnalysis {
  SparseCoefficientVector coefficients;
  std::vector<SparseCoefficientVector::Entry> frontier;
  int max_level = 0;

  /// Heuristic bound on the weighted norm of everything below the frontier:
  /// kDescendantFactor times the weighted frontier norm.
  double tail_estimate(double weight_s) const;
};

inline constexpr double kDescendantFactor = 2.0;

struct TreeOptions {
  int max_level = 10;
  /// Children of a node are visited only while |coefficient| exceeds this.
  double descend_tol = 0.0;
  /// Levels below this are always visited completely.
  int full_level = 0;
};

/// Tree analysis. Exact inputs prune subtrees that are identically zero
/// (f constant, for Haar, or affine, for hats, on the support).
TreeAnalysis analyze_tree(const FunctionDescriptor& f, BasisKind basis,
                          const TreeOptions& options);

/// All coefficients with level <= max_level (nonzero subtrees only for exact
/// input). Closed forms are visited exhaustively, 2^(max_level+1) nodes.
SparseCoefficientVector analyze(const FunctionDescriptor& f, BasisKind basis,
                                int max_level);

double reconstruct(const SparseCoefficientVector& coeffs, double x);

/// Level-weighted norm (sum 2^{2 s max(level,0)} |u|^2)^{1/2}.
double norm_equivalent(const SparseCoefficientVector& coeffs, double s);

/// 2^{s max(level,0)}.
double level_weight(WaveletIndex index, double s);

}  // namespace awm
