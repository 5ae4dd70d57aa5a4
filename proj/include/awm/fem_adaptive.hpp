#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "awm/operator.hpp"

namespace awm {

/// Partition 0 = x_0 < x_1 < ... < x_n = 1 of the unit interval.
class Mesh1D {
 public:
  /// Throws DomainError unless the nodes increase strictly from 0 to 1.
  explicit Mesh1D(std::vector<double> nodes);
  static Mesh1D uniform(std::size_t elements);

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t element_count() const { return nodes_.size() - 1; }
  Interval element(std::size_t k) const { return {nodes_[k], nodes_[k + 1]}; }
  double length(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }

 private:
  std::vector<double> nodes_;
};

/// Continuous piecewise linear function on a mesh, zero at 0 and 1.
struct FemSolution {
  Mesh1D mesh;
  std::vector<double> values;  // one per node

  double slope(std::size_t k) const {
    return (values[k + 1] - values[k]) / mesh.length(k);
  }
  double operator()(double x) const;
};

/// Galerkin P1 solution of int a u'v' = int f v, solved by the Thomas
/// algorithm. Throws AssemblyError when a pivot is not positive.
FemSolution assemble_solve(const Mesh1D& mesh, const Problem1D& problem);

/// |u - u_h|_{H1} against the problem's exact solution.
double h1_error(const FemSolution& solution, const Problem1D& problem);

struct ElementIndicators {
  std::vector<double> residual;  // h_K ||f + (a u_h')'||_{L2(K)}
  std::vector<double> jump;      // half the weighted flux jumps at interior endpoints
  std::vector<double> eta;       // residual + jump
  std::vector<double> node_jumps;  // raw a u_h' jumps at the interior nodes

  double estimator() const;  // (sum eta^2)^{1/2}
  double ratio() const;      // max eta / min eta
};

/// Residual indicators eta_K = h_K ||r||_{L2(K)} + sum_z (1/2) h_K^{1/2} |J_z|,
/// with r = f + (a u_h')' and J_z the jump of a u_h' at an interior endpoint.
/// On elements touching a point where f is singular the L2 norm of r may be
/// infinite; there r = (G + a u_h')' with G' = f and the residual term is the
/// dual norm sqrt(12) min_c ||G + a u_h' - c||_{L2(K)}, which matches
/// h_K ||r|| for constant r.
ElementIndicators error_indicators(const FemSolution& solution, const Problem1D& problem);

enum class RefinementKind { Threshold, FixedFraction, Bulk, Uniform };

struct RefinementStrategy {
  RefinementKind kind = RefinementKind::Threshold;
  /// eps for Threshold, theta for FixedFraction and Bulk, unused for Uniform.
  double parameter = 0.5;
};

struct RefineResult {
  Mesh1D mesh;
  std::vector<std::size_t> marked;
  bool progress = true;
};

/// Elements chosen by the strategy, in increasing order. Bulk takes the
/// shortest largest-first prefix with sum eta^2 >= theta^2 sum eta^2; ties
/// go to the leftmost element.
std::vector<std::size_t> mark(std::span<const double> eta, const RefinementStrategy& strategy);
/// Bisects the marked elements. An empty marking returns the mesh unchanged
/// with progress = false.
RefineResult refine(const Mesh1D& mesh, std::span<const double> eta,
                    const RefinementStrategy& strategy);

struct FemConfig {
  RefinementStrategy strategy;
  /// In the loop the Threshold parameter is relative: eps = parameter * max eta.
  bool relative_threshold = true;
  std::size_t initial_elements = 2;
  std::size_t max_elements = 2048;
  std::optional<double> target_error;
  int max_rounds = 500;
};

struct FemRecord {
  int n = 0;
  std::size_t size = 0;  // elements
  double error = 0.0;
  double ratio = 0.0;     // max eta / min eta
  double estimator = 0.0;
};

class FemTrace {
 public:
  void append(FemRecord r) { records_.push_back(r); }
  const std::vector<FemRecord>& records() const { return records_; }
  /// Columns n, size, error, ratio.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<FemRecord> records_;
};

/// solve, indicate, refine until the mesh would exceed max_elements, the
/// error target is met or max_rounds pass. Two refinements in a row without
/// progress raise StagnationError.
FemTrace adaptive_fem_loop(const Problem1D& problem, const FemConfig& config);

}  // namespace awm
