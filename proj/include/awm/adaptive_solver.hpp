#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <vector>

#include "awm/errors.hpp"
#include "awm/nterm.hpp"
#include "awm/operator.hpp"

namespace awm {

struct SpectralBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

struct Damping {
  double tau = 0.0;
  double rho = 0.0;
};

/// Relative widening applied to section eigenvalue estimates.
inline constexpr double kSpectralWidening = 1e-6;

/// Extreme eigenvalues of the section of all hats up to `level`, widened by
/// kSpectralWidening * lambda_max on both sides.
SpectralBounds estimate_spectrum(const CompressibleOperator& a, int level = 8);

/// tau = 2/(lmin + lmax), rho = (lmax - lmin)/(lmax + lmin).
Damping choose_tau(const SpectralBounds& bounds);
/// rho = max(1 - tau lmin, tau lmax - 1) for a prescribed tau.
Damping damping_for(double tau, const SpectralBounds& bounds);

struct RhsOptions {
  int max_level = kMaxLevel;
  /// Used only when no flux is available: frontier nodes then stand for
  /// their subtrees with this factor.
  double kappa = kDescendantFactor;
};

/// Load vector F_l = a(u, psi_l) by integration by parts when the problem
/// carries an exact solution, otherwise F_l = int f psi_l.
///
/// psi_l' is the L2-normalized Haar function on supp psi_l, so F_l is the
/// Haar coefficient of the flux g = a u' (or g = -G with G' = f) and the
/// coefficients strictly below a node have squared norm
/// ||g - mean g||^2_{L2(S)} - F_node^2. The descent uses these exact subtree
/// tails. F_eps is memoized per tolerance.
class RhsProvider {
 public:
  explicit RhsProvider(const Problem1D& problem, RhsOptions options = {});

  double coefficient(WaveletIndex index) const;
  /// Squared norm of all coefficients strictly below `index`, or nullopt when
  /// the data provide no flux.
  std::optional<double> subtree_tail_squared(WaveletIndex index, double value) const;
  /// F_eps with ||F - F_eps|| <= eps: a tree descent until the subtree tails
  /// sum to at most eps/2, then coarse(., eps/2).
  const SparseCoefficientVector& coarse_rhs(double eps);
  /// Number of coefficients evaluated by the last descent.
  std::size_t last_tree_size() const { return last_tree_size_; }

 private:
  const Problem1D& problem_;
  RhsOptions options_;
  std::optional<PiecewisePolynomial> flux_poly_;
  std::function<double(double)> flux_;
  std::vector<double> flux_cuts_;
  std::map<double, SparseCoefficientVector> memo_;
  std::size_t last_tree_size_ = 0;
};

SparseCoefficientVector rhs_coarse(const Problem1D& problem, double eps);

struct SolverConfig {
  /// Damping; chosen from the section spectrum when empty.
  std::optional<double> tau;
  double eps_initial = 1.0;
  double eps_final = 1.0 / 1024.0;
  bool coarsening_enabled = true;
  double c_coarse = 2.0;
  int max_iterations = 2000;
  int spectrum_level = 8;
};

struct TraceRecord {
  int n = 0;
  double eps = 0.0;  // tolerance used in this step
  std::size_t active_size = 0;
  double residual = 0.0;
  std::optional<double> error;
  bool coarsened = false;
  bool halved = false;  // the threshold triggered after this step
  double seconds = 0.0;
};

class ConvergenceTrace {
 public:
  void append(TraceRecord r) { records_.push_back(r); }
  const std::vector<TraceRecord>& records() const { return records_; }
  /// The steps after which eps was halved or the run terminated.
  std::vector<TraceRecord> phase_ends() const;
  /// Columns n, eps, active_size, residual, error, coarsened_flag. Wall
  /// clock is left out unless asked for, so identical runs give identical
  /// files.
  void write_csv(std::ostream& out, bool with_seconds = false) const;

 private:
  std::vector<TraceRecord> records_;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& m, ConvergenceTrace trace)
      : Error(ErrorKind::NonConvergence, m), trace_(std::move(trace)) {}
  const ConvergenceTrace& trace() const { return trace_; }

 private:
  ConvergenceTrace trace_;
};

/// Per-step view handed to an observer (for diagnostics and tests).
struct StepView {
  int n;
  double eps;
  const SparseCoefficientVector& previous;
  const SparseCoefficientVector& residual;
};

struct SolveResult {
  SparseCoefficientVector solution;
  ConvergenceTrace trace;
  Damping damping;
  SpectralBounds spectrum;
  double threshold_constant = 0.0;
};

/// Error ||U - V|| of an iterate against reference coefficients.
double coefficient_error(const SparseCoefficientVector& reference,
                         const SparseCoefficientVector& v);

/// Modified Richardson iteration U^n = U^{n-1} + tau (F_eps - APPROX(A U^{n-1}, eps))
/// with eps halved whenever ||R_n|| <= (2 tau ||A||/(1 - rho) + 3) eps.
SolveResult solve_adaptive(const CompressibleOperator& a, const SolverConfig& config,
                           const std::optional<SparseCoefficientVector>& reference = std::nullopt,
                           const std::function<void(const StepView&)>& observer = {});

/// Plain Richardson on a fixed finite section with exact data; errors are
/// measured against the section's own solution given as `reference`.
ConvergenceTrace solve_fixed_section(const DenseSection& section,
                                     std::span<const double> rhs,
                                     std::span<const double> reference, double tau,
                                     int steps);

struct RateReport {
  std::vector<RatePoint> solver;      // (#Lambda_n, error) at phase ends
  std::vector<RatePoint> best_nterm;  // sigma_N of the reference at the same N
  double slope = 0.0;
  double best_nterm_slope = 0.0;
};

/// Fits the solver's error against active-set size over phase ends and the
/// best N-term errors of the reference for the same N.
RateReport rate_report(const ConvergenceTrace& trace,
                       const SparseCoefficientVector& reference, double weight_s = 0.0);

}  // namespace awm
