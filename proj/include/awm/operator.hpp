#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "awm/analysis.hpp"

namespace awm {

/// -(a u')' = f on (0,1), u(0) = u(1) = 0.
class Problem1D {
 public:
  /// Throws DomainError unless min a > 0 on [0,1].
  Problem1D(std::string id, PiecewisePolynomial a, FunctionDescriptor f,
            std::optional<FunctionDescriptor> exact_solution = std::nullopt,
            std::optional<SparseCoefficientVector> exact_coefficients = std::nullopt);

  const std::string& id() const { return id_; }
  const PiecewisePolynomial& a() const { return a_; }
  double a_min() const { return a_min_; }
  double a_max() const { return a_max_; }
  const FunctionDescriptor& f() const { return f_; }
  const std::optional<FunctionDescriptor>& exact_solution() const { return exact_; }
  const std::optional<SparseCoefficientVector>& exact_coefficients() const {
    return exact_coefficients_;
  }

 private:
  std::string id_;
  PiecewisePolynomial a_;
  double a_min_ = 0.0, a_max_ = 0.0;
  FunctionDescriptor f_;
  std::optional<FunctionDescriptor> exact_;
  std::optional<SparseCoefficientVector> exact_coefficients_;
};

/// Largest level distance kept by A_N (0 when N < 8).
int band_for(std::int64_t n);

/// Dense symmetric matrix on a finite index set.
struct DenseSection {
  std::vector<WaveletIndex> indices;
  std::vector<double> values;  // row-major, size n*n

  std::size_t size() const { return indices.size(); }
  double operator()(std::size_t r, std::size_t c) const { return values[r * size() + c]; }
  std::vector<double> apply(std::span<const double> x) const;
};

/// Largest |eigenvalue| by power iteration (on M^2), all-ones start vector,
/// stopped once the Rayleigh quotient changes by <= 1e-8 relatively.
double opnorm_estimate(const DenseSection& m);
/// Extreme eigenvalues of a symmetric positive semidefinite section. The
/// estimates are one-sided: lambda_max from below, lambda_min from above.
double lambda_max_estimate(const DenseSection& m);
double lambda_min_estimate(const DenseSection& m);

struct ProfilePoint {
  std::int64_t n = 0;
  int band = 0;
  double opnorm_estimate = 0.0;
};

struct OperatorOptions {
  /// Sections for the compression profile use all hats up to this level.
  int reference_level = 8;
  /// Multiplier applied to measured norms in the APPROX certificate.
  double safety = 1.5;
  /// Largest level distance APPROX may use.
  int max_band = 20;
  std::size_t cache_capacity = std::size_t{1} << 20;
};

/// Stiffness matrix A(l,m) = int a psi_l' psi_m' of H1-normalized hats, its
/// band truncations A_N and the adaptive application APPROX.
class CompressibleOperator {
 public:
  explicit CompressibleOperator(Problem1D problem, OperatorOptions options = {});
  ~CompressibleOperator();
  CompressibleOperator(CompressibleOperator&&) noexcept;
  CompressibleOperator& operator=(CompressibleOperator&&) noexcept;

  const Problem1D& problem() const { return problem_; }
  BasisKind basis() const { return kHatH1; }
  const OperatorOptions& options() const { return options_; }

  /// Exact, memoized. Zero without integration for disjoint supports.
  double entry(WaveletIndex l, WaveletIndex m) const;
  /// A_N(l, m): the entry when the level distance is at most band_for(n).
  double truncated_entry(WaveletIndex l, WaveletIndex m, std::int64_t n) const;

  /// Section of A (or of A - A_N when n is given) on the given indices.
  DenseSection section(std::span<const WaveletIndex> indices,
                       std::optional<std::int64_t> n = std::nullopt) const;

  /// Sum over m in V of A(., m) V_m restricted to level distance <= band.
  SparseCoefficientVector apply_band(const SparseCoefficientVector& v, int band) const;

  /// Measured ||A - A_N|| on the reference section for N = 1, 2, 4, ... until
  /// the band covers every level distance of the section.
  const std::vector<ProfilePoint>& compression_profile() const;
  void write_profile_csv(std::ostream& out) const;
  /// Safety-scaled bound on ||A - A_N||; measured for bands up to
  /// reference_level - 3, geometric extrapolation beyond.
  double truncation_bound(int band) const;
  /// Safety-scaled bound on ||A||.
  double norm_bound() const;

  /// APPROX(A V, eps) with the certificate ||A V - result|| <= eps: the
  /// telescoping sum certified to eps/2, then coarse(., eps/2).
  SparseCoefficientVector approx_apply(const SparseCoefficientVector& v, double eps) const;
  /// The certified bound for a given telescoping depth j.
  double approx_bound(const SparseCoefficientVector& v, int j) const;

  std::size_t cache_size() const;

 private:
  struct State;
  double compute_entry(WaveletIndex l, WaveletIndex m) const;

  Problem1D problem_;
  OperatorOptions options_;
  std::unique_ptr<State> state_;
};

/// Every hat index with level <= max_level, in index order.
std::vector<WaveletIndex> hats_up_to(int max_level);

}  // namespace awm
