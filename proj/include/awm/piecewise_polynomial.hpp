#pragma once

#include <span>
#include <vector>

namespace awm {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Piecewise polynomial on [0,1]. Each piece stores monomial coefficients in
/// the local variable t = x - breakpoints[i], lowest degree first, which keeps
/// products and antiderivatives exact and well conditioned on small pieces.
/// Evaluation is right-continuous; x = 1 belongs to the last piece.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial(std::vector<double> breakpoints,
                      std::vector<std::vector<double>> pieces);

  static PiecewisePolynomial constant(double c);
  /// Polynomial given by global monomial coefficients in x (lowest first).
  static PiecewisePolynomial polynomial(std::span<const double> coefficients);
  /// Indicator of [lo, hi) scaled by `height`.
  static PiecewisePolynomial indicator(double lo, double hi,
                                       double height = 1.0);
  /// Piecewise constant with the given values on the given breakpoints.
  static PiecewisePolynomial piecewise_constant(std::vector<double> breakpoints,
                                                std::span<const double> values);

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<std::vector<double>>& pieces() const { return pieces_; }
  std::size_t piece_count() const { return pieces_.size(); }

  double operator()(double x) const;
  double integrate(Interval interval) const;

  /// The pieces meeting `interval`, clipped to it and re-expanded about the
  /// left end of each clipped part. Small supports keep full relative accuracy.
  struct LocalPiece {
    double length;
    std::vector<double> coefficients;
  };
  std::vector<LocalPiece> local_pieces(Interval interval) const;
  PiecewisePolynomial derivative() const;
  /// Continuous antiderivative vanishing at 0.
  PiecewisePolynomial antiderivative() const;

  /// Same function with extra breakpoints inserted at `points`.
  PiecewisePolynomial refined(std::span<const double> points) const;

  /// Minimum over [0,1]; exact up to root finding of the derivative.
  double min_value() const;
  double max_value() const;

  /// Largest effective degree among pieces meeting the open interval, and
  /// whether a breakpoint lies strictly inside it. Used to prune analysis.
  struct LocalShape {
    int degree = 0;
    bool has_interior_breakpoint = false;
  };
  LocalShape local_shape(Interval interval) const;

  /// Interior breakpoints, i.e. every point where smoothness may break.
  std::vector<double> interior_breakpoints() const;

  friend PiecewisePolynomial operator*(const PiecewisePolynomial& a,
                                       const PiecewisePolynomial& b);
  friend PiecewisePolynomial operator+(const PiecewisePolynomial& a,
                                       const PiecewisePolynomial& b);
  PiecewisePolynomial scaled(double factor) const;

 private:
  std::size_t piece_index(double x) const;
  double extremum(bool want_max) const;

  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> pieces_;
};

/// Integral over [0, length] of the polynomial with monomial coefficients c.
double local_integral(std::span<const double> c, double length);
/// Coefficients of the square of a polynomial.
std::vector<double> local_square(std::span<const double> c);

/// Exact integral of g over the interval.
double integrate_exact(const PiecewisePolynomial& g, Interval interval);

}  // namespace awm
