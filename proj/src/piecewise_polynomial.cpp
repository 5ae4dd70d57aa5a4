#include "awm/piecewise_polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

double horner(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

// Coefficients of q(s) = p(s + shift).
std::vector<double> taylor_shift(std::vector<double> p, double shift) {
  if (shift == 0.0 || p.size() < 2) return p;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t k = n - 1; k > i; --k) p[k - 1] += shift * p[k];
  }
  return p;
}

std::vector<double> poly_add(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return r;
}

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k) r[i + k] += a[i] * b[k];
  return r;
}

// Integral of the local polynomial over [t0, t1].
double poly_integral(const std::vector<double>& c, double t0, double t1) {
  double a0 = 0.0, a1 = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    const double w = c[i] / static_cast<double>(i + 1);
    a0 = a0 * t0 + w;
    a1 = a1 * t1 + w;
  }
  return a1 * t1 - a0 * t0;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  if (c.size() < 2) return {0.0};
  std::vector<double> d(c.size() - 1);
  for (std::size_t i = 1; i < c.size(); ++i)
    d[i - 1] = static_cast<double>(i) * c[i];
  return d;
}

int effective_degree(const std::vector<double>& c) {
  for (std::size_t i = c.size(); i-- > 0;)
    if (c[i] != 0.0) return static_cast<int>(i);
  return 0;
}

std::vector<double> merged_breakpoints(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

template <class Combine>
PiecewisePolynomial combine(const PiecewisePolynomial& a,
                            const PiecewisePolynomial& b, Combine op) {
  auto bps = merged_breakpoints(a.breakpoints(), b.breakpoints());
  std::vector<std::vector<double>> pieces;
  pieces.reserve(bps.size() - 1);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i + 1 < bps.size(); ++i) {
    const double x = bps[i];
    while (ia + 2 < a.breakpoints().size() && a.breakpoints()[ia + 1] <= x) ++ia;
    while (ib + 2 < b.breakpoints().size() && b.breakpoints()[ib + 1] <= x) ++ib;
    auto pa = taylor_shift(a.pieces()[ia], x - a.breakpoints()[ia]);
    auto pb = taylor_shift(b.pieces()[ib], x - b.breakpoints()[ib]);
    pieces.push_back(op(pa, pb));
  }
  return PiecewisePolynomial(std::move(bps), std::move(pieces));
}

}  // namespace

PiecewisePolynomial::PiecewisePolynomial(
    std::vector<double> breakpoints, std::vector<std::vector<double>> pieces)
    : breakpoints_(std::move(breakpoints)), pieces_(std::move(pieces)) {
  if (breakpoints_.size() < 2)
    throw DomainError("piecewise polynomial needs at least two breakpoints");
  if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0)
    throw DomainError("piecewise polynomial breakpoints must span [0,1]");
  for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
    if (!(breakpoints_[i] > breakpoints_[i - 1]))
      throw DomainError("piecewise polynomial breakpoints must increase");
  }
  if (pieces_.size() + 1 != breakpoints_.size())
    throw DomainError(fmt::format("expected {} pieces, got {}",
                                  breakpoints_.size() - 1, pieces_.size()));
  for (auto& p : pieces_)
    if (p.empty()) p.push_back(0.0);
}

PiecewisePolynomial PiecewisePolynomial::constant(double c) {
  return PiecewisePolynomial({0.0, 1.0}, {{c}});
}

PiecewisePolynomial PiecewisePolynomial::polynomial(
    std::span<const double> coefficients) {
  return PiecewisePolynomial(
      {0.0, 1.0}, {std::vector<double>(coefficients.begin(), coefficients.end())});
}

PiecewisePolynomial PiecewisePolynomial::indicator(double lo, double hi,
                                                   double height) {
  if (!(0.0 <= lo && lo < hi && hi <= 1.0))
    throw DomainError(fmt::format("bad indicator interval [{}, {})", lo, hi));
  std::vector<double> bps{0.0};
  std::vector<std::vector<double>> pieces;
  if (lo > 0.0) {
    bps.push_back(lo);
    pieces.push_back({0.0});
  }
  pieces.push_back({height});
  if (hi < 1.0) {
    bps.push_back(hi);
    pieces.push_back({0.0});
  }
  bps.push_back(1.0);
  return PiecewisePolynomial(std::move(bps), std::move(pieces));
}

PiecewisePolynomial PiecewisePolynomial::piecewise_constant(
    std::vector<double> breakpoints, std::span<const double> values) {
  std::vector<std::vector<double>> pieces;
  pieces.reserve(values.size());
  for (double v : values) pieces.push_back({v});
  return PiecewisePolynomial(std::move(breakpoints), std::move(pieces));
}

std::size_t PiecewisePolynomial::piece_index(double x) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - breakpoints_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, pieces_.size() - 1);
}

double PiecewisePolynomial::operator()(double x) const {
  if (!(x >= 0.0 && x <= 1.0))
    throw DomainError(fmt::format("evaluation point {} outside [0,1]", x));
  const std::size_t i = piece_index(x);
  return horner(pieces_[i], x - breakpoints_[i]);
}

double PiecewisePolynomial::integrate(Interval interval) const {
  double total = 0.0;
  for (const auto& p : local_pieces(interval))
    total += poly_integral(p.coefficients, 0.0, p.length);
  return total;
}

std::vector<PiecewisePolynomial::LocalPiece> PiecewisePolynomial::local_pieces(
    Interval interval) const {
  const double lo = interval.lo, hi = interval.hi;
  if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi))
    throw DomainError(
        fmt::format("malformed integration interval [{}, {}]", lo, hi));
  std::vector<LocalPiece> out;
  if (lo == hi) return out;
  for (std::size_t i = piece_index(lo); i < pieces_.size(); ++i) {
    const double a = std::max(lo, breakpoints_[i]);
    const double b = std::min(hi, breakpoints_[i + 1]);
    if (a >= hi) break;
    if (b > a)
      out.push_back({b - a, taylor_shift(pieces_[i], a - breakpoints_[i])});
  }
  return out;
}

PiecewisePolynomial PiecewisePolynomial::derivative() const {
  std::vector<std::vector<double>> d;
  d.reserve(pieces_.size());
  for (const auto& p : pieces_) d.push_back(poly_derivative(p));
  return PiecewisePolynomial(breakpoints_, std::move(d));
}

PiecewisePolynomial PiecewisePolynomial::antiderivative() const {
  std::vector<std::vector<double>> out;
  out.reserve(pieces_.size());
  double offset = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    std::vector<double> q(p.size() + 1, 0.0);
    q[0] = offset;
    for (std::size_t k = 0; k < p.size(); ++k) q[k + 1] = p[k] / static_cast<double>(k + 1);
    const double h = breakpoints_[i + 1] - breakpoints_[i];
    double value = 0.0;
    for (std::size_t k = q.size(); k-- > 1;) value = (value + q[k]) * h;
    offset += value;
    out.push_back(std::move(q));
  }
  return PiecewisePolynomial(breakpoints_, std::move(out));
}

PiecewisePolynomial PiecewisePolynomial::refined(
    std::span<const double> points) const {
  std::vector<double> extra(points.begin(), points.end());
  std::sort(extra.begin(), extra.end());
  extra.erase(std::remove_if(extra.begin(), extra.end(),
                             [](double x) { return !(x > 0.0 && x < 1.0); }),
              extra.end());
  std::vector<double> bps = merged_breakpoints(breakpoints_, extra);
  const std::size_t n_pieces = bps.size() - 1;
  PiecewisePolynomial zero(std::move(bps),
                           std::vector<std::vector<double>>(n_pieces, {0.0}));
  return combine(*this, zero,
                 [](const auto& a, const auto& b) { return poly_add(a, b); });
}

PiecewisePolynomial PiecewisePolynomial::scaled(double factor) const {
  auto pieces = pieces_;
  for (auto& p : pieces)
    for (double& c : p) c *= factor;
  return PiecewisePolynomial(breakpoints_, std::move(pieces));
}

PiecewisePolynomial operator*(const PiecewisePolynomial& a,
                              const PiecewisePolynomial& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return poly_mul(x, y); });
}

PiecewisePolynomial operator+(const PiecewisePolynomial& a,
                              const PiecewisePolynomial& b) {
  return combine(a, b, [](const auto& x, const auto& y) { return poly_add(x, y); });
}

double PiecewisePolynomial::extremum(bool want_max) const {
  double best = want_max ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  auto consider = [&](double v) {
    best = want_max ? std::max(best, v) : std::min(best, v);
  };
  constexpr int kSamples = 64;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const auto& p = pieces_[i];
    const double h = breakpoints_[i + 1] - breakpoints_[i];
    consider(horner(p, 0.0));
    consider(horner(p, h));
    if (effective_degree(p) < 2) continue;
    // Interior extrema sit at sign changes of the derivative.
    const auto dp = poly_derivative(p);
    double t0 = 0.0, d0 = horner(dp, 0.0);
    for (int s = 1; s <= kSamples; ++s) {
      const double t1 = h * s / kSamples;
      const double d1 = horner(dp, t1);
      if (d0 == 0.0) consider(horner(p, t0));
      if ((d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0)) {
        double a = t0, b = t1, da = d0;
        for (int it = 0; it < 200 && b - a > 1e-16 * h; ++it) {
          const double m = 0.5 * (a + b);
          const double dm = horner(dp, m);
          if ((dm < 0.0) == (da < 0.0)) {
            a = m;
            da = dm;
          } else {
            b = m;
          }
        }
        consider(horner(p, 0.5 * (a + b)));
      }
      t0 = t1;
      d0 = d1;
    }
  }
  return best;
}

double PiecewisePolynomial::min_value() const { return extremum(false); }
double PiecewisePolynomial::max_value() const { return extremum(true); }

PiecewisePolynomial::LocalShape PiecewisePolynomial::local_shape(
    Interval interval) const {
  LocalShape shape;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (breakpoints_[i + 1] <= interval.lo || breakpoints_[i] >= interval.hi)
      continue;
    shape.degree = std::max(shape.degree, effective_degree(pieces_[i]));
  }
  for (std::size_t i = 1; i + 1 < breakpoints_.size(); ++i) {
    if (breakpoints_[i] > interval.lo && breakpoints_[i] < interval.hi) {
      shape.has_interior_breakpoint = true;
      break;
    }
  }
  return shape;
}

std::vector<double> PiecewisePolynomial::interior_breakpoints() const {
  return {breakpoints_.begin() + 1, breakpoints_.end() - 1};
}

double local_integral(std::span<const double> c, double length) {
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;)
    acc = acc * length + c[i] / static_cast<double>(i + 1);
  return acc * length;
}

std::vector<double> local_square(std::span<const double> c) {
  if (c.empty()) return {0.0};
  std::vector<double> r(2 * c.size() - 1, 0.0);
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t k = 0; k < c.size(); ++k) r[i + k] += c[i] * c[k];
  return r;
}

double integrate_exact(const PiecewisePolynomial& g, Interval interval) {
  return g.integrate(interval);
}

}  // namespace awm
