#include "awm/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

#include <fmt/format.h>

#include "awm/errors.hpp"

namespace awm {
namespace {

constexpr int kNodes = 10;

struct Rule {
  std::array<double, kNodes> x{};
  std::array<double, kNodes> w{};
};

// Gauss-Legendre nodes on [-1,1] by Newton iteration on P_n.
Rule make_rule() {
  Rule r;
  for (int i = 0; i < kNodes; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (kNodes + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= kNodes; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = kNodes * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

const Rule& rule() {
  static const Rule r = make_rule();
  return r;
}

double gauss(const std::function<double(double)>& f, double a, double b) {
  const Rule& r = rule();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < kNodes; ++i) s += r.w[i] * f(c + h * r.x[i]);
  return s * h;
}

struct Piece {
  double a, b, value, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece evaluate_piece(const std::function<double(double)>& f, double a,
                     double b) {
  const double m = 0.5 * (a + b);
  const double whole = gauss(f, a, b);
  const double halves = gauss(f, a, m) + gauss(f, m, b);
  return {a, b, halves, std::abs(whole - halves)};
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f,
                          Interval interval, std::span<const double> forced,
                          std::string_view context,
                          const QuadratureOptions& options) {
  if (!(interval.lo <= interval.hi))
    throw DomainError(fmt::format("malformed quadrature interval [{}, {}]",
                                  interval.lo, interval.hi));
  if (interval.lo == interval.hi) return 0.0;

  std::vector<double> cuts{interval.lo};
  for (double p : forced)
    if (p > interval.lo && p < interval.hi) cuts.push_back(p);
  cuts.push_back(interval.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<Piece> queue;
  double total_error = 0.0, total_value = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Piece p = evaluate_piece(f, cuts[i], cuts[i + 1]);
    total_error += p.error;
    total_value += p.value;
    queue.push(p);
  }

  int count = static_cast<int>(queue.size());
  const auto tolerance = [&] {
    return std::max(options.abs_tol, options.rel_tol * std::abs(total_value));
  };
  while (!(total_error <= tolerance())) {
    if (!std::isfinite(total_error))
      throw QuadratureError(fmt::format(
          "non-finite integrand or estimate for {}", context));
    if (count >= options.max_subintervals) {
      throw QuadratureError(fmt::format(
          "quadrature did not reach tolerance {:.3g} for {} (estimate {:.3g})",
          tolerance(), context, total_error));
    }
    Piece worst = queue.top();
    queue.pop();
    const double m = 0.5 * (worst.a + worst.b);
    if (!(m > worst.a && m < worst.b)) {
      throw QuadratureError(fmt::format(
          "quadrature for {} cannot resolve [{:.3g}, {:.3g}] (estimate {:.3g})",
          context, worst.a, worst.b, total_error));
    }
    Piece left = evaluate_piece(f, worst.a, m);
    Piece right = evaluate_piece(f, m, worst.b);
    total_error += left.error + right.error - worst.error;
    total_value += left.value + right.value - worst.value;
    queue.push(left);
    queue.push(right);
    ++count;
  }

  // Sum the pieces in a deterministic (position) order.
  std::vector<Piece> pieces;
  pieces.reserve(queue.size());
  while (!queue.empty()) {
    pieces.push_back(queue.top());
    queue.pop();
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const Piece& l, const Piece& r) { return l.a < r.a; });
  double sum = 0.0;
  for (const Piece& p : pieces) sum += p.value;
  return sum;
}

}  // namespace awm
