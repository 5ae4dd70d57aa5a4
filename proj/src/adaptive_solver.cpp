#include "awm/adaptive_solver.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "awm/quadrature.hpp"

namespace awm {
namespace {

constexpr double kRhsQuadratureTol = 1e-15;


// int_p^q a u' for the exact solution u.
double weighted_flux_integral(const PiecewisePolynomial& a, const FunctionDescriptor& u,
                              double p, double q, double tol, const std::string& context) {
  if (const auto* poly = std::get_if<PiecewisePolynomial>(&u))
    return integrate_exact(a * poly->derivative(), {p, q});
  // [a u]_p^q - int_p^q a' u.
  const auto& cf = std::get<ClosedForm>(u);
  const PiecewisePolynomial da = a.derivative();
  double correction = 0.0;
  if (da.max_value() != 0.0 || da.min_value() != 0.0) {
    correction = integrate_adaptive([&](double x) { return da(x) * cf.value(x); }, {p, q},
                                    cf.singular_points, context, {.abs_tol = tol});
  }
  return a(q) * cf.value(q) - a(p) * cf.value(p) - correction;
}

double norm_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

SpectralBounds estimate_spectrum(const CompressibleOperator& a, int level) {
  if (level < 0 || level > 12) throw ConfigError("spectrum level must lie in [0, 12]");
  const auto section = a.section(hats_up_to(level));
  const double hi = lambda_max_estimate(section);
  const double lo = lambda_min_estimate(section);
  const double widen = kSpectralWidening * hi;
  return {lo - widen, hi + widen};
}

Damping choose_tau(const SpectralBounds& b) {
  if (!(b.lambda_min > 0.0))
    throw SpectralError(fmt::format(
        "smallest eigenvalue estimate {} is not positive; the normalization is broken",
        b.lambda_min));
  if (b.lambda_max < b.lambda_min) throw SpectralError("spectral bounds are inverted");
  const double sum = b.lambda_min + b.lambda_max;
  return {2.0 / sum, (b.lambda_max - b.lambda_min) / sum};
}

Damping damping_for(double tau, const SpectralBounds& b) {
  if (!(b.lambda_min > 0.0)) throw SpectralError("smallest eigenvalue estimate is not positive");
  if (!(tau > 0.0 && tau < 2.0 / b.lambda_max))
    throw ConfigError(fmt::format("tau {} outside (0, 2/lambda_max = {})", tau,
                                  2.0 / b.lambda_max));
  return {tau, std::max(1.0 - tau * b.lambda_min, tau * b.lambda_max - 1.0)};
}

RhsProvider::RhsProvider(const Problem1D& problem, RhsOptions options)
    : problem_(problem), options_(options) {
  if (options_.max_level < 0 || options_.max_level > kMaxLevel)
    throw ConfigError("rhs max_level out of range");
  const auto& a = problem_.a();
  flux_cuts_ = a.interior_breakpoints();
  if (const auto& u = problem_.exact_solution()) {
    if (const auto* poly = std::get_if<PiecewisePolynomial>(&*u)) {
      flux_poly_ = a * poly->derivative();
    } else if (const auto& cf = std::get<ClosedForm>(*u); cf.derivative) {
      flux_ = [a, d = cf.derivative](double x) { return a(x) * d(x); };
      flux_cuts_.insert(flux_cuts_.end(), cf.singular_points.begin(), cf.singular_points.end());
    }
  } else if (const auto* poly = std::get_if<PiecewisePolynomial>(&problem_.f())) {
    flux_poly_ = poly->antiderivative().scaled(-1.0);
  } else if (const auto& cf = std::get<ClosedForm>(problem_.f()); cf.antiderivative) {
    flux_ = [g = cf.antiderivative](double x) { return -g(x); };
    flux_cuts_.insert(flux_cuts_.end(), cf.singular_points.begin(), cf.singular_points.end());
  }
}

std::optional<double> RhsProvider::subtree_tail_squared(WaveletIndex index, double value) const {
  const Interval s = support(index);
  const double h = s.length();
  double variance = 0.0;
  if (flux_poly_) {
    const auto local = flux_poly_->local_pieces(s);
    double mean = 0.0;
    for (const auto& p : local) mean += local_integral(p.coefficients, p.length);
    mean /= h;
    for (auto p : local) {
      p.coefficients.front() -= mean;
      variance += local_integral(local_square(p.coefficients), p.length);
    }
  } else if (flux_) {
    const std::string context = "load tail " + to_string(index);
    // An error d in the mean only adds h d^2 to the variance.
    const double mean =
        integrate_adaptive(flux_, s, flux_cuts_, context,
                           {.abs_tol = 1e-12 * h}) / h;
    variance = integrate_adaptive(
        [&](double x) {
          const double d = flux_(x) - mean;
          return d * d;
        },
        s, flux_cuts_, context, {.abs_tol = 1e-32 * h, .rel_tol = 1e-10});
  } else {
    return std::nullopt;
  }
  return std::max(0.0, variance - value * value);
}

double RhsProvider::coefficient(WaveletIndex index) const {
  require_valid(index);
  if (index.level < 0) throw DomainError("the hat basis has no level -1 function");
  const Interval s = support(index);
  const double mid = 0.5 * (s.lo + s.hi);
  // |psi'| = 2^{j/2} on both halves, + on the left, - on the right.
  const double slope = std::exp2(0.5 * index.level);
  const std::string context = "load coefficient " + to_string(index);
  const double tol = kRhsQuadratureTol / slope;
  if (const auto& u = problem_.exact_solution()) {
    const auto& a = problem_.a();
    return slope * (weighted_flux_integral(a, *u, s.lo, mid, tol, context) -
                    weighted_flux_integral(a, *u, mid, s.hi, tol, context));
  }
  const auto& f = problem_.f();
  if (const auto* poly = std::get_if<PiecewisePolynomial>(&f))
    return integrate_exact(*poly * as_piecewise(index, kHatH1), s);
  const auto& cf = std::get<ClosedForm>(f);
  const double scale = hat_scale(index, Normalization::H1Semi);
  const double h = s.hi - s.lo;
  std::vector<double> cuts = cf.singular_points;
  cuts.push_back(mid);
  return integrate_adaptive(
             [&](double x) {
               const double tent = 1.0 - std::abs(2.0 * (x - s.lo) / h - 1.0);
               return cf.value(x) * tent;
             },
             s, cuts, context, {.abs_tol = tol}) /
         scale;
}

const SparseCoefficientVector& RhsProvider::coarse_rhs(double eps) {
  if (!(eps > 0.0)) throw DomainError("rhs tolerance must be positive");
  if (auto it = memo_.find(eps); it != memo_.end()) return it->second;

  struct Node {
    WaveletIndex index;
    double value;
    double tail_sq;  // squared norm of the strict descendants (or estimate)
  };
  const auto make = [this](WaveletIndex i) {
    const double c = coefficient(i);
    const auto t = subtree_tail_squared(i, c);
    return Node{i, c, t ? *t : options_.kappa * options_.kappa * c * c};
  };

  std::vector<SparseCoefficientVector::Entry> kept;
  std::vector<Node> frontier{make({0, 0})};
  double delta = 0.25 * eps;
  for (;;) {
    double tail_sq = 0.0, capped_sq = 0.0;
    for (const auto& n : frontier) {
      tail_sq += n.tail_sq;
      if (n.index.level >= options_.max_level) capped_sq += n.tail_sq;
    }
    if (std::sqrt(tail_sq) <= 0.5 * eps) break;
    if (std::sqrt(capped_sq) > 0.5 * eps)
      throw DataResolutionError(fmt::format(
          "load vector tail {:.3g} below level {} exceeds {:.3g}", std::sqrt(capped_sq),
          options_.max_level, 0.5 * eps));
    // Expand every node whose subtree carries more than delta.
    std::vector<Node> next;
    bool expanded = false;
    for (const auto& n : frontier) {
      if (std::sqrt(n.tail_sq) > delta && n.index.level < options_.max_level) {
        kept.push_back({n.index, n.value});
        next.push_back(make({n.index.level + 1, 2 * n.index.position}));
        next.push_back(make({n.index.level + 1, 2 * n.index.position + 1}));
        expanded = true;
      } else {
        next.push_back(n);
      }
    }
    frontier = std::move(next);
    if (!expanded) {
      delta *= 0.25;
      if (delta < 1e-300)
        throw DataResolutionError("load vector tail does not decay");
    }
  }
  last_tree_size_ = kept.size() + frontier.size();
  for (const auto& n : frontier) kept.push_back({n.index, n.value});
  const SparseCoefficientVector tree(kHatH1, std::move(kept));
  return memo_.emplace(eps, coarse(tree, 0.5 * eps)).first->second;
}

SparseCoefficientVector rhs_coarse(const Problem1D& problem, double eps) {
  RhsProvider provider(problem);
  return provider.coarse_rhs(eps);
}

std::vector<TraceRecord> ConvergenceTrace::phase_ends() const {
  std::vector<TraceRecord> out;
  for (std::size_t i = 0; i < records_.size(); ++i)
    if (records_[i].halved || i + 1 == records_.size()) out.push_back(records_[i]);
  return out;
}

void ConvergenceTrace::write_csv(std::ostream& out, bool with_seconds) const {
  out << "n,eps,active_size,residual,error,coarsened_flag" << (with_seconds ? ",seconds\n" : "\n");
  for (const auto& r : records_) {
    out << fmt::format("{},{:.17g},{},{:.17g},{},{}", r.n, r.eps, r.active_size, r.residual,
                       r.error ? fmt::format("{:.17g}", *r.error) : "", r.coarsened ? 1 : 0);
    out << (with_seconds ? fmt::format(",{:.6f}\n", r.seconds) : "\n");
  }
}

double coefficient_error(const SparseCoefficientVector& reference,
                         const SparseCoefficientVector& v) {
  return (reference - v).norm();
}

SolveResult solve_adaptive(const CompressibleOperator& a, const SolverConfig& config,
                           const std::optional<SparseCoefficientVector>& reference,
                           const std::function<void(const StepView&)>& observer) {
  if (!(config.eps_final > 0.0 && config.eps_final < config.eps_initial))
    throw ConfigError("need 0 < eps_final < eps_initial");
  if (!(config.c_coarse > 0.0)) throw ConfigError("c_coarse must be positive");
  if (config.max_iterations < 1) throw ConfigError("max_iterations must be positive");

  SolveResult result;
  result.spectrum = estimate_spectrum(a, config.spectrum_level);
  result.damping = config.tau ? damping_for(*config.tau, result.spectrum)
                              : choose_tau(result.spectrum);
  const double tau = result.damping.tau, rho = result.damping.rho;
  if (!(rho < 1.0)) throw SpectralError("reduction factor rho is not below one");
  const double norm_a = result.spectrum.lambda_max;
  result.threshold_constant = 2.0 * tau * norm_a / (1.0 - rho) + 3.0;

  RhsProvider rhs(a.problem());
  SparseCoefficientVector u(kHatH1);
  double eps = config.eps_initial;
  for (int n = 1; n <= config.max_iterations; ++n) {
    const auto start = std::chrono::steady_clock::now();
    TraceRecord rec;
    rec.n = n;
    rec.eps = eps;
    SparseCoefficientVector r = rhs.coarse_rhs(eps);
    r.axpy(-1.0, a.approx_apply(u, eps));
    if (observer) observer(StepView{n, eps, u, r});
    u.axpy(tau, r);
    rec.residual = r.norm();
    bool done = false;
    if (rec.residual <= result.threshold_constant * eps) {
      // The terminating trigger is treated like a halving event, so the
      // returned iterate is coarsened as well.
      if (config.coarsening_enabled) {
        u = coarse(u, config.c_coarse * eps);
        rec.coarsened = true;
      }
      if (eps <= config.eps_final) {
        done = true;
      } else {
        rec.halved = true;
        eps *= 0.5;
      }
    }
    rec.active_size = u.size();
    if (reference) rec.error = coefficient_error(*reference, u);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.append(rec);
    if (done) {
      result.solution = std::move(u);
      return result;
    }
  }
  throw NonConvergenceError(
      fmt::format("adaptive solver reached {} iterations at eps {:.3g}",
                  config.max_iterations, eps),
      std::move(result.trace));
}

ConvergenceTrace solve_fixed_section(const DenseSection& section, std::span<const double> rhs,
                                     std::span<const double> reference, double tau,
                                     int steps) {
  const std::size_t n = section.size();
  if (rhs.size() != n || reference.size() != n)
    throw DomainError("section, load and reference sizes differ");
  std::vector<double> u(n, 0.0), diff(n);
  ConvergenceTrace trace;
  for (int step = 1; step <= steps; ++step) {
    const auto au = section.apply(u);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - au[i];
    for (std::size_t i = 0; i < n; ++i) u[i] += tau * r[i];
    for (std::size_t i = 0; i < n; ++i) diff[i] = reference[i] - u[i];
    TraceRecord rec;
    rec.n = step;
    rec.active_size = n;
    rec.residual = norm_of(r);
    rec.error = norm_of(diff);
    trace.append(rec);
  }
  return trace;
}

RateReport rate_report(const ConvergenceTrace& trace, const SparseCoefficientVector& reference,
                       double weight_s) {
  RateReport report;
  std::vector<double> n, e, best;
  for (const auto& r : trace.phase_ends()) {
    if (!r.error) throw InsufficientDataError("trace has no error column");
    if (r.active_size == 0) continue;
    const auto size = static_cast<std::int64_t>(r.active_size);
    const double sigma = (reference - threshold_largest(reference, size, weight_s)).norm();
    report.solver.push_back({size, *r.error});
    report.best_nterm.push_back({size, sigma});
    n.push_back(static_cast<double>(size));
    e.push_back(*r.error);
    best.push_back(sigma);
  }
  report.slope = fit_loglog_slope(n, e);
  report.best_nterm_slope = fit_loglog_slope(n, best);
  return report;
}

}  // namespace awm
