#include "awm/fem_adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "awm/errors.hpp"
#include "awm/quadrature.hpp"

namespace awm {
namespace {

std::string element_context(const char* what, Interval k) {
  return fmt::format("{} on [{:.6g}, {:.6g}]", what, k.lo, k.hi);
}

// Loads int_K f (x - x0)/h and int_K f (x1 - x)/h.
std::pair<double, double> element_load(const FunctionDescriptor& f, Interval k) {
  const double h = k.length();
  if (const auto* poly = std::get_if<PiecewisePolynomial>(&f)) {
    // Clipped pieces are contiguous from x0; x - x0 = t + offset on each.
    double total = 0.0, moment = 0.0, offset = 0.0;
    for (const auto& p : poly->local_pieces(k)) {
      std::vector<double> tp(p.coefficients.size() + 1, 0.0);
      for (std::size_t i = 0; i < p.coefficients.size(); ++i) tp[i + 1] = p.coefficients[i];
      const double mass = local_integral(p.coefficients, p.length);
      total += mass;
      moment += local_integral(tp, p.length) + offset * mass;
      offset += p.length;
    }
    const double right = moment / h;
    return {right, total - right};
  }
  const auto& cf = std::get<ClosedForm>(f);
  const QuadratureOptions opts{.abs_tol = 1e-16 * h, .rel_tol = 1e-12};
  const double right = integrate_adaptive(
      [&](double x) { return cf.value(x) * (x - k.lo) / h; }, k, cf.singular_points,
      element_context("load", k), opts);
  const double left = integrate_adaptive(
      [&](double x) { return cf.value(x) * (k.hi - x) / h; }, k, cf.singular_points,
      element_context("load", k), opts);
  return {right, left};
}

bool touches(const std::vector<double>& points, Interval k) {
  return std::any_of(points.begin(), points.end(),
                     [&](double p) { return p >= k.lo && p <= k.hi; });
}

}  // namespace

Mesh1D::Mesh1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw DomainError("a mesh needs at least two nodes");
  if (nodes_.front() != 0.0 || nodes_.back() != 1.0)
    throw DomainError("mesh nodes must start at 0 and end at 1");
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (!(nodes_[i] > nodes_[i - 1]))
      throw DomainError(fmt::format("mesh nodes must increase (node {})", i));
}

Mesh1D Mesh1D::uniform(std::size_t elements) {
  if (elements == 0) throw DomainError("a mesh needs at least one element");
  std::vector<double> nodes(elements + 1);
  for (std::size_t i = 0; i <= elements; ++i)
    nodes[i] = static_cast<double>(i) / static_cast<double>(elements);
  nodes.back() = 1.0;
  return Mesh1D(std::move(nodes));
}

double FemSolution::operator()(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt::format("x = {} outside [0,1]", x));
  const auto& nodes = mesh.nodes();
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t k = it == nodes.end() ? nodes.size() - 2
                                    : static_cast<std::size_t>(it - nodes.begin()) - 1;
  k = std::min(k, nodes.size() - 2);
  return values[k] + slope(k) * (x - nodes[k]);
}

FemSolution assemble_solve(const Mesh1D& mesh, const Problem1D& problem) {
  const std::size_t n = mesh.element_count();
  std::vector<double> values(n + 1, 0.0);
  if (n < 2) return {mesh, std::move(values)};

  // Element stiffness int_K a / h^2 and loads.
  std::vector<double> stiff(n), load(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const Interval e = mesh.element(k);
    const double h = e.length();
    stiff[k] = problem.a().integrate(e) / (h * h);
    const auto [right, left] = element_load(problem.f(), e);
    if (k > 0) load[k] += left;
    if (k + 1 < n) load[k + 1] += right;
  }

  // Thomas on the interior nodes 1..n-1; the matrix is symmetric with
  // diagonal stiff[k-1] + stiff[k] and off-diagonal -stiff[k].
  const std::size_t m = n - 1;
  std::vector<double> c(m, 0.0), d(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t node = i + 1;
    double diag = stiff[node - 1] + stiff[node];
    double rhs = load[node];
    if (i > 0) {
      const double lower = -stiff[node - 1];
      diag -= lower * c[i - 1];
      rhs -= lower * d[i - 1];
    }
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw AssemblyError(fmt::format("non-positive pivot {} at node {}", diag, node));
    c[i] = -stiff[node] / diag;
    d[i] = rhs / diag;
  }
  for (std::size_t i = m; i-- > 0;) {
    values[i + 1] = d[i] - (i + 1 < m ? c[i] * values[i + 2] : 0.0);
  }
  return {mesh, std::move(values)};
}

double h1_error(const FemSolution& solution, const Problem1D& problem) {
  const auto& u = problem.exact_solution();
  if (!u) throw DomainError(fmt::format("problem '{}' has no exact solution", problem.id()));
  const auto& mesh = solution.mesh;
  double total = 0.0;
  if (const auto* poly = std::get_if<PiecewisePolynomial>(&*u)) {
    const auto du = poly->derivative();
    for (std::size_t k = 0; k < mesh.element_count(); ++k) {
      for (auto p : du.local_pieces(mesh.element(k))) {
        p.coefficients.front() -= solution.slope(k);
        total += local_integral(local_square(p.coefficients), p.length);
      }
    }
    return std::sqrt(total);
  }
  const auto& cf = std::get<ClosedForm>(*u);
  if (!cf.derivative)
    throw DomainError(fmt::format("exact solution {} has no derivative", cf.label));
  for (std::size_t k = 0; k < mesh.element_count(); ++k) {
    const Interval e = mesh.element(k);
    const double s = solution.slope(k);
    total += integrate_adaptive(
        [&](double x) {
          const double d = cf.derivative(x) - s;
          return d * d;
        },
        e, cf.singular_points, element_context("h1 error", e),
        {.abs_tol = 1e-30 * e.length(), .rel_tol = 1e-10});
  }
  return std::sqrt(total);
}

double ElementIndicators::estimator() const {
  double s = 0.0;
  for (double e : eta) s += e * e;
  return std::sqrt(s);
}

double ElementIndicators::ratio() const {
  if (eta.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(eta.begin(), eta.end());
  return *hi / *lo;
}

ElementIndicators error_indicators(const FemSolution& solution, const Problem1D& problem) {
  const auto& mesh = solution.mesh;
  const std::size_t n = mesh.element_count();
  const auto& a = problem.a();
  const auto da = a.derivative();
  const auto& f = problem.f();
  const auto singular = singular_points(f);
  const auto* fpoly = std::get_if<PiecewisePolynomial>(&f);

  ElementIndicators out;
  out.residual.resize(n);
  out.jump.assign(n, 0.0);
  out.eta.resize(n);
  out.node_jumps.assign(n > 0 ? n - 1 : 0, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const Interval e = mesh.element(k);
    const double h = e.length();
    const double s = solution.slope(k);
    if (fpoly) {
      const auto r = *fpoly + da.scaled(s);
      double sq = 0.0;
      for (const auto& p : r.local_pieces(e))
        sq += local_integral(local_square(p.coefficients), p.length);
      out.residual[k] = h * std::sqrt(sq);
      continue;
    }
    const auto& cf = std::get<ClosedForm>(f);
    std::vector<double> cuts = singular;
    const auto ab = a.interior_breakpoints();
    cuts.insert(cuts.end(), ab.begin(), ab.end());
    if (!touches(cf.singular_points, e)) {
      const double sq = integrate_adaptive(
          [&](double x) {
            const double r = cf.value(x) + s * da(x);
            return r * r;
          },
          e, cuts, element_context("residual", e),
          {.abs_tol = 1e-30 * h, .rel_tol = 1e-10});
      out.residual[k] = h * std::sqrt(sq);
      continue;
    }
    if (!cf.antiderivative)
      throw DomainError(fmt::format(
          "load {} is singular on [{}, {}] and has no antiderivative", cf.label, e.lo, e.hi));
    const auto w = [&](double x) { return cf.antiderivative(x) + a(x) * s; };
    const std::string context = element_context("dual residual", e);
    // An error d in the mean only adds h d^2 to the variance.
    const double mean = integrate_adaptive(w, e, cuts, context, {.abs_tol = 1e-12 * h}) / h;
    const double var = integrate_adaptive(
        [&](double x) {
          const double d = w(x) - mean;
          return d * d;
        },
        e, cuts, context, {.abs_tol = 1e-30 * h, .rel_tol = 1e-10});
    out.residual[k] = std::sqrt(12.0 * var);
  }

  for (std::size_t i = 1; i < n; ++i) {
    const double x = mesh.nodes()[i];
    const double j = a(x) * (solution.slope(i) - solution.slope(i - 1));
    out.node_jumps[i - 1] = j;
    out.jump[i - 1] += 0.5 * std::sqrt(mesh.length(i - 1)) * std::abs(j);
    out.jump[i] += 0.5 * std::sqrt(mesh.length(i)) * std::abs(j);
  }
  for (std::size_t k = 0; k < n; ++k) out.eta[k] = out.residual[k] + out.jump[k];
  return out;
}

std::vector<std::size_t> mark(std::span<const double> eta, const RefinementStrategy& strategy) {
  const std::size_t n = eta.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return eta[x] > eta[y]; });
  std::vector<std::size_t> out;
  switch (strategy.kind) {
    case RefinementKind::Uniform:
      out = order;
      break;
    case RefinementKind::Threshold:
      for (std::size_t k = 0; k < n; ++k)
        if (eta[k] > strategy.parameter) out.push_back(k);
      break;
    case RefinementKind::FixedFraction: {
      const double theta = strategy.parameter;
      if (!(theta > 0.0 && theta <= 1.0))
        throw ConfigError(fmt::format("fixed fraction {} outside (0,1]", theta));
      const auto count = std::min<std::size_t>(
          n, static_cast<std::size_t>(std::ceil(theta * static_cast<double>(n) - 1e-12)));
      out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
      break;
    }
    case RefinementKind::Bulk: {
      const double theta = strategy.parameter;
      if (!(theta > 0.0 && theta <= 1.0))
        throw ConfigError(fmt::format("bulk parameter {} outside (0,1]", theta));
      double total = 0.0;
      for (double e : eta) total += e * e;
      if (total == 0.0) break;
      const double target = theta * theta * total;
      double acc = 0.0;
      for (std::size_t k : order) {
        out.push_back(k);
        acc += eta[k] * eta[k];
        if (acc >= target) break;
      }
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

RefineResult refine(const Mesh1D& mesh, std::span<const double> eta,
                    const RefinementStrategy& strategy) {
  if (eta.size() != mesh.element_count())
    throw DomainError(fmt::format("{} indicators for {} elements", eta.size(),
                                  mesh.element_count()));
  auto marked = mark(eta, strategy);
  if (marked.empty()) return {mesh, {}, false};
  std::vector<double> nodes;
  nodes.reserve(mesh.nodes().size() + marked.size());
  std::size_t next = 0;
  for (std::size_t k = 0; k < mesh.element_count(); ++k) {
    nodes.push_back(mesh.nodes()[k]);
    if (next < marked.size() && marked[next] == k) {
      nodes.push_back(0.5 * (mesh.nodes()[k] + mesh.nodes()[k + 1]));
      ++next;
    }
  }
  nodes.push_back(1.0);
  return {Mesh1D(std::move(nodes)), std::move(marked), true};
}

void FemTrace::write_csv(std::ostream& out) const {
  out << "n,size,error,ratio\n";
  for (const auto& r : records_)
    out << fmt::format("{},{},{:.17g},{:.17g}\n", r.n, r.size, r.error, r.ratio);
}

FemTrace adaptive_fem_loop(const Problem1D& problem, const FemConfig& config) {
  if (config.initial_elements == 0 || config.initial_elements > config.max_elements)
    throw ConfigError("initial element count must lie in [1, max_elements]");
  FemTrace trace;
  Mesh1D mesh = Mesh1D::uniform(config.initial_elements);
  int idle = 0;
  for (int round = 0; round < config.max_rounds; ++round) {
    const auto solution = assemble_solve(mesh, problem);
    const auto ind = error_indicators(solution, problem);
    const double error = h1_error(solution, problem);
    trace.append({round, mesh.element_count(), error, ind.ratio(), ind.estimator()});
    if (config.target_error && error <= *config.target_error) break;

    RefinementStrategy strategy = config.strategy;
    if (strategy.kind == RefinementKind::Threshold && config.relative_threshold)
      strategy.parameter *= *std::max_element(ind.eta.begin(), ind.eta.end());
    auto next = refine(mesh, ind.eta, strategy);
    if (next.mesh.element_count() > config.max_elements) break;
    if (!next.progress) {
      if (++idle >= 2)
        throw StagnationError(fmt::format(
            "no element marked in two consecutive rounds ({} elements, error {:.3g})",
            mesh.element_count(), error));
    } else {
      idle = 0;
    }
    mesh = std::move(next.mesh);
  }
  return trace;
}

}  // namespace awm
