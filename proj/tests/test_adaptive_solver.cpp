#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "awm/adaptive_solver.hpp"
#include "awm/registry.hpp"
#include "oracles.hpp"

using namespace awm;

namespace {

// u = 0.5 psi_00 - 0.25 psi_21 + 0.125 psi_36: a finite hat expansion.
SparseCoefficientVector finite_coefficients() {
  return SparseCoefficientVector(kHatH1, {{{0, 0}, 0.5}, {{2, 1}, -0.25}, {{3, 6}, 0.125}});
}

Problem1D finite_problem(PiecewisePolynomial a) {
  const auto coeffs = finite_coefficients();
  const auto u = oracle::synthesize(coeffs);
  return Problem1D("finite", std::move(a), PiecewisePolynomial::constant(0.0),
                   FunctionDescriptor(u), coeffs);
}

PiecewisePolynomial one_plus_x() {
  const double c[] = {1.0, 1.0};
  return PiecewisePolynomial::polynomial(c);
}

Eigen::VectorXd dense_galerkin(const CompressibleOperator& a, RhsProvider& rhs,
                               const std::vector<WaveletIndex>& indices) {
  const auto m = oracle::to_eigen(a.section(indices));
  Eigen::VectorXd f(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) f(i) = rhs.coefficient(indices[i]);
  return m.ldlt().solve(f);
}

}  // namespace

TEST_CASE("damping") {
  const auto id = choose_tau({1.0, 1.0});
  CHECK(id.tau == 1.0);
  CHECK(id.rho == 0.0);
  const auto d = choose_tau({1.0, 2.0});
  CHECK(d.tau == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(d.rho == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto e = choose_tau({1.0, 3.0});
  CHECK(e.tau == 0.5);
  CHECK(e.rho == 0.5);
  CHECK_THROWS_AS(choose_tau({0.0, 1.0}), SpectralError);
  CHECK_THROWS_AS(choose_tau({-1.0, 1.0}), SpectralError);
  CHECK(damping_for(0.5, {1.0, 2.0}).rho == 0.5);
  CHECK_THROWS_AS(damping_for(1.0, {1.0, 2.0}), ConfigError);

  const CompressibleOperator unit(oracle::unit_coefficient_problem());
  const auto s = estimate_spectrum(unit, 6);
  CHECK(s.lambda_min == doctest::Approx(1.0 - 1e-6).epsilon(1e-15));
  CHECK(s.lambda_max == doctest::Approx(1.0 + 1e-6).epsilon(1e-15));
  const CompressibleOperator lin(oracle::linear_coefficient_problem());
  const auto t = estimate_spectrum(lin, 6);
  CHECK(t.lambda_min >= 1.0 - 1e-5);
  CHECK(t.lambda_max <= 2.0 + 1e-5);
}

TEST_CASE("load vector") {
  SUBCASE("f = 1 by direct integration") {
    const auto p = oracle::unit_coefficient_problem();
    RhsProvider rhs(p);
    CHECK(rhs.coefficient({0, 0}) == doctest::Approx(0.25).epsilon(1e-15));
    for (int j = 0; j <= 10; ++j)
      CHECK(rhs.coefficient({j, (std::int64_t{1} << j) / 3}) ==
            doctest::Approx(std::exp2(-(j + 1) - 0.5 * (j + 2))).epsilon(1e-13));
    // ||F||^2 = sum_j 2^j 2^{-3j-4} = 1/12.
    std::vector<int> depth;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-6}) {
      const auto& fe = rhs.coarse_rhs(eps);
      // All level-j coefficients equal c_j, so the dropped norm follows
      // from the kept counts per level.
      std::vector<double> count(64, 0.0);
      for (const auto& [index, c] : fe) {
        CHECK(c == doctest::Approx(rhs.coefficient(index)).epsilon(1e-14));
        count[index.level] += 1.0;
      }
      double dropped = 0.0;
      for (int j = 0; j < 64; ++j) {
        const double cj = std::exp2(-(j + 1) - 0.5 * (j + 2));
        dropped += (std::exp2(j) - count[j]) * cj * cj;
      }
      CHECK(std::sqrt(dropped) <= eps);
      depth.push_back(fe.max_level());
    }
    // The per-level norm 2^{-j-2} puts the last level near log2(1/eps).
    CHECK(depth.back() - depth.front() >= 10);
    CHECK(depth.back() - depth.front() <= 16);
    CHECK(rhs.coarse_rhs(1.0).empty());
  }
  SUBCASE("finite expansion with a = 1 is recovered exactly") {
    const auto p = finite_problem(PiecewisePolynomial::constant(1.0));
    CHECK(rhs_coarse(p, 1e-12) == finite_coefficients());
  }
  SUBCASE("integration by parts agrees with direct integration") {
    const double c[] = {0.0, 1.0, -1.0};
    const auto u = PiecewisePolynomial::polynomial(c);
    const double fc[] = {1.0, 4.0};  // -((1+x)(1-2x))'
    const Problem1D by_parts("p", one_plus_x(), PiecewisePolynomial::polynomial(fc),
                             FunctionDescriptor(u));
    const Problem1D direct("d", one_plus_x(), PiecewisePolynomial::polynomial(fc));
    const ClosedForm ucf{"x(1-x)", [](double x) { return x * (1 - x); }};
    const Problem1D closed("c", one_plus_x(), PiecewisePolynomial::polynomial(fc),
                           FunctionDescriptor(ucf));
    const ClosedForm fcf{"1+4x", [](double x) { return 1 + 4 * x; }};
    const Problem1D quad("q", one_plus_x(), fcf);
    const RhsProvider a(by_parts), b(direct), cc(closed), q(quad);
    for (auto idx : hats_up_to(5)) {
      CHECK(a.coefficient(idx) == doctest::Approx(b.coefficient(idx)).epsilon(1e-12));
      CHECK(cc.coefficient(idx) == doctest::Approx(b.coefficient(idx)).epsilon(1e-12));
      CHECK(q.coefficient(idx) == doctest::Approx(b.coefficient(idx)).epsilon(1e-12));
    }
  }
  SUBCASE("insufficient depth") {
    const auto entry = registry_get("singular07");
    RhsProvider shallow(*entry.pde, {.max_level = 6});
    CHECK_THROWS_AS(shallow.coarse_rhs(1e-4), DataResolutionError);
  }
}

TEST_CASE("identity operator solves in one step") {
  const auto p = finite_problem(PiecewisePolynomial::constant(1.0));
  const CompressibleOperator a(p);
  SolverConfig cfg;
  cfg.tau = 1.0;
  cfg.eps_final = 1.0 / 1024.0;
  const auto result = solve_adaptive(a, cfg, finite_coefficients());
  CHECK(result.solution == finite_coefficients());
  CHECK(result.damping.rho == doctest::Approx(1e-6).epsilon(1e-3));
  CHECK(result.threshold_constant == doctest::Approx(5.0).epsilon(1e-5));
}

TEST_CASE("smooth solution with a = 1+x") {
  const double c[] = {0.0, 1.0, -1.0};
  const auto u = PiecewisePolynomial::polynomial(c);
  const double fc[] = {1.0, 4.0};
  const Problem1D p("smooth-var", one_plus_x(), PiecewisePolynomial::polynomial(fc),
                    FunctionDescriptor(u));
  const CompressibleOperator a(p);
  SolverConfig cfg;
  cfg.eps_final = 1.0 / 512.0;
  const auto reference = reference_coefficients(u);
  const auto result = solve_adaptive(a, cfg, reference);
  const double bound =
      (2.0 * result.damping.tau / (1.0 - result.damping.rho) + cfg.c_coarse) * cfg.eps_final;

  std::vector<WaveletIndex> lambda;
  for (const auto& e : result.solution) lambda.push_back(e.first);
  RhsProvider rhs(p);
  const Eigen::VectorXd galerkin = dense_galerkin(a, rhs, lambda);
  double diff = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    diff += std::pow(galerkin(i) - result.solution.get(lambda[i]), 2);
  CHECK(std::sqrt(diff) <= bound);
  CHECK(coefficient_error(reference, result.solution) <= bound);
}

TEST_CASE("dense fixed-section contraction") {
  const CompressibleOperator a(oracle::linear_coefficient_problem());
  const auto entry = registry_get("singular07-varcoef");
  RhsProvider rhs(*entry.pde);
  const auto indices = hats_up_to(6);
  const auto section = a.section(indices);
  std::vector<double> f;
  for (auto i : indices) f.push_back(rhs.coefficient(i));
  const Eigen::VectorXd exact =
      oracle::to_eigen(section).ldlt().solve(Eigen::Map<Eigen::VectorXd>(f.data(), f.size()));
  const std::vector<double> ref(exact.data(), exact.data() + exact.size());
  const SpectralBounds bounds{lambda_min_estimate(section), lambda_max_estimate(section)};
  const auto damping = choose_tau(bounds);
  const auto trace = solve_fixed_section(section, f, ref, damping.tau, 30);
  double previous = Eigen::Map<const Eigen::VectorXd>(ref.data(), ref.size()).norm();
  for (const auto& r : trace.records()) {
    if (*r.error < 1e-13) break;
    CHECK(*r.error / previous <= damping.rho + 0.01);
    previous = *r.error;
  }
}

TEST_CASE("schedule, certificates and determinism") {
  const auto p = finite_problem(one_plus_x());
  const CompressibleOperator a(p);
  SolverConfig cfg;
  cfg.eps_final = 1.0 / 256.0;
  const auto coeffs = finite_coefficients();
  double worst_residual_gap = 0.0;
  auto observer = [&](const StepView& s) {
    // True residual A(U - U^{n-1}) by the independent oracle.
    const oracle::StiffnessApplication exact(p.a(), coeffs - s.previous);
    const int level = std::max(12, exact.grid_level);
    worst_residual_gap =
        std::max(worst_residual_gap, exact.error_of(s.residual, level) / (2.0 * s.eps));
  };
  const auto result = solve_adaptive(a, cfg, coeffs, observer);
  CHECK(worst_residual_gap <= 1.0);

  const auto& recs = result.trace.records();
  double eps = cfg.eps_initial;
  int halvings = 0;
  const double tau = result.damping.tau, rho = result.damping.rho;
  int phase_steps = 0;
  double phase_r0 = 0.0;
  for (const auto& r : recs) {
    CHECK(r.eps == eps);
    if (phase_steps++ == 0) phase_r0 = r.residual;
    if (r.halved || &r == &recs.back()) {
      const double thr = result.threshold_constant * r.eps;
      const double ratio = std::max(1.0, phase_r0 / thr);
      CHECK(phase_steps <=
            static_cast<int>(std::ceil(std::log(ratio) / std::log(1.0 / (1.0 - rho)))) + 1);
      CHECK(*r.error <= 2.0 * tau / (1.0 - rho) * r.eps * (1.0 + cfg.c_coarse));
      phase_steps = 0;
    }
    if (r.halved) {
      eps *= 0.5;
      ++halvings;
    }
  }
  CHECK(halvings == static_cast<int>(std::ceil(std::log2(cfg.eps_initial / cfg.eps_final))));

  std::ostringstream first, second;
  result.trace.write_csv(first);
  solve_adaptive(a, cfg, coeffs).trace.write_csv(second);
  CHECK(first.str() == second.str());
  CHECK(first.str().rfind("n,eps,active_size,residual,error,coarsened_flag\n", 0) == 0);
}

TEST_CASE("configuration and non-convergence") {
  const auto p = finite_problem(one_plus_x());
  const CompressibleOperator a(p);
  SolverConfig bad;
  bad.eps_final = 2.0;
  CHECK_THROWS_AS(solve_adaptive(a, bad), ConfigError);
  SolverConfig short_run;
  short_run.eps_final = 1e-6;
  short_run.max_iterations = 3;
  try {
    solve_adaptive(a, short_run);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.trace().records().size() == 3);
    CHECK(e.kind() == ErrorKind::NonConvergence);
  }
}

TEST_CASE("optimal rate on the singular variable-coefficient problem") {
  const auto entry = registry_get("singular07-varcoef");
  const CompressibleOperator a(*entry.pde);
  const auto& reference = *entry.pde->exact_coefficients();
  SolverConfig cfg;
  cfg.eps_final = 1.0 / 1024.0;
  const auto with = solve_adaptive(a, cfg, reference);
  cfg.coarsening_enabled = false;
  const auto without = solve_adaptive(a, cfg, reference);
  const auto rw = rate_report(with.trace, reference);
  const auto ro = rate_report(without.trace, reference);
  const std::int64_t ns[] = {12, 16, 24, 32, 48, 64, 96, 128, 192};
  const double best = fit_rate(sigma_curve(entry.target, kHatH1, 0.0, ns, kMaxLevel));
  CHECK(std::abs(rw.slope - best) <= 0.2);
  CHECK(std::abs(ro.slope - best) <= 0.2);
  CHECK(rw.slope - ro.slope <= 0.1);
  const double err_with = *with.trace.records().back().error;
  const double err_without = *without.trace.records().back().error;
  CHECK(std::abs(err_with - err_without) <= cfg.c_coarse * cfg.eps_final);
}
