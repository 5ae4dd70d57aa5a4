// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "awm/adaptive_solver.hpp"
#include "awm/errors.hpp"
#include "awm/fem_adaptive.hpp"
#include "awm/harness.hpp"
#include "awm/nterm.hpp"
#include "awm/registry.hpp"
#include "oracles.hpp"

using namespace awm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

std::vector<WaveletIndex> haar_indices(int max_level) {
  std::vector<WaveletIndex> out{kScalingIndex};
  for (int j = 0; j <= max_level; ++j)
    for (std::int64_t k = 0; k < (std::int64_t{1} << j); ++k) out.push_back({j, k});
  return out;
}

// Values at the midpoints of the 2^-8 grid; exact for step functions on
// coarser dyadic grids.
std::vector<double> midpoint_samples(const std::function<double(double)>& f) {
  std::vector<double> v(256);
  for (int i = 0; i < 256; ++i) v[i] = f((i + 0.5) / 256.0);
  return v;
}

Verdict basis_correctness() {
  const auto idx = haar_indices(6);
  std::vector<std::vector<double>> samples;
  for (auto i : idx) samples.push_back(midpoint_samples([&](double x) { return evaluate(i, kHaar, x); }));
  double ortho = 0.0;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a; b < idx.size(); ++b) {
      double ip = 0.0;
      for (int i = 0; i < 256; ++i) ip += samples[a][i] * samples[b][i];
      ortho = std::max(ortho, std::abs(ip / 256.0 - (a == b ? 1.0 : 0.0)));
    }

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  double parseval = 0.0;
  for (int level = 1; level <= 7; ++level) {
    const std::size_t cells = std::size_t{1} << level;
    std::vector<double> bps, values;
    for (std::size_t i = 0; i <= cells; ++i) bps.push_back(static_cast<double>(i) / cells);
    for (std::size_t i = 0; i < cells; ++i) values.push_back(val(rng));
    const auto f = PiecewisePolynomial::piecewise_constant(bps, values);
    double l2 = 0.0;
    for (double v : values) l2 += v * v / static_cast<double>(cells);
    const auto c = analyze(f, kHaar, level);
    parseval = std::max(parseval, std::abs(c.norm() * c.norm() - l2));
  }

  // Hats are linear on each half: |psi'|^2 integrates to h (slope^2).
  double hat = 0.0;
  for (int j = 0; j <= 12; ++j)
    for (std::int64_t k : {std::int64_t{0}, (std::int64_t{1} << j) - 1, (std::int64_t{1} << j) / 3}) {
      const WaveletIndex i{j, k};
      const auto s = support(i);
      const double mid = 0.5 * (s.lo + s.hi), half = 0.5 * (s.hi - s.lo);
      const double left = (evaluate(i, kHatH1, mid) - evaluate(i, kHatH1, s.lo)) / half;
      const double right = (evaluate(i, kHatH1, s.hi) - evaluate(i, kHatH1, mid)) / half;
      hat = std::max(hat, std::abs(half * (left * left + right * right) - 1.0));
    }
  return {ortho < 1e-10 && parseval < 1e-10 && hat < 1e-10,
          fmt::format("orthonormality dev {:.2e}, Parseval dev {:.2e}, hat H1 dev {:.2e}", ortho,
                      parseval, hat)};
}

// Sum of squares in ascending order, so equal multisets give equal sums.
double sorted_norm(std::vector<double> c) {
  std::sort(c.begin(), c.end());
  double s = 0.0;
  for (double v : c) s += v * v;
  return std::sqrt(s);
}

Verdict thresholding_optimality() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12), lvl(-1, 8);
  int mismatches = 0, trials = 0;
  for (int t = 0; t < 500; ++t, ++trials) {
    const int n = len(rng);
    const double s = (t % 3) * 0.5;  // weights 2^{0}, 2^{j/2}, 2^{j}
    std::vector<SparseCoefficientVector::Entry> entries;
    std::vector<WaveletIndex> used;
    while (static_cast<int>(entries.size()) < n) {
      const int j = lvl(rng);
      const WaveletIndex i = j < 0 ? kScalingIndex
                                   : WaveletIndex{j, std::uniform_int_distribution<std::int64_t>(
                                                         0, (std::int64_t{1} << j) - 1)(rng)};
      if (std::find(used.begin(), used.end(), i) != used.end()) continue;
      used.push_back(i);
      entries.push_back({i, val(rng)});
    }
    const SparseCoefficientVector v(kHaar, entries);
    std::vector<double> w;
    for (const auto& e : v) w.push_back(contribution(e, s));
    for (int keep = 0; keep <= n; ++keep) {
      const auto kept = threshold_largest(v, keep, s);
      std::vector<double> dropped;
      for (const auto& e : v)
        if (!kept.contains(e.first)) dropped.push_back(contribution(e, s));
      const double err = sorted_norm(dropped);
      double best = 1e300;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (std::popcount(mask) != keep) continue;
        std::vector<double> rest;
        for (int i = 0; i < n; ++i)
          if (!(mask >> i & 1u)) rest.push_back(w[i]);
        best = std::min(best, sorted_norm(rest));
      }
      if (err != best || static_cast<int>(kept.size()) != keep) ++mismatches;
    }
  }
  return {mismatches == 0, fmt::format("{} vectors, all N, {} mismatches", trials, mismatches)};
}

Verdict linear_vs_nonlinear() {
  ExperimentConfig jump;
  jump.kind = ExperimentKind::ApproxRates;
  jump.problem = "jump13";
  const auto tj = run_experiment(jump);  // linear over N = 2^4..2^12, nonlinear N = 1..20
  const double lin_jump = tj.summary("linear").slope;
  const auto nl = tj.rows_of("nonlinear");
  double worst_ratio = 0.0;
  for (std::size_t i = 1; i < nl.size(); ++i)
    if (nl[i].size >= 3) worst_ratio = std::max(worst_ratio, nl[i].error / nl[i - 1].error);

  ExperimentConfig sing = jump;
  sing.problem = "singular07";
  const auto ts = run_experiment(sing);
  const double lin_s = ts.summary("linear").slope, best_s = ts.summary("nonlinear").slope;
  const bool pass = std::abs(lin_jump + 0.5) <= 0.05 && worst_ratio <= 0.75 &&
                    std::abs(lin_s + 0.2) <= 0.05 && std::abs(best_s + 1.0) <= 0.1;
  return {pass, fmt::format("jump13 L2: linear slope {:.4f}, max sigma ratio {:.4f}; "
                            "singular07 H1: linear {:.4f}, best N-term {:.4f}",
                            lin_jump, worst_ratio, lin_s, best_s)};
}

Verdict operator_structure() {
  const CompressibleOperator unit(oracle::unit_coefficient_problem());
  const auto idx = hats_up_to(6);
  const auto s1 = unit.section(idx);
  double offdiag = 0.0;
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c)
      if (r != c) offdiag = std::max(offdiag, std::abs(s1(r, c)));

  const CompressibleOperator lin(oracle::linear_coefficient_problem());
  double lo = 1e300, hi = 0.0;
  for (int level = 0; level <= 8; ++level) {
    const auto sec = lin.section(hats_up_to(level));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(oracle::to_eigen(sec));
    lo = std::min(lo, eig.eigenvalues().minCoeff());
    hi = std::max(hi, eig.eigenvalues().maxCoeff());
  }
  const auto profile = lin.compression_profile();
  bool monotone = true;
  for (std::size_t i = 1; i < profile.size(); ++i)
    monotone = monotone && profile[i].opnorm_estimate <= profile[i - 1].opnorm_estimate;
  // The point at the reference band is exactly zero; judge the last one below it.
  const int ref = lin.options().reference_level;
  double last = profile.front().opnorm_estimate;
  for (const auto& p : profile)
    if (p.band < ref) last = p.opnorm_estimate;
  const double first = profile.front().opnorm_estimate;
  const bool pass = offdiag < 1e-12 && lo >= 1.0 - 1e-8 && hi <= 2.0 + 1e-8 && monotone &&
                    last < 0.1 * first && lin.options().reference_level <= 8;
  return {pass, fmt::format("max |offdiag| {:.2e}; spectrum [{:.6f}, {:.6f}]; profile {} "
                            "points, {:.3e} -> {:.3e}, monotone {}",
                            offdiag, lo, hi, profile.size(), first, last, monotone)};
}

Verdict approx_certificate() {
  const CompressibleOperator lin(oracle::linear_coefficient_problem());
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> log_eps(std::log(1e-4), std::log(1e-1));
  int violations = 0;
  double worst = 0.0;
  const int trials = 120;
  for (int t = 0; t < trials; ++t) {
    const auto v = oracle::random_hat_vector(rng, 1 + t % 64, 6);
    const double eps = std::exp(log_eps(rng));
    const auto r = lin.approx_apply(v, eps);
    const oracle::StiffnessApplication exact(lin.problem().a(), v);
    const double err = exact.error_of(r, std::max(14, exact.grid_level));
    worst = std::max(worst, err / eps);
    if (err > eps) ++violations;
  }
  return {violations == 0, fmt::format("{} vectors, worst error/eps {:.3f}, {} violations", trials,
                                       worst, violations)};
}

Verdict richardson_contraction() {
  const auto d = choose_tau({1.0, 2.0});
  const bool constants = std::abs(d.tau - 2.0 / 3.0) < 1e-15 && std::abs(d.rho - 1.0 / 3.0) < 1e-15;

  const CompressibleOperator a(oracle::linear_coefficient_problem());
  const auto entry = registry_get("singular07-varcoef");
  RhsProvider rhs(*entry.pde);
  double worst = 0.0, rho_used = 0.0;
  for (int level : {4, 6, 8}) {
    const auto indices = hats_up_to(level);
    const auto section = a.section(indices);
    std::vector<double> f;
    for (auto i : indices) f.push_back(rhs.coefficient(i));
    const Eigen::VectorXd exact =
        oracle::to_eigen(section).ldlt().solve(Eigen::Map<Eigen::VectorXd>(f.data(), f.size()));
    const std::vector<double> ref(exact.data(), exact.data() + exact.size());
    const auto damping =
        choose_tau({lambda_min_estimate(section), lambda_max_estimate(section)});
    rho_used = std::max(rho_used, damping.rho);
    const auto trace = solve_fixed_section(section, f, ref, damping.tau, 40);
    double previous = exact.norm();
    for (const auto& r : trace.records()) {
      if (*r.error < 1e-12 * exact.norm()) break;
      worst = std::max(worst, *r.error / previous - damping.rho);
      previous = *r.error;
    }
  }
  return {constants && worst <= 0.01,
          fmt::format("tau {:.6f}, rho {:.6f} from [1,2]; worst step ratio - rho = {:.4f} "
                      "(section rho {:.4f})",
                      d.tau, d.rho, worst, rho_used)};
}

Verdict adaptive_rate() {
  const auto entry = registry_get("singular07-varcoef");
  const CompressibleOperator a(*entry.pde);
  const auto& reference = *entry.pde->exact_coefficients();
  const std::int64_t ns[] = {12, 16, 24, 32, 48, 64, 96, 128, 192};
  const double best = fit_rate(sigma_curve(entry.target, kHatH1, 0.0, ns, kMaxLevel));
  std::string detail = fmt::format("best N-term slope {:.4f}", best);
  bool pass = true;
  for (bool coarsen : {true, false}) {
    SolverConfig cfg;
    cfg.eps_final = 1.0 / 1024.0;
    cfg.coarsening_enabled = coarsen;
    const auto result = solve_adaptive(a, cfg, reference);
    const auto report = rate_report(result.trace, reference);
    const double bound =
        (2.0 * result.damping.tau / (1.0 - result.damping.rho) + cfg.c_coarse) * cfg.eps_final;

    // Dense Galerkin solution on the final active set.
    std::vector<WaveletIndex> lambda;
    for (const auto& e : result.solution) lambda.push_back(e.first);
    RhsProvider rhs(*entry.pde);
    Eigen::VectorXd f(lambda.size());
    for (std::size_t i = 0; i < lambda.size(); ++i) f(i) = rhs.coefficient(lambda[i]);
    const Eigen::VectorXd g = oracle::to_eigen(a.section(lambda)).ldlt().solve(f);
    double diff = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i)
      diff += std::pow(g(i) - result.solution.get(lambda[i]), 2);
    const double dense_err = std::sqrt(diff);
    const double exact_err = coefficient_error(reference, result.solution);
    pass = pass && std::abs(report.slope - best) <= 0.2 && dense_err <= bound &&
           exact_err <= bound;
    detail += fmt::format("; {}: slope {:.4f}, #Lambda {}, error vs dense section {:.3e}, vs "
                          "exact {:.3e}, bound {:.3e}",
                          coarsen ? "coarsened" : "uncoarsened", report.slope,
                          result.solution.size(), dense_err, exact_err, bound);
  }
  return {pass, detail};
}

Verdict fem_comparator() {
  const auto entry = registry_get("singular07");
  FemConfig uniform;
  uniform.strategy = {RefinementKind::Uniform, 0.0};
  const auto curve = [](const FemTrace& t) {
    std::vector<RatePoint> pts;
    for (const auto& r : t.records())
      if (pts.empty() || static_cast<std::int64_t>(r.size) > pts.back().n)
        pts.push_back({static_cast<std::int64_t>(r.size), r.error});
    return RateCurve(pts);
  };
  const double u = fit_rate(curve(adaptive_fem_loop(*entry.pde, uniform)));
  std::string detail = fmt::format("uniform slope {:.4f}", u);
  bool adaptive_ok = false;
  const std::pair<const char*, RefinementStrategy> strategies[] = {
      {"threshold", {RefinementKind::Threshold, 0.5}},
      {"fixed_fraction", {RefinementKind::FixedFraction, 0.2}},
      {"bulk", {RefinementKind::Bulk, 0.5}}};
  for (const auto& [name, s] : strategies) {
    FemConfig c;
    c.strategy = s;
    const auto t = adaptive_fem_loop(*entry.pde, c);
    const double slope = fit_rate(curve(t));
    const double ratio = t.records().back().ratio;
    adaptive_ok = adaptive_ok || (std::abs(slope + 1.0) <= 0.1 && ratio <= 8.0);
    detail += fmt::format("; {} slope {:.4f} ratio {:.2f}", name, slope, ratio);
  }
  return {std::abs(u + 0.2) <= 0.05 && adaptive_ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_timestamp(const std::string& s) {
  std::istringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("timestamp,", 0) != 0) out += line + "\n";
  return out;
}

Verdict determinism() {
  std::vector<ExperimentConfig> configs(4);
  configs[0].kind = ExperimentKind::ApproxRates;
  configs[0].problem = "jump13";
  configs[1].kind = ExperimentKind::SolveWavelet;
  configs[1].problem = "singular07-varcoef";
  configs[2].kind = ExperimentKind::SolveFem;
  configs[2].problem = "singular07";
  configs[2].strategies = {"uniform", "threshold", "fixed_fraction", "bulk"};
  configs[3].kind = ExperimentKind::Compare;
  configs[3].problem = "singular07";
  int files = 0, differing = 0;
  const auto root = fs::temp_directory_path() / "awm_acceptance_determinism";
  // Both runs share the output directory so the configs are identical,
  // out path included.
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto c = configs[i];
    c.out = root / std::to_string(i);
    std::vector<std::map<std::string, std::string>> snapshots;
    for (int run = 0; run < 2; ++run) {
      fs::remove_all(c.out);
      run_experiment(c);
      std::map<std::string, std::string> files_of_run;
      for (const auto& e : fs::directory_iterator(c.out))
        files_of_run[e.path().filename().string()] = without_timestamp(slurp(e.path()));
      snapshots.push_back(std::move(files_of_run));
    }
    files += static_cast<int>(snapshots[0].size());
    for (const auto& [name, body] : snapshots[0]) {
      const auto it = snapshots[1].find(name);
      if (it == snapshots[1].end() || it->second != body) ++differing;
    }
    if (snapshots[0].size() != snapshots[1].size()) ++differing;
  }
  fs::remove_all(root);
  return {files > 0 && differing == 0,
          fmt::format("4 experiment kinds run twice, {} files compared, {} differ", files,
                      differing)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"basis correctness", basis_correctness},
      {"thresholding optimality", thresholding_optimality},
      {"linear vs nonlinear gap", linear_vs_nonlinear},
      {"operator structure", operator_structure},
      {"APPROX certificate", approx_certificate},
      {"Richardson contraction", richardson_contraction},
      {"adaptive solver optimal rate", adaptive_rate},
      {"adaptive FEM comparator", fem_comparator},
      {"determinism", determinism},
  };
  int failed = 0, number = 0;
  for (const auto& [name, run] : criteria) {
    ++number;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !v.pass;
    std::printf("%s %d %s (%.1fs): %s\n", v.pass ? "PASS" : "FAIL", number, name, secs,
                v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", number - failed, number);
  return failed == 0 ? 0 : 1;
}
