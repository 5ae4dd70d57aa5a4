#include "awm/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include "awm/adaptive_solver.hpp"
#include "awm/errors.hpp"
#include "awm/nterm.hpp"
#include "awm/registry.hpp"

namespace awm {
namespace {

using json = nlohmann::json;

std::string number(double v) { return fmt::format("{:.17g}", v); }

std::string optional_number(const std::optional<double>& v) {
  return v ? number(*v) : std::string();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Marks the trailing fit window exactly as fit_loglog_slope chooses it.
void mark_window(std::vector<RateRow>& rows) {
  const auto count = static_cast<std::size_t>(
      std::ceil(kDefaultRateWindow * static_cast<double>(rows.size()) - 1e-9));
  for (std::size_t i = 0; i < rows.size(); ++i)
    rows[i].in_slope_window =
        i >= rows.size() - count && rows[i].error > 0.0 && rows[i].size > 0;
}

std::vector<RateRow> curve_rows(const std::string& method, const RateCurve& curve) {
  std::vector<RateRow> rows;
  for (const auto& p : curve.points())
    rows.push_back({method, p.n, p.n, std::nullopt, std::nullopt, p.error, false});
  return rows;
}

std::vector<RateRow> fem_rows(const std::string& method, const FemTrace& trace) {
  std::vector<RateRow> rows;
  for (const auto& r : trace.records())
    rows.push_back({method, r.n, static_cast<std::int64_t>(r.size), std::nullopt, r.estimator,
                    r.error, false});
  return rows;
}

struct Output {
  RateTable table;
  std::vector<std::pair<std::string, std::string>> files;  // name, content

  void add(std::vector<RateRow> rows, std::optional<bool> super_polynomial = std::nullopt) {
    mark_window(rows);
    const std::string method = rows.empty() ? std::string() : rows.front().method;
    table.methods.push_back({method, rows.size(), slope_of(rows), super_polynomial});
    table.rows.insert(table.rows.end(), rows.begin(), rows.end());
  }
};

const Problem1D& pde_of(const RegistryEntry& entry) {
  if (!entry.pde)
    throw ConfigError(fmt::format("problem '{}' is an approximation target without a PDE",
                                  entry.id));
  return *entry.pde;
}

void approx_rates(const ExperimentConfig& c, const RegistryEntry& entry, Output& out) {
  const auto linear = linear_curve(entry.target, entry.basis, 0.0, c.linear_levels, c.max_level);
  const auto nonlinear = sigma_curve(entry.target, entry.basis, 0.0, c.n_list, c.max_level);
  out.add(curve_rows("linear", linear));
  out.add(curve_rows("nonlinear", nonlinear), is_super_polynomial(nonlinear));
}

void best_nterm(const ExperimentConfig& c, const RegistryEntry& entry, Output& out) {
  out.add(curve_rows("best_nterm",
                     sigma_curve(entry.target, entry.basis, 0.0, c.n_list, c.max_level)));
}

void solve_wavelet(const ExperimentConfig& c, const RegistryEntry& entry, Output& out,
                   bool with_best) {
  const Problem1D& pde = pde_of(entry);
  if (!pde.exact_coefficients())
    throw ConfigError(fmt::format("problem '{}' has no reference coefficients", entry.id));
  const auto& reference = *pde.exact_coefficients();
  SolverConfig sc;
  sc.eps_initial = c.eps_initial;
  sc.eps_final = c.eps_final;
  sc.coarsening_enabled = c.coarsening;
  sc.c_coarse = c.c_coarse;
  const CompressibleOperator op(pde);
  const auto result = solve_adaptive(op, sc, reference);
  const auto report = rate_report(result.trace, reference);

  std::vector<RateRow> rows, best;
  std::size_t i = 0;
  for (const auto& r : result.trace.phase_ends()) {
    if (r.active_size == 0) continue;
    rows.push_back({"wavelet", r.n, static_cast<std::int64_t>(r.active_size), r.eps,
                    r.residual, *r.error, false});
    best.push_back({"best_nterm", report.best_nterm[i].n, report.best_nterm[i].n,
                    std::nullopt, std::nullopt, report.best_nterm[i].error, false});
    ++i;
  }
  std::ostringstream trace;
  result.trace.write_csv(trace, !c.deterministic);
  out.files.push_back({"trace_wavelet.csv", trace.str()});
  out.add(std::move(rows));
  if (with_best) out.add(std::move(best));
}

void solve_fem(const ExperimentConfig& c, const RegistryEntry& entry, Output& out) {
  const Problem1D& pde = pde_of(entry);
  for (const auto& name : c.strategies) {
    FemConfig fc;
    fc.strategy = strategy_from_name(name, c);
    fc.max_elements = c.max_elements;
    const auto trace = adaptive_fem_loop(pde, fc);
    const std::string method = "fem_" + name;
    std::ostringstream csv;
    trace.write_csv(csv);
    out.files.push_back({"trace_" + method + ".csv", csv.str()});
    out.add(fem_rows(method, trace));
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

std::string metadata_csv(const std::vector<std::pair<std::string, std::string>>& meta) {
  std::string out = "key,value\n";
  for (const auto& [k, v] : meta) out += csv_field(k) + "," + csv_field(v) + "\n";
  return out;
}

// Writes every file through name.tmp and a rename; on failure removes what
// this call created.
void write_atomically(const std::filesystem::path& dir,
                      const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> done;
  try {
    fs::create_directories(dir);
    for (const auto& [name, content] : files) {
      const fs::path target = dir / name;
      const fs::path tmp = dir / (name + ".tmp");
      {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        f << content;
        f.flush();
        if (!f) throw IoError(fmt::format("cannot write {}", tmp.string()));
      }
      fs::rename(tmp, target);
      done.push_back(target);
    }
  } catch (const std::exception& e) {
    std::error_code ec;
    for (const auto& p : done) fs::remove(p, ec);
    for (const auto& [name, content] : files) fs::remove(dir / (name + ".tmp"), ec);
    if (const auto* io = dynamic_cast<const IoError*>(&e)) throw *io;
    throw IoError(fmt::format("writing results to {} failed: {}", dir.string(), e.what()));
  }
}

template <class T>
void read_field(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config field '{}': {}", key, e.what()));
  }
}

// registry_get builds reference coefficients; only call it to report.
void require_known(const std::string& id) {
  const auto ids = registry_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) registry_get(id);
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::ApproxRates: return "approx_rates";
    case ExperimentKind::SolveWavelet: return "solve_wavelet";
    case ExperimentKind::SolveFem: return "solve_fem";
    case ExperimentKind::Compare: return "compare";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  std::string t = text;
  std::replace(t.begin(), t.end(), '-', '_');
  if (t == "approx_rates" || t == "approx") return ExperimentKind::ApproxRates;
  if (t == "solve_wavelet") return ExperimentKind::SolveWavelet;
  if (t == "solve_fem") return ExperimentKind::SolveFem;
  if (t == "compare") return ExperimentKind::Compare;
  throw ConfigError(fmt::format(
      "unknown experiment '{}'; expected approx_rates, solve_wavelet, solve_fem or compare",
      text));
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> known{
      "experiment",   "problem",     "n_list",     "linear_levels",   "max_level",
      "eps_initial",  "eps_final",   "coarsening", "c_coarse",        "strategies",
      "threshold_theta", "fixed_fraction", "bulk_theta", "max_elements", "deterministic",
      "out"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(fmt::format("unknown config field '{}'", key));

  ExperimentConfig c;
  std::string kind = to_string(c.kind), out;
  read_field(j, "experiment", kind);
  c.kind = parse_experiment_kind(kind);
  read_field(j, "problem", c.problem);
  read_field(j, "n_list", c.n_list);
  read_field(j, "linear_levels", c.linear_levels);
  read_field(j, "max_level", c.max_level);
  read_field(j, "eps_initial", c.eps_initial);
  read_field(j, "eps_final", c.eps_final);
  read_field(j, "coarsening", c.coarsening);
  read_field(j, "c_coarse", c.c_coarse);
  read_field(j, "strategies", c.strategies);
  read_field(j, "threshold_theta", c.threshold_theta);
  read_field(j, "fixed_fraction", c.fixed_fraction);
  read_field(j, "bulk_theta", c.bulk_theta);
  read_field(j, "max_elements", c.max_elements);
  read_field(j, "deterministic", c.deterministic);
  read_field(j, "out", out);
  c.out = out;
  validate(with_defaults(c));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig with_defaults(ExperimentConfig c) {
  require_known(c.problem);
  if (c.problem == "jump13") {
    if (c.n_list.empty())
      for (std::int64_t n = 1; n <= 20; ++n) c.n_list.push_back(n);
    if (c.linear_levels.empty()) c.linear_levels = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  } else if (c.problem == "smooth") {
    if (c.n_list.empty()) c.n_list = {4, 8, 16, 32, 64, 128, 256, 512, 1024};
    if (c.linear_levels.empty()) c.linear_levels = {2, 3, 4, 5, 6, 7, 8, 9, 10};
  } else {
    if (c.n_list.empty()) c.n_list = {12, 16, 24, 32, 48, 64, 96, 128, 192};
    if (c.linear_levels.empty()) c.linear_levels = {4, 6, 8, 10, 12, 14, 16, 18};
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  require_known(c.problem);
  if (c.n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    if (c.n_list[i] <= 0) throw ConfigError("n_list entries must be positive");
    if (i > 0 && c.n_list[i] <= c.n_list[i - 1])
      throw ConfigError("n_list must be strictly increasing");
  }
  if (c.linear_levels.empty()) throw ConfigError("linear_levels must not be empty");
  for (std::size_t i = 1; i < c.linear_levels.size(); ++i)
    if (c.linear_levels[i] <= c.linear_levels[i - 1])
      throw ConfigError("linear_levels must be strictly increasing");
  if (c.max_level < 1 || c.max_level > kMaxLevel)
    throw ConfigError(fmt::format("max_level must lie in [1, {}]", kMaxLevel));
  if (!(c.eps_final > 0.0 && c.eps_final <= c.eps_initial))
    throw ConfigError("need 0 < eps_final <= eps_initial");
  if (!(c.c_coarse > 0.0)) throw ConfigError("c_coarse must be positive");
  if (c.max_elements < 2) throw ConfigError("max_elements must be at least 2");
  if (c.strategies.empty()) throw ConfigError("strategies must not be empty");
  for (const auto& s : c.strategies) strategy_from_name(s, c);
}

std::string to_json(const ExperimentConfig& c) {
  json j{{"experiment", to_string(c.kind)},
         {"problem", c.problem},
         {"n_list", c.n_list},
         {"linear_levels", c.linear_levels},
         {"max_level", c.max_level},
         {"eps_initial", c.eps_initial},
         {"eps_final", c.eps_final},
         {"coarsening", c.coarsening},
         {"c_coarse", c.c_coarse},
         {"strategies", c.strategies},
         {"threshold_theta", c.threshold_theta},
         {"fixed_fraction", c.fixed_fraction},
         {"bulk_theta", c.bulk_theta},
         {"max_elements", c.max_elements},
         {"deterministic", c.deterministic},
         {"out", c.out.string()}};
  return j.dump();
}

RefinementStrategy strategy_from_name(const std::string& name, const ExperimentConfig& c) {
  if (name == "uniform") return {RefinementKind::Uniform, 0.0};
  if (name == "threshold") return {RefinementKind::Threshold, c.threshold_theta};
  if (name == "fixed_fraction") return {RefinementKind::FixedFraction, c.fixed_fraction};
  if (name == "bulk") return {RefinementKind::Bulk, c.bulk_theta};
  throw ConfigError(fmt::format(
      "unknown strategy '{}'; expected uniform, threshold, fixed_fraction or bulk", name));
}

std::vector<RateRow> RateTable::rows_of(const std::string& method) const {
  std::vector<RateRow> out;
  for (const auto& r : rows)
    if (r.method == method) out.push_back(r);
  return out;
}

const MethodSummary& RateTable::summary(const std::string& method) const {
  for (const auto& m : methods)
    if (m.method == method) return m;
  throw LookupError(fmt::format("no method '{}' in the rate table", method));
}

double slope_of(const std::vector<RateRow>& rows) {
  std::vector<double> n, e;
  for (const auto& r : rows) {
    n.push_back(static_cast<double>(r.size));
    e.push_back(r.error);
  }
  return fit_loglog_slope(n, e);
}

std::string rates_csv(const std::vector<RateRow>& rows) {
  std::string out = "method,n_or_N,size,eps,residual,error,slope_window_flag\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(r.method), r.n_or_n, r.size,
                       optional_number(r.eps), optional_number(r.residual), number(r.error),
                       r.in_slope_window ? 1 : 0);
  return out;
}

std::string summary_csv(const std::vector<MethodSummary>& methods) {
  std::string out = "method,points,slope,super_polynomial\n";
  for (const auto& m : methods)
    out += fmt::format("{},{},{},{}\n", csv_field(m.method), m.points, number(m.slope),
                       m.super_polynomial ? (*m.super_polynomial ? "1" : "0") : "");
  return out;
}

std::string format_table(const RateTable& table) {
  std::string out = fmt::format("{:<16} {:>7} {:>10} {:>14}  {}\n", "method", "points", "slope",
                                "final error", "note");
  for (const auto& m : table.methods) {
    const auto rows = table.rows_of(m.method);
    const double last = rows.empty() ? 0.0 : rows.back().error;
    std::string note;
    if (m.super_polynomial) note = *m.super_polynomial ? "super-polynomial" : "";
    out += fmt::format("{:<16} {:>7} {:>10.4f} {:>14.4e}  {}\n", m.method, m.points, m.slope,
                       last, note);
  }
  return out;
}

RateTable run_experiment(const ExperimentConfig& requested) {
  Output out;
  const ExperimentConfig config = with_defaults(requested);
  try {
    validate(config);
    const auto entry = registry_get(config.problem);
    switch (config.kind) {
      case ExperimentKind::ApproxRates:
        approx_rates(config, entry, out);
        break;
      case ExperimentKind::SolveWavelet:
        solve_wavelet(config, entry, out, true);
        break;
      case ExperimentKind::SolveFem:
        solve_fem(config, entry, out);
        break;
      case ExperimentKind::Compare: {
        solve_fem(config, entry, out);
        best_nterm(config, entry, out);
        solve_wavelet(config, entry, out, false);
        break;
      }
    }
    const std::string norm = entry.basis == kHaar ? "L2" : "H1";
    out.table.metadata = {{"experiment", to_string(config.kind)},
                          {"problem", config.problem},
                          {"norm", norm},
                          {"artifact_version", kArtifactVersion},
                          {"timestamp", utc_timestamp()},
                          {"config", to_json(config)}};
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{} experiment on '{}': {}", to_string(config.kind),
                                      config.problem, e.what()));
  }

  if (!config.out.empty()) {
    std::vector<std::pair<std::string, std::string>> files{
        {"rates.csv", rates_csv(out.table.rows)},
        {"rate_table.csv", summary_csv(out.table.methods)},
        {"metadata.csv", metadata_csv(out.table.metadata)}};
    for (const auto& m : out.table.methods) {
      const std::string name = "trace_" + m.method + ".csv";
      const bool has_trace = std::any_of(out.files.begin(), out.files.end(),
                                         [&](const auto& f) { return f.first == name; });
      if (!has_trace) files.push_back({name, rates_csv(out.table.rows_of(m.method))});
    }
    files.insert(files.end(), out.files.begin(), out.files.end());
    write_atomically(config.out, files);
  }
  return out.table;
}

}  // namespace awm
