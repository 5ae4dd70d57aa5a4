// Command line front end for the rate experiments.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "awm/errors.hpp"
#include "awm/harness.hpp"
#include "awm/registry.hpp"

namespace {

struct Flags {
  std::string problem;
  std::string config;
  std::string out;
  int max_level = 0;
  double eps_final = 0.0;
  std::vector<std::string> strategies;
};

void add_flags(CLI::App& cmd, Flags& flags) {
  cmd.add_option("--problem", flags.problem, "registry id (see list-problems)");
  cmd.add_option("--config", flags.config, "JSON experiment configuration");
  cmd.add_option("--out", flags.out, "directory for the CSV files");
  cmd.add_option("--max-level", flags.max_level, "deepest level for coefficient analysis");
  cmd.add_option("--eps-final", flags.eps_final, "final tolerance of the wavelet solver");
  cmd.add_option("--strategy", flags.strategies,
                 "FEM strategy: uniform, threshold, fixed_fraction, bulk (repeatable)");
}

awm::ExperimentConfig make_config(awm::ExperimentKind kind, const Flags& flags) {
  awm::ExperimentConfig c = flags.config.empty() ? awm::ExperimentConfig{}
                                                 : awm::load_config(flags.config);
  c.kind = kind;
  if (!flags.problem.empty()) c.problem = flags.problem;
  if (!flags.out.empty()) c.out = flags.out;
  if (flags.max_level > 0) c.max_level = flags.max_level;
  if (flags.eps_final > 0.0) c.eps_final = flags.eps_final;
  if (!flags.strategies.empty()) c.strategies = flags.strategies;
  return c;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch == '\n' ? ' ' : ch;
  }
  return out + "\"";
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << fmt::format("error kind={} message={}\n", kind, quoted(message));
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive wavelet and adaptive FEM rate experiments"};
  app.require_subcommand(1);

  Flags flags;
  struct Sub {
    const char* name;
    awm::ExperimentKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {"approx", awm::ExperimentKind::ApproxRates, "linear and best N-term approximation rates"},
      {"solve-wavelet", awm::ExperimentKind::SolveWavelet, "adaptive wavelet Galerkin solver"},
      {"solve-fem", awm::ExperimentKind::SolveFem, "adaptive P1 finite elements"},
      {"compare", awm::ExperimentKind::Compare, "FEM, best N-term and wavelet side by side"},
  };
  std::vector<std::pair<CLI::App*, awm::ExperimentKind>> commands;
  for (const auto& s : subs) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_flags(*cmd, flags);
    commands.push_back({cmd, s.kind});
  }
  auto* list = app.add_subcommand("list-problems", "print the benchmark registry");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("config", e.what());
  }

  try {
    if (list->parsed()) {
      for (const auto& id : awm::registry_ids()) {
        const auto entry = awm::registry_get(id);
        std::cout << fmt::format("{:<20} {}\n", id, entry.description);
      }
      return 0;
    }
    for (const auto& [cmd, kind] : commands) {
      if (!cmd->parsed()) continue;
      const auto config = make_config(kind, flags);
      const auto table = awm::run_experiment(config);
      std::cout << fmt::format("{} on {}\n", awm::to_string(config.kind), config.problem)
                << awm::format_table(table);
      if (!config.out.empty()) std::cout << "wrote " << config.out.string() << "\n";
    }
    return 0;
  } catch (const awm::Error& e) {
    return fail(awm::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
