// mirrorvi: run experiment specs, generate HpHard problem files, summarize runs.
//
//   mirrorvi run <spec-file> [--out DIR] [--n N] [--seed S]
//   mirrorvi generate hphard --n N --seed S --out FILE [--q zero|random]
//   mirrorvi summary <run-dir>
//
// Exit codes: 0 success, 2 validation failure, 3 solver failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mirrorvi/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitSolver = 3;

int report_invalid(const std::vector<std::string>& errors) {
  std::cerr << nlohmann::json{{"status", "invalid"}, {"errors", errors}}.dump(2) << '\n';
  return kExitInvalid;
}

int cmd_run(const std::string& spec_file, const std::optional<std::string>& out, const std::optional<long long>& n,
            const std::optional<unsigned long long>& seed) {
  using namespace mirrorvi;
  try {
    auto spec = load_spec(spec_file);
    if (out) spec.output_dir = *out;
    if (n || seed) {
      if (spec.problem.kind != ProblemKind::HpHard) return report_invalid({"--n/--seed apply to hphard problems only"});
      if (n) {
        if (*n < 1) return report_invalid({"--n must be >= 1"});
        spec.problem.n = static_cast<Index>(*n);
      }
      if (seed) spec.problem.seed = *seed;
    }
    const auto outcome = run_experiment(spec);
    const auto rows = summarize_run_dir(outcome.output_dir);
    emit_summary(rows, std::cout, outcome.output_dir / "summary.csv");
    return outcome.all_ok() ? kExitOk : kExitSolver;
  } catch (const ValidationError& e) {
    return report_invalid(e.errors());
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

int cmd_generate(long long n, unsigned long long seed, const std::string& q, const std::string& out) {
  using namespace mirrorvi;
  if (n < 1) return report_invalid({"--n must be >= 1"});
  if (q != "zero" && q != "random") return report_invalid({"--q must be zero or random"});
  try {
    const auto problem = generate_hphard(static_cast<Index>(n), seed, detail::hphard_q(n, seed, q == "random"));
    std::ofstream f(out, std::ios::trunc);
    if (!f) return report_invalid({"cannot write '" + out + "'"});
    f << to_json(problem).dump() << '\n';
    return kExitOk;
  } catch (const Error& e) {
    return report_invalid({e.what()});
  }
}

int cmd_summary(const std::string& dir) {
  try {
    const auto rows = mirrorvi::summarize_run_dir(dir);
    mirrorvi::emit_summary(rows, std::cout, std::filesystem::path(dir) / "summary.csv");
    return kExitOk;
  } catch (const mirrorvi::Error& e) {
    return report_invalid({e.what()});
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted mirror descent for variational inequalities"};
  app.require_subcommand(1);

  std::string spec_file;
  std::optional<std::string> out_dir;
  std::optional<long long> run_n;
  std::optional<unsigned long long> run_seed;
  auto* run = app.add_subcommand("run", "Run every solver in an experiment spec");
  run->add_option("spec", spec_file, "Experiment spec (INI)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the spec)");
  run->add_option("--n", run_n, "HpHard dimension override");
  run->add_option("--seed", run_seed, "HpHard seed override");

  long long gen_n = 0;
  unsigned long long gen_seed = 0;
  std::string gen_q = "zero";
  std::string gen_out;
  auto* gen = app.add_subcommand("generate", "Write a problem file");
  auto* hp = gen->add_subcommand("hphard", "HpHard affine problem");
  gen->require_subcommand(1);
  hp->add_option("--n", gen_n, "Dimension")->required();
  hp->add_option("--seed", gen_seed, "RNG seed")->required();
  hp->add_option("--out", gen_out, "Output JSON file")->required();
  hp->add_option("--q", gen_q, "Affine term: zero or random");

  std::string run_dir;
  auto* summary = app.add_subcommand("summary", "Summarize a finished run directory");
  summary->add_option("run-dir", run_dir, "Directory written by `run`")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInvalid;
  }

  if (run->parsed()) return cmd_run(spec_file, out_dir, run_n, run_seed);
  if (hp->parsed()) return cmd_generate(gen_n, gen_seed, gen_q, gen_out);
  if (summary->parsed()) return cmd_summary(run_dir);
  return kExitInvalid;
}
