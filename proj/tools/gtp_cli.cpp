// Command-line harness for the fair-coin game library: simulations,
// exhaustive-enumeration means, bound sweeps, the class decision, the cycle
// time scale, and bit-stream scoring.
//
// Exit codes: 0 success, 1 bound failure, 2 usage error, 3 budget exceeded.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gtp/gtp.hpp"

namespace {

using namespace gtp;

constexpr int kExitOk = 0;
constexpr int kExitBoundFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct StrategyOpts {
  std::string strategy = "constprop";
  double gamma = 0.01;
  double psi_c = 4.0;
  double delta = kDefaultDelta;
  double exponent_c = 5.0;
  double alpha = -1.0;  // negative = pick per strategy
  double split = 0.5;
  int k0 = 3;
  int k_max = 10000;
};

void add_strategy_options(CLI::App* cmd, StrategyOpts& o) {
  cmd->add_option("--strategy", o.strategy)
      ->check(CLI::IsMember(
          {"constprop", "mixture", "validity", "dynp", "loop", "combined"}));
  cmd->add_option("--gamma", o.gamma);
  cmd->add_option("--psi-c", o.psi_c);
  cmd->add_option("--delta", o.delta);
  cmd->add_option("--exponent-c", o.exponent_c);
  cmd->add_option("--alpha", o.alpha);
  cmd->add_option("--split", o.split);
  cmd->add_option("--k0", o.k0);
  cmd->add_option("--k-max", o.k_max);
}

double default_alpha(const std::string& strategy) {
  if (strategy == "constprop" || strategy == "validity") return 1.0;
  return kMixtureAlpha;
}

std::unique_ptr<Strategy> make_strategy(const StrategyOpts& o,
                                        const QuadratureConfig& quad) {
  const PsiSpec spec = PsiSpec::family(o.psi_c);
  if (o.strategy == "constprop")
    return constprop_strategy(BettingProportion(o.gamma, o.delta));
  if (o.strategy == "mixture")
    return uniform_mixture_strategy(BettingProportion(o.gamma, o.delta), quad);
  if (o.strategy == "validity")
    return validity_strategy(spec, o.k_max, o.delta);
  DynpConfig cfg;
  cfg.delta = o.delta;
  cfg.k0 = o.k0;
  cfg.quad = quad;
  CycleSchedule sched(o.exponent_c, spec);
  if (o.strategy == "dynp")
    return dynp_strategy(sched, cfg, o.k0);
  if (o.strategy == "loop")
    return sharpness_loop_strategy(sched, cfg);
  if (o.strategy == "combined")
    return combined_skeptic(sched, cfg, o.split);
  throw std::invalid_argument("unknown strategy: " + o.strategy);
}

int cmd_simulate(const StrategyOpts& o, const std::string& reality_kind,
                 long long rounds, uint64_t seed, double margin,
                 const std::string& out, const std::string& format,
                 const std::string& weights_out,
                 const std::string& cycle_report) {
  const QuadratureConfig quad = QuadratureConfig::from_env();
  auto strategy = make_strategy(o, quad);
  const PsiSpec spec = PsiSpec::family(o.psi_c);
  auto reality = make_reality(reality_kind, seed, spec, margin);
  const double alpha = o.alpha > 0.0 ? o.alpha : default_alpha(o.strategy);

  auto traj = run_game(*strategy, *reality, rounds, alpha);

  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!out.empty() && out != "-") {
    file.open(out);
    if (!file) throw std::invalid_argument("cannot open output file: " + out);
    os = &file;
  }
  if (format == "csv")
    traj.to_csv(*os);
  else
    traj.to_jsonl(*os);

  if (!weights_out.empty()) {
    std::ofstream wf(weights_out);
    if (!wf)
      throw std::invalid_argument("cannot open weights file: " + weights_out);
    MixtureWeights::build(spec, o.k_max, o.delta).to_csv(wf);
  }

  Path full;
  for (const auto& row : traj.rows) full.push(row.x);
  const LoopStatus* status = nullptr;
  if (auto* loop = dynamic_cast<SharpnessLoopStrategy*>(strategy.get())) {
    loop->finalize(full);
    status = &loop->status();
  } else if (auto* comb = dynamic_cast<CombinedSkeptic*>(strategy.get())) {
    comb->sync(full);
    status = &comb->loop_status();
  }
  if (status && !cycle_report.empty()) {
    std::ofstream cf(cycle_report);
    if (!cf)
      throw std::invalid_argument("cannot open cycle report: " + cycle_report);
    status->to_csv(cf);
  }

  std::fprintf(stderr, "final capital %.17g (log %.17g) after %lld rounds",
               traj.final_capital(), traj.final_log_capital(), rounds);
  if (traj.clamp_count > 0)
    std::fprintf(stderr, ", %lld clamped stakes", traj.clamp_count);
  if (status && status->incomplete_wait)
    std::fprintf(stderr, ", loop ended waiting at k=%d", status->current_k);
  std::fprintf(stderr, "\n");
  return kExitOk;
}

int cmd_verify_bounds(const std::string& which, const std::string& grid_file,
                      int k, double delta) {
  const QuadratureConfig quad = QuadratureConfig::from_env();
  const BoundKind kind = bound_kind_from_string(which);
  SweepSummary summary;
  if (!grid_file.empty()) {
    std::ifstream in(grid_file);
    if (!in) throw std::invalid_argument("cannot open grid: " + grid_file);
    nlohmann::json j;
    in >> j;
    SweepGrid grid = SweepGrid::from_json(j);
    summary = sweep_bounds(grid, kind, k, quad);
  } else {
    // Default grid: 3 gammas x 5 horizons x 7 sums per case region.
    summary = sweep_bounds_cases({1e-3, 3e-3, 1e-2},
                                 {100, 1000, 10000, 100000, 1000000}, kind, 7,
                                 delta, k, quad);
  }
  std::cout << summary.to_json().dump(2) << "\n";
  std::fprintf(stderr, "%s: %d passed, %d failed, %d warned, %d skipped\n",
               which.c_str(), summary.passed, summary.failed, summary.warned,
               summary.skipped);
  return summary.ok() ? kExitOk : kExitBoundFailure;
}

int cmd_enumerate(const StrategyOpts& o, int rounds) {
  const QuadratureConfig quad = QuadratureConfig::from_env();
  auto strategy = make_strategy(o, quad);
  const double alpha = o.alpha > 0.0 ? o.alpha : default_alpha(o.strategy);
  const double mean = enumerate_mean_capital(*strategy, rounds, alpha);
  std::printf("%.17g\n", mean);
  return kExitOk;
}

int cmd_classify(double psi_c) {
  std::printf("%s\n", to_string(classify(PsiSpec::family(psi_c))));
  return kExitOk;
}

int cmd_timescale(double exponent_c, int k_min, int k_max) {
  CycleSchedule sched(exponent_c, envelope_U());
  std::printf(
      "k,ln_nk,nk_int,ln_gamma_k,gamma3_n,env_ratio,kc_nk_ratio,"
      "gamma_sqrtnk_psi\n");
  for (int k = k_min; k <= k_max; ++k) {
    const CycleEntry& e = sched.entry(k);
    std::printf("%d,%.17g,", k, e.ln_nk);
    if (e.nk_int)
      std::printf("%llu,", *e.nk_int);
    else
      std::printf(",");
    std::printf("%.17g", e.ln_gamma);
    if (k >= 3) {
      const Lemma3Limits q = lemma3_limits(sched, k);
      std::printf(",%.17g,%.17g,%.17g,%.17g", q.gamma3_n, q.env_ratio,
                  q.kc_nk_ratio, q.gamma_sqrtnk_psi);
    } else {
      std::printf(",,,,");
    }
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_ingest(const StrategyOpts& o, const std::string& format) {
  const QuadratureConfig quad = QuadratureConfig::from_env();
  Path path = ingest_bits(std::cin, bit_format_from_string(format));
  auto strategy = make_strategy(o, quad);
  const double alpha = o.alpha > 0.0 ? o.alpha : default_alpha(o.strategy);
  ScriptedReality reality(path);
  auto traj =
      run_game(*strategy, reality, static_cast<long long>(path.rounds()), alpha);
  // Randomness-deficiency score: the final log capital.
  std::printf("%.17g\n", traj.final_log_capital());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fair-coin game-theoretic probability harness"};
  app.require_subcommand(1);

  StrategyOpts opts;

  auto* sim = app.add_subcommand("simulate", "run one game and export it");
  std::string reality_kind = "iid_fair";
  long long rounds = 1000;
  uint64_t seed = 1;
  double margin = 0.0;
  std::string out = "-", format = "csv", weights_out, cycle_report;
  add_strategy_options(sim, opts);
  sim->add_option("--reality", reality_kind);
  sim->add_option("--rounds", rounds);
  sim->add_option("--seed", seed);
  sim->add_option("--margin", margin);
  sim->add_option("--out", out);
  sim->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  sim->add_option("--weights-out", weights_out);
  sim->add_option("--cycle-report", cycle_report);

  auto* verify = app.add_subcommand("verify-bounds", "sweep a lemma bound");
  std::string which;
  std::string grid_file;
  int bssd_k = 3;
  double vdelta = kDefaultDelta;
  verify->add_option("--which", which)
      ->required()
      ->check(CLI::IsMember({"lemma1", "lemma2", "bssd"}));
  verify->add_option("--grid", grid_file);
  verify->add_option("--k", bssd_k);
  verify->add_option("--delta", vdelta);

  auto* enumerate = app.add_subcommand("enumerate", "exhaustive mean capital");
  int enum_rounds = 8;
  add_strategy_options(enumerate, opts);
  enumerate->add_option("--rounds", enum_rounds);

  auto* cls = app.add_subcommand("classify", "upper/lower class of psi_c");
  double psi_c = 4.0;
  cls->add_option("--psi-c", psi_c)->required();

  auto* ts = app.add_subcommand("timescale", "cycle schedule and growth");
  double ts_c = 5.0;
  int k_min = 3, k_max = 10;
  ts->add_option("--exponent-c", ts_c);
  ts->add_option("--k-min", k_min);
  ts->add_option("--k-max", k_max);

  auto* ing = app.add_subcommand("ingest", "score a bit stream from stdin");
  std::string bit_format = "ascii01";
  add_strategy_options(ing, opts);
  ing->add_option("--format", bit_format)
      ->check(CLI::IsMember({"ascii01", "raw"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(opts, reality_kind, rounds, seed, margin, out,
                          format, weights_out, cycle_report);
    if (verify->parsed())
      return cmd_verify_bounds(which, grid_file, bssd_k, vdelta);
    if (enumerate->parsed()) return cmd_enumerate(opts, enum_rounds);
    if (cls->parsed()) return cmd_classify(psi_c);
    if (ts->parsed()) return cmd_timescale(ts_c, k_min, k_max);
    if (ing->parsed()) return cmd_ingest(opts, bit_format);
  } catch (const BudgetExceeded& e) {
    std::fprintf(stderr, "budget exceeded: %s\n", e.what());
    return kExitBudget;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
