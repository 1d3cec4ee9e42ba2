#include <iostream>

#include <CLI11.hpp>

#include "workbench.hpp"

using namespace psiepi::workbench;

int main(int argc, char **argv) {
  CLI::App app{"Optimize, evaluate, simulate and verify overlap-inequality scenarios"};
  app.require_subcommand(1);

  OptimizeArgs opt;
  auto *optimize = app.add_subcommand("optimize", "search for states and measurements minimizing S");
  optimize->add_option("--dim", opt.dim, "Hilbert space dimension")->required();
  optimize->add_option("--n", opt.n, "number of states besides psi_0")->required();
  optimize->add_option("--restarts", opt.restarts, "independent random restarts");
  optimize->add_option("--max-iters", opt.max_iters, "iterations per restart");
  optimize->add_option("--seed", opt.seed, "random seed (default: $WORKBENCH_SEED or 0)");
  optimize->add_option("--field", opt.field, "real or complex");
  optimize->add_flag("--general-povm", opt.general_povm, "search general three-outcome POVMs");
  optimize->add_option("--threads", opt.threads, "worker threads (0 = all cores)");
  optimize->add_option("--out", opt.out, "scenario file to write")->required();

  EvaluateArgs eval;
  auto *evaluate = app.add_subcommand("evaluate", "report S for a scenario file");
  evaluate->add_option("--scenario", eval.scenario, "scenario file")->required();
  evaluate->add_option("--eta", eval.eta, "also report S at this detection efficiency");

  SimulateArgs sim;
  auto *simulate = app.add_subcommand("simulate", "Monte-Carlo photon-counting experiment");
  simulate->add_option("--scenario", sim.scenario, "scenario file")->required();
  simulate->add_option("--counts", sim.counts, "expected heralds per setting");
  simulate->add_option("--trials", sim.trials, "independent simulated experiments");
  simulate->add_option("--bootstrap", sim.bootstrap, "bootstrap resamples per trial");
  simulate->add_option("--seed", sim.seed, "random seed (default: $WORKBENCH_SEED or 0)");
  simulate->add_option("--noise", sim.noise, "defaults | off, then KEY=VAL overrides")->expected(1, -1);
  simulate->add_option("--csv", sim.csv, "CSV output path")->required();
  simulate->add_flag("--timing", sim.timing, "record wall-clock milliseconds (breaks byte-identical output)");

  ThresholdArgs thr;
  auto *threshold = app.add_subcommand("threshold", "detection-efficiency threshold");
  threshold->add_option("--scenario", thr.scenario, "scenario file")->required();

  OracleArgs orc;
  auto *oracle = app.add_subcommand("oracle", "check the inequality on random finite ontological models");
  oracle->add_option("--lambda", orc.lambda, "number of ontic states")->required();
  oracle->add_option("--n", orc.n, "number of states besides psi_0")->required();
  oracle->add_option("--trials", orc.trials, "random models to check");
  oracle->add_option("--seed", orc.seed, "random seed (default: $WORKBENCH_SEED or 0)");

  SweepArgs swp;
  auto *sweep = app.add_subcommand("sweep", "optimize over a range of n");
  sweep->add_option("--dim", swp.dim, "Hilbert space dimension")->required();
  sweep->add_option("--n-min", swp.n_min, "first n")->required();
  sweep->add_option("--n-max", swp.n_max, "last n")->required();
  sweep->add_option("--restarts", swp.restarts, "independent random restarts");
  sweep->add_option("--max-iters", swp.max_iters, "iterations per restart");
  sweep->add_option("--seed", swp.seed, "random seed (default: $WORKBENCH_SEED or 0)");
  sweep->add_option("--threads", swp.threads, "worker threads (0 = all cores)");
  sweep->add_option("--csv", swp.csv, "CSV output path")->required();
  sweep->add_flag("--timing", swp.timing, "record wall-clock milliseconds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  if (optimize->parsed())
    return cmd_optimize(opt, std::cout, std::cerr);
  if (evaluate->parsed())
    return cmd_evaluate(eval, std::cout, std::cerr);
  if (simulate->parsed())
    return cmd_simulate(sim, std::cout, std::cerr);
  if (threshold->parsed())
    return cmd_threshold(thr, std::cout, std::cerr);
  if (oracle->parsed())
    return cmd_oracle(orc, std::cout, std::cerr);
  if (sweep->parsed())
    return cmd_sweep(swp, std::cout, std::cerr);
  return kExitUsage;
}
