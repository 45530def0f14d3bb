#include <CLI11.hpp>

#include <iostream>

#include "spot/harness.hpp"

namespace {

spot::Variant variant_or_exit(const std::string& s) {
  const auto v = spot::parse_variant(s);
  if (!v) {
    std::cerr << "error: unknown variant '" << s << "' (spot, spot-star, baseline)\n";
    std::exit(2);
  }
  return *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observation-urgency planner simulation harness"};
  app.require_subcommand(1);

  spot::RunConfig run;
  std::string run_variant = "spot";
  auto* run_cmd = app.add_subcommand("run", "Run seeded trials and write logs, CSVs and metrics");
  run_cmd->add_option("--scenario", run.scenario_path, "Scenario JSON file")->required();
  run_cmd->add_option("--variant", run_variant, "spot | spot-star | baseline");
  run_cmd->add_option("--trials", run.trials, "Number of trials");
  run_cmd->add_option("--seed", run.seed, "Seed of the first trial");
  run_cmd->add_option("--d-f", run.d_f, "Proximity threshold for lead time and coverage (m)");
  run_cmd->add_option("--out", run.out_dir, "Output directory");
  run_cmd->add_option("--jobs", run.jobs, "Worker threads");
  run_cmd->add_option("--snapshot-stride", run.snapshot_stride, "Urgency raster every N steps (0: off)");

  spot::GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of the cost gradients");
  grad_cmd->add_option("--instances", grad.instances, "Random instances");
  grad_cmd->add_option("--seed", grad.seed, "Instance seed");
  grad_cmd->add_flag("--zero-weights", grad.zero_weights, "Set every cost weight to zero");

  spot::BenchOptions bench;
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Time the urgency build, observation gradient and replanning");
  bench_cmd->add_option("--repetitions", bench.repetitions, "Repetitions per stage")->check(CLI::Range(50, 100000));
  bench_cmd->add_option("--grid", bench.grid_cells, "Grid side in cells");
  bench_cmd->add_option("--scenario", bench.scenario_path, "Scenario for the replanning stage");
  bench_cmd->add_option("--out", bench_out, "Write the report as JSON");

  spot::SnapshotConfig snap;
  std::string snap_variant = "spot";
  auto* snap_cmd = app.add_subcommand("snapshot", "Dump belief and urgency rasters at time T");
  snap_cmd->add_option("--scenario", snap.scenario_path, "Scenario JSON file")->required();
  snap_cmd->add_option("--at", snap.at, "Time (s)")->required();
  snap_cmd->add_option("--variant", snap_variant, "spot | spot-star | baseline");
  snap_cmd->add_option("--seed", snap.seed, "Trial seed");
  snap_cmd->add_option("--out", snap.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      run.variant = variant_or_exit(run_variant);
      return spot::cmd_run(run, std::cout, std::cerr);
    }
    if (*grad_cmd) return spot::cmd_gradcheck(grad, std::cout);
    if (*bench_cmd) return spot::cmd_bench(bench, bench_out, std::cout);
    if (*snap_cmd) {
      snap.variant = variant_or_exit(snap_variant);
      return spot::cmd_snapshot(snap, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
