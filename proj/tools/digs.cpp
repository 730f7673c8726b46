#include "digs/run.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

const char* kConfigReference = R"(Config file reference (key = value lines under [section] headers)

[input]
  kind          two_moons | four_corners | two_region_image | categorical |
                image | points_csv | table_csv          (default two_moons)
  path          input file for image/points_csv/table_csv
  truth_path    CSV of ground-truth labels (last column, 1-based)
  n             generator point count                    (default 3000)
  noise         generator noise level
  spread        four_corners blob spread                 (default 0.35)
  k             four_corners class count                 (default 4)
  width height  two_region_image grid                    (default 65 65)
  tail_fraction two_region_image tail mass               (default 0.10)
  attributes values flip   categorical generator shape
  seed          dataset seed (fixed across sweep repeats)

[graph]
  mode          graph | hypergraph     (default: hypergraph for tables)
  weight        gaussian | zmp                           (default zmp)
  sigma         gaussian scale                           (default 1.0)
  R             zmp local-scale neighbor rank            (default 9)
  knn           symmetric k-NN sparsification, 0 = full  (default 0)
  metric        euclidean | manhattan | auto             (default auto:
                manhattan for images, euclidean otherwise)

[hypergraph]
  columns         attribute columns (space separated; default: all non-label)
  label_column    ground-truth column                    (default class)
  weight          constant hyperedge weight              (default 1.0)
  include_missing missing values form their own hyperedge (default false)
  bin             column:width entries to bin numeric columns

[spectral]
  m             number of eigenpairs kept                (default 15)
  tol           eigensolver residual tolerance           (default 1e-10)
  max_iter      Lanczos iteration cap                    (default 1000)
  seed          eigensolver start-vector seed            (default 1)
  dense_bound   delegate to dense solve when n <= bound  (default 256)
  cache         file prefix to save/load the basis CSVs

[solver]
  mode          auto | scalar | multiclass               (default auto)
  potential     smooth | nonsmooth                       (default nonsmooth)
  epsilon tau   interface parameter and time step        (default 0.5 0.01)
  c             number or "a/eps + omega0"               (default 3/eps+omega0)
  omega0        fidelity strength                        (default 1)
  eps_tol       relative-change stop tolerance           (default 1e-6)
  t_max         step cap                                 (default 500)
  nu_min        penalty floor; schedule 1e-1..nu_min     (default 1e-7)
  nu_schedule   explicit decreasing list (overrides nu_min)
  newton_max newton_rel newton_abs   SSN stop rule       (default 20 1e-12 1e-6)
  linear_solver direct | conjugate_gradient              (default direct)
  stop_norm     l2 | max                                 (default l2)

[fidelity]
  n_sample      known vertices per class (single value broadcasts, or one
                value per class in sorted label order)   (default 10)

[run]
  seed          fidelity sampling + initialization seed  (default 1)

[sweep] (sweep subcommand only)
  axes          config keys forming the grid, e.g. "fidelity.n_sample spectral.m"
  values.<key>  space-separated values for each axis
  repeats       runs per cell; seeds are mix(base_seed, cell, repeat)
  base_seed     sweep seed                               (default 1)
  metric        summary metric                           (default misclassification)

Environment: DIGS_OUTPUT_DIR overrides the default output directory,
DIGS_WORKERS the sweep worker count.)";

std::string default_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("DIGS_OUTPUT_DIR")) return env;
  return "runs";
}

int default_workers(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("DIGS_WORKERS")) return std::max(1, std::atoi(env));
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"digs - diffuse-interface semi-supervised segmentation on graphs and hypergraphs"};
  app.footer(kConfigReference);
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 0;

  auto* segment = app.add_subcommand("segment", "run one segmentation from a config file");
  segment->add_option("--config", config_path, "config file")->required();
  segment->add_option("--out", out_dir, "output directory (default runs/, or DIGS_OUTPUT_DIR)");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid with repeated seeds");
  sweep->add_option("--config", config_path, "config file with a [sweep] section")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--workers", workers, "worker pool size (default DIGS_WORKERS or hardware)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (segment->parsed()) {
      digs::ResolvedConfig cfg = digs::resolve_config(digs::load_config(config_path));
      digs::RunResult result = digs::run_segment(cfg);
      const auto dir = std::filesystem::path(default_out_dir(out_dir));
      digs::write_run_outputs(dir, result);
      for (const auto& warning : result.warnings)
        std::cerr << "warning: " << warning << "\n";
      for (const auto& [key, value] : result.metrics)
        std::cout << key << " = " << digs::format_double(value) << "\n";
      std::cout << "outputs written to " << dir.string() << "\n";
    } else {
      const auto dir = std::filesystem::path(default_out_dir(out_dir));
      digs::SweepOutcome outcome =
          digs::run_sweep(digs::load_config(config_path), dir, default_workers(workers));
      int failed = 0;
      for (const auto& row : outcome.rows) {
        failed += row.failed;
        std::cout << "cell " << row.cell.index << ": mean_" << outcome.metric << " = "
                  << digs::format_double(row.mean_metric) << " (" << row.ok << " ok, "
                  << row.failed << " failed)\n";
      }
      std::cout << "summary written to " << (dir / "summary.csv").string() << "\n";
      if (failed > 0) std::cerr << "warning: " << failed << " child runs failed; see failures.log\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
