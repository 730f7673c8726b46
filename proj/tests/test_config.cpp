#include "digs/run.hpp"

#include <catch2/catch.hpp>

#include <filesystem>

using namespace digs;

TEST_CASE("config parse and serialize") {
  const std::string text =
      "# comment\n[solver]\nepsilon = 0.5\n tau=0.01 \n\n[input]\nkind = two_moons\n";
  auto cfg = parse_config_text(text);
  REQUIRE(cfg.at("solver.epsilon") == "0.5");
  REQUIRE(cfg.at("solver.tau") == "0.01");
  REQUIRE(cfg.at("input.kind") == "two_moons");

  auto round = parse_config_text(serialize_config(cfg));
  REQUIRE(round == cfg);

  REQUIRE_THROWS_AS(parse_config_text("novalue\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_config_text("[broken\nk = v\n"), std::invalid_argument);
}

TEST_CASE("convexity constant accepts the a/eps + omega0 formula form") {
  REQUIRE(resolve_convexity_constant("7.5", 0.5, 1.0) == 7.5);
  REQUIRE(resolve_convexity_constant("2/eps+omega0", 0.5, 1.0) == Approx(5.0));
  REQUIRE(resolve_convexity_constant("3 / eps + omega0", 0.5, 2.0) == Approx(8.0));
  REQUIRE(resolve_convexity_constant("2/eps", 0.5, 9.0) == Approx(4.0));
  REQUIRE_THROWS_WITH(resolve_convexity_constant("2/eps+bad", 0.5, 1.0),
                      Catch::Contains("solver.c"));
}

TEST_CASE("validation errors carry field names") {
  ConfigMap raw;
  raw["solver.nu_schedule"] = "1e-2 1e-1";  // not decreasing
  REQUIRE_THROWS_WITH(resolve_config(raw), Catch::Contains("nu_schedule"));
  ConfigMap raw2;
  raw2["solver.epsilon"] = "abc";
  REQUIRE_THROWS_WITH(resolve_config(raw2), Catch::Contains("solver.epsilon"));
  ConfigMap raw3;
  raw3["graph.weight"] = "cosine";
  REQUIRE_THROWS_WITH(resolve_config(raw3), Catch::Contains("graph.weight"));
}

TEST_CASE("nu schedule derives from nu_min by decades") {
  ConfigMap raw;
  raw["solver.nu_min"] = "1e-3";
  auto cfg = resolve_config(raw);
  REQUIRE(cfg.solver.nu_schedule.size() == 3);
  REQUIRE(cfg.solver.nu_schedule.front() == Approx(1e-1));
  REQUIRE(cfg.solver.nu_schedule.back() == Approx(1e-3));
}

TEST_CASE("seed mixing is deterministic and spreads") {
  REQUIRE(mix_seed(1, 0, 0) == mix_seed(1, 0, 0));
  REQUIRE(mix_seed(1, 0, 0) != mix_seed(1, 0, 1));
  REQUIRE(mix_seed(1, 0, 0) != mix_seed(1, 1, 0));
  REQUIRE(mix_seed(1, 0, 0) != mix_seed(2, 0, 0));
}

namespace {

ConfigMap tiny_moons_config() {
  ConfigMap raw;
  raw["input.kind"] = "two_moons";
  raw["input.n"] = "200";
  raw["input.noise"] = "0.08";
  raw["input.seed"] = "5";
  raw["graph.weight"] = "zmp";
  raw["graph.R"] = "7";
  raw["spectral.m"] = "10";
  raw["spectral.dense_bound"] = "256";
  raw["solver.potential"] = "nonsmooth";
  raw["solver.epsilon"] = "0.5";
  raw["solver.tau"] = "0.01";
  raw["solver.c"] = "3/eps+omega0";
  raw["solver.omega0"] = "1";
  raw["solver.t_max"] = "150";
  raw["fidelity.n_sample"] = "8";
  raw["run.seed"] = "3";
  return raw;
}

}  // namespace

TEST_CASE("end-to-end segment run on tiny two moons") {
  auto cfg = resolve_config(tiny_moons_config());
  RunResult result = run_segment(cfg);
  REQUIRE(result.labels.size() == 200);
  REQUIRE(result.metrics.at("misclassification") <= 20.0);
  REQUIRE(result.metrics.count("misclassification_excl_fidelity") == 1);

  // manifest reload reproduces labels exactly
  auto cfg2 = resolve_config(result.manifest);
  RunResult result2 = run_segment(cfg2);
  REQUIRE(result.labels == result2.labels);
  REQUIRE(serialize_config(result.manifest) == serialize_config(result2.manifest));
}

TEST_CASE("degenerate 1x1 sweep equals the plain run metric") {
  auto raw = tiny_moons_config();
  raw["sweep.axes"] = "fidelity.n_sample";
  raw["sweep.values.fidelity.n_sample"] = "8";
  raw["sweep.repeats"] = "1";
  raw["sweep.base_seed"] = "17";
  auto outcome = run_sweep(raw, {}, 1, false);
  REQUIRE(outcome.rows.size() == 1);
  REQUIRE(outcome.rows[0].ok == 1);

  auto single = tiny_moons_config();
  single["run.seed"] = std::to_string(mix_seed(17, 0, 0));
  RunResult direct = run_segment(resolve_config(single));
  REQUIRE(outcome.rows[0].mean_metric == direct.metrics.at("misclassification"));
}

TEST_CASE("sweep grid expands row-major with per-cell seeds and tolerates failures") {
  auto raw = tiny_moons_config();
  raw["sweep.axes"] = "fidelity.n_sample spectral.m";
  raw["sweep.values.fidelity.n_sample"] = "4 8";
  raw["sweep.values.spectral.m"] = "6 10 900";  // 900 > n fails per cell
  raw["sweep.repeats"] = "2";
  raw["sweep.base_seed"] = "23";
  auto outcome = run_sweep(raw, {}, 2, false);
  REQUIRE(outcome.rows.size() == 6);
  for (const auto& row : outcome.rows) {
    const bool bad_cell = row.cell.axis_values[1] == "900";
    REQUIRE(row.failed == (bad_cell ? 2 : 0));
    REQUIRE(row.ok == (bad_cell ? 0 : 2));
  }
  // cells enumerate the last axis fastest
  REQUIRE(outcome.rows[0].cell.axis_values == std::vector<std::string>{"4", "6"});
  REQUIRE(outcome.rows[1].cell.axis_values == std::vector<std::string>{"4", "10"});
  REQUIRE(outcome.rows[3].cell.axis_values == std::vector<std::string>{"8", "6"});
}

TEST_CASE("on-disk basis cache reproduces the computed run") {
  namespace fs = std::filesystem;
  const auto prefix = fs::temp_directory_path() / "digs_cache_test";
  fs::remove(prefix.string() + ".lambda.csv");
  fs::remove(prefix.string() + ".phi.csv");
  auto raw = tiny_moons_config();
  raw["spectral.cache"] = prefix.string();
  raw["spectral.dense_bound"] = "0";
  RunResult first = run_segment(resolve_config(raw));
  REQUIRE(basis_cached(prefix));
  RunResult second = run_segment(resolve_config(raw));  // served from the files
  REQUIRE(first.labels == second.labels);
  fs::remove(prefix.string() + ".lambda.csv");
  fs::remove(prefix.string() + ".phi.csv");
}

TEST_CASE("multiclass runs export membership and per-component diagnostics") {
  namespace fs = std::filesystem;
  ConfigMap raw;
  raw["input.kind"] = "four_corners";
  raw["input.n"] = "120";
  raw["input.k"] = "4";
  raw["input.spread"] = "0.3";
  raw["input.seed"] = "2";
  raw["graph.weight"] = "zmp";
  raw["graph.R"] = "5";
  raw["spectral.m"] = "10";
  raw["solver.potential"] = "nonsmooth";
  raw["solver.epsilon"] = "10";
  raw["solver.tau"] = "0.1";
  raw["solver.c"] = "2/eps+omega0";
  raw["solver.omega0"] = "100";
  raw["solver.t_max"] = "40";
  raw["solver.nu_min"] = "1e-5";
  raw["fidelity.n_sample"] = "5";
  raw["run.seed"] = "4";
  RunResult result = run_segment(resolve_config(raw));
  REQUIRE(result.k_components == 4);
  REQUIRE(result.membership.rows() == 120);
  REQUIRE(result.membership.cols() == 4);
  REQUIRE(result.metrics.at("misclassification") <= 12.0);

  const auto dir = fs::temp_directory_path() / "digs_mc_out";
  fs::remove_all(dir);
  write_run_outputs(dir, result);
  REQUIRE(fs::exists(dir / "membership.csv"));
  auto diag_text = read_file(dir / "diagnostics.csv");
  REQUIRE(diag_text.find("newton_c4") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run outputs land atomically with a reloadable manifest") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "digs_run_out";
  fs::remove_all(dir);
  auto cfg = resolve_config(tiny_moons_config());
  RunResult result = run_segment(cfg);
  write_run_outputs(dir, result);
  REQUIRE(fs::exists(dir / "labels.csv"));
  REQUIRE(fs::exists(dir / "diagnostics.csv"));
  REQUIRE(fs::exists(dir / "metrics.csv"));
  REQUIRE(fs::exists(dir / "manifest.cfg"));
  auto reloaded = parse_config_text(read_file(dir / "manifest.cfg"));
  REQUIRE(reloaded == result.manifest);
  fs::remove_all(dir);
}
