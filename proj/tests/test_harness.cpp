#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "subsetlab/error.hpp"
#include "subsetlab/harness.hpp"

using namespace subsetlab;

namespace {

const char* kSmall = R"(# small sweep
design.kind = equicorrelation
design.d = 10
design.omega = 0.5
instance.s = 2
instance.betamin = 1
instance.sigma2 = 1
sweep.ngrid = 10, 20, 40
sweep.trials = 30
sweep.seed = 42
sweep.estimators = bss, bssu, lasso, omp, marginal
estimator.sbar = 3
)";

SweepResult rows_with_rates(std::vector<std::pair<std::size_t, double>> points) {
  SweepResult r;
  for (auto [n, rate] : points) {
    SweepRow row;
    row.estimator = "bss";
    row.n = n;
    row.trials = 10;
    row.successes = static_cast<std::size_t>(rate * 10);
    row.rate = rate;
    r.rows.push_back(row);
  }
  return r;
}

int config_error_code(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return static_cast<int>(e.code());
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const SweepConfig c = parse_config(kSmall);
  CHECK(c.d == 10);
  CHECK(c.n_grid == std::vector<std::size_t>{10, 20, 40});
  CHECK(c.estimators.size() == 5);
  CHECK(c.seed == 42);
  CHECK(c.sbar == 3);
  CHECK(parse_config(c.canonical()).canonical() == c.canonical());
  CHECK(c.hash() == parse_config(kSmall).hash());
}

TEST_CASE("config errors") {
  const int config = static_cast<int>(ErrorCode::Config);
  const std::string base = kSmall;
  CHECK(config_error_code(base + "sweep.colour = blue\n") == config);
  CHECK(config_error_code(base + "design.d = 12\n") == config);
  CHECK(config_error_code("design.kind = equicorrelation\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid = 20, 10\n") == config);
  CHECK(config_error_code("design.kind = equicorrelation\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid =\n") == config);
  CHECK(config_error_code("design.kind = identity\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid = 10\nsweep.trials = 0\n") == config);
  CHECK(config_error_code("design.kind = identity\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid = 10\nsweep.estimators = ridge\n") == config);
  CHECK(config_error_code("design.kind = identity\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid = 10\nsweep.estimators = bssu\n") == config);
  CHECK(config_error_code("design.kind = identity\ndesign.d = 10\ninstance.s = 2\nsweep.ngrid = x\n") == config);
  CHECK(config_error_code("just some text\n") == config);
}

TEST_CASE("Wilson intervals") {
  const WilsonInterval half = wilson_interval(5, 10);
  CHECK(half.lo == doctest::Approx(0.236593).epsilon(1e-5));
  CHECK(half.hi == doctest::Approx(0.763407).epsilon(1e-5));
  const WilsonInterval none = wilson_interval(0, 10);
  CHECK(none.lo == 0.0);
  CHECK(none.hi == doctest::Approx(0.277533).epsilon(1e-5));
  const WilsonInterval all = wilson_interval(200, 200);
  CHECK(all.hi == 1.0);
  CHECK(all.lo == doctest::Approx(0.981155).epsilon(1e-5));
}

TEST_CASE("n50 interpolation") {
  CHECK(*interpolate_n50(rows_with_rates({{10, 0.2}, {20, 0.8}}), "bss").n50 == doctest::Approx(15.0));
  const Crossing none = interpolate_n50(rows_with_rates({{10, 0.1}, {20, 0.3}, {40, 0.4}}), "bss");
  CHECK_FALSE(none.n50.has_value());
  CHECK(none.status == "no-crossing");
  CHECK(interpolate_n50(rows_with_rates({{10, 0.6}, {20, 0.9}}), "bss").status == "below-grid");
  // 0.3 -> 0.4 -> 0.9 on 10, 20, 40: crossing at 20 + (0.1 / 0.5) * 20 = 24.
  CHECK(*interpolate_n50(rows_with_rates({{10, 0.3}, {20, 0.4}, {40, 0.9}}), "bss").n50 == doctest::Approx(24.0));
  CHECK(first_n_reaching(rows_with_rates({{10, 0.3}, {20, 0.96}, {40, 0.9}}), "bss", 0.95) == 20u);
}

TEST_CASE("sweep invariants") {
  const SweepConfig c = parse_config(kSmall);
  const SweepResult r = run_phase_sweep(c, 1);
  CHECK(r.rows.size() == 15);
  for (const auto& row : r.rows) {
    CHECK(row.successes <= row.trials);
    CHECK(row.wilson_lo <= row.rate);
    CHECK(row.rate <= row.wilson_hi);
    CHECK(row.failures == 0);
    if (row.estimator == "bssu") CHECK(row.max_support_size <= 3);
  }
  CHECK(r.config_hash == c.hash());
}

TEST_CASE("sweep output is independent of worker count") {
  const SweepConfig c = parse_config(kSmall);
  const std::string one = format_csv(run_phase_sweep(c, 1));
  CHECK(one == format_csv(run_phase_sweep(c, 1)));
  CHECK(one == format_csv(run_phase_sweep(c, 4)));
}

TEST_CASE("nearly noiseless single trial recovers at every n >= s") {
  SweepConfig c = parse_config(kSmall);
  c.sigma2 = 1e-14;
  c.trials = 1;
  c.n_grid = {2, 3, 5, 9};
  c.estimators = {EstimatorKind::Bss};
  for (const auto& row : run_phase_sweep(c, 1).rows) CHECK(row.rate == 1.0);
}

TEST_CASE("estimator failures count as misses") {
  SweepConfig c = parse_config(kSmall);
  c.n_grid = {3, 20};  // bssu needs n > sbar
  c.estimators = {EstimatorKind::Bssu};
  const SweepResult r = run_phase_sweep(c, 1);
  CHECK(r.rows[0].failures == c.trials);
  CHECK(r.rows[0].successes == 0);
  CHECK(r.rows[1].failures == 0);
}

TEST_CASE("CSV round trip and schema") {
  const SweepResult r = run_phase_sweep(parse_config(kSmall), 1);
  const std::string text = format_csv(r);
  CHECK(text.substr(0, text.find('\n')) == "estimator,n,successes,trials,rate,wilson_lo,wilson_hi,mean_runtime_ms");
  const SweepResult back = parse_csv(text);
  REQUIRE(back.rows.size() == r.rows.size());
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    CHECK(back.rows[i].estimator == r.rows[i].estimator);
    CHECK(back.rows[i].n == r.rows[i].n);
    CHECK(back.rows[i].successes == r.rows[i].successes);
  }
  CHECK(format_csv(back) == text);
  CHECK(format_csv(SweepResult{}) == std::string(kCsvHeader) + "\n");
  CHECK_THROWS_AS(parse_csv("a,b\n"), Error);
}

TEST_CASE("plot script references the CSV relatively") {
  const auto dir = std::filesystem::temp_directory_path() / "subsetlab_plot_test";
  std::filesystem::create_directories(dir / "out");
  const auto csv = dir / "result.csv";
  emit_csv(run_phase_sweep(parse_config(kSmall), 1), csv);
  emit_plot_script(csv, dir / "out" / "plot.py");
  std::ifstream in(dir / "out" / "plot.py");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().find("\"../result.csv\"") != std::string::npos);
  CHECK(ss.str().find("matplotlib") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("bound verification table") {
  SweepConfig c = parse_config(kSmall);
  c.estimators = {EstimatorKind::Bss};
  c.n_grid = {10, 20, 40, 80, 160};
  c.verify_omegas = {0.5, 1.0};
  const auto rows = verify_bounds(c, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].lower_equicorr.has_value());
  CHECK_FALSE(rows[1].lower_equicorr.has_value());
  for (const auto& row : rows) {
    REQUIRE(row.empirical_n.has_value());
    CHECK(*row.calibrated_constant > 0.0);
    if (row.lower_equicorr) CHECK(*row.lower_equicorr <= static_cast<double>(*row.empirical_n));
  }
  CHECK(format_bound_table(rows).find("omega,empirical_n") == 0);
}

TEST_CASE("gap experiment runs one sweep per omega") {
  SweepConfig c = parse_config(kSmall);
  c.gap_omegas = {1.0, 0.2};
  c.trials = 5;
  const auto sweeps = run_gap_experiment(c, 1);
  REQUIRE(sweeps.size() == 2);
  CHECK(sweeps[1].omega == 0.2);
  CHECK(sweeps[0].result.rows.size() == 15);
  c.gap_omegas.clear();
  CHECK_THROWS_AS(run_gap_experiment(c, 1), Error);
}
