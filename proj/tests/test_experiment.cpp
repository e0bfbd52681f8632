#include <doctest.h>

#include "latmod/errors.hpp"
#include "latmod/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace latmod;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c = table3_config();
  c.of_list = {4};
  c.snr_db_list = {30, std::numeric_limits<double>::infinity()};
  c.n_trials = 6;
  c.master_seed = 5;
  return c;
}

std::string csv(const ExperimentResult& r) {
  std::ostringstream os;
  emit_tables(os, r, TableFormat::Csv);
  return os.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("architecture_from_string - names") {
  CHECK(architecture_from_string("square").lattice == LatticeKind::ZN);
  CHECK(architecture_from_string("E8").quantizer == QuantizerKind::None);
  CHECK(architecture_from_string("e8+sqq").quantizer == QuantizerKind::Scalar);
  CHECK(architecture_from_string("E8+E8Q").quantizer == QuantizerKind::Lattice);
  CHECK(architecture_from_string("Hexagon").lattice == LatticeKind::A2);
  CHECK_THROWS_AS(architecture_from_string("leech"), ConfigError);
  CHECK(algorithm_from_string("LASSO") == Algorithm::LASSO);
  CHECK_THROWS_AS(algorithm_from_string("newton"), ConfigError);
}

TEST_CASE("config - round trip and schema") {
  auto c = table4_config();
  c.n_trials = 17;
  c.b2r2.ridge = 3e-9;
  c.lasso.mu = 0.25;
  const auto text = dump_config(c);
  const auto d = parse_config(text);
  CHECK(dump_config(d) == text);
  CHECK(d.n_trials == 17);
  CHECK(std::isinf(d.bits_list.back()));
  CHECK(d.architectures.size() == 3);

  CHECK_THROWS_AS(parse_config("{\"trials\": 3}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"snr_db\": [\"loud\"]}"), ConfigError);
  const auto e = parse_config("{\"schema_version\": 1, \"of\": [2, 4], \"snr_db\": [20, \"inf\"], \"trials\": 3}");
  CHECK(e.of_list.size() == 2);
  CHECK(std::isinf(e.snr_db_list[1]));
  CHECK(e.n_trials == 3);
}

TEST_CASE("config - validation") {
  auto c = small_config();
  c.n_trials = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.of_list = {1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.snr_db_list = {-5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small_config();
  c.bits_list = {0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(small_config().validate());
}

TEST_CASE("run_sweep - layout and noiseless cells") {
  const auto r = run_sweep(small_config());
  REQUIRE(r.cells.size() == 4);
  CHECK_FALSE(r.has_errors());
  for (const auto& c : r.cells) {
    CHECK(c.n_trials == 6);
    CHECK(c.recovery_rate >= 0.0);
    CHECK(c.recovery_rate <= 1.0);
    if (std::isinf(c.channel.snr_db)) {
      CHECK(c.recovery_rate == 1.0);
      REQUIRE(c.mse.has_value());
      CHECK(*c.mse < 1e-24);
    }
    if (c.n_success == 0) CHECK_FALSE(c.mse.has_value());
  }
}

TEST_CASE("run_sweep - independent of worker count") {
  auto c = small_config();
  c.algorithms = {Algorithm::B2R2, Algorithm::HOD};
  c.workers = 1;
  const auto a = csv(run_sweep(c));
  c.workers = 5;
  const auto b = csv(run_sweep(c));
  CHECK(a == b);
  c.workers = 3;
  CHECK(csv(run_sweep(c)) == a);
}

TEST_CASE("run_sweep - adding cells leaves existing cells unchanged") {
  auto c = small_config();
  c.snr_db_list = {30};
  const auto a = run_sweep(c);
  c.snr_db_list = {20, 30, 35};
  const auto b = run_sweep(c);
  for (const auto& x : a.cells)
    for (const auto& y : b.cells)
      if (x.arch.name == y.arch.name && x.channel.snr_db == y.channel.snr_db) {
        CHECK(x.n_success == y.n_success);
        CHECK(x.seed == y.seed);
        CHECK(x.mse == y.mse);
      }
}

TEST_CASE("run_sweep - per-cell error does not stop the sweep") {
  auto c = small_config();
  c.signal.n_channels = 2;
  c.snr_db_list = {std::numeric_limits<double>::infinity()};
  c.n_trials = 3;
  const auto r = run_sweep(c);
  REQUIRE(r.cells.size() == 2);
  CHECK(r.has_errors());
  for (const auto& cell : r.cells) {
    if (cell.arch.name == "E8") {
      CHECK_FALSE(cell.error.empty());
      CHECK(cell.n_success == 0);
    } else {
      CHECK(cell.error.empty());
      CHECK(cell.recovery_rate == 1.0);
    }
  }
  CHECK(csv(r).find("needs 8 channels") != std::string::npos);
}

TEST_CASE("emit_tables - empty sweep and formats") {
  ExperimentConfig c = small_config();
  c.architectures.clear();
  const auto r = run_sweep(c);
  CHECK(r.cells.empty());
  const auto text = csv(r);
  CHECK(count_lines(text) == 1);
  CHECK(text.rfind("architecture,lattice,quantizer,algorithm,of,snr_db,bits", 0) == 0);

  const auto full = run_sweep(small_config());
  std::ostringstream js, tx;
  emit_tables(js, full, TableFormat::Json);
  emit_tables(tx, full, TableFormat::Text);
  CHECK(js.str().find("\"recovery_rate\"") != std::string::npos);
  CHECK(count_lines(tx.str()) == 5);
  CHECK(count_lines(csv(full)) == 5);
  CHECK(csv(full) == csv(run_sweep(small_config())));
}

TEST_CASE("run_trial - quantized architectures") {
  auto c = table4_config();
  const auto e8q = run_trial(c, architecture_from_string("E8+E8Q"), Algorithm::B2R2, 6, ChannelSpec::lattice_q(8), 0);
  CHECK(e8q.check.full_success);
  const auto sqq = run_trial(c, architecture_from_string("Sq+SqQ"), Algorithm::B2R2, 6, ChannelSpec::scalar_q(8), 0);
  CHECK(sqq.check.full_success);
  // same unfolded signal for every architecture at a given (of, trial)
  CHECK(e8q.f == sqq.f);
  CHECK(e8q.check.residual_mse < sqq.check.residual_mse);
}

TEST_CASE("run_trajectory_demo - square and hexagon") {
  DemoConfig cfg;
  cfg.seed = 3;
  const auto d = run_trajectory_demo(cfg);
  CHECK(d.square.max_error <= 1e-8 * d.square.peak);
  CHECK(d.hexagon.max_error <= 1e-8 * d.hexagon.peak);
  CHECK(d.square.peak == doctest::Approx(3.0));
  CHECK(d.square.inside_cell);
  CHECK(d.hexagon.inside_cell);
  CHECK(d.fs == doctest::Approx(120.0));
  CHECK(d.hexagon.cell.size() == 7);
  CHECK(d.square.cell.size() == 5);

  const auto dir = std::filesystem::temp_directory_path() / "latmod_demo_test";
  std::filesystem::remove_all(dir);
  emit_trajectory_demo(d, dir);
  for (const char* name : {"demo_square.csv", "demo_hexagon.csv", "cell_square.csv", "cell_hexagon.csv"})
    CHECK(std::filesystem::exists(dir / name));
  std::ifstream in(dir / "demo_square.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header.find("recovered") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_trajectory_demo - HOD on the demo signal") {
  DemoConfig cfg;
  cfg.algorithm = Algorithm::HOD;
  cfg.of = 8;
  cfg.hod_order = 2;
  cfg.seed = 11;
  CHECK_NOTHROW(run_trajectory_demo(cfg));
}

TEST_CASE("demo_power_ratio - near the second-moment ratio") {
  DemoConfig cfg;
  CHECK(demo_power_ratio(cfg, 400) == doctest::Approx(0.833).epsilon(0.06));
}

TEST_CASE("quantize_bench - rows") {
  const auto rows = quantize_bench(20000, 1, {4});
  CHECK(rows.size() == 6);
  for (const auto& r : rows)
    if (r.quantizer == "matched") CHECK(r.mse == doctest::Approx(r.predicted).epsilon(0.03));
  std::ostringstream os;
  write_quantize_bench(os, rows, TableFormat::Csv);
  CHECK(count_lines(os.str()) == 7);
}
