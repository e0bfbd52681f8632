#include <doctest.h>

#include "latmod/errors.hpp"
#include "latmod/voronoi_stats.hpp"

#include <cmath>
#include <sstream>

using namespace latmod;

namespace {

const double kGA2 = 5.0 / (36.0 * std::sqrt(3.0));

}  // namespace

TEST_CASE("sample_uniform_cell - moments and membership") {
  const auto z1 = ScaledLattice::make(LatticeKind::ZN, 1, 1.0);
  Rng rng(42);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = sample_uniform_cell(z1, rng)(0);
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(1.0 / 3.0 / n));
  CHECK(var == doctest::Approx(1.0 / 3.0).epsilon(0.01));

  for (const auto& lat : {ScaledLattice::make(LatticeKind::A2, 2, 0.2), ScaledLattice::make(LatticeKind::E8, 8, 0.2)}) {
    Vector acc = Vector::Zero(lat.dim());
    bool inside = true;
    const int m = 50000;
    for (int i = 0; i < m; ++i) {
      const Vector r = sample_uniform_cell(lat, rng);
      inside = inside && lat.nearest_point(r).isZero();
      acc += r;
    }
    INFO(lat.name());
    CHECK(inside);
    // per-coordinate spread is below the cell extent; 4 sigma bound on the mean
    CHECK(acc.cwiseAbs().maxCoeff() / m < 4.0 * lat.coordinate_extent() / std::sqrt(double(m)));
  }
}

TEST_CASE("estimate_second_moment - known constants") {
  const auto z1 = estimate_second_moment(ScaledLattice::make(LatticeKind::ZN, 1, 1.0), 200000, 1, 2);
  CHECK(std::abs(z1.G - 1.0 / 12.0) < 4 * z1.std_err);
  const auto a2 = estimate_second_moment(ScaledLattice::make(LatticeKind::A2, 2, 1.0), 200000, 2, 2);
  CHECK(std::abs(a2.G - kGA2) < 4 * a2.std_err);
  const auto e8 = estimate_second_moment(ScaledLattice::make(LatticeKind::E8, 8, 1.0), 200000, 3, 2);
  CHECK(e8.G == doctest::Approx(0.0717).epsilon(0.01));
  CHECK(e8.n_samples == 200000);
  CHECK(e8.std_err > 0);
}

TEST_CASE("estimate_second_moment - mse_per_cell consistent with G") {
  const auto lat = ScaledLattice::make(LatticeKind::DN, 4, 0.37);
  const auto est = estimate_second_moment(lat, 20000, 9, 1);
  CHECK(est.mse_per_cell == doctest::Approx(4 * est.G * std::pow(lat.volume(), 0.5)).epsilon(1e-12));
}

TEST_CASE("estimate_second_moment - lambda invariance") {
  const auto a = estimate_second_moment(ScaledLattice::make(LatticeKind::A2, 2, 0.1), 100000, 21, 0);
  const auto b = estimate_second_moment(ScaledLattice::make(LatticeKind::A2, 2, 1.0), 100000, 22, 0);
  CHECK(std::abs(a.G - b.G) < 3 * std::hypot(a.std_err, b.std_err));
}

TEST_CASE("estimate_second_moment - standard error scales as one over root n") {
  const auto lat = ScaledLattice::make(LatticeKind::DN, 4, 1.0);
  const auto small = estimate_second_moment(lat, 10000, 5, 0);
  const auto large = estimate_second_moment(lat, 1000000, 6, 0);
  CHECK(small.std_err / large.std_err == doctest::Approx(10.0).epsilon(0.1));
}

TEST_CASE("estimate_second_moment - independent of worker count") {
  const auto lat = ScaledLattice::make(LatticeKind::E8, 8, 1.0);
  const auto a = estimate_second_moment(lat, 60000, 77, 1);
  const auto b = estimate_second_moment(lat, 60000, 77, 4);
  CHECK(a.G == b.G);
  CHECK(a.std_err == b.std_err);
}

TEST_CASE("predicted_mse - closed forms") {
  CHECK(predicted_mse(ScaledLattice::make(LatticeKind::ZN, 1, 1.0), 1.0 / 12) == doctest::Approx(1.0 / 3));
  CHECK(predicted_mse(ScaledLattice::make(LatticeKind::ZN, 2, 1.0), 1.0 / 12) == doctest::Approx(2.0 / 3));
  CHECK(predicted_mse(ScaledLattice::make(LatticeKind::E8, 8, 1.0), 0.0717) == doctest::Approx(8 * 0.0717 * 2));
}

TEST_CASE("mse_ratio - table values") {
  const auto sq = ScaledLattice::make(LatticeKind::ZN, 2, 1.0);
  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  CHECK(mse_ratio(a2, sq, kGA2, kHypercubeG) == doctest::Approx(5.0 / 6.0));
  const auto e8 = ScaledLattice::make(LatticeKind::E8, 8, 0.3);
  const auto cube = ScaledLattice::make(LatticeKind::ZN, 8, 0.3);
  CHECK(mse_ratio(e8, cube, 929.0 / 12960.0, kHypercubeG) == doctest::Approx(0.430).epsilon(0.002));
  CHECK(mse_ratio(e8, e8, 0.0717, 0.0717) == doctest::Approx(1.0));
  CHECK_THROWS_AS(mse_ratio(a2, cube, kGA2, kHypercubeG), ConfigError);
}

TEST_CASE("equivalent_gains - conversions") {
  const auto g = equivalent_gains(0.430);
  CHECK(g.snr_db == doctest::Approx(3.665).epsilon(0.001));
  CHECK(g.of_factor == doctest::Approx(2.3).epsilon(0.02));
  CHECK(g.bits_saved == doctest::Approx(0.6).epsilon(0.02));
  const auto h = equivalent_gains(0.197);
  CHECK(h.snr_db == doctest::Approx(7.06).epsilon(0.001));
  CHECK(h.of_factor == doctest::Approx(5.08).epsilon(0.001));
  CHECK(h.bits_saved == doctest::Approx(1.17).epsilon(0.01));
  const auto one = equivalent_gains(1.0);
  CHECK(one.snr_db == 0.0);
  CHECK(one.of_factor == 1.0);
  CHECK(one.bits_saved == 0.0);
  CHECK_THROWS_AS(equivalent_gains(0.0), DomainError);
  CHECK_THROWS_AS(equivalent_gains(1.5), DomainError);
  CHECK_THROWS_AS(equivalent_gains(std::nan("")), DomainError);
}

TEST_CASE("table1_report - rows and output") {
  const auto rows = table1_report(20000, 1, 0);
  REQUIRE(rows.size() == 6);
  int constants = 0;
  for (const auto& r : rows) {
    if (!r.estimated) ++constants;
    if (r.lattice == "D4") {
      CHECK(r.volume_ratio == doctest::Approx(0.5));
      CHECK(r.mse_ratio == doctest::Approx(0.650).epsilon(0.02));
    }
    if (r.lattice == "Z") CHECK(r.mse_ratio == doctest::Approx(1.0).epsilon(0.02));
  }
  CHECK(constants == 2);

  std::ostringstream csv, text;
  write_table1_csv(csv, rows);
  write_table1_text(text, rows);
  CHECK(csv.str().rfind("n,lattice,G,", 0) == 0);
  CHECK(text.str().find("constant, not estimated") != std::string::npos);
}
