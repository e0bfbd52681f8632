#include <doctest.h>

#include "latmod/errors.hpp"
#include "latmod/lattice.hpp"
#include "latmod/rng.hpp"
#include "oracle.hpp"

#include <cmath>
#include <random>

using namespace latmod;
using oracle::vec;

namespace {

Vector random_box(int n, double half_width, Rng& rng) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Vector x(n);
  for (int i = 0; i < n; ++i) x(i) = u(rng);
  return x;
}

bool same(const Vector& a, const Vector& b, double tol = 1e-12) {
  return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

TEST_CASE("make_lattice - scaling and volumes") {
  const auto z1 = ScaledLattice::make(LatticeKind::ZN, 1, 1.0);
  CHECK(z1.d_min() == doctest::Approx(2.0));
  CHECK(z1.volume() == doctest::Approx(2.0));

  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  CHECK(a2.volume() == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(a2.volume() / 4.0 == doctest::Approx(0.866).epsilon(1e-3));

  const auto e8 = ScaledLattice::make(LatticeKind::E8, 8, 1.0);
  CHECK(e8.volume() / 256.0 == doctest::Approx(0.0625));

  const auto d4 = ScaledLattice::make(LatticeKind::DN, 4, 0.3);
  CHECK(d4.volume() / std::pow(0.6, 4) == doctest::Approx(0.5));
}

TEST_CASE("make_lattice - invalid family and dimension") {
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::A2, 3, 1.0), ConfigError);
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::E8, 7, 1.0), ConfigError);
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::DN, 1, 1.0), ConfigError);
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::ZN, 0, 1.0), ConfigError);
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::ZN, 2, 0.0), ConfigError);
  CHECK_THROWS_AS(ScaledLattice::make(LatticeKind::ZN, 2, -1.0), ConfigError);
}

TEST_CASE("nearest_point_zn - rounding and ties") {
  CHECK(same(nearest_point_zn(vec({0.4, -0.6}), 1.0), vec({0, -1})));
  CHECK(same(nearest_point_zn(vec({0.5}), 1.0), vec({0})));
  CHECK(same(nearest_point_zn(vec({-1.5}), 1.0), vec({-1})));
  CHECK(same(nearest_point_zn(vec({2.5, -2.5}), 1.0), vec({2, -2})));
  CHECK(same(nearest_point_zn(vec({0.74}), 0.5), vec({0.5})));
}

TEST_CASE("nearest_point_dn - Example vector") {
  const auto x = vec({1.8, -3.6, 5.1, 0.7, -4.9, 2.6, 6.2, -2.7});
  CHECK(same(nearest_point_dn(x, 1.0), vec({2, -3, 5, 1, -5, 3, 6, -3})));
  CHECK(same(nearest_point_dn(vec({0, 0}), 1.0), vec({0, 0})));
}

TEST_CASE("nearest_point_dn - brute force on a small window") {
  // even-sum integer vectors in [-2, 2]^2
  const auto x = vec({0.6, 0.6});
  oracle::Best b;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      if ((i + j) % 2 == 0) oracle::consider(b, x, vec({double(i), double(j)}));
  CHECK(same(b.point, vec({1, 1})));
  CHECK(same(nearest_point_dn(x, 1.0), b.point));
}

TEST_CASE("nearest_point_e8 - Example vector and fixed points") {
  const auto x = vec({2.3, -3.1, 5.6, 1.2, -4.4, 3.1, 6.7, -2.2});
  CHECK(same(nearest_point_e8(x, 1.0), vec({2, -3, 6, 1, -4, 3, 7, -2})));

  const auto p = vec({0.5, 0.5, 0.5, 0.5, -0.5, -0.5, 1.5, -0.5});
  CHECK(same(nearest_point_e8(p, 1.0), p));
  const auto q = vec({1, 1, 0, 0, 0, 0, 0, 0});
  CHECK(same(nearest_point_e8(q * 3.0, 3.0), q * 3.0));
}

TEST_CASE("nearest_point_e8 - equidistant cosets resolve to the integer coset") {
  Vector x = Vector::Constant(8, 0.25);
  const Vector c1 = Vector::Zero(8);
  const Vector c2 = Vector::Constant(8, 0.5);
  // exhaustive distances over both cosets
  const auto scaled = ScaledLattice::make(LatticeKind::E8, 8, 1.0 / std::sqrt(2.0));
  const auto b = oracle::nearest(x, scaled);
  CHECK(b.dist2 == doctest::Approx((x - c1).squaredNorm()));
  CHECK((x - c1).squaredNorm() == doctest::Approx((x - c2).squaredNorm()));
  CHECK(same(nearest_point_e8(x, 1.0), c1));
}

TEST_CASE("nearest_point_a2 - small cases") {
  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  CHECK(same(a2.nearest_point(vec({0, 0})), vec({0, 0})));
  CHECK(same(a2.nearest_point(vec({2, 0})), vec({2, 0})));
  const auto x = vec({1.0, 0.5});
  const auto b = oracle::nearest(x, a2);
  CHECK(same(nearest_point_a2(x, a2), b.point));
}

TEST_CASE("nearest_point - oracle equivalence on random inputs") {
  struct Case {
    LatticeKind kind;
    int n;
  };
  Rng rng(2024);
  for (const Case c : {Case{LatticeKind::ZN, 2}, Case{LatticeKind::ZN, 3}, Case{LatticeKind::A2, 2},
                       Case{LatticeKind::DN, 3}, Case{LatticeKind::DN, 4}, Case{LatticeKind::E8, 8}}) {
    const auto lat = ScaledLattice::make(c.kind, c.n, 0.7);
    int mismatches = 0, checked = 0;
    for (int t = 0; t < 1500; ++t) {
      const Vector x = random_box(c.n, 5 * 0.7, rng);
      const auto b = oracle::nearest(x, lat);
      if (b.margin < 1e-9) continue;
      ++checked;
      if (!same(lat.nearest_point(x), b.point, 1e-9)) ++mismatches;
    }
    INFO(lat.name());
    CHECK(checked > 1400);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("contains - membership") {
  const auto e8 = ScaledLattice::make(LatticeKind::E8, 8, 0.1);
  const double s = e8.unit_scale();
  CHECK(e8.contains(s * vec({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5})));
  CHECK_FALSE(e8.contains(s * vec({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, -0.5})));
  CHECK_FALSE(e8.contains(s * vec({1, 0, 0, 0, 0, 0, 0, 0})));
  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  CHECK(a2.contains(vec({1.0, std::sqrt(3.0)})));
  CHECK_FALSE(a2.contains(vec({1.0, 0.0})));
}

TEST_CASE("fold - Example vector on unit E8") {
  const auto e8 = ScaledLattice::make(LatticeKind::E8, 8, 1.0 / std::sqrt(2.0));
  const auto r = fold(vec({2.3, -3.1, 5.6, 1.2, -4.4, 3.1, 6.7, -2.2}), e8);
  CHECK(same(r.offset, vec({2, -3, 6, 1, -4, 3, 7, -2})));
  CHECK(same(r.residue, vec({0.3, -0.1, -0.4, 0.2, -0.4, 0.1, -0.3, -0.2})));
}

TEST_CASE("fold - identity inside the cell and 1D closed form") {
  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  const auto r = fold(vec({0.3, -0.4}), a2);
  CHECK(same(r.residue, vec({0.3, -0.4})));
  CHECK(r.offset.isZero());

  const double lambda = 0.25;
  const auto z1 = ScaledLattice::make(LatticeKind::ZN, 1, lambda);
  const auto t = fold(vec({3 * lambda}), z1);
  CHECK(same(t.residue, vec({lambda})));
  CHECK(same(t.offset, vec({2 * lambda})));

  Rng rng(5);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 200; ++i) {
    const double x = u(rng);
    const double closed = std::fmod(std::fmod(x + lambda, 2 * lambda) + 2 * lambda, 2 * lambda) - lambda;
    CHECK(fold(vec({x}), z1).residue(0) == doctest::Approx(closed).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("fold - cell membership, idempotence and equivariance") {
  Rng rng(11);
  for (const auto& lat : {ScaledLattice::make(LatticeKind::ZN, 2, 0.4), ScaledLattice::make(LatticeKind::A2, 2, 0.4),
                          ScaledLattice::make(LatticeKind::DN, 4, 0.4), ScaledLattice::make(LatticeKind::E8, 8, 0.4)}) {
    const auto rel = relevant_vectors(lat);
    const auto gen = lat.generator();
    std::uniform_int_distribution<int> ki(-4, 4);
    bool ok_cell = true, ok_idem = true, ok_equi = true;
    for (int t = 0; t < 300; ++t) {
      const Vector x = random_box(lat.dim(), 3.0, rng);
      const auto f = fold(x, lat);
      for (const auto& p : rel) ok_cell = ok_cell && p.dot(f.residue) <= 0.5 * p.squaredNorm() + 1e-9;
      const auto g = fold(f.residue, lat);
      ok_idem = ok_idem && same(g.residue, f.residue) && g.offset.isZero();
      Vector k(lat.dim());
      for (int i = 0; i < lat.dim(); ++i) k(i) = ki(rng);
      ok_equi = ok_equi && same(fold(x + gen * k, lat).residue, f.residue, 1e-9);
    }
    INFO(lat.name());
    CHECK(ok_cell);
    CHECK(ok_idem);
    CHECK(ok_equi);
  }
}

TEST_CASE("relevant_vectors - counts, negation and minimum norm") {
  struct Case {
    LatticeKind kind;
    int n;
    std::size_t count;
  };
  const double lambda = 0.3;
  for (const Case c : {Case{LatticeKind::ZN, 2, 4}, Case{LatticeKind::ZN, 5, 10}, Case{LatticeKind::A2, 2, 6},
                       Case{LatticeKind::DN, 4, 24}, Case{LatticeKind::E8, 8, 240}}) {
    const auto lat = ScaledLattice::make(c.kind, c.n, lambda);
    const auto rel = relevant_vectors(lat);
    INFO(lat.name());
    CHECK(rel.size() == c.count);
    double lo = 1e300, hi = 0;
    bool closed = true, members = true;
    for (const auto& p : rel) {
      lo = std::min(lo, p.norm());
      hi = std::max(hi, p.norm());
      members = members && lat.contains(p);
      bool found = false;
      for (const auto& q : rel) found = found || same(p, -q);
      closed = closed && found;
    }
    CHECK(closed);
    CHECK(members);
    CHECK(lo == doctest::Approx(2 * lambda).epsilon(1e-9));
    CHECK(hi == doctest::Approx(2 * lambda).epsilon(1e-9));
  }
  CHECK_THROWS_AS(relevant_vectors(ScaledLattice::make(LatticeKind::DN, 5, 1.0)), CapabilityError);
}

TEST_CASE("fold_iterative - agrees with fold") {
  Rng rng(3);
  for (const auto& lat : {ScaledLattice::make(LatticeKind::ZN, 2, 0.5), ScaledLattice::make(LatticeKind::A2, 2, 0.5),
                          ScaledLattice::make(LatticeKind::DN, 4, 0.5), ScaledLattice::make(LatticeKind::E8, 8, 0.5)}) {
    const auto rel = relevant_vectors(lat);
    int mismatches = 0;
    for (int t = 0; t < 500; ++t) {
      const Vector x = random_box(lat.dim(), 5 * 0.5, rng);
      const Vector r = fold_iterative(x, rel);
      if (!same(r, fold(x, lat).residue, 1e-9)) ++mismatches;
      if (!lat.contains(x - r)) ++mismatches;
    }
    INFO(lat.name());
    CHECK(mismatches == 0);
  }
  const auto z1 = ScaledLattice::make(LatticeKind::ZN, 1, 1.0);
  CHECK(same(fold_iterative(vec({1.3}), z1), vec({-0.7})));
  CHECK(same(fold_iterative(vec({-1.3}), z1), vec({0.7})));
  const auto a2 = ScaledLattice::make(LatticeKind::A2, 2, 1.0);
  CHECK(same(fold_iterative(vec({0.2, 0.1}), a2), vec({0.2, 0.1})));
}
