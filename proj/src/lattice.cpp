#include "latmod/lattice.hpp"

#include "latmod/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace latmod {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kSqrt3 = 1.73205080756887729353;

// Nearest integer; exact half-way values go to the one of smaller magnitude.
double round_half_to_zero(double v) {
  const double lo = std::floor(v);
  const double frac = v - lo;
  if (frac > 0.5) return lo + 1.0;
  if (frac < 0.5) return lo;
  return std::abs(lo) <= std::abs(lo + 1.0) ? lo : lo + 1.0;
}

// Unit D_n nearest point, written into `out` (may alias `u`).
void dn_unit(std::span<const double> u, std::span<double> out) {
  const std::size_t n = u.size();
  long long parity = 0;
  std::size_t worst = 0;
  double worst_dist = -1.0;
  double worst_u = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = u[i];
    const double r = round_half_to_zero(ui);
    const double dist = std::abs(ui - r);
    // Strict comparison keeps the lowest index on ties.
    if (dist > worst_dist) {
      worst_dist = dist;
      worst = i;
      worst_u = ui;
    }
    parity += static_cast<long long>(std::fmod(r, 2.0));
    out[i] = r;
  }
  if (parity % 2 == 0) return;
  double& r = out[worst];
  if (worst_u > r) {
    r += 1.0;
  } else if (worst_u < r) {
    r -= 1.0;
  } else {
    r += (r > 0.0) ? -1.0 : 1.0;
  }
}

void e8_unit(std::span<const double> u, std::span<double> out) {
  std::array<double, 8> c1{};
  std::array<double, 8> shifted{};
  std::array<double, 8> c2{};
  dn_unit(u, c1);
  for (int i = 0; i < 8; ++i) shifted[i] = u[i] - 0.5;
  dn_unit(shifted, c2);
  double d1 = 0.0;
  double d2 = 0.0;
  for (int i = 0; i < 8; ++i) {
    c2[i] += 0.5;
    d1 += (u[i] - c1[i]) * (u[i] - c1[i]);
    d2 += (u[i] - c2[i]) * (u[i] - c2[i]);
  }
  const auto& best = (d1 <= d2) ? c1 : c2;
  std::copy(best.begin(), best.end(), out.begin());
}

Vector apply_scaled(const Vector& x, double scale, void (*unit)(std::span<const double>, std::span<double>)) {
  Vector u = x / scale;
  unit(std::span<const double>(u.data(), u.size()), std::span<double>(u.data(), u.size()));
  return u * scale;
}

Matrix dn_generator(int n) {
  // Columns: 2 e_1 and e_i - e_{i-1}; index 2 in Z^n, all even-sum.
  Matrix g = Matrix::Zero(n, n);
  g(0, 0) = 2.0;
  for (int i = 1; i < n; ++i) {
    g(i, i) = 1.0;
    g(i - 1, i) = -1.0;
  }
  return g;
}

Matrix e8_generator() {
  Matrix rows = Matrix::Zero(8, 8);
  rows(0, 0) = 2.0;
  for (int i = 1; i < 7; ++i) {
    rows(i, i - 1) = -1.0;
    rows(i, i) = 1.0;
  }
  rows.row(7).setConstant(0.5);
  return rows.transpose();
}

void a2_nearest(const ScaledLattice& lat, std::span<const double> x, std::span<double> out) {
  const Matrix& g = lat.generator();
  const double b00 = g(0, 0), b01 = g(0, 1), b11 = g(1, 1);
  // Upper-triangular basis, solve directly.
  const double k1 = x[1] / b11;
  const double k0 = (x[0] - b01 * k1) / b00;
  const double f0 = std::floor(k0);
  const double f1 = std::floor(k1);
  static constexpr std::array<std::array<int, 2>, 7> kNeighbors{
      {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, -1}, {-1, 1}}};
  const double eps = 1e-12 * lat.inradius() * lat.inradius();
  double best_d = std::numeric_limits<double>::infinity();
  double best_norm = best_d;
  double bx = 0.0, by = 0.0;
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) {
      for (const auto& nb : kNeighbors) {
        const double c0 = f0 + a + nb[0];
        const double c1 = f1 + b + nb[1];
        const double px = b00 * c0 + b01 * c1;
        const double py = b11 * c1;
        const double d = (x[0] - px) * (x[0] - px) + (x[1] - py) * (x[1] - py);
        const double nrm = px * px + py * py;
        if (d < best_d - eps || (d <= best_d + eps && nrm < best_norm - eps)) {
          best_d = d;
          best_norm = nrm;
          bx = px;
          by = py;
        }
      }
    }
  }
  out[0] = bx;
  out[1] = by;
}

}  // namespace

std::string to_string(LatticeKind kind) {
  switch (kind) {
    case LatticeKind::ZN: return "ZN";
    case LatticeKind::A2: return "A2";
    case LatticeKind::DN: return "DN";
    case LatticeKind::E8: return "E8";
  }
  return "?";
}

LatticeKind lattice_kind_from_string(const std::string& name) {
  if (name == "ZN" || name == "Z" || name == "square" || name == "Square" || name == "Sq") return LatticeKind::ZN;
  if (name == "A2" || name == "hex" || name == "hexagon") return LatticeKind::A2;
  if (name == "DN" || name == "D") return LatticeKind::DN;
  if (name == "E8") return LatticeKind::E8;
  throw ConfigError("unknown lattice family '" + name + "'");
}

Vector nearest_point_zn(const Vector& x, double scale) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = scale * round_half_to_zero(x[i] / scale);
  return out;
}

Vector nearest_point_dn(const Vector& x, double scale) {
  if (x.size() < 2) throw ConfigError("D_n requires n >= 2");
  return apply_scaled(x, scale, dn_unit);
}

Vector nearest_point_e8(const Vector& x, double scale) {
  if (x.size() != 8) throw ConfigError("E8 requires an 8-vector");
  return apply_scaled(x, scale, e8_unit);
}

Vector nearest_point_a2(const Vector& x, const ScaledLattice& lattice) {
  if (lattice.kind() != LatticeKind::A2) throw ConfigError("nearest_point_a2 needs an A2 lattice");
  if (x.size() != 2) throw ConfigError("A2 requires a 2-vector");
  Vector out(2);
  a2_nearest(lattice, std::span<const double>(x.data(), 2), std::span<double>(out.data(), 2));
  return out;
}

ScaledLattice::ScaledLattice(LatticeKind kind, int n, double lambda, Matrix gen, double scale)
    : kind_(kind), n_(n), lambda_(lambda), gen_(std::move(gen)), scale_(scale) {
  gen_inv_ = gen_.inverse();
  volume_ = std::abs(gen_.determinant());
}

ScaledLattice ScaledLattice::make(LatticeKind kind, int n, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("inradius must be positive and finite");
  switch (kind) {
    case LatticeKind::ZN:
      if (n < 1) throw ConfigError("Z^n requires n >= 1");
      return ScaledLattice(kind, n, lambda, 2.0 * lambda * Matrix::Identity(n, n), 2.0 * lambda);
    case LatticeKind::A2: {
      if (n != 2) throw ConfigError("A2 requires n = 2");
      Matrix g(2, 2);
      g << 1.0, 0.5, 0.0, kSqrt3 / 2.0;
      return ScaledLattice(kind, 2, lambda, 2.0 * lambda * g, 2.0 * lambda);
    }
    case LatticeKind::DN: {
      if (n < 2) throw ConfigError("D_n requires n >= 2");
      const double s = lambda * kSqrt2;
      return ScaledLattice(kind, n, lambda, s * dn_generator(n), s);
    }
    case LatticeKind::E8: {
      if (n != 8) throw ConfigError("E8 requires n = 8");
      const double s = lambda * kSqrt2;
      return ScaledLattice(kind, 8, lambda, s * e8_generator(), s);
    }
  }
  throw ConfigError("unknown lattice kind");
}

double ScaledLattice::coordinate_extent() const noexcept {
  switch (kind_) {
    case LatticeKind::ZN: return lambda_;
    case LatticeKind::A2: return 2.0 * lambda_ / kSqrt3;
    case LatticeKind::DN:
    case LatticeKind::E8: return lambda_ * kSqrt2;
  }
  return lambda_;
}

std::string ScaledLattice::name() const {
  switch (kind_) {
    case LatticeKind::ZN: return n_ == 1 ? "Z" : "Z" + std::to_string(n_);
    case LatticeKind::A2: return "A2";
    case LatticeKind::DN: return "D" + std::to_string(n_);
    case LatticeKind::E8: return "E8";
  }
  return "?";
}

void ScaledLattice::nearest_point(std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case LatticeKind::ZN:
      for (int i = 0; i < n_; ++i) out[i] = scale_ * round_half_to_zero(x[i] / scale_);
      return;
    case LatticeKind::A2:
      a2_nearest(*this, x, out);
      return;
    case LatticeKind::DN: {
      for (int i = 0; i < n_; ++i) out[i] = x[i] / scale_;
      dn_unit(std::span<const double>(out.data(), n_), out);
      for (int i = 0; i < n_; ++i) out[i] *= scale_;
      return;
    }
    case LatticeKind::E8: {
      std::array<double, 8> u{};
      for (int i = 0; i < 8; ++i) u[i] = x[i] / scale_;
      e8_unit(u, out);
      for (int i = 0; i < 8; ++i) out[i] *= scale_;
      return;
    }
  }
}

Vector ScaledLattice::nearest_point(const Vector& x) const {
  if (x.size() != n_) throw ConfigError("dimension mismatch in nearest_point");
  Vector out(n_);
  nearest_point(std::span<const double>(x.data(), n_), std::span<double>(out.data(), n_));
  return out;
}

bool ScaledLattice::contains(const Vector& p, double rel_tol) const {
  if (p.size() != n_) return false;
  const Vector k = gen_inv_ * p;
  for (Eigen::Index i = 0; i < k.size(); ++i) {
    if (std::abs(k[i] - std::round(k[i])) > rel_tol * std::max(1.0, std::abs(k[i]))) return false;
  }
  return true;
}

FoldResult fold(const Vector& x, const ScaledLattice& lattice) {
  Vector offset = lattice.nearest_point(x);
  return {x - offset, std::move(offset)};
}

std::vector<Vector> relevant_vectors(const ScaledLattice& lattice) {
  const int n = lattice.dim();
  std::vector<Vector> out;
  switch (lattice.kind()) {
    case LatticeKind::ZN:
      for (int i = 0; i < n; ++i) {
        for (double sgn : {1.0, -1.0}) {
          Vector v = Vector::Zero(n);
          v[i] = sgn * lattice.d_min();
          out.push_back(v);
        }
      }
      return out;
    case LatticeKind::A2: {
      const Vector v1 = lattice.generator().col(0);
      const Vector v2 = lattice.generator().col(1);
      for (const Vector& v : {v1, v2, Vector(v1 - v2)}) {
        out.push_back(v);
        out.push_back(-v);
      }
      return out;
    }
    case LatticeKind::DN: {
      if (n != 4) throw CapabilityError("relevant vectors implemented for D4 only");
      const double s = lattice.unit_scale();
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          for (double si : {1.0, -1.0}) {
            for (double sj : {1.0, -1.0}) {
              Vector v = Vector::Zero(n);
              v[i] = si * s;
              v[j] = sj * s;
              out.push_back(v);
            }
          }
        }
      }
      return out;
    }
    case LatticeKind::E8: {
      const double s = lattice.unit_scale();
      for (int i = 0; i < 8; ++i) {
        for (int j = i + 1; j < 8; ++j) {
          for (double si : {1.0, -1.0}) {
            for (double sj : {1.0, -1.0}) {
              Vector v = Vector::Zero(8);
              v[i] = si * s;
              v[j] = sj * s;
              out.push_back(v);
            }
          }
        }
      }
      for (int mask = 0; mask < 256; ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) % 2 != 0) continue;
        Vector v(8);
        for (int i = 0; i < 8; ++i) v[i] = ((mask >> i) & 1) ? -0.5 * s : 0.5 * s;
        out.push_back(v);
      }
      return out;
    }
  }
  throw CapabilityError("unsupported lattice");
}

Vector fold_iterative(const Vector& x, const std::vector<Vector>& relevant) {
  Vector r = x;
  std::vector<double> half_norm2(relevant.size());
  for (std::size_t i = 0; i < relevant.size(); ++i) half_norm2[i] = 0.5 * relevant[i].squaredNorm();
  for (;;) {
    std::size_t best = relevant.size();
    double best_excess = 0.0;
    for (std::size_t i = 0; i < relevant.size(); ++i) {
      const double excess = relevant[i].dot(r) - half_norm2[i];
      if (excess > 1e-12 * half_norm2[i] && excess > best_excess) {
        best_excess = excess;
        best = i;
      }
    }
    if (best == relevant.size()) return r;
    // |r - p|^2 = |r|^2 - 2 * excess, so the norm strictly decreases.
    r -= relevant[best];
  }
}

Vector fold_iterative(const Vector& x, const ScaledLattice& lattice) {
  return fold_iterative(x, relevant_vectors(lattice));
}

}  // namespace latmod
