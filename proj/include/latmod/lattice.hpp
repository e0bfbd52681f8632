#pragma once

#include "latmod/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace latmod {

enum class LatticeKind { ZN, A2, DN, E8 };

std::string to_string(LatticeKind kind);
LatticeKind lattice_kind_from_string(const std::string& name);

/// A lattice family instantiated at a dimension.
struct LatticeFamily {
  LatticeKind kind = LatticeKind::ZN;
  int n = 1;
};

/// Rounds every coordinate to the nearest multiple of `scale`. Exact half-way
/// ties go to the value of smaller magnitude.
Vector nearest_point_zn(const Vector& x, double scale);

/// Nearest point of scale * D_n (integer vectors with even coordinate sum).
Vector nearest_point_dn(const Vector& x, double scale);

/// Nearest point of scale * E_8 (D_8 union D_8 + 1/2). Ties between the two
/// cosets resolve to the integer coset.
Vector nearest_point_e8(const Vector& x, double scale);

class ScaledLattice;

/// Nearest point of the hexagonal lattice by candidate enumeration in basis
/// coordinates.
Vector nearest_point_a2(const Vector& x, const ScaledLattice& lattice);

/// A lattice scaled so that its packing radius (d_min / 2) equals `lambda`.
///
/// Immutable after construction; safe to share across threads.
class ScaledLattice {
 public:
  static ScaledLattice make(LatticeKind kind, int n, double lambda);
  static ScaledLattice make(LatticeFamily family, double lambda) {
    return make(family.kind, family.n, lambda);
  }

  LatticeKind kind() const noexcept { return kind_; }
  LatticeFamily family() const noexcept { return {kind_, n_}; }
  int dim() const noexcept { return n_; }
  double inradius() const noexcept { return lambda_; }
  double d_min() const noexcept { return 2.0 * lambda_; }
  /// Columns are the basis vectors.
  const Matrix& generator() const noexcept { return gen_; }
  double volume() const noexcept { return volume_; }
  /// Scale factor applied to the unit lattice (2*lambda for Z^n, lambda*sqrt(2)
  /// for D_n and E_8, 2*lambda for the hexagonal basis).
  double unit_scale() const noexcept { return scale_; }
  /// Largest absolute coordinate reached by the closed Voronoi cell.
  double coordinate_extent() const noexcept;
  std::string name() const;

  Vector nearest_point(const Vector& x) const;
  /// Allocation-free variant; `x` and `out` must both have dim() entries and
  /// may alias.
  void nearest_point(std::span<const double> x, std::span<double> out) const;

  /// True when generator() * k = p has an integral solution k, within a
  /// relative tolerance on each coordinate of k.
  bool contains(const Vector& p, double rel_tol = 1e-9) const;

 private:
  ScaledLattice(LatticeKind kind, int n, double lambda, Matrix gen, double scale);

  LatticeKind kind_;
  int n_;
  double lambda_;
  Matrix gen_;
  Matrix gen_inv_;
  double volume_;
  double scale_;
};

struct FoldResult {
  Vector residue;
  Vector offset;
};

/// Lattice modulo: residue = x - Q(x) lies in the closed Voronoi cell.
FoldResult fold(const Vector& x, const ScaledLattice& lattice);

/// Facet-defining lattice vectors. Supported for Z^n, A2, D4 and E8; the set
/// is closed under negation and its size is the kissing number.
std::vector<Vector> relevant_vectors(const ScaledLattice& lattice);

/// Comparator-style folding: subtract any relevant vector whose threshold
/// <p, r> = |p|^2 / 2 is exceeded until none is.
Vector fold_iterative(const Vector& x, const ScaledLattice& lattice);

/// Same, with a precomputed relevant-vector set.
Vector fold_iterative(const Vector& x, const std::vector<Vector>& relevant);

}  // namespace latmod
