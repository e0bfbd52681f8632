#pragma once

#include "latmod/lattice.hpp"
#include "latmod/types.hpp"

#include <cstdint>
#include <limits>
#include <string>

namespace latmod {

enum class ChannelKind { None, Awgn, ScalarQ, LatticeQ };

enum class NoiseLaw { Gaussian, Uniform };

/// Distortion applied to folded samples. `snr_db` and `bits` may be +inf,
/// which makes the channel an identity.
struct ChannelSpec {
  ChannelKind kind = ChannelKind::None;
  double snr_db = std::numeric_limits<double>::infinity();
  double bits = std::numeric_limits<double>::infinity();
  NoiseLaw noise = NoiseLaw::Gaussian;

  static ChannelSpec none() { return {}; }
  static ChannelSpec awgn(double snr_db, NoiseLaw law = NoiseLaw::Gaussian) {
    return {ChannelKind::Awgn, snr_db, std::numeric_limits<double>::infinity(), law};
  }
  static ChannelSpec scalar_q(double bits) {
    return {ChannelKind::ScalarQ, std::numeric_limits<double>::infinity(), bits, NoiseLaw::Gaussian};
  }
  static ChannelSpec lattice_q(double bits) {
    return {ChannelKind::LatticeQ, std::numeric_limits<double>::infinity(), bits, NoiseLaw::Gaussian};
  }

  /// Throws ConfigError for snr_db <= 0 or bits outside {1..24} and inf.
  void validate() const;
  std::string describe() const;
};

/// Folded samples together with the distortion that produced them.
struct FoldedRecord {
  Samples y;          // K x n
  ChannelSpec channel;
};

/// Folds every row of `x` into the Voronoi cell; returns residues and, via
/// `offsets` when non-null, the lattice points removed.
FoldedRecord fold_record(const Samples& x, const ScaledLattice& lattice, Samples* offsets = nullptr);

/// Adds i.i.d. noise with per-coordinate variance P_y * 10^(-snr/10), where
/// P_y = mean |y[k]|^2 / n over the record.
FoldedRecord add_noise(const FoldedRecord& rec, double snr_db, std::uint64_t seed,
                       NoiseLaw law = NoiseLaw::Gaussian);

/// Mid-tread scalar quantizer with step 2 lambda / 2^bits, saturating at
/// +-clamp_limit. A non-positive clamp_limit means lambda.
FoldedRecord scalar_quantize(const FoldedRecord& rec, double bits, double lambda, double clamp_limit = 0.0);

/// Each row replaced by 2^-bits Q(2^bits y[k]).
FoldedRecord lattice_quantize(const FoldedRecord& rec, const ScaledLattice& lattice, double bits);

/// Dispatches on spec.kind. The scalar quantizer saturates at the folding
/// cell's coordinate extent.
FoldedRecord apply_channel(const FoldedRecord& rec, const ChannelSpec& spec, const ScaledLattice& lattice,
                           std::uint64_t seed);

}  // namespace latmod
