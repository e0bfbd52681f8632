#include "latmod/channel.hpp"

#include "latmod/errors.hpp"
#include "latmod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace latmod {

namespace {

bool is_inf(double v) { return std::isinf(v) && v > 0.0; }

void check_bits(double bits) {
  if (is_inf(bits)) return;
  if (!(bits >= 1.0 && bits <= 24.0) || bits != std::floor(bits)) throw ConfigError("bits must be an integer in 1..24 or inf");
}

}  // namespace

void ChannelSpec::validate() const {
  switch (kind) {
    case ChannelKind::None: return;
    case ChannelKind::Awgn:
      if (!(snr_db > 0.0)) throw ConfigError("snr_db must be positive");
      return;
    case ChannelKind::ScalarQ:
    case ChannelKind::LatticeQ: check_bits(bits); return;
  }
}

std::string ChannelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case ChannelKind::None: os << "none"; break;
    case ChannelKind::Awgn:
      os << "awgn(" << (is_inf(snr_db) ? std::string("inf") : std::to_string(snr_db).substr(0, 6)) << " dB, "
         << (noise == NoiseLaw::Gaussian ? "gaussian" : "uniform") << ')';
      break;
    case ChannelKind::ScalarQ: os << "scalar_q(" << bits << " bits)"; break;
    case ChannelKind::LatticeQ: os << "lattice_q(" << bits << " bits)"; break;
  }
  return os.str();
}

FoldedRecord fold_record(const Samples& x, const ScaledLattice& lattice, Samples* offsets) {
  if (x.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  FoldedRecord rec;
  rec.y.resize(x.rows(), x.cols());
  if (offsets) offsets->resize(x.rows(), x.cols());
  const auto n = static_cast<std::size_t>(x.cols());
  Vector q(x.cols());
  for (Eigen::Index k = 0; k < x.rows(); ++k) {
    lattice.nearest_point(std::span<const double>(x.row(k).data(), n), std::span<double>(q.data(), n));
    rec.y.row(k) = x.row(k) - q.transpose();
    if (offsets) offsets->row(k) = q.transpose();
  }
  return rec;
}

FoldedRecord add_noise(const FoldedRecord& rec, double snr_db, std::uint64_t seed, NoiseLaw law) {
  FoldedRecord out = rec;
  out.channel = ChannelSpec::awgn(snr_db, law);
  if (is_inf(snr_db) || rec.y.size() == 0) return out;
  const double p_y = rec.y.squaredNorm() / static_cast<double>(rec.y.size());
  const double sigma = std::sqrt(p_y * std::pow(10.0, -snr_db / 10.0));
  Rng rng(seed);
  if (law == NoiseLaw::Gaussian) {
    std::normal_distribution<double> dist(0.0, sigma);
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y.data()[i] += dist(rng);
  } else {
    const double half = sigma * std::sqrt(3.0);
    std::uniform_real_distribution<double> dist(-half, half);
    for (Eigen::Index i = 0; i < out.y.size(); ++i) out.y.data()[i] += dist(rng);
  }
  return out;
}

FoldedRecord scalar_quantize(const FoldedRecord& rec, double bits, double lambda, double clamp_limit) {
  check_bits(bits);
  if (!(lambda > 0.0)) throw DomainError("lambda must be positive");
  FoldedRecord out = rec;
  out.channel = ChannelSpec::scalar_q(bits);
  if (is_inf(bits)) return out;
  const double delta = 2.0 * lambda / std::ldexp(1.0, static_cast<int>(bits));
  const double limit = clamp_limit > 0.0 ? clamp_limit : lambda;
  for (Eigen::Index i = 0; i < out.y.size(); ++i) {
    double& v = out.y.data()[i];
    v = std::clamp(delta * std::nearbyint(v / delta), -limit, limit);
  }
  return out;
}

FoldedRecord lattice_quantize(const FoldedRecord& rec, const ScaledLattice& lattice, double bits) {
  check_bits(bits);
  if (rec.y.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  FoldedRecord out = rec;
  out.channel = ChannelSpec::lattice_q(bits);
  if (is_inf(bits)) return out;
  const double up = std::ldexp(1.0, static_cast<int>(bits));
  const auto n = static_cast<std::size_t>(rec.y.cols());
  Vector x(rec.y.cols());
  for (Eigen::Index k = 0; k < out.y.rows(); ++k) {
    x = rec.y.row(k).transpose() * up;
    lattice.nearest_point(std::span<const double>(x.data(), n), std::span<double>(x.data(), n));
    out.y.row(k) = x.transpose() / up;
  }
  return out;
}

FoldedRecord apply_channel(const FoldedRecord& rec, const ChannelSpec& spec, const ScaledLattice& lattice,
                           std::uint64_t seed) {
  spec.validate();
  switch (spec.kind) {
    case ChannelKind::None: {
      FoldedRecord out = rec;
      out.channel = spec;
      return out;
    }
    case ChannelKind::Awgn: return add_noise(rec, spec.snr_db, seed, spec.noise);
    case ChannelKind::ScalarQ:
      return scalar_quantize(rec, spec.bits, lattice.inradius(), lattice.coordinate_extent());
    case ChannelKind::LatticeQ: return lattice_quantize(rec, lattice, spec.bits);
  }
  return rec;
}

}  // namespace latmod
