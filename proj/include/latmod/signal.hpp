#pragma once

#include "latmod/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace latmod {

enum class SignalMode {
  Real,     // independent real multisine per channel, frequencies in [0, omega_max]
  Complex,  // two channels: real and imaginary part of a complex multisine
};

struct SignalConfig {
  int n_channels = 8;
  int n_components = 14;
  double omega_max = 10.0;  // Hz
  double of = 6.0;          // oversampling factor over the Nyquist rate 2 * omega_max
  double duration = 1.0;    // seconds
  double dr_factor = 10.0;  // peak amplitude / lambda
  std::uint64_t seed = 0;
  SignalMode mode = SignalMode::Real;
  /// Frequencies snapped to multiples of 1 / duration so the record is periodic.
  bool snap_to_grid = true;
  /// Order m of the amplitude taper 1 - cos^(2m)(pi t / duration); 0 disables
  /// it. The taper occupies m / duration Hz of the band, so the sinusoid
  /// frequencies are drawn from the remaining band.
  int taper_order = 0;

  double fs() const { return of * 2.0 * omega_max; }
};

/// Throws ConfigError when of <= 1, dr_factor <= 0, n_components < 1, or the
/// taper leaves no usable band.
void validate(const SignalConfig& cfg);

struct Sinusoid {
  double freq = 0.0;  // Hz (may be negative in complex mode)
  double amp = 1.0;
  double phase = 0.0;
};

/// Continuous-time multisine, evaluable at any t.
class Multisine {
 public:
  /// Real mode: one component list per channel. Complex mode: a single list
  /// whose real and imaginary parts form two channels.
  Multisine(std::vector<std::vector<Sinusoid>> components, SignalMode mode, double duration = 1.0,
            int taper_order = 0, double gain = 1.0);

  int channels() const noexcept;
  SignalMode mode() const noexcept { return mode_; }
  double gain() const noexcept { return gain_; }
  double taper(double t) const;
  double operator()(double t, int channel) const;
  Vector operator()(double t) const;
  Multisine scaled(double factor) const;
  const std::vector<std::vector<Sinusoid>>& components() const noexcept { return comps_; }

 private:
  std::vector<std::vector<Sinusoid>> comps_;
  SignalMode mode_;
  double duration_;
  int taper_order_;
  double gain_;
};

Multisine generate_multisine(const SignalConfig& cfg);

struct SampledSignal {
  Samples samples;  // K x n
  double fs = 0.0;
  double t0 = 0.0;
};

/// K = ceil(duration * fs) uniform samples starting at t = 0.
SampledSignal sample_signal(const Multisine& signal, const SignalConfig& cfg);

/// Rescales so that the largest absolute sample equals gamma * lambda.
SampledSignal normalize_dr(SampledSignal signal, double lambda, double gamma);

/// CSV with columns t, ch0, ..., ch{n-1}.
void write_signal_csv(std::ostream& os, const SampledSignal& signal);

}  // namespace latmod
