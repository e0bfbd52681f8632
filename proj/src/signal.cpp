#include "latmod/signal.hpp"

#include "latmod/errors.hpp"
#include "latmod/rng.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

namespace latmod {

namespace {

double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

double usable_band(const SignalConfig& cfg) {
  return cfg.omega_max - static_cast<double>(cfg.taper_order) / cfg.duration;
}

double draw_freq(Rng& rng, double lo, double hi, const SignalConfig& cfg) {
  const double f = uniform(rng, lo, hi);
  if (!cfg.snap_to_grid) return f;
  const double grid = 1.0 / cfg.duration;
  const double top = std::floor(hi / grid + 1e-9);
  const double bottom = std::ceil(lo / grid - 1e-9);
  return std::clamp(std::round(f / grid), bottom, top) * grid;
}

}  // namespace

void validate(const SignalConfig& cfg) {
  if (!(cfg.of > 1.0)) throw ConfigError("oversampling factor must exceed 1");
  if (!(cfg.dr_factor > 0.0)) throw ConfigError("dynamic-range factor must be positive");
  if (cfg.n_components < 1) throw ConfigError("need at least one component");
  if (!(cfg.omega_max > 0.0) || !(cfg.duration > 0.0)) throw ConfigError("omega_max and duration must be positive");
  if (cfg.mode == SignalMode::Complex && cfg.n_channels != 2) throw ConfigError("complex mode has exactly 2 channels");
  if (cfg.n_channels < 1) throw ConfigError("need at least one channel");
  if (cfg.taper_order < 0 || !(usable_band(cfg) > 0.0)) throw ConfigError("taper leaves no usable band");
}

Multisine::Multisine(std::vector<std::vector<Sinusoid>> components, SignalMode mode, double duration,
                     int taper_order, double gain)
    : comps_(std::move(components)), mode_(mode), duration_(duration), taper_order_(taper_order), gain_(gain) {
  if (comps_.empty()) throw ConfigError("multisine needs at least one component list");
  if (mode_ == SignalMode::Complex && comps_.size() != 1) throw ConfigError("complex multisine takes one list");
}

int Multisine::channels() const noexcept {
  return mode_ == SignalMode::Complex ? 2 : static_cast<int>(comps_.size());
}

double Multisine::taper(double t) const {
  if (taper_order_ == 0) return 1.0;
  const double c = std::cos(std::numbers::pi * t / duration_);
  return 1.0 - std::pow(c * c, taper_order_);
}

double Multisine::operator()(double t, int channel) const {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double acc = 0.0;
  if (mode_ == SignalMode::Complex) {
    for (const auto& s : comps_[0]) {
      const double arg = two_pi * s.freq * t + s.phase;
      acc += s.amp * (channel == 0 ? std::cos(arg) : std::sin(arg));
    }
  } else {
    for (const auto& s : comps_[static_cast<std::size_t>(channel)]) acc += s.amp * std::cos(two_pi * s.freq * t + s.phase);
  }
  return gain_ * taper(t) * acc;
}

Vector Multisine::operator()(double t) const {
  Vector v(channels());
  for (int c = 0; c < channels(); ++c) v[c] = (*this)(t, c);
  return v;
}

Multisine Multisine::scaled(double factor) const {
  Multisine out = *this;
  out.gain_ *= factor;
  return out;
}

Multisine generate_multisine(const SignalConfig& cfg) {
  validate(cfg);
  Rng rng(derive_seed(cfg.seed, {0x5167ULL}));
  const double band = usable_band(cfg);
  auto draw_list = [&](double lo) {
    std::vector<Sinusoid> list;
    for (int i = 0; i < cfg.n_components; ++i) {
      Sinusoid s;
      s.freq = draw_freq(rng, lo, band, cfg);
      s.amp = uniform(rng, 0.5, 1.0);
      s.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      list.push_back(s);
    }
    return list;
  };
  std::vector<std::vector<Sinusoid>> comps;
  if (cfg.mode == SignalMode::Complex) {
    comps.push_back(draw_list(-band));
  } else {
    for (int c = 0; c < cfg.n_channels; ++c) comps.push_back(draw_list(0.0));
  }
  return Multisine(std::move(comps), cfg.mode, cfg.duration, cfg.taper_order);
}

SampledSignal sample_signal(const Multisine& signal, const SignalConfig& cfg) {
  const double fs = cfg.fs();
  const auto K = static_cast<Eigen::Index>(std::ceil(cfg.duration * fs - 1e-9));
  SampledSignal out;
  out.fs = fs;
  out.t0 = 0.0;
  out.samples.resize(K, signal.channels());
  for (Eigen::Index k = 0; k < K; ++k) {
    const double t = static_cast<double>(k) / fs;
    for (int c = 0; c < signal.channels(); ++c) out.samples(k, c) = signal(t, c);
  }
  return out;
}

SampledSignal normalize_dr(SampledSignal signal, double lambda, double gamma) {
  const double peak = signal.samples.size() ? signal.samples.cwiseAbs().maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw DegenerateSignalError("cannot normalize an all-zero signal");
  signal.samples *= gamma * lambda / peak;
  return signal;
}

void write_signal_csv(std::ostream& os, const SampledSignal& signal) {
  os << "t";
  for (Eigen::Index c = 0; c < signal.samples.cols(); ++c) os << ",ch" << c;
  os << '\n' << std::setprecision(17);
  for (Eigen::Index k = 0; k < signal.samples.rows(); ++k) {
    os << signal.t0 + static_cast<double>(k) / signal.fs;
    for (Eigen::Index c = 0; c < signal.samples.cols(); ++c) os << ',' << signal.samples(k, c);
    os << '\n';
  }
}

}  // namespace latmod
