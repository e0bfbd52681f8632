#pragma once

#include "latmod/lattice.hpp"
#include "latmod/types.hpp"

#include <vector>

namespace latmod {

/// Selects the K-point DFT bins whose frequency magnitude exceeds
/// omega_max * (1 + guard). Objective values use the unnormalized DFT, so
/// energy(x) = sum over selected bins of |X_m|^2 = K * |P x|^2.
class OobOperator {
 public:
  /// Throws ConfigError when fs <= 2 omega_max (1 + guard) or no bin qualifies.
  static OobOperator build(int K, double omega_max, double fs, double guard = 0.1);

  int K() const noexcept { return K_; }
  double fs() const noexcept { return fs_; }
  double omega_max() const noexcept { return omega_max_; }
  double guard() const noexcept { return guard_; }
  /// Bin indices in [0, K).
  const std::vector<int>& bins() const noexcept { return bins_; }
  bool selected(int bin) const { return mask_[static_cast<std::size_t>(bin)]; }

  /// Orthogonal projection onto the out-of-band subspace, column by column.
  Samples project(const Samples& x) const;
  double energy(const Samples& x) const;
  /// Largest |X_m| over selected bins and columns.
  double max_abs(const Samples& x) const;

 private:
  int K_ = 0;
  double fs_ = 0.0;
  double omega_max_ = 0.0;
  double guard_ = 0.0;
  std::vector<int> bins_;
  std::vector<bool> mask_;
};

struct RecoveryResult {
  Samples f_hat;
  Samples p_hat;
  int iterations = 0;
  bool converged = false;
  /// Objective before the first and after every accepted iteration (B2R2 and
  /// LASSO only).
  std::vector<double> objective_trace;
};

/// Higher-order differences. The first N offsets are taken as zero.
RecoveryResult hod_recover(const Samples& y, const ScaledLattice& lattice, int order);

/// Spectral model of the unknown signal used by the sequential decoder.
enum class PredictorModel {
  Periodic,    // circulant: unit power on in-band DFT bins, `ridge` elsewhere
  Stationary,  // flat spectrum over |f| <= omega_max (1 + guard) plus a white floor `ridge`
};

struct B2r2Options {
  double tol = 1e-10;
  int max_iters = 5000;
  double guard = 0.1;
  /// Relative white-noise floor of the predictor model.
  double ridge = 2e-9;
  /// Past samples used per prediction; 0 means the whole record.
  int history = 24;
  PredictorModel model = PredictorModel::Stationary;
  /// Clamp on |p| during the gradient phase; 0 disables.
  double magnitude_bound = 0.0;
};

/// Sequential nearest-plane decoder for the regularized out-of-band objective.
/// Coefficients depend only on (K, fs, omega_max, options) and are computed
/// once; decode() is const and thread-safe.
class B2r2Solver {
 public:
  B2r2Solver(const OobOperator& oob, const B2r2Options& opts = {});

  const OobOperator& oob() const noexcept { return oob_; }
  const B2r2Options& options() const noexcept { return opts_; }
  /// Root of (1 + sum h^2) for the steady-state predictor.
  double noise_gain() const;

  /// Lattice offsets from the sequential decoder alone.
  Samples decode(const Samples& y, const ScaledLattice& lattice) const;
  /// K * |P (y + p)|^2.
  double objective(const Samples& y, const Samples& p) const;
  /// decode, then gradient descent on the relaxed objective from that point,
  /// then row-wise rounding to the lattice.
  RecoveryResult recover(const Samples& y, const ScaledLattice& lattice) const;

 private:
  OobOperator oob_;
  B2r2Options opts_;
  int order_ = 0;
  // coeffs_[k] holds the min(k, order_) predictor taps for sample k; the
  // first tap multiplies sample k-1.
  std::vector<std::vector<double>> coeffs_;
};

RecoveryResult b2r2_recover(const Samples& y, const ScaledLattice& lattice, const OobOperator& oob,
                            const B2r2Options& opts = {});

struct LassoOptions {
  double tol = 1e-10;
  int max_iters = 5000;
  /// Negative selects 0.1 * max |F y|.
  double mu = -1.0;
  int power_iters = 100;
};

/// Monotone accelerated proximal gradient on K |P (y + C v)|^2 + mu |v|_1
/// with C the running sum. Stops after 50 consecutive iterations whose
/// relative decrease is at most tol.
RecoveryResult lasso_b2r2_recover(const Samples& y, const ScaledLattice& lattice, const OobOperator& oob,
                                  const LassoOptions& opts = {});

struct RecoveryCheck {
  bool full_success = false;
  int sample_error_count = 0;
  double residual_mse = 0.0;
};

/// Rows are compared up to 1e-6 d_min. residual_mse = mean |f_hat - f|^2 / n.
RecoveryCheck check_recovery(const Samples& p_hat, const Samples& p_true, const Samples& f_hat,
                             const Samples& f_true, const ScaledLattice& lattice);

/// Rounds every row to the lattice.
Samples round_rows(const Samples& p, const ScaledLattice& lattice);

}  // namespace latmod
