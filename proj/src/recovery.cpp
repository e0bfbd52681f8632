#include "latmod/recovery.hpp"

#include "latmod/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace latmod {

namespace {

using Complex = std::complex<double>;

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double a = std::numbers::pi * x;
  return std::sin(a) / a;
}

bool finite(double v) { return std::isfinite(v); }

}  // namespace

// ---------------------------------------------------------------------------
// OobOperator

OobOperator OobOperator::build(int K, double omega_max, double fs, double guard) {
  if (K < 2) throw ConfigError("record must have at least 2 samples");
  if (!(omega_max > 0.0) || !(fs > 0.0) || !(guard >= 0.0)) throw ConfigError("invalid band parameters");
  const double edge = omega_max * (1.0 + guard);
  if (!(fs > 2.0 * edge)) throw ConfigError("sampling rate leaves no out-of-band region");
  OobOperator op;
  op.K_ = K;
  op.fs_ = fs;
  op.omega_max_ = omega_max;
  op.guard_ = guard;
  op.mask_.assign(static_cast<std::size_t>(K), false);
  for (int m = 0; m < K; ++m) {
    const int signed_bin = (2 * m <= K) ? m : m - K;
    const double freq = std::abs(static_cast<double>(signed_bin) * fs / K);
    if (freq > edge) {
      op.mask_[static_cast<std::size_t>(m)] = true;
      op.bins_.push_back(m);
    }
  }
  if (op.bins_.empty()) throw ConfigError("no out-of-band DFT bins for this record length");
  return op;
}

Samples OobOperator::project(const Samples& x) const {
  if (x.rows() != K_) throw InputError("record length does not match operator");
  Eigen::FFT<double> fft;
  std::vector<double> col(static_cast<std::size_t>(K_));
  std::vector<Complex> spec;
  Samples out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int k = 0; k < K_; ++k) col[static_cast<std::size_t>(k)] = x(k, c);
    fft.fwd(spec, col);
    for (int m = 0; m < K_; ++m)
      if (!mask_[static_cast<std::size_t>(m)]) spec[static_cast<std::size_t>(m)] = 0.0;
    std::vector<Complex> back;
    fft.inv(back, spec);
    for (int k = 0; k < K_; ++k) out(k, c) = back[static_cast<std::size_t>(k)].real();
  }
  return out;
}

double OobOperator::energy(const Samples& x) const {
  if (x.rows() != K_) throw InputError("record length does not match operator");
  Eigen::FFT<double> fft;
  std::vector<double> col(static_cast<std::size_t>(K_));
  std::vector<Complex> spec;
  double e = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int k = 0; k < K_; ++k) col[static_cast<std::size_t>(k)] = x(k, c);
    fft.fwd(spec, col);
    for (int m : bins_) e += std::norm(spec[static_cast<std::size_t>(m)]);
  }
  return e;
}

double OobOperator::max_abs(const Samples& x) const {
  if (x.rows() != K_) throw InputError("record length does not match operator");
  Eigen::FFT<double> fft;
  std::vector<double> col(static_cast<std::size_t>(K_));
  std::vector<Complex> spec;
  double best = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int k = 0; k < K_; ++k) col[static_cast<std::size_t>(k)] = x(k, c);
    fft.fwd(spec, col);
    for (int m : bins_) best = std::max(best, std::abs(spec[static_cast<std::size_t>(m)]));
  }
  return best;
}

// ---------------------------------------------------------------------------
// helpers

Samples round_rows(const Samples& p, const ScaledLattice& lattice) {
  if (p.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  Samples out(p.rows(), p.cols());
  const auto n = static_cast<std::size_t>(p.cols());
  for (Eigen::Index k = 0; k < p.rows(); ++k)
    lattice.nearest_point(std::span<const double>(p.row(k).data(), n), std::span<double>(out.row(k).data(), n));
  return out;
}

RecoveryCheck check_recovery(const Samples& p_hat, const Samples& p_true, const Samples& f_hat,
                             const Samples& f_true, const ScaledLattice& lattice) {
  if (p_hat.rows() != p_true.rows() || p_hat.cols() != p_true.cols() || f_hat.rows() != f_true.rows() ||
      f_hat.cols() != f_true.cols() || p_hat.rows() != f_hat.rows() || p_hat.cols() != f_hat.cols())
    throw InputError("shape mismatch in check_recovery");
  const double tol = 1e-6 * lattice.d_min();
  RecoveryCheck chk;
  for (Eigen::Index k = 0; k < p_hat.rows(); ++k)
    if ((p_hat.row(k) - p_true.row(k)).cwiseAbs().maxCoeff() > tol) ++chk.sample_error_count;
  chk.full_success = chk.sample_error_count == 0;
  chk.residual_mse = f_hat.size() ? (f_hat - f_true).squaredNorm() / static_cast<double>(f_hat.size()) : 0.0;
  return chk;
}

// ---------------------------------------------------------------------------
// HOD

RecoveryResult hod_recover(const Samples& y, const ScaledLattice& lattice, int order) {
  if (order < 1) throw ConfigError("difference order must be at least 1");
  if (y.rows() < order + 1) throw InputError("record shorter than order + 1");
  if (y.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  const Eigen::Index K = y.rows();
  const auto n = static_cast<std::size_t>(y.cols());

  std::vector<double> binom(static_cast<std::size_t>(order) + 1, 1.0);
  for (int j = 1; j <= order; ++j) binom[static_cast<std::size_t>(j)] = binom[j - 1] * (order - j + 1) / j;
  auto sgn = [](int j) { return (j % 2) ? -1.0 : 1.0; };

  Samples p = Samples::Zero(K, y.cols());
  Vector d(y.cols());
  Vector q(y.cols());
  for (Eigen::Index k = order; k < K; ++k) {
    d.setZero();
    for (int j = 0; j <= order; ++j) d += sgn(j) * binom[static_cast<std::size_t>(j)] * y.row(k - j).transpose();
    lattice.nearest_point(std::span<const double>(d.data(), n), std::span<double>(q.data(), n));
    // the N-th difference of p is -Q(diff of y); undo the differences
    Vector pk = -q;
    for (int j = 1; j <= order; ++j) pk -= sgn(j) * binom[static_cast<std::size_t>(j)] * p.row(k - j).transpose();
    lattice.nearest_point(std::span<const double>(pk.data(), n), std::span<double>(p.row(k).data(), n));
  }
  RecoveryResult r;
  r.p_hat = std::move(p);
  r.f_hat = y + r.p_hat;
  r.iterations = static_cast<int>(K);
  r.converged = true;
  return r;
}

// ---------------------------------------------------------------------------
// B2R2

B2r2Solver::B2r2Solver(const OobOperator& oob, const B2r2Options& opts) : oob_(oob), opts_(opts) {
  if (!(opts_.ridge > 0.0)) throw ConfigError("ridge must be positive");
  if (opts_.history < 0) throw ConfigError("history must be non-negative");
  if (opts_.max_iters < 0) throw ConfigError("max_iters must be non-negative");
  const int K = oob_.K();
  order_ = opts_.history == 0 ? K - 1 : std::min(opts_.history, K - 1);

  std::vector<double> r(static_cast<std::size_t>(order_) + 1);
  if (opts_.model == PredictorModel::Periodic) {
    std::vector<Complex> spec(static_cast<std::size_t>(K));
    for (int m = 0; m < K; ++m) spec[static_cast<std::size_t>(m)] = oob_.selected(m) ? opts_.ridge : 1.0;
    Eigen::FFT<double> fft;
    std::vector<Complex> acf;
    fft.inv(acf, spec);
    for (int d = 0; d <= order_; ++d) r[static_cast<std::size_t>(d)] = acf[static_cast<std::size_t>(d)].real();
  } else {
    const double b = 2.0 * oob_.omega_max() * (1.0 + opts_.guard) / oob_.fs();
    for (int d = 0; d <= order_; ++d) r[static_cast<std::size_t>(d)] = b * sinc(b * d);
    r[0] += opts_.ridge;
  }

  const int N = order_ + 1;
  Matrix T(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) T(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
  Eigen::LLT<Matrix> llt(T);
  if (llt.info() != Eigen::Success) throw NumericalError("predictor covariance is not positive definite", 0);
  const Matrix M = llt.matrixL().solve(Matrix::Identity(N, N));

  auto row_taps = [&](int k) {
    std::vector<double> h(static_cast<std::size_t>(k));
    for (int i = 1; i <= k; ++i) h[static_cast<std::size_t>(i - 1)] = -M(k, k - i) / M(k, k);
    return h;
  };
  auto gain = [](const std::vector<double>& h) {
    double s = 1.0;
    for (double v : h) s += v * v;
    return std::sqrt(s);
  };
  // order-k taps with `extra` added to the diagonal
  auto ridged_taps = [&](int k, double extra) {
    const Matrix A = T.topLeftCorner(k, k) + extra * Matrix::Identity(k, k);
    Vector rhs(k);
    for (int i = 0; i < k; ++i) rhs[i] = r[static_cast<std::size_t>(i) + 1];
    const Vector sol = A.ldlt().solve(rhs);
    return std::vector<double>(sol.data(), sol.data() + k);
  };

  std::vector<std::vector<double>> by_order(static_cast<std::size_t>(order_) + 1);
  for (int k = 0; k <= order_; ++k) by_order[static_cast<std::size_t>(k)] = row_taps(k);
  // Short start-up predictors extrapolate from few samples and amplify noise;
  // raise their ridge until they are no noisier than the steady state.
  const double target = gain(by_order.back());
  for (int k = 1; k < order_; ++k) {
    auto& h = by_order[static_cast<std::size_t>(k)];
    if (gain(h) <= target) continue;
    double lo = std::log(opts_.ridge), hi = std::log(r[0]) + std::log(1e6);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (gain(ridged_taps(k, std::exp(mid))) > target) lo = mid;
      else hi = mid;
    }
    h = ridged_taps(k, std::exp(hi));
  }
  coeffs_.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) coeffs_[static_cast<std::size_t>(k)] = by_order[static_cast<std::size_t>(std::min(k, order_))];
}

double B2r2Solver::noise_gain() const {
  const auto& h = coeffs_.back();
  double s = 1.0;
  for (double v : h) s += v * v;
  return std::sqrt(s);
}

Samples B2r2Solver::decode(const Samples& y, const ScaledLattice& lattice) const {
  if (y.rows() != oob_.K()) throw InputError("record length does not match operator");
  if (y.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  const Eigen::Index K = y.rows();
  const auto n = static_cast<std::size_t>(y.cols());
  Samples f_hat(K, y.cols());
  Samples p(K, y.cols());
  Vector target(y.cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& h = coeffs_[static_cast<std::size_t>(k)];
    target = -y.row(k).transpose();
    for (std::size_t i = 0; i < h.size(); ++i) target += h[i] * f_hat.row(k - 1 - static_cast<Eigen::Index>(i)).transpose();
    lattice.nearest_point(std::span<const double>(target.data(), n), std::span<double>(p.row(k).data(), n));
    f_hat.row(k) = y.row(k) + p.row(k);
  }
  return p;
}

double B2r2Solver::objective(const Samples& y, const Samples& p) const { return oob_.energy(y + p); }

RecoveryResult B2r2Solver::recover(const Samples& y, const ScaledLattice& lattice) const {
  Samples p = decode(y, lattice);
  const double K = static_cast<double>(oob_.K());
  const double floor = 1e-28 * K * (y.squaredNorm() + p.squaredNorm() + 1.0);
  const double bound = opts_.magnitude_bound;
  auto clamp = [bound](Samples& q) {
    if (bound > 0.0) q = q.cwiseMax(-bound).cwiseMin(bound);
  };

  RecoveryResult res;
  double J = objective(y, p);
  if (!finite(J)) throw NumericalError("non-finite objective", 0);
  res.objective_trace.push_back(J);
  double step = 1.0 / (2.0 * K);
  int it = 0;
  bool converged = J <= floor;
  while (!converged && it < opts_.max_iters) {
    ++it;
    const Samples grad = 2.0 * K * oob_.project(y + p);
    double s = step;
    Samples cand;
    double Jc = 0.0;
    for (int halvings = 0;; ++halvings) {
      cand = p - s * grad;
      clamp(cand);
      Jc = objective(y, cand);
      if (!finite(Jc)) throw NumericalError("non-finite objective", it);
      if (Jc <= J || halvings >= 60) break;
      s *= 0.5;
    }
    if (Jc > J) {
      converged = true;
      break;
    }
    const double decrease = J - Jc;
    p = std::move(cand);
    converged = Jc <= floor || decrease <= opts_.tol * std::max(J, floor);
    J = Jc;
    res.objective_trace.push_back(J);
  }
  res.p_hat = round_rows(p, lattice);
  res.f_hat = y + res.p_hat;
  res.iterations = it;
  res.converged = converged || it >= opts_.max_iters;
  return res;
}

RecoveryResult b2r2_recover(const Samples& y, const ScaledLattice& lattice, const OobOperator& oob,
                            const B2r2Options& opts) {
  return B2r2Solver(oob, opts).recover(y, lattice);
}

// ---------------------------------------------------------------------------
// LASSO-B2R2

namespace {

Samples running_sum(const Samples& v) {
  Samples p(v.rows(), v.cols());
  if (v.rows() == 0) return p;
  p.row(0) = v.row(0);
  for (Eigen::Index k = 1; k < v.rows(); ++k) p.row(k) = p.row(k - 1) + v.row(k);
  return p;
}

// adjoint of running_sum
Samples reverse_sum(const Samples& g) {
  Samples out(g.rows(), g.cols());
  if (g.rows() == 0) return out;
  const Eigen::Index last = g.rows() - 1;
  out.row(last) = g.row(last);
  for (Eigen::Index k = last - 1; k >= 0; --k) out.row(k) = out.row(k + 1) + g.row(k);
  return out;
}

Samples soft_threshold(const Samples& x, double t) {
  return x.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}

}  // namespace

RecoveryResult lasso_b2r2_recover(const Samples& y, const ScaledLattice& lattice, const OobOperator& oob,
                                  const LassoOptions& opts) {
  if (y.rows() != oob.K()) throw InputError("record length does not match operator");
  if (y.cols() != lattice.dim()) throw InputError("sample width does not match lattice dimension");
  const double K = static_cast<double>(oob.K());
  const double mu = opts.mu < 0.0 ? 0.1 * oob.max_abs(y) : opts.mu;

  // Lipschitz constant of the smooth part: 2K |P C|^2
  Samples x = Samples::Ones(y.rows(), y.cols());
  x /= x.norm();
  double sigma2 = 0.0;
  for (int i = 0; i < opts.power_iters; ++i) {
    Samples z = reverse_sum(oob.project(running_sum(x)));
    const double nz = z.norm();
    if (!(nz > 0.0)) break;
    sigma2 = nz;
    x = z / nz;
  }
  double L = 2.0 * K * std::max(sigma2, 1e-12) * 1.01;

  auto total = [&](const Samples& v) { return oob.energy(y + running_sum(v)) + mu * v.cwiseAbs().sum(); };

  RecoveryResult res;
  Samples v = Samples::Zero(y.rows(), y.cols());
  double F = total(v);
  if (!finite(F)) throw NumericalError("non-finite objective", 0);
  res.objective_trace.push_back(F);
  const double floor = 1e-28 * K * (y.squaredNorm() + 1.0);

  // Monotone accelerated proximal gradient: the extrapolated point w drives
  // the step, and the iterate only moves when the objective does not rise.
  Samples w = v, v_prev = v;
  double t = 1.0;
  int it = 0, flat = 0;
  bool converged = F <= floor;
  while (!converged && it < opts.max_iters) {
    ++it;
    const Samples rw = oob.project(y + running_sum(w));
    const double fw = K * rw.squaredNorm();
    const Samples grad = 2.0 * K * reverse_sum(rw);
    Samples u;
    for (int tries = 0;; ++tries) {
      u = soft_threshold(w - grad / L, mu / L);
      const Samples d = u - w;
      const double fu = oob.energy(y + running_sum(u));
      if (!finite(fu)) throw NumericalError("non-finite objective", it);
      if (fu <= fw + (grad.array() * d.array()).sum() + 0.5 * L * d.squaredNorm() || tries >= 60) break;
      L *= 2.0;
    }
    const double Fu = total(u);
    if (!finite(Fu)) throw NumericalError("non-finite objective", it);
    v_prev = v;
    const double F_prev = F;
    if (Fu <= F) {
      v = u;
      F = Fu;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    w = v + (t / t_next) * (u - v) + ((t - 1.0) / t_next) * (v - v_prev);
    t = t_next;
    res.objective_trace.push_back(F);
    flat = (F_prev - F <= opts.tol * std::max(F, floor)) ? flat + 1 : 0;
    converged = F <= floor || flat >= 50;
  }

  res.p_hat = round_rows(running_sum(v), lattice);
  res.f_hat = y + res.p_hat;
  res.iterations = it;
  res.converged = converged || it >= opts.max_iters;
  return res;
}

}  // namespace latmod
