#include "latmod/voronoi_stats.hpp"

#include "latmod/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <thread>

namespace latmod {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::int64_t count = 0;
};

Moments sample_chunk(const ScaledLattice& lattice, std::int64_t count, std::uint64_t seed) {
  Rng rng(seed);
  const int n = lattice.dim();
  const Matrix& gen = lattice.generator();
  Vector u(n);
  Vector x(n);
  Vector q(n);
  Moments m;
  for (std::int64_t i = 0; i < count; ++i) {
    for (int j = 0; j < n; ++j) u[j] = uniform01(rng);
    x.noalias() = gen * u;
    lattice.nearest_point(std::span<const double>(x.data(), n), std::span<double>(q.data(), n));
    const double r2 = (x - q).squaredNorm();
    m.sum += r2;
    m.sum_sq += r2 * r2;
  }
  m.count = count;
  return m;
}

}  // namespace

Vector sample_uniform_cell(const ScaledLattice& lattice, Rng& rng) {
  const int n = lattice.dim();
  Vector u(n);
  for (int j = 0; j < n; ++j) u[j] = uniform01(rng);
  const Vector x = lattice.generator() * u;
  return x - lattice.nearest_point(x);
}

SecondMomentEstimate estimate_second_moment(const ScaledLattice& lattice, std::int64_t n_samples,
                                            std::uint64_t seed, int workers) {
  if (n_samples < 1) throw DomainError("n_samples must be positive");
  constexpr std::int64_t kChunk = 1 << 14;
  const std::int64_t n_chunks = (n_samples + kChunk - 1) / kChunk;
  std::vector<Moments> parts(static_cast<std::size_t>(n_chunks));

  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::int64_t>(workers, n_chunks));
  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t c = next++; c < n_chunks; c = next++) {
      const std::int64_t count = std::min(kChunk, n_samples - c * kChunk);
      parts[static_cast<std::size_t>(c)] =
          sample_chunk(lattice, count, derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  Moments total;
  for (const auto& p : parts) {
    total.sum += p.sum;
    total.sum_sq += p.sum_sq;
    total.count += p.count;
  }
  const double N = static_cast<double>(total.count);
  const double mean = total.sum / N;
  const double var = std::max(0.0, total.sum_sq / N - mean * mean) * N / std::max(1.0, N - 1.0);
  const int n = lattice.dim();
  const double norm = n * std::pow(lattice.volume(), 2.0 / n);

  SecondMomentEstimate est;
  est.G = mean / norm;
  est.mse_per_cell = n * est.G * std::pow(lattice.volume(), 2.0 / n);
  est.n_samples = total.count;
  est.std_err = std::sqrt(var / N) / norm;
  return est;
}

double predicted_mse(const ScaledLattice& lattice, double G) {
  if (!(G > 0.0)) throw DomainError("G must be positive");
  const int n = lattice.dim();
  return n * G * std::pow(lattice.volume(), 2.0 / n);
}

double mse_ratio(const ScaledLattice& l1, const ScaledLattice& l2, double G1, double G2) {
  if (l1.dim() != l2.dim()) throw ConfigError("mse_ratio requires lattices of equal dimension");
  const int n = l1.dim();
  return (G1 * std::pow(l1.volume(), 2.0 / n)) / (G2 * std::pow(l2.volume(), 2.0 / n));
}

EquivalentGains equivalent_gains(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw DomainError("MSE ratio must lie in (0, 1]");
  EquivalentGains g;
  g.snr_db = 10.0 * std::log10(1.0 / ratio);
  g.of_factor = 1.0 / ratio;
  g.bits_saved = std::log(1.0 / ratio) / std::log(4.0);
  return g;
}

std::vector<Table1Row> table1_report(std::int64_t n_samples, std::uint64_t seed, int workers) {
  struct Entry {
    LatticeKind kind;
    int n;
    const char* label;
  };
  const Entry entries[] = {
      {LatticeKind::ZN, 1, "Z"}, {LatticeKind::A2, 2, "A2"}, {LatticeKind::DN, 4, "D4"}, {LatticeKind::E8, 8, "E8"}};

  std::vector<Table1Row> rows;
  std::uint64_t idx = 0;
  for (const auto& e : entries) {
    const auto lat = ScaledLattice::make(e.kind, e.n, 1.0);
    const auto est = estimate_second_moment(lat, n_samples, derive_seed(seed, {idx++}), workers);
    const auto cube = ScaledLattice::make(LatticeKind::ZN, e.n, 1.0);
    Table1Row row;
    row.n = e.n;
    row.lattice = e.label;
    row.G = est.G;
    row.G_std_err = est.std_err;
    row.volume_ratio = lat.volume() / std::pow(2.0, e.n);
    row.mse_ratio = mse_ratio(lat, cube, est.G, kHypercubeG);
    rows.push_back(row);
  }
  // Literature constants; no quantizer is implemented for these.
  auto constant_row = [](int n, const char* label, double G, double vratio) {
    Table1Row row;
    row.n = n;
    row.lattice = label;
    row.G = G;
    row.volume_ratio = vratio;
    row.mse_ratio = G * std::pow(vratio, 2.0 / n) / kHypercubeG;
    row.estimated = false;
    return row;
  };
  rows.insert(rows.begin() + 2, constant_row(3, "A3*", 0.0785, 0.707));
  rows.push_back(constant_row(24, "Leech24", 0.0658, 5.96e-8));
  return rows;
}

void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows) {
  os << "n,lattice,G,G_std_err,volume_ratio,mse_ratio,reduction_pct,source\n";
  os << std::setprecision(6);
  for (const auto& r : rows) {
    os << r.n << ',' << r.lattice << ',' << r.G << ',' << r.G_std_err << ',' << r.volume_ratio << ','
       << r.mse_ratio << ',' << 100.0 * (1.0 - r.mse_ratio) << ',' << (r.estimated ? "estimated" : "constant")
       << '\n';
  }
}

void write_table1_text(std::ostream& os, const std::vector<Table1Row>& rows) {
  os << std::left << std::setw(4) << "n" << std::setw(10) << "lattice" << std::right << std::setw(10) << "G"
     << std::setw(11) << "+/-" << std::setw(14) << "V/(2l)^n" << std::setw(12) << "MSE/MSEsq" << std::setw(11)
     << "reduction" << "  source\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(4) << r.n << std::setw(10) << r.lattice << std::right << std::fixed
       << std::setprecision(4) << std::setw(10) << r.G << std::setw(11) << std::setprecision(6) << r.G_std_err
       << std::setw(14) << std::setprecision(r.volume_ratio < 1e-3 ? 10 : 3) << r.volume_ratio << std::setw(12)
       << std::setprecision(3) << r.mse_ratio << std::setw(10) << std::setprecision(1)
       << 100.0 * (1.0 - r.mse_ratio) << '%' << "  " << (r.estimated ? "estimated" : "constant, not estimated")
       << '\n';
    os.unsetf(std::ios::fixed);
  }
}

}  // namespace latmod
