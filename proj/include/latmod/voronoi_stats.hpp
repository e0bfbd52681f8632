#pragma once

#include "latmod/lattice.hpp"
#include "latmod/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace latmod {

struct SecondMomentEstimate {
  double G = 0.0;             // dimensionless second moment
  double mse_per_cell = 0.0;  // n * G * V^(2/n) = E|r|^2 for r uniform on the cell
  std::int64_t n_samples = 0;
  double std_err = 0.0;       // standard error of G
};

/// Draws a point uniformly from the Voronoi cell by folding a uniform point
/// of the fundamental parallelepiped.
Vector sample_uniform_cell(const ScaledLattice& lattice, Rng& rng);

/// Monte Carlo estimate of G. Samples are split into fixed chunks with
/// per-chunk substreams, so the result does not depend on `workers`.
/// `workers` <= 0 picks the hardware concurrency.
SecondMomentEstimate estimate_second_moment(const ScaledLattice& lattice, std::int64_t n_samples,
                                            std::uint64_t seed, int workers = 0);

/// n * G * V^(2/n): mean squared quantization error per sample vector.
double predicted_mse(const ScaledLattice& lattice, double G);

double mse_ratio(const ScaledLattice& l1, const ScaledLattice& l2, double G1, double G2);

struct EquivalentGains {
  double snr_db = 0.0;
  double of_factor = 1.0;
  double bits_saved = 0.0;
};

/// Converts an MSE ratio r in (0, 1] into SNR, oversampling and bit-depth gains.
EquivalentGains equivalent_gains(double ratio);

struct Table1Row {
  int n = 0;
  std::string lattice;
  double G = 0.0;
  double G_std_err = 0.0;
  double volume_ratio = 0.0;  // V / (2 lambda)^n
  double mse_ratio = 0.0;     // vs hypercube at equal inradius
  bool estimated = true;      // false for literature constants
};

/// Hypercube normalized second moment, exact for every n.
inline constexpr double kHypercubeG = 1.0 / 12.0;

std::vector<Table1Row> table1_report(std::int64_t n_samples, std::uint64_t seed, int workers = 0);

void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows);
void write_table1_text(std::ostream& os, const std::vector<Table1Row>& rows);

}  // namespace latmod
