#pragma once

#include "latmod/channel.hpp"
#include "latmod/lattice.hpp"
#include "latmod/recovery.hpp"
#include "latmod/signal.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latmod {

enum class Algorithm { B2R2, HOD, LASSO };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(const std::string& s);

enum class QuantizerKind { None, Scalar, Lattice };

/// Folding lattice plus the distortion stage behind it. With QuantizerKind::None
/// the channel is additive noise at the swept SNR; otherwise the bits grid is
/// swept.
struct Architecture {
  std::string name;
  LatticeKind lattice = LatticeKind::ZN;
  QuantizerKind quantizer = QuantizerKind::None;
};

/// Square, E8, Hexagon, Sq+SqQ, E8+SqQ, E8+E8Q (case-insensitive).
Architecture architecture_from_string(const std::string& name);

struct ExperimentConfig {
  SignalConfig signal;  // `of` and `seed` are overridden per cell and trial
  double lambda = 0.1;
  std::vector<double> of_list{6.0};
  std::vector<double> snr_db_list{std::numeric_limits<double>::infinity()};
  std::vector<double> bits_list{std::numeric_limits<double>::infinity()};
  std::vector<Architecture> architectures;
  std::vector<Algorithm> algorithms{Algorithm::B2R2};
  int hod_order = 2;
  B2r2Options b2r2;
  LassoOptions lasso;
  NoiseLaw noise = NoiseLaw::Gaussian;
  /// Signals are redrawn until this many leading samples are fold-free for
  /// every architecture in the sweep.
  int quiet_start = 0;
  int n_trials = 50;
  std::uint64_t master_seed = 1;
  int workers = 0;
  /// Keep per-trial outcomes in the result.
  bool keep_trials = false;

  /// Throws ConfigError on an invalid configuration.
  void validate() const;
};

/// Schema version written to and required from config files.
inline constexpr int kConfigSchemaVersion = 1;

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string dump_config(const ExperimentConfig& cfg);

/// Built-in sweep shapes.
ExperimentConfig table3_config();
ExperimentConfig table4_config();

struct TrialOutcome {
  bool success = false;
  int sample_errors = 0;
  double residual_mse = 0.0;
  int iterations = 0;
};

struct CellResult {
  Architecture arch;
  Algorithm algorithm = Algorithm::B2R2;
  double of = 0.0;
  ChannelSpec channel;
  int n_trials = 0;
  int n_success = 0;
  double recovery_rate = 0.0;
  std::optional<double> mse;  // mean over successful trials
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::string error;
  std::vector<TrialOutcome> trials;
};

struct ExperimentResult {
  std::vector<CellResult> cells;
  bool has_errors() const;
};

ExperimentResult run_sweep(const ExperimentConfig& cfg);

enum class TableFormat { Csv, Json, Text };
TableFormat table_format_from_string(const std::string& s);

/// Byte-stable for a fixed configuration; wall time is never written.
void emit_tables(std::ostream& os, const ExperimentResult& result, TableFormat format);

/// One trial through the full chain, exposed for tests and demos.
struct TrialData {
  Samples f;       // unfolded samples
  Samples p_true;  // fold offsets
  FoldedRecord received;
  RecoveryResult recovered;
  RecoveryCheck check;
};

TrialData run_trial(const ExperimentConfig& cfg, const Architecture& arch, Algorithm alg, double of,
                    const ChannelSpec& channel, int trial);

// ---------------------------------------------------------------------------

class DemoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DemoConfig {
  int n_components = 14;
  double omega_max = 10.0;
  double of = 6.0;
  double dr_factor = 3.0;
  double lambda = 1.0;
  double duration = 1.0;
  std::uint64_t seed = 1;
  Algorithm algorithm = Algorithm::B2R2;
  int hod_order = 2;
  B2r2Options b2r2;
  int quiet_start = 3;
};

struct DemoRun {
  std::string name;
  Samples original;
  Samples folded;
  Samples recovered;
  double max_error = 0.0;
  double peak = 0.0;
  double folded_power = 0.0;
  bool inside_cell = false;
  std::vector<std::array<double, 2>> cell;  // closed polygon
};

struct DemoResult {
  DemoRun square;
  DemoRun hexagon;
  double power_ratio = 0.0;  // hexagon / square folded power
  double fs = 0.0;
};

/// Runs the 2D square and hexagon demos on one complex multisine. Throws
/// DemoError when either recovery misses by more than 1e-8 of the peak.
DemoResult run_trajectory_demo(const DemoConfig& cfg);

/// Ratio of hexagon to square folded power, summed over `n_signals` demo
/// signals drawn without any lead-in selection.
double demo_power_ratio(const DemoConfig& cfg, int n_signals);

/// Writes demo_square.csv, demo_hexagon.csv, cell_square.csv and
/// cell_hexagon.csv into `dir`.
void emit_trajectory_demo(const DemoResult& demo, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------

struct QuantizeBenchRow {
  std::string lattice;
  std::string quantizer;  // "matched" or "scalar"
  int bits = 0;
  double mse = 0.0;        // per vector
  double std_err = 0.0;
  double predicted = 0.0;  // per vector
};

/// Matched lattice quantizers against n G V^(2/n) 4^-B, and the scalar
/// quantizer on square- and E8-folded data.
std::vector<QuantizeBenchRow> quantize_bench(std::int64_t n_samples, std::uint64_t seed,
                                             const std::vector<int>& bits = {2, 4, 6});
void write_quantize_bench(std::ostream& os, const std::vector<QuantizeBenchRow>& rows, TableFormat format);

}  // namespace latmod
