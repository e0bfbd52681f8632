#include "latmod/experiment.hpp"

#include "latmod/errors.hpp"
#include "latmod/rng.hpp"
#include "latmod/voronoi_stats.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace latmod {

namespace {

using json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kSignalTag = 0x51;
constexpr std::uint64_t kChannelTag = 0xC4;
constexpr std::uint64_t kCellTag = 0xCE;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t value_code(double v) {
  if (std::isinf(v)) return 0xFFFFFFFFULL;
  return static_cast<std::uint64_t>(std::llround(v * 1000.0));
}

std::string fmt(double v, int precision = 6) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

ScaledLattice lattice_for(LatticeKind kind, int n, double lambda) {
  if (kind == LatticeKind::A2) return ScaledLattice::make(kind, 2, lambda);
  if (kind == LatticeKind::E8) return ScaledLattice::make(kind, 8, lambda);
  return ScaledLattice::make(kind, n, lambda);
}

ChannelSpec channel_for(const Architecture& arch, double value, NoiseLaw law) {
  switch (arch.quantizer) {
    case QuantizerKind::None: return ChannelSpec::awgn(value, law);
    case QuantizerKind::Scalar: return ChannelSpec::scalar_q(value);
    case QuantizerKind::Lattice: return ChannelSpec::lattice_q(value);
  }
  return ChannelSpec::none();
}

bool leading_fold_free(const Samples& f, const ScaledLattice& lattice, int count) {
  const auto n = static_cast<std::size_t>(f.cols());
  Vector q(f.cols());
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(count, f.rows()); ++k) {
    lattice.nearest_point(std::span<const double>(f.row(k).data(), n), std::span<double>(q.data(), n));
    if (q.cwiseAbs().maxCoeff() > 0.0) return false;
  }
  return true;
}

// Draws the unfolded record for (of, trial); shared by every architecture.
Samples draw_signal(const ExperimentConfig& cfg, double of, int trial) {
  SignalConfig sc = cfg.signal;
  sc.of = of;
  std::vector<ScaledLattice> lats;
  if (cfg.quiet_start > 0)
    for (const auto& a : cfg.architectures) {
      auto l = lattice_for(a.lattice, sc.n_channels, cfg.lambda);
      if (l.dim() == sc.n_channels) lats.push_back(std::move(l));
    }
  for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
    sc.seed = derive_seed(cfg.master_seed, {kSignalTag, value_code(of), static_cast<std::uint64_t>(trial), attempt});
    auto s = normalize_dr(sample_signal(generate_multisine(sc), sc), cfg.lambda, sc.dr_factor);
    bool ok = true;
    for (const auto& l : lats) ok = ok && leading_fold_free(s.samples, l, cfg.quiet_start);
    if (ok) return std::move(s.samples);
  }
  throw DegenerateSignalError("no signal with a fold-free lead-in after 1000 draws");
}

B2r2Options effective_b2r2(const ExperimentConfig& cfg, const ScaledLattice& lattice) {
  B2r2Options o = cfg.b2r2;
  if (o.magnitude_bound <= 0.0) o.magnitude_bound = cfg.signal.dr_factor * cfg.lambda + lattice.d_min();
  return o;
}

TrialData trial_impl(const ExperimentConfig& cfg, const Architecture& arch, Algorithm alg, double of,
                     const ChannelSpec& channel, int trial, const B2r2Solver* solver) {
  const auto lattice = lattice_for(arch.lattice, cfg.signal.n_channels, cfg.lambda);
  if (lattice.dim() != cfg.signal.n_channels)
    throw ConfigError(lattice.name() + " needs " + std::to_string(lattice.dim()) + " channels");
  TrialData d;
  d.f = draw_signal(cfg, of, trial);
  FoldedRecord folded = fold_record(d.f, lattice, &d.p_true);
  const std::uint64_t cseed =
      derive_seed(cfg.master_seed, {kChannelTag, fnv1a(arch.name), value_code(of),
                                    value_code(channel.kind == ChannelKind::Awgn ? channel.snr_db : channel.bits),
                                    static_cast<std::uint64_t>(trial)});
  d.received = apply_channel(folded, channel, lattice, cseed);

  const double fs = of * 2.0 * cfg.signal.omega_max;
  switch (alg) {
    case Algorithm::HOD: d.recovered = hod_recover(d.received.y, lattice, cfg.hod_order); break;
    case Algorithm::LASSO: {
      const auto oob = OobOperator::build(static_cast<int>(d.f.rows()), cfg.signal.omega_max, fs, cfg.b2r2.guard);
      d.recovered = lasso_b2r2_recover(d.received.y, lattice, oob, cfg.lasso);
      break;
    }
    case Algorithm::B2R2: {
      if (solver) {
        d.recovered = solver->recover(d.received.y, lattice);
      } else {
        const auto oob = OobOperator::build(static_cast<int>(d.f.rows()), cfg.signal.omega_max, fs, cfg.b2r2.guard);
        d.recovered = B2r2Solver(oob, effective_b2r2(cfg, lattice)).recover(d.received.y, lattice);
      }
      break;
    }
  }
  d.check = check_recovery(d.recovered.p_hat, d.p_true, d.recovered.f_hat, d.f, lattice);
  return d;
}

double parse_number(const json& j) {
  if (j.is_string()) {
    const auto s = lower(j.get<std::string>());
    if (s == "inf" || s == "infinity") return kInf;
    throw ConfigError("expected a number or \"inf\", got \"" + s + "\"");
  }
  return j.get<double>();
}

json number_json(double v) { return std::isinf(v) ? json("inf") : json(v); }

std::vector<double> parse_list(const json& j) {
  std::vector<double> out;
  for (const auto& e : j) out.push_back(parse_number(e));
  return out;
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::B2R2: return "b2r2";
    case Algorithm::HOD: return "hod";
    case Algorithm::LASSO: return "lasso";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& s) {
  const auto l = lower(s);
  if (l == "b2r2") return Algorithm::B2R2;
  if (l == "hod") return Algorithm::HOD;
  if (l == "lasso" || l == "lasso-b2r2" || l == "lasso_b2r2") return Algorithm::LASSO;
  throw ConfigError("unknown algorithm: " + s);
}

Architecture architecture_from_string(const std::string& name) {
  const auto l = lower(name);
  if (l == "square") return {"Square", LatticeKind::ZN, QuantizerKind::None};
  if (l == "e8") return {"E8", LatticeKind::E8, QuantizerKind::None};
  if (l == "hexagon" || l == "a2") return {"Hexagon", LatticeKind::A2, QuantizerKind::None};
  if (l == "sq+sqq") return {"Sq+SqQ", LatticeKind::ZN, QuantizerKind::Scalar};
  if (l == "e8+sqq") return {"E8+SqQ", LatticeKind::E8, QuantizerKind::Scalar};
  if (l == "e8+e8q") return {"E8+E8Q", LatticeKind::E8, QuantizerKind::Lattice};
  throw ConfigError("unknown architecture: " + name);
}

void ExperimentConfig::validate() const {
  {
    SignalConfig sc = signal;
    for (double of : of_list) {
      sc.of = of;
      latmod::validate(sc);
    }
  }
  if (of_list.empty()) throw ConfigError("of list is empty");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (n_trials < 1) throw ConfigError("n_trials must be at least 1");
  if (hod_order < 1) throw ConfigError("hod order must be at least 1");
  if (quiet_start < 0) throw ConfigError("quiet_start must be non-negative");
  for (double s : snr_db_list)
    if (!(s > 0.0)) throw ConfigError("snr_db must be positive");
  for (double b : bits_list) ChannelSpec::scalar_q(b).validate();
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kConfigSchemaVersion)
    throw ConfigError("config schema_version must be " + std::to_string(kConfigSchemaVersion));

  ExperimentConfig c;
  try {
    if (j.contains("signal")) {
      const auto& s = j["signal"];
      c.signal.n_channels = s.value("n_channels", c.signal.n_channels);
      c.signal.n_components = s.value("n_components", c.signal.n_components);
      c.signal.omega_max = s.value("omega_max", c.signal.omega_max);
      c.signal.duration = s.value("duration", c.signal.duration);
      c.signal.dr_factor = s.value("dr_factor", c.signal.dr_factor);
      c.signal.taper_order = s.value("taper_order", c.signal.taper_order);
      c.signal.snap_to_grid = s.value("snap_to_grid", c.signal.snap_to_grid);
      const auto mode = lower(s.value("mode", std::string("real")));
      if (mode == "real") c.signal.mode = SignalMode::Real;
      else if (mode == "complex") c.signal.mode = SignalMode::Complex;
      else throw ConfigError("signal.mode must be real or complex");
    }
    c.lambda = j.value("lambda", c.lambda);
    if (j.contains("of")) c.of_list = parse_list(j["of"]);
    if (j.contains("snr_db")) c.snr_db_list = parse_list(j["snr_db"]);
    if (j.contains("bits")) c.bits_list = parse_list(j["bits"]);
    if (j.contains("architectures")) {
      c.architectures.clear();
      for (const auto& a : j["architectures"]) c.architectures.push_back(architecture_from_string(a.get<std::string>()));
    }
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j["algorithms"]) c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
    }
    if (j.contains("hod")) c.hod_order = j["hod"].value("order", c.hod_order);
    if (j.contains("b2r2")) {
      const auto& b = j["b2r2"];
      c.b2r2.tol = b.value("tol", c.b2r2.tol);
      c.b2r2.max_iters = b.value("max_iters", c.b2r2.max_iters);
      c.b2r2.guard = b.value("guard", c.b2r2.guard);
      c.b2r2.ridge = b.value("ridge", c.b2r2.ridge);
      c.b2r2.history = b.value("history", c.b2r2.history);
      c.b2r2.magnitude_bound = b.value("magnitude_bound", c.b2r2.magnitude_bound);
      const auto model = lower(b.value("model", std::string("stationary")));
      if (model == "stationary") c.b2r2.model = PredictorModel::Stationary;
      else if (model == "periodic") c.b2r2.model = PredictorModel::Periodic;
      else throw ConfigError("b2r2.model must be stationary or periodic");
    }
    if (j.contains("lasso")) {
      const auto& l = j["lasso"];
      c.lasso.tol = l.value("tol", c.lasso.tol);
      c.lasso.max_iters = l.value("max_iters", c.lasso.max_iters);
      c.lasso.mu = l.value("mu", c.lasso.mu);
    }
    const auto noise = lower(j.value("noise", std::string("gaussian")));
    if (noise == "gaussian") c.noise = NoiseLaw::Gaussian;
    else if (noise == "uniform") c.noise = NoiseLaw::Uniform;
    else throw ConfigError("noise must be gaussian or uniform");
    c.quiet_start = j.value("quiet_start", c.quiet_start);
    c.n_trials = j.value("trials", c.n_trials);
    c.master_seed = j.value("seed", c.master_seed);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["signal"] = {{"n_channels", c.signal.n_channels},
                 {"n_components", c.signal.n_components},
                 {"omega_max", c.signal.omega_max},
                 {"duration", c.signal.duration},
                 {"dr_factor", c.signal.dr_factor},
                 {"taper_order", c.signal.taper_order},
                 {"snap_to_grid", c.signal.snap_to_grid},
                 {"mode", c.signal.mode == SignalMode::Real ? "real" : "complex"}};
  j["lambda"] = c.lambda;
  auto list = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number_json(x));
    return a;
  };
  j["of"] = list(c.of_list);
  j["snr_db"] = list(c.snr_db_list);
  j["bits"] = list(c.bits_list);
  j["architectures"] = json::array();
  for (const auto& a : c.architectures) j["architectures"].push_back(a.name);
  j["algorithms"] = json::array();
  for (auto a : c.algorithms) j["algorithms"].push_back(to_string(a));
  j["hod"] = {{"order", c.hod_order}};
  j["b2r2"] = {{"tol", c.b2r2.tol},
               {"max_iters", c.b2r2.max_iters},
               {"guard", c.b2r2.guard},
               {"ridge", c.b2r2.ridge},
               {"history", c.b2r2.history},
               {"model", c.b2r2.model == PredictorModel::Stationary ? "stationary" : "periodic"},
               {"magnitude_bound", c.b2r2.magnitude_bound}};
  j["lasso"] = {{"tol", c.lasso.tol}, {"max_iters", c.lasso.max_iters}, {"mu", c.lasso.mu}};
  j["noise"] = c.noise == NoiseLaw::Gaussian ? "gaussian" : "uniform";
  j["quiet_start"] = c.quiet_start;
  j["trials"] = c.n_trials;
  j["seed"] = c.master_seed;
  j["workers"] = c.workers;
  return j.dump(2) + "\n";
}

ExperimentConfig table3_config() {
  ExperimentConfig c;
  c.signal.n_channels = 8;
  c.signal.n_components = 14;
  c.signal.omega_max = 10.0;
  c.signal.duration = 2.0;
  c.signal.dr_factor = 10.0;
  c.signal.taper_order = 4;
  c.lambda = 0.1;
  c.of_list = {2, 4, 6, 8};
  c.snr_db_list = {10, 15, 20, 25, 30, 35, kInf};
  c.architectures = {architecture_from_string("Square"), architecture_from_string("E8")};
  return c;
}

ExperimentConfig table4_config() {
  ExperimentConfig c = table3_config();
  c.bits_list = {2, 4, 6, 8, 10, kInf};
  c.architectures = {architecture_from_string("Sq+SqQ"), architecture_from_string("E8+SqQ"),
                     architecture_from_string("E8+E8Q")};
  return c;
}

TrialData run_trial(const ExperimentConfig& cfg, const Architecture& arch, Algorithm alg, double of,
                    const ChannelSpec& channel, int trial) {
  return trial_impl(cfg, arch, alg, of, channel, trial, nullptr);
}

bool ExperimentResult::has_errors() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return !c.error.empty(); });
}

ExperimentResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  for (double of : cfg.of_list)
    for (const auto& arch : cfg.architectures)
      for (auto alg : cfg.algorithms) {
        const auto& values = arch.quantizer == QuantizerKind::None ? cfg.snr_db_list : cfg.bits_list;
        for (double v : values) {
          CellResult cell;
          cell.arch = arch;
          cell.algorithm = alg;
          cell.of = of;
          cell.channel = channel_for(arch, v, cfg.noise);
          cell.n_trials = cfg.n_trials;
          cell.seed = derive_seed(cfg.master_seed, {kCellTag, fnv1a(arch.name), value_code(of), value_code(v),
                                                    static_cast<std::uint64_t>(alg)});
          result.cells.push_back(std::move(cell));
        }
      }

  // One solver per (OF, lattice); coefficients are shared by all trials.
  std::map<std::pair<std::uint64_t, int>, std::shared_ptr<const B2r2Solver>> solvers;
  std::map<std::uint64_t, std::string> solver_errors;
  for (auto& cell : result.cells) {
    if (cell.algorithm != Algorithm::B2R2) continue;
    const auto key = std::make_pair(value_code(cell.of), static_cast<int>(cell.arch.lattice));
    if (solvers.count(key) || solver_errors.count(key.first)) continue;
    try {
      SignalConfig sc = cfg.signal;
      sc.of = cell.of;
      const int K = static_cast<int>(std::ceil(sc.duration * sc.fs() - 1e-9));
      const auto oob = OobOperator::build(K, sc.omega_max, sc.fs(), cfg.b2r2.guard);
      const auto lattice = lattice_for(cell.arch.lattice, sc.n_channels, cfg.lambda);
      solvers[key] = std::make_shared<const B2r2Solver>(oob, effective_b2r2(cfg, lattice));
    } catch (const std::exception& e) {
      solver_errors[key.first] = e.what();
    }
  }

  const std::size_t n_cells = result.cells.size();
  const auto n_tasks = static_cast<std::int64_t>(n_cells) * cfg.n_trials;
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_tasks));
  std::vector<double> seconds(static_cast<std::size_t>(n_tasks), 0.0);
  std::vector<std::string> errors(n_cells);
  std::mutex err_mu;

  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t t = next++; t < n_tasks; t = next++) {
      const auto ci = static_cast<std::size_t>(t / cfg.n_trials);
      const int trial = static_cast<int>(t % cfg.n_trials);
      const auto& cell = result.cells[ci];
      {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!errors[ci].empty()) continue;
      }
      const auto start = std::chrono::steady_clock::now();
      try {
        const B2r2Solver* solver = nullptr;
        if (cell.algorithm == Algorithm::B2R2) {
          const auto key = std::make_pair(value_code(cell.of), static_cast<int>(cell.arch.lattice));
          if (auto it = solver_errors.find(key.first); it != solver_errors.end()) throw ConfigError(it->second);
          solver = solvers.at(key).get();
        }
        const auto d = trial_impl(cfg, cell.arch, cell.algorithm, cell.of, cell.channel, trial, solver);
        auto& o = outcomes[static_cast<std::size_t>(t)];
        o.success = d.check.full_success;
        o.sample_errors = d.check.sample_error_count;
        o.residual_mse = d.check.residual_mse;
        o.iterations = d.recovered.iterations;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (errors[ci].empty()) errors[ci] = e.what();
      }
      seconds[static_cast<std::size_t>(t)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  };
  int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(std::min<std::int64_t>(workers, std::max<std::int64_t>(1, n_tasks)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (std::size_t ci = 0; ci < n_cells; ++ci) {
    auto& cell = result.cells[ci];
    cell.error = errors[ci];
    double mse_sum = 0.0;
    for (int trial = 0; trial < cfg.n_trials; ++trial) {
      const auto idx = ci * static_cast<std::size_t>(cfg.n_trials) + static_cast<std::size_t>(trial);
      cell.wall_seconds += seconds[idx];
      if (!cell.error.empty()) continue;
      const auto& o = outcomes[idx];
      if (o.success) {
        ++cell.n_success;
        mse_sum += o.residual_mse;
      }
      if (cfg.keep_trials) cell.trials.push_back(o);
    }
    if (!cell.error.empty()) {
      cell.n_success = 0;
      cell.recovery_rate = 0.0;
      continue;
    }
    cell.recovery_rate = static_cast<double>(cell.n_success) / cfg.n_trials;
    if (cell.n_success > 0) cell.mse = mse_sum / cell.n_success;
  }
  return result;
}

TableFormat table_format_from_string(const std::string& s) {
  const auto l = lower(s);
  if (l == "csv") return TableFormat::Csv;
  if (l == "json") return TableFormat::Json;
  if (l == "text" || l == "txt") return TableFormat::Text;
  throw ConfigError("unknown format: " + s);
}

namespace {

std::string quantizer_name(QuantizerKind q) {
  switch (q) {
    case QuantizerKind::None: return "none";
    case QuantizerKind::Scalar: return "scalar";
    case QuantizerKind::Lattice: return "lattice";
  }
  return "?";
}

struct Row {
  std::string arch, lattice, quant, alg, of, snr, bits, trials, success, rate, mse, mse_db, seed, error;
};

Row make_row(const CellResult& c) {
  Row r;
  r.arch = c.arch.name;
  r.lattice = to_string(c.arch.lattice);
  r.quant = quantizer_name(c.arch.quantizer);
  r.alg = to_string(c.algorithm);
  r.of = fmt(c.of);
  if (c.channel.kind == ChannelKind::Awgn) r.snr = fmt(c.channel.snr_db);
  if (c.channel.kind == ChannelKind::ScalarQ || c.channel.kind == ChannelKind::LatticeQ) r.bits = fmt(c.channel.bits);
  r.trials = std::to_string(c.n_trials);
  r.success = std::to_string(c.n_success);
  r.rate = fmt(c.recovery_rate, 4);
  if (c.mse) {
    r.mse = fmt(*c.mse);
    r.mse_db = *c.mse > 0.0 ? fmt(10.0 * std::log10(*c.mse), 5) : "-inf";
  }
  r.seed = std::to_string(c.seed);
  r.error = c.error;
  return r;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void emit_tables(std::ostream& os, const ExperimentResult& result, TableFormat format) {
  static const char* header[] = {"architecture", "lattice", "quantizer", "algorithm", "of",     "snr_db", "bits",
                                 "n_trials",     "n_success", "recovery_rate", "mse", "mse_db", "seed",   "error"};
  std::vector<Row> rows;
  for (const auto& c : result.cells) rows.push_back(make_row(c));
  auto fields = [](const Row& r) {
    return std::array<const std::string*, 14>{&r.arch, &r.lattice, &r.quant, &r.alg,  &r.of,     &r.snr,  &r.bits,
                                              &r.trials, &r.success, &r.rate, &r.mse, &r.mse_db, &r.seed, &r.error};
  };

  switch (format) {
    case TableFormat::Csv: {
      for (int i = 0; i < 14; ++i) os << (i ? "," : "") << header[i];
      os << '\n';
      for (const auto& r : rows) {
        const auto f = fields(r);
        for (int i = 0; i < 14; ++i) os << (i ? "," : "") << csv_escape(*f[static_cast<std::size_t>(i)]);
        os << '\n';
      }
      break;
    }
    case TableFormat::Json: {
      json arr = json::array();
      for (const auto& c : result.cells) {
        json j;
        j["architecture"] = c.arch.name;
        j["lattice"] = to_string(c.arch.lattice);
        j["quantizer"] = quantizer_name(c.arch.quantizer);
        j["algorithm"] = to_string(c.algorithm);
        j["of"] = c.of;
        j["snr_db"] = c.channel.kind == ChannelKind::Awgn ? number_json(c.channel.snr_db) : json(nullptr);
        j["bits"] = (c.channel.kind == ChannelKind::ScalarQ || c.channel.kind == ChannelKind::LatticeQ)
                        ? number_json(c.channel.bits)
                        : json(nullptr);
        j["n_trials"] = c.n_trials;
        j["n_success"] = c.n_success;
        j["recovery_rate"] = c.recovery_rate;
        j["mse"] = c.mse ? json(*c.mse) : json(nullptr);
        j["mse_db"] = (c.mse && *c.mse > 0.0) ? json(10.0 * std::log10(*c.mse)) : json(nullptr);
        j["seed"] = c.seed;
        j["error"] = c.error.empty() ? json(nullptr) : json(c.error);
        arr.push_back(std::move(j));
      }
      os << json{{"cells", arr}}.dump(2) << '\n';
      break;
    }
    case TableFormat::Text: {
      std::array<std::size_t, 14> width{};
      for (int i = 0; i < 14; ++i) width[static_cast<std::size_t>(i)] = std::string(header[i]).size();
      for (const auto& r : rows) {
        const auto f = fields(r);
        for (std::size_t i = 0; i < 14; ++i) width[i] = std::max(width[i], f[i]->size());
      }
      const std::vector<int> cols{0, 3, 4, 5, 6, 7, 8, 9, 10, 11, 13};
      for (int i : cols) os << std::left << std::setw(static_cast<int>(width[static_cast<std::size_t>(i)]) + 2) << header[i];
      os << '\n';
      for (const auto& r : rows) {
        const auto f = fields(r);
        for (int i : cols)
          os << std::left << std::setw(static_cast<int>(width[static_cast<std::size_t>(i)]) + 2)
             << *f[static_cast<std::size_t>(i)];
        os << '\n';
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// 2D demo

namespace {

std::vector<std::array<double, 2>> cell_polygon(const ScaledLattice& lattice) {
  const double l = lattice.inradius();
  std::vector<std::array<double, 2>> poly;
  if (lattice.kind() == LatticeKind::A2) {
    const double r = 2.0 * l / std::sqrt(3.0);
    for (int k = 0; k <= 6; ++k) {
      const double a = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
      poly.push_back({r * std::cos(a), r * std::sin(a)});
    }
  } else {
    poly = {{l, l}, {-l, l}, {-l, -l}, {l, -l}, {l, l}};
  }
  return poly;
}

bool inside(const Samples& y, const std::vector<Vector>& relevant) {
  for (Eigen::Index k = 0; k < y.rows(); ++k)
    for (const auto& p : relevant)
      if (y.row(k).dot(p.transpose()) > 0.5 * p.squaredNorm() + 1e-9) return false;
  return true;
}

SignalConfig demo_signal(const DemoConfig& cfg) {
  SignalConfig sc;
  sc.mode = SignalMode::Complex;
  sc.n_channels = 2;
  sc.n_components = cfg.n_components;
  sc.omega_max = cfg.omega_max;
  sc.of = cfg.of;
  sc.duration = cfg.duration;
  sc.dr_factor = cfg.dr_factor;
  return sc;
}

}  // namespace

DemoResult run_trajectory_demo(const DemoConfig& cfg) {
  const auto square = ScaledLattice::make(LatticeKind::ZN, 2, cfg.lambda);
  const auto hexagon = ScaledLattice::make(LatticeKind::A2, 2, cfg.lambda);
  SignalConfig sc = demo_signal(cfg);

  SampledSignal sig;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 1000 && !found; ++attempt) {
    sc.seed = derive_seed(cfg.seed, {kSignalTag, attempt});
    sig = normalize_dr(sample_signal(generate_multisine(sc), sc), cfg.lambda, cfg.dr_factor);
    found = leading_fold_free(sig.samples, square, cfg.quiet_start) &&
            leading_fold_free(sig.samples, hexagon, cfg.quiet_start);
  }
  if (!found) throw DemoError("no demo signal with a fold-free lead-in");

  DemoResult out;
  out.fs = sig.fs;
  const auto K = static_cast<int>(sig.samples.rows());
  auto run = [&](const ScaledLattice& lattice, const std::string& name) {
    DemoRun r;
    r.name = name;
    r.original = sig.samples;
    Samples p_true;
    r.folded = fold_record(sig.samples, lattice, &p_true).y;
    RecoveryResult rec;
    if (cfg.algorithm == Algorithm::HOD) {
      rec = hod_recover(r.folded, lattice, cfg.hod_order);
    } else {
      const auto oob = OobOperator::build(K, cfg.omega_max, sig.fs, cfg.b2r2.guard);
      if (cfg.algorithm == Algorithm::LASSO) rec = lasso_b2r2_recover(r.folded, lattice, oob);
      else rec = b2r2_recover(r.folded, lattice, oob, cfg.b2r2);
    }
    r.recovered = rec.f_hat;
    r.peak = sig.samples.cwiseAbs().maxCoeff();
    r.max_error = (r.recovered - r.original).cwiseAbs().maxCoeff();
    r.folded_power = r.folded.squaredNorm() / static_cast<double>(r.folded.size());
    r.inside_cell = inside(r.folded, relevant_vectors(lattice));
    r.cell = cell_polygon(lattice);
    if (!(r.max_error <= 1e-8 * r.peak)) {
      const auto chk = check_recovery(rec.p_hat, p_true, rec.f_hat, sig.samples, lattice);
      std::ostringstream os;
      os << name << " recovery failed: max error " << r.max_error << " (peak " << r.peak << "), "
         << chk.sample_error_count << " of " << K << " offsets wrong";
      throw DemoError(os.str());
    }
    return r;
  };
  out.square = run(square, "square");
  out.hexagon = run(hexagon, "hexagon");
  out.power_ratio = out.hexagon.folded_power / out.square.folded_power;
  return out;
}

double demo_power_ratio(const DemoConfig& cfg, int n_signals) {
  if (n_signals < 1) throw DomainError("n_signals must be positive");
  const auto square = ScaledLattice::make(LatticeKind::ZN, 2, cfg.lambda);
  const auto hexagon = ScaledLattice::make(LatticeKind::A2, 2, cfg.lambda);
  SignalConfig sc = demo_signal(cfg);
  double ps = 0.0, ph = 0.0;
  for (int i = 0; i < n_signals; ++i) {
    sc.seed = derive_seed(cfg.seed, {0xE5, static_cast<std::uint64_t>(i)});
    const auto sig = normalize_dr(sample_signal(generate_multisine(sc), sc), cfg.lambda, cfg.dr_factor);
    ps += fold_record(sig.samples, square).y.squaredNorm();
    ph += fold_record(sig.samples, hexagon).y.squaredNorm();
  }
  return ph / ps;
}

void emit_trajectory_demo(const DemoResult& demo, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& file) {
    std::ofstream os(dir / file);
    if (!os) throw std::runtime_error("cannot write " + (dir / file).string());
    os << std::setprecision(17);
    return os;
  };
  for (const DemoRun* r : {&demo.square, &demo.hexagon}) {
    auto os = open("demo_" + r->name + ".csv");
    os << "t,original_x,original_y,folded_x,folded_y,recovered_x,recovered_y\n";
    for (Eigen::Index k = 0; k < r->original.rows(); ++k) {
      os << static_cast<double>(k) / demo.fs;
      for (const Samples* m : {&r->original, &r->folded, &r->recovered}) os << ',' << (*m)(k, 0) << ',' << (*m)(k, 1);
      os << '\n';
    }
    auto cs = open("cell_" + r->name + ".csv");
    cs << "x,y\n";
    for (const auto& v : r->cell) cs << v[0] << ',' << v[1] << '\n';
  }
}

// ---------------------------------------------------------------------------
// quantizer bench

namespace {

// Known normalized second moments of the implemented lattices.
double known_G(const ScaledLattice& l) {
  switch (l.kind()) {
    case LatticeKind::ZN: return 1.0 / 12.0;
    case LatticeKind::A2: return 5.0 / (36.0 * std::sqrt(3.0));
    case LatticeKind::DN:
      if (l.dim() == 4) return 0.0766032;
      break;
    case LatticeKind::E8: return 929.0 / 12960.0;
  }
  throw CapabilityError("no reference second moment for " + l.name());
}

struct Mean {
  double sum = 0.0, sum_sq = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double se() const {
    const double m = mean();
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n));
  }
};

}  // namespace

std::vector<QuantizeBenchRow> quantize_bench(std::int64_t n_samples, std::uint64_t seed, const std::vector<int>& bits) {
  if (n_samples < 1) throw DomainError("n_samples must be positive");
  std::vector<QuantizeBenchRow> rows;
  const std::vector<ScaledLattice> lattices{ScaledLattice::make(LatticeKind::ZN, 2, 1.0),
                                            ScaledLattice::make(LatticeKind::A2, 2, 1.0),
                                            ScaledLattice::make(LatticeKind::DN, 4, 1.0),
                                            ScaledLattice::make(LatticeKind::E8, 8, 1.0)};
  std::uint64_t idx = 0;
  for (const auto& lat : lattices) {
    const double base = predicted_mse(lat, known_G(lat));
    for (int b : bits) {
      Rng rng(derive_seed(seed, {0xB0, idx++, static_cast<std::uint64_t>(b)}));
      FoldedRecord rec;
      rec.y.resize(n_samples, lat.dim());
      for (std::int64_t k = 0; k < n_samples; ++k) rec.y.row(k) = sample_uniform_cell(lat, rng).transpose();
      const auto q = lattice_quantize(rec, lat, b);
      Mean m;
      for (std::int64_t k = 0; k < n_samples; ++k) m.add((q.y.row(k) - rec.y.row(k)).squaredNorm());
      rows.push_back({lat.name(), "matched", b, m.mean(), m.se(), base * std::pow(4.0, -b)});
    }
  }
  const std::vector<ScaledLattice> folds{ScaledLattice::make(LatticeKind::ZN, 8, 1.0),
                                         ScaledLattice::make(LatticeKind::E8, 8, 1.0)};
  for (const auto& lat : folds) {
    for (int b : bits) {
      Rng rng(derive_seed(seed, {0x5C, idx++, static_cast<std::uint64_t>(b)}));
      FoldedRecord rec;
      rec.y.resize(n_samples, lat.dim());
      for (std::int64_t k = 0; k < n_samples; ++k) rec.y.row(k) = sample_uniform_cell(lat, rng).transpose();
      const auto q = scalar_quantize(rec, b, lat.inradius(), lat.coordinate_extent());
      Mean m;
      for (std::int64_t k = 0; k < n_samples; ++k) m.add((q.y.row(k) - rec.y.row(k)).squaredNorm());
      const double delta = 2.0 * lat.inradius() / std::ldexp(1.0, b);
      rows.push_back({lat.name(), "scalar", b, m.mean(), m.se(), lat.dim() * delta * delta / 12.0});
    }
  }
  return rows;
}

void write_quantize_bench(std::ostream& os, const std::vector<QuantizeBenchRow>& rows, TableFormat format) {
  switch (format) {
    case TableFormat::Csv:
      os << "lattice,quantizer,bits,mse,std_err,predicted,rel_error\n" << std::setprecision(6);
      for (const auto& r : rows)
        os << r.lattice << ',' << r.quantizer << ',' << r.bits << ',' << r.mse << ',' << r.std_err << ','
           << r.predicted << ',' << (r.mse / r.predicted - 1.0) << '\n';
      break;
    case TableFormat::Json: {
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"lattice", r.lattice},
                       {"quantizer", r.quantizer},
                       {"bits", r.bits},
                       {"mse", r.mse},
                       {"std_err", r.std_err},
                       {"predicted", r.predicted}});
      os << json{{"rows", arr}}.dump(2) << '\n';
      break;
    }
    case TableFormat::Text:
      os << std::left << std::setw(8) << "lattice" << std::setw(10) << "quant" << std::setw(6) << "bits" << std::right
         << std::setw(14) << "mse" << std::setw(12) << "std_err" << std::setw(14) << "predicted" << std::setw(10)
         << "rel_err" << '\n';
      for (const auto& r : rows)
        os << std::left << std::setw(8) << r.lattice << std::setw(10) << r.quantizer << std::setw(6) << r.bits
           << std::right << std::scientific << std::setprecision(4) << std::setw(14) << r.mse << std::setw(12)
           << r.std_err << std::setw(14) << r.predicted << std::fixed << std::setprecision(4) << std::setw(10)
           << (r.mse / r.predicted - 1.0) << '\n'
           << std::defaultfloat;
      break;
  }
}

}  // namespace latmod
