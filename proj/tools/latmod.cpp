// latmod: lattice modulo sampling experiments.

#include "latmod/errors.hpp"
#include "latmod/experiment.hpp"
#include "latmod/voronoi_stats.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

namespace {

using namespace latmod;

struct Output {
  std::unique_ptr<std::ofstream> file;
  std::ostream& stream() { return file ? static_cast<std::ostream&>(*file) : std::cout; }
};

Output open_output(const std::string& path) {
  Output o;
  if (!path.empty() && path != "-") {
    o.file = std::make_unique<std::ofstream>(path);
    if (!*o.file) throw std::runtime_error("cannot write " + path);
  }
  return o;
}

struct RecoveryFlags {
  std::optional<double> ridge, guard, tol, mu;
  std::optional<int> history, max_iters, hod_order;

  void add(CLI::App* app) {
    app->add_option("--ridge", ridge, "B2R2 predictor ridge");
    app->add_option("--history", history, "B2R2 predictor length (0 = whole record)");
    app->add_option("--guard", guard, "relative guard band above omega_max");
    app->add_option("--tol", tol, "relative objective decrease for convergence");
    app->add_option("--max-iters", max_iters, "iteration cap for gradient methods");
    app->add_option("--mu", mu, "LASSO weight (negative = 0.1 max|Fy|)");
    app->add_option("--hod-order", hod_order, "HOD difference order");
  }
  void apply(B2r2Options& b, LassoOptions& l, int& hod) const {
    if (ridge) b.ridge = *ridge;
    if (history) b.history = *history;
    if (guard) b.guard = *guard;
    if (tol) b.tol = l.tol = *tol;
    if (max_iters) b.max_iters = l.max_iters = *max_iters;
    if (mu) l.mu = *mu;
    if (hod_order) hod = *hod_order;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lattice modulo folding, unfolding and Monte Carlo tables"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;
  std::string format = "text";

  auto* t1 = app.add_subcommand("table1", "second moments and MSE ratios of the implemented lattices");
  std::int64_t t1_samples = 1000000;
  int t1_workers = 0;
  t1->add_option("--samples", t1_samples, "Monte Carlo samples per lattice")->check(CLI::PositiveNumber);
  t1->add_option("--workers", t1_workers, "worker threads (0 = all cores)");
  t1->add_option("--seed", seed, "master seed");
  t1->add_option("--out", out, "output file (default stdout)");
  t1->add_option("--format", format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

  auto* sw = app.add_subcommand("sweep", "recovery-rate sweep");
  std::string sw_config, sw_preset = "table3";
  std::optional<int> sw_trials, sw_workers;
  std::optional<std::uint64_t> sw_seed;
  std::vector<std::string> sw_algorithms;
  bool sw_strict = false, sw_dump = false;
  RecoveryFlags sw_flags;
  sw->add_option("--config", sw_config, "JSON config file")->check(CLI::ExistingFile);
  sw->add_option("--preset", sw_preset, "built-in grid when no config is given")
      ->check(CLI::IsMember({"table3", "table4"}));
  sw->add_option("--trials", sw_trials, "trials per cell")->check(CLI::Range(1, 100000));
  sw->add_option("--seed", sw_seed, "master seed");
  sw->add_option("--workers", sw_workers, "worker threads (0 = all cores)");
  sw->add_option("--algorithm", sw_algorithms, "b2r2, hod or lasso (repeatable)");
  sw->add_option("--out", out, "output file (default stdout)");
  sw->add_option("--format", format, "csv, json or text")->check(CLI::IsMember({"csv", "json", "text"}));
  sw->add_flag("--strict", sw_strict, "exit nonzero when any cell reports an error");
  sw->add_flag("--dump-config", sw_dump, "print the effective config and exit");
  sw_flags.add(sw);

  auto* demo = app.add_subcommand("demo2d", "2D square and hexagon trajectory demo");
  DemoConfig dcfg;
  std::string demo_dir = "demo2d";
  std::string demo_alg = "b2r2";
  RecoveryFlags demo_flags;
  demo->add_option("--out", demo_dir, "output directory");
  demo->add_option("--seed", dcfg.seed, "signal seed");
  demo->add_option("--of", dcfg.of, "oversampling factor");
  demo->add_option("--gamma", dcfg.dr_factor, "peak amplitude over lambda");
  demo->add_option("--algorithm", demo_alg, "b2r2, hod or lasso");
  demo_flags.add(demo);

  auto* qb = app.add_subcommand("quantize-bench", "matched and scalar quantizer MSE against prediction");
  std::int64_t qb_samples = 200000;
  std::vector<int> qb_bits{2, 4, 6};
  qb->add_option("--samples", qb_samples, "samples per row")->check(CLI::PositiveNumber);
  qb->add_option("--bits", qb_bits, "bit depths");
  qb->add_option("--seed", seed, "master seed");
  qb->add_option("--out", out, "output file (default stdout)");
  qb->add_option("--format", format, "csv, json or text")->check(CLI::IsMember({"csv", "json", "text"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*t1) {
      const auto rows = table1_report(t1_samples, seed, t1_workers);
      auto o = open_output(out);
      if (format == "csv") write_table1_csv(o.stream(), rows);
      else write_table1_text(o.stream(), rows);
      return 0;
    }

    if (*sw) {
      ExperimentConfig cfg = !sw_config.empty() ? load_config(sw_config)
                                                : (sw_preset == "table4" ? table4_config() : table3_config());
      if (sw_trials) cfg.n_trials = *sw_trials;
      if (sw_seed) cfg.master_seed = *sw_seed;
      if (sw_workers) cfg.workers = *sw_workers;
      if (!sw_algorithms.empty()) {
        cfg.algorithms.clear();
        for (const auto& a : sw_algorithms) cfg.algorithms.push_back(algorithm_from_string(a));
      }
      sw_flags.apply(cfg.b2r2, cfg.lasso, cfg.hod_order);
      cfg.validate();
      if (sw_dump) {
        std::cout << dump_config(cfg);
        return 0;
      }
      const auto start = std::chrono::steady_clock::now();
      const auto result = run_sweep(cfg);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      auto o = open_output(out);
      emit_tables(o.stream(), result, table_format_from_string(format));
      std::cerr << result.cells.size() << " cells x " << cfg.n_trials << " trials in " << secs << " s\n";
      for (const auto& c : result.cells)
        if (!c.error.empty()) std::cerr << "error: " << c.arch.name << " OF " << c.of << ": " << c.error << '\n';
      return (sw_strict && result.has_errors()) ? 2 : 0;
    }

    if (*demo) {
      dcfg.algorithm = algorithm_from_string(demo_alg);
      LassoOptions unused;
      demo_flags.apply(dcfg.b2r2, unused, dcfg.hod_order);
      const auto res = run_trajectory_demo(dcfg);
      emit_trajectory_demo(res, demo_dir);
      std::cout << "square:  max error " << res.square.max_error << " (peak " << res.square.peak << "), inside cell "
                << (res.square.inside_cell ? "yes" : "no") << '\n'
                << "hexagon: max error " << res.hexagon.max_error << " (peak " << res.hexagon.peak
                << "), inside cell " << (res.hexagon.inside_cell ? "yes" : "no") << '\n'
                << "folded power hexagon/square: " << res.power_ratio << '\n'
                << "files written to " << demo_dir << '\n';
      return 0;
    }

    if (*qb) {
      const auto rows = quantize_bench(qb_samples, seed, qb_bits);
      auto o = open_output(out);
      write_quantize_bench(o.stream(), rows, table_format_from_string(format));
      return 0;
    }
  } catch (const DemoError& e) {
    std::cerr << "demo failed: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
