// Command line front end for the experiment harness.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "glrl/analysis.hpp"
#include "glrl/baselines.hpp"
#include "glrl/counterexamples.hpp"
#include "glrl/csv.hpp"
#include "glrl/experiment.hpp"

using namespace glrl;

namespace {

std::filesystem::path output_root() {
  const char* env = std::getenv("GLRL_OUTPUT_ROOT");
  return env ? std::filesystem::path(env) : std::filesystem::path();
}

std::filesystem::path out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir = cfg.output;
  const auto root = output_root();
  if (dir.is_relative() && !root.empty()) dir = root / dir;
  std::filesystem::create_directories(dir);
  return dir;
}

/// --config FILE plus one --<key> option per config key. Flags override the
/// file regardless of their position on the command line.
struct ConfigOptions {
  std::string file;
  std::vector<std::pair<std::string, std::string>> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key = value config file")->check(CLI::ExistingFile);
    values.reserve(config_keys().size());
    for (const auto& key : config_keys()) {
      values.emplace_back(key, "");
      app->add_option("--" + key, values.back().second, "override config key " + key);
    }
  }
};

std::vector<double> parse_list(const std::string& text) {
  ExperimentConfig scratch;
  scratch.set("linear_q", text);
  return scratch.linear_q;
}

int run_and_report(const ExperimentConfig& cfg) {
  const RunResult r = run(cfg, output_root());
  std::cout << "wrote " << r.dir.string() << " (" << r.trajectory.size() << " rows)\n";
  if (!r.summary.empty()) {
    const auto& last = r.summary.back();
    std::cout << "loss " << last.at("loss") << "  nuclear " << last.at("nuclear_norm")
              << "  termination " << last.at("termination") << '\n';
  }
  return r.exit_code;
}

int cmd_gen(const ExperimentConfig& cfg) {
  const Instance inst = build_instance(cfg);
  const auto dir = out_dir(cfg);
  if (inst.truth) {
    Trajectory t;
    t.times.push_back(0.0);
    t.states.push_back(inst.truth->mat());
    write_states_csv(dir / "truth.csv", t);
  }
  CsvTable ms({"i", "j", "y"});
  for (const auto& m : inst.loss.measurements()) {
    Eigen::Index i = 0, j = 0;
    m.X.mat().cwiseAbs().maxCoeff(&i, &j);
    ms.add_row({std::to_string(std::min(i, j)), std::to_string(std::max(i, j)), fmt_double(m.y)});
  }
  ms.write(dir / "measurements.csv");
  std::ofstream(dir / "config.resolved") << dump_config(cfg);
  std::cout << "wrote " << dir.string() << " (" << inst.loss.measurements().size()
            << " measurements)\n";
  return kExitOk;
}

int cmd_counterexample(double R, const std::vector<double>& scales, const ExperimentConfig& cfg,
                       bool with_nuclear) {
  const Counterexample4x4 ce = build_4x4(R);
  std::cout << "nuclear(M_rank) " << fmt_double(nuclear_norm(ce.M_rank)) << '\n'
            << "nuclear(M_norm) " << fmt_double(nuclear_norm(ce.M_norm)) << '\n';
  const RefutationReport rep =
      verify_gf_refutes_conjecture(ce, scales, cfg.integrator, cfg.horizon);
  CsvTable t({"scale", "dist_to_rank", "dist_to_norm", "nuclear", "time", "steps", "termination"});
  for (const auto& r : rep.rows)
    t.add_row({fmt_double(r.scale), fmt_double(r.dist_to_rank), fmt_double(r.dist_to_norm),
               fmt_double(r.nuclear), fmt_double(r.final_time), std::to_string(r.steps),
               std::string(to_string(r.termination))});
  if (with_nuclear) {
    const NuclearMinResult nm = nuclear_min(ce.loss, default_lambda_path(ce.loss));
    t.add_row({"nuclear_min", fmt_double((nm.W - ce.M_rank).frobenius()),
               fmt_double((nm.W - ce.M_norm).frobenius()), fmt_double(nm.nuclear), "",
               std::to_string(nm.total_steps), "ok"});
  }
  const auto dir = out_dir(cfg);
  t.write(dir / "refutation.csv");
  std::cout << t.str() << "flow prefers the low-rank completion: " << (rep.pass ? "yes" : "no")
            << '\n';
  return kExitOk;
}

int cmd_deep_escape(double alpha, std::uint64_t seed, const std::vector<double>& noise,
                    int seeds, const ExperimentConfig& cfg) {
  Rng rng = make_stream(seed, "instance");
  const DeepEscapeInstance inst = build_deep_escape(alpha, rng);
  std::vector<std::uint64_t> ss;
  for (int k = 0; k < seeds; ++k) ss.push_back(make_stream(seed, "noise" + std::to_string(k))());
  const DeepEscapeReport rep = deep_escape_demo(inst, noise, ss, cfg.integrator, cfg.horizon);
  std::cout << "closed-form blow-up times:";
  for (Eigen::Index i = 0; i < rep.blowup_times.size(); ++i)
    std::cout << ' ' << fmt_double(rep.blowup_times(i));
  std::cout << "\nfirst index " << rep.first_index + 1 << '\n';
  CsvTable t({"noise", "seed", "alignment", "misalignment", "growth", "termination"});
  for (const auto& r : rep.runs)
    t.add_row({fmt_double(r.noise), std::to_string(r.seed), fmt_double(r.final_alignment),
               fmt_double(r.final_misalignment), fmt_double(r.final_growth),
               std::string(to_string(r.termination))});
  t.write(out_dir(cfg) / "deep_escape.csv");
  std::cout << t.str();
  return kExitOk;
}

int cmd_distance(const std::string& traj, const std::string& ref, const std::string& out) {
  const Trajectory a = read_states_csv(traj);
  const Trajectory b = read_states_csv(ref);
  const auto dist = traj_set_distance(a, b);
  CsvTable t({"time", "distance"});
  for (std::size_t k = 0; k < dist.size(); ++k)
    t.add_row({fmt_double(a.times[k]), fmt_double(dist[k])});
  if (!out.empty()) t.write(out);
  const double mx = dist.empty() ? 0.0 : *std::max_element(dist.begin(), dist.end());
  std::cout << "max distance " << fmt_double(mx) << '\n';
  return kExitOk;
}

int cmd_slope(const std::string& xs, const std::string& ys) {
  const SlopeFit f = scaling_slope(parse_list(xs), parse_list(ys));
  std::cout << "slope " << fmt_double(f.slope) << "  intercept " << fmt_double(f.intercept)
            << "  r2 " << fmt_double(f.r2) << '\n';
  return kExitOk;
}

int cmd_spectrum(const ExperimentConfig& cfg) {
  const Instance inst = build_instance(cfg);
  GlrlConfig g;
  g.epsilon = cfg.glrl_epsilon;
  g.inner = cfg.integrator;
  g.max_rank = cfg.max_rank;
  g.exit_tol = cfg.exit_tol;
  const GlrlReport rep = glrl_run(inst.loss, g);
  CsvTable t({"phase", "type", "predicted", "numeric_re", "numeric_im", "residual"});
  auto row = [&](int phase, int type, double pred, std::complex<double> num, double res) {
    t.add_row({std::to_string(phase), std::to_string(type), fmt_double(pred),
               fmt_double(num.real()), fmt_double(num.imag()), fmt_double(res)});
  };
  for (const auto& ph : rep.phases) {
    const ClassifiedSpectrum s =
        critical_point_spectrum(inst.loss, SymMat(ph.critical_point), ph.rank, 1e-4, 1e-6);
    for (const auto& e : s.symmetric)
      row(ph.rank, static_cast<int>(e.type), e.predicted, e.numeric, e.residual);
    std::cout << "phase " << ph.rank << ": " << s.type1.size() << " escape, " << s.type2.size()
              << " factor-Hessian, " << s.antisymmetric_zero_count
              << " antisymmetric zeros, max residual " << fmt_double(s.max_residual) << '\n';
  }
  t.write(out_dir(cfg) / "spectrum.csv");
  return kExitOk;
}

int cmd_batch(const std::vector<std::string>& files, int jobs) {
  std::atomic<std::size_t> next{0};
  std::atomic<int> worst{0};
  std::mutex io;
  auto worker = [&] {
    for (std::size_t k; (k = next++) < files.size();) {
      int code = kExitOk;
      std::string msg;
      try {
        code = run(load_config(files[k]), output_root()).exit_code;
      } catch (const Error& e) {
        code = e.code() == ErrorCode::ConfigError ? kExitConfig : 1;
        msg = e.what();
      } catch (const std::exception& e) {
        code = 1;
        msg = e.what();
      }
      int cur = worst.load();
      while (code > cur && !worst.compare_exchange_weak(cur, code)) {
      }
      std::lock_guard lock(io);
      std::cout << files[k] << ": exit " << code << (msg.empty() ? "" : " (" + msg + ")") << '\n';
    }
  };
  std::vector<std::thread> pool;
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(files.size())));
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return worst.load();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Greedy low-rank learning experiments"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    ConfigOptions opts;
  };
  std::vector<std::unique_ptr<Sub>> subs;
  auto add = [&](const std::string& name, const std::string& help) {
    subs.push_back(std::make_unique<Sub>());
    subs.back()->app = app.add_subcommand(name, help);
    subs.back()->opts.attach(subs.back()->app);
    return subs.back().get();
  };

  Sub* gen = add("gen", "generate ground truth and measurements");
  Sub* run_cfg = add("run", "run the algorithm named in the config");
  Sub* gd = add("run-gd", "gradient descent on the factored objective");
  Sub* glrl_sub = add("run-glrl", "greedy low-rank learning at depth 2");
  Sub* deep = add("run-deep-glrl", "greedy low-rank learning at depth >= 3");
  Sub* base = add("run-baseline", "rank-one matrix pursuit or nuclear norm minimization");
  std::string method = "r1mp";
  base->app->add_option("--method", method)->check(CLI::IsMember({"r1mp", "nuclear_min"}));
  Sub* kd = add("kernel-depth", "end-to-end kernel dynamics at depth L (inf allowed)");

  Sub* ce = add("counterexample-4x4", "gradient flow on the 4x4 completion counterexample");
  double ce_R = 100.0;
  std::string ce_scales = "1e-2,1e-4,1e-6";
  bool ce_nuclear = false;
  ce->app->add_option("--R-value", ce_R, "counterexample parameter R");
  ce->app->add_option("--scales", ce_scales, "comma separated init scales");
  ce->app->add_flag("--nuclear", ce_nuclear, "also run the nuclear norm baseline");

  Sub* de = add("deep-escape", "escape direction counterexample for depth 4");
  double de_alpha = 1e-8;
  std::string de_noise = "1e-3,1e-5";
  int de_seeds = 5;
  de->app->add_option("--alpha", de_alpha);
  de->app->add_option("--noise", de_noise, "comma separated noise levels");
  de->app->add_option("--seeds", de_seeds);

  CLI::App* analyze = app.add_subcommand("analyze", "post-process outputs");
  analyze->require_subcommand(1);
  CLI::App* an_dist = analyze->add_subcommand("distance", "trajectory-to-set distance");
  std::string traj_file, ref_file, dist_out;
  an_dist->add_option("--traj", traj_file)->required()->check(CLI::ExistingFile);
  an_dist->add_option("--ref", ref_file)->required()->check(CLI::ExistingFile);
  an_dist->add_option("--out", dist_out);
  CLI::App* an_slope = analyze->add_subcommand("slope", "log-log slope of y against x");
  std::string xs, ys;
  an_slope->add_option("--x", xs)->required();
  an_slope->add_option("--y", ys)->required();
  subs.push_back(std::make_unique<Sub>());
  Sub* spec = subs.back().get();
  spec->app = analyze->add_subcommand("spectrum", "classify Jacobian spectra at GLRL critical points");
  spec->opts.attach(spec->app);

  CLI::App* batch = app.add_subcommand("batch", "run several config files concurrently");
  std::vector<std::string> batch_files;
  int jobs = 1;
  batch->add_option("configs", batch_files)->required()->check(CLI::ExistingFile);
  batch->add_option("--jobs", jobs)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    auto resolve = [](Sub* s, std::optional<Algorithm> algo = std::nullopt) {
      ExperimentConfig cfg = s->opts.file.empty() ? ExperimentConfig{} : load_config(s->opts.file);
      if (algo) cfg.algorithm = *algo;
      for (const auto& [key, value] : s->opts.values)
        if (s->app->count("--" + key) > 0) cfg.set(key, value);
      cfg.validate();
      return cfg;
    };
    if (*gen->app) return cmd_gen(resolve(gen));
    if (*run_cfg->app) return run_and_report(resolve(run_cfg));
    if (*gd->app) return run_and_report(resolve(gd, Algorithm::GD));
    if (*glrl_sub->app) return run_and_report(resolve(glrl_sub, Algorithm::GLRL));
    if (*deep->app) {
      ExperimentConfig cfg = resolve(deep, Algorithm::DeepGLRL);
      return run_and_report(cfg);
    }
    if (*base->app)
      return run_and_report(
          resolve(base, method == "r1mp" ? Algorithm::R1MP : Algorithm::NuclearMin));
    if (*kd->app) return run_and_report(resolve(kd, Algorithm::KernelDepth));
    if (*ce->app) return cmd_counterexample(ce_R, parse_list(ce_scales), resolve(ce), ce_nuclear);
    if (*de->app) return cmd_deep_escape(de_alpha, resolve(de).seed, parse_list(de_noise),
                                         de_seeds, resolve(de));
    if (*an_dist) return cmd_distance(traj_file, ref_file, dist_out);
    if (*an_slope) return cmd_slope(xs, ys);
    if (*spec->app) return cmd_spectrum(resolve(spec, Algorithm::GLRL));
    if (*batch) return cmd_batch(batch_files, jobs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::ConfigError) return kExitConfig;
    if (e.code() == ErrorCode::Diverged || e.code() == ErrorCode::BlowUp) return kExitDiverged;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
