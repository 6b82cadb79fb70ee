#include "glrl/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glrl/baselines.hpp"
#include "glrl/csv.hpp"

namespace glrl {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::string_view name) {
  return Rng(splitmix64(splitmix64(seed) ^ fnv1a(name)));
}

SymMat gen_ground_truth(int d, int r, double frob_norm, Rng& rng) {
  require(d >= 1 && r >= 1 && r <= d, ErrorCode::InvalidInput, "need 1 <= r <= d");
  require(frob_norm > 0.0, ErrorCode::InvalidInput, "frob_norm must be positive");
  const Matrix Q = random_orthogonal(d, rng);
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector s(r);
  for (int i = 0; i < r; ++i) s(i) = std::abs(nd(rng));
  s *= frob_norm / s.norm();
  const Matrix Qr = Q.leftCols(r);
  return SymMat(Matrix(Qr * s.asDiagonal() * Qr.transpose()));
}

std::vector<std::pair<int, int>> gen_observed_pairs(int d, double p, Rng& rng) {
  require(p > 0.0 && p <= 1.0, ErrorCode::InvalidInput, "observe probability must lie in (0,1]");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j)
      if (u(rng) < p) pairs.emplace_back(i, j);
  return pairs;
}

std::vector<Measurement> gen_measurements(const SymMat& truth, double p, Rng& rng) {
  std::vector<Measurement> ms;
  for (const auto& [i, j] : gen_observed_pairs(truth.dim(), p, rng))
    ms.push_back(entry_measurement(truth.dim(), i, j, truth(i, j)));
  return ms;
}

double test_loss(const Matrix& W, const SymMat& truth) {
  const double d = truth.dim();
  return (W - truth.mat()).squaredNorm() / (d * d);
}

// ---------------------------------------------------------------------------
// config text

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::ConfigError, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) bad(key, v, "expected a number");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  // accept 1e6-style integers too
  const double x = to_double(key, v);
  if (x != std::floor(x) || std::abs(x) > 9e18) bad(key, v, "expected an integer");
  return static_cast<std::int64_t>(x);
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) bad(key, v, "expected an unsigned integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(key, v, "expected true or false");
}

template <class E>
E to_enum(const std::string& key, const std::string& v,
          std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, val] : table)
    if (v == name) return val;
  std::string names;
  for (const auto& [name, val] : table) names += std::string(names.empty() ? "" : "|") + name;
  bad(key, v, "expected one of " + names);
}

const std::initializer_list<std::pair<const char*, InitShape>> kInit = {
    {"identity", InitShape::Identity}, {"random", InitShape::Random},
    {"rank1", InitShape::Rank1TopEig}};
const std::initializer_list<std::pair<const char*, LossKind>> kLoss = {
    {"completion", LossKind::Completion}, {"full", LossKind::FullObservation},
    {"counterexample", LossKind::Counterexample}, {"linear", LossKind::Linear}};
const std::initializer_list<std::pair<const char*, Algorithm>> kAlgo = {
    {"gd", Algorithm::GD},     {"glrl", Algorithm::GLRL},
    {"deep_glrl", Algorithm::DeepGLRL}, {"r1mp", Algorithm::R1MP},
    {"nuclear_min", Algorithm::NuclearMin}, {"kernel_depth", Algorithm::KernelDepth}};
const std::initializer_list<std::pair<const char*, Scheme>> kScheme = {
    {"euler", Scheme::Euler}, {"rk4", Scheme::RK4}, {"adaptive", Scheme::AdaptiveGD}};

template <class E>
std::string name_of(E v, std::initializer_list<std::pair<const char*, E>> table) {
  for (const auto& [name, val] : table)
    if (val == v) return name;
  return "?";
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "seed",        "dim",          "rank",          "observe_prob",     "truth_norm",
      "loss",        "R",            "linear_q",      "depth",            "init",
      "init_scale",  "scheme",       "step",          "adaptive_alpha",   "adaptive_epsilon",
      "max_steps",   "stop_grad_norm", "record_every", "overflow_guard",  "max_relative_step",
      "diagnostics", "horizon",      "algorithm",     "epsilon",          "max_rank",
      "exit_tol",    "nuclear_stages", "nuclear_steps", "output",         "write_states"};
  return keys;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  IntegratorConfig& ic = integrator;
  if (key == "seed") seed = to_uint(key, v);
  else if (key == "dim") dim = static_cast<int>(to_int(key, v));
  else if (key == "rank") rank = static_cast<int>(to_int(key, v));
  else if (key == "observe_prob") observe_prob = to_double(key, v);
  else if (key == "truth_norm") truth_norm = to_double(key, v);
  else if (key == "loss") loss_kind = to_enum(key, v, kLoss);
  else if (key == "R") R = to_double(key, v);
  else if (key == "linear_q") {
    linear_q.clear();
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) linear_q.push_back(to_double(key, trim(cell)));
  } else if (key == "depth") {
    if (v == "inf") {
      infinite_depth = true;
    } else {
      infinite_depth = false;
      depth = static_cast<int>(to_int(key, v));
    }
  } else if (key == "init") init_shape = to_enum(key, v, kInit);
  else if (key == "init_scale") init_scale = to_double(key, v);
  else if (key == "scheme") {
    ic.scheme = to_enum(key, v, kScheme);
    if (ic.scheme == Scheme::AdaptiveGD && !ic.adaptive) ic.adaptive = AdaptiveParams{};
  } else if (key == "step") ic.step = to_double(key, v);
  else if (key == "adaptive_alpha") {
    if (!ic.adaptive) ic.adaptive = AdaptiveParams{};
    ic.adaptive->alpha = to_double(key, v);
  } else if (key == "adaptive_epsilon") {
    if (!ic.adaptive) ic.adaptive = AdaptiveParams{};
    ic.adaptive->epsilon = to_double(key, v);
  } else if (key == "max_steps") ic.max_steps = to_int(key, v);
  else if (key == "stop_grad_norm") ic.stop_grad_norm = to_double(key, v);
  else if (key == "record_every") ic.record_every = to_int(key, v);
  else if (key == "overflow_guard") ic.overflow_guard = to_double(key, v);
  else if (key == "max_relative_step") ic.max_relative_step = to_double(key, v);
  else if (key == "diagnostics") ic.diagnostics = to_bool(key, v);
  else if (key == "horizon") horizon = v == "inf" ? std::numeric_limits<double>::infinity()
                                                  : to_double(key, v);
  else if (key == "algorithm") algorithm = to_enum(key, v, kAlgo);
  else if (key == "epsilon") glrl_epsilon = to_double(key, v);
  else if (key == "max_rank") max_rank = static_cast<int>(to_int(key, v));
  else if (key == "exit_tol") exit_tol = to_double(key, v);
  else if (key == "nuclear_stages") nuclear_stages = static_cast<int>(to_int(key, v));
  else if (key == "nuclear_steps") nuclear_steps = static_cast<int>(to_int(key, v));
  else if (key == "output") output = v;
  else if (key == "write_states") write_states = to_bool(key, v);
  else throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  const IntegratorConfig& ic = integrator;
  const AdaptiveParams ap = ic.adaptive.value_or(AdaptiveParams{});
  std::string q;
  for (double x : linear_q) q += (q.empty() ? "" : ",") + fmt_double(x);
  return {
      {"seed", std::to_string(seed)},
      {"dim", std::to_string(dim)},
      {"rank", std::to_string(rank)},
      {"observe_prob", fmt_double(observe_prob)},
      {"truth_norm", fmt_double(truth_norm)},
      {"loss", name_of(loss_kind, kLoss)},
      {"R", fmt_double(R)},
      {"linear_q", q},
      {"depth", infinite_depth ? "inf" : std::to_string(depth)},
      {"init", name_of(init_shape, kInit)},
      {"init_scale", fmt_double(init_scale)},
      {"scheme", name_of(ic.scheme, kScheme)},
      {"step", fmt_double(ic.step)},
      {"adaptive_alpha", fmt_double(ap.alpha)},
      {"adaptive_epsilon", fmt_double(ap.epsilon)},
      {"max_steps", std::to_string(ic.max_steps)},
      {"stop_grad_norm", fmt_double(ic.stop_grad_norm)},
      {"record_every", std::to_string(ic.record_every)},
      {"overflow_guard", fmt_double(ic.overflow_guard)},
      {"max_relative_step", fmt_double(ic.max_relative_step)},
      {"diagnostics", ic.diagnostics ? "true" : "false"},
      {"horizon", std::isinf(horizon) ? "inf" : fmt_double(horizon)},
      {"algorithm", name_of(algorithm, kAlgo)},
      {"epsilon", fmt_double(glrl_epsilon)},
      {"max_rank", std::to_string(max_rank)},
      {"exit_tol", fmt_double(exit_tol)},
      {"nuclear_stages", std::to_string(nuclear_stages)},
      {"nuclear_steps", std::to_string(nuclear_steps)},
      {"output", output},
      {"write_states", write_states ? "true" : "false"},
  };
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw Error(ErrorCode::ConfigError, msg);
  };
  check(dim >= 1, "dim must be >= 1");
  check(rank >= 1 && rank <= dim, "rank must lie in [1, dim]");
  check(observe_prob > 0.0 && observe_prob <= 1.0, "observe_prob must lie in (0, 1]");
  check(truth_norm >= 0.0, "truth_norm must be nonnegative");
  check(infinite_depth || depth >= 1, "depth must be >= 1");
  check(init_scale > 0.0, "init_scale must be positive");
  check(horizon >= 0.0, "horizon must be nonnegative");
  check(max_rank >= 0 && max_rank <= dim, "max_rank must lie in [0, dim]");
  check(exit_tol >= 0.0, "exit_tol must be nonnegative");
  check(glrl_epsilon > 0.0, "epsilon must be positive");
  check(nuclear_stages >= 1 && nuclear_steps >= 1, "nuclear_stages/steps must be >= 1");
  check(!output.empty(), "output must be set");
  if (loss_kind == LossKind::Counterexample) check(dim == 4, "counterexample loss needs dim = 4");
  if (loss_kind == LossKind::Counterexample) check(R > 1.0, "R must exceed 1");
  if (loss_kind == LossKind::Linear)
    check(static_cast<int>(linear_q.size()) == dim, "linear_q needs dim entries");
  switch (algorithm) {
    case Algorithm::GD:
      check(!infinite_depth && depth >= 2, "gd needs a finite depth >= 2");
      break;
    case Algorithm::GLRL:
      check(depth == 2 && !infinite_depth, "glrl runs at depth 2");
      break;
    case Algorithm::DeepGLRL:
      check(depth >= 3 && !infinite_depth, "deep_glrl needs depth >= 3");
      break;
    case Algorithm::NuclearMin:
      check(loss_kind == LossKind::Completion || loss_kind == LossKind::Counterexample,
            "nuclear_min needs a sensing loss");
      break;
    case Algorithm::R1MP:
      check(loss_kind != LossKind::Linear, "r1mp needs a quadratic loss");
      break;
    case Algorithm::KernelDepth:
      break;
  }
  try {
    integrator.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ExperimentConfig& cfg) {
  const auto m = cfg.to_map();
  std::string out = "# resolved configuration\n";
  for (const auto& k : config_keys()) out += k + " = " + m.at(k) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// runs

Instance build_instance(const ExperimentConfig& cfg) {
  cfg.validate();
  const int d = cfg.dim;
  Instance inst{LossSpec::sensing(d, {}), std::nullopt};
  switch (cfg.loss_kind) {
    case LossKind::Completion:
    case LossKind::FullObservation: {
      Rng truth_rng = make_stream(cfg.seed, "truth");
      const double norm = cfg.truth_norm > 0.0 ? cfg.truth_norm : d;
      inst.truth = gen_ground_truth(d, cfg.rank, norm, truth_rng);
      if (cfg.loss_kind == LossKind::FullObservation) {
        inst.loss = LossSpec::full_observation(*inst.truth);
      } else {
        Rng m_rng = make_stream(cfg.seed, "measure");
        inst.loss = LossSpec::sensing(d, gen_measurements(*inst.truth, cfg.observe_prob, m_rng));
      }
      break;
    }
    case LossKind::Counterexample:
      inst.loss = build_counterexample_loss(cfg.R);
      break;
    case LossKind::Linear:
      inst.loss = LossSpec::linear(
          SymMat::diagonal(Eigen::Map<const Vector>(cfg.linear_q.data(), d)), 0.0);
      break;
  }
  return inst;
}

namespace {

using Row = std::map<std::string, std::string>;

const std::vector<std::string> kSummaryCols = {
    "algorithm", "phase", "rank", "time", "steps", "termination",
    "loss", "test_loss", "nuclear_norm", "neg_grad_lambda1", "converged"};

Row summary_row(const ExperimentConfig& cfg, const Instance& inst, const Matrix& W, int phase,
                int rank, double time, std::int64_t steps, const std::string& term,
                bool converged) {
  const SymMat S(W);
  Row r;
  r["algorithm"] = cfg.to_map().at("algorithm");
  r["phase"] = std::to_string(phase);
  r["rank"] = std::to_string(rank);
  r["time"] = fmt_double(time);
  r["steps"] = std::to_string(steps);
  r["termination"] = term;
  r["loss"] = fmt_double(inst.loss.value(W));
  r["test_loss"] = inst.truth ? fmt_double(test_loss(W, *inst.truth)) : "";
  r["nuclear_norm"] = fmt_double(nuclear_norm(S));
  r["neg_grad_lambda1"] = fmt_double(top_eigpair(-inst.loss.gradient(S)).value);
  r["converged"] = converged ? "true" : "false";
  return r;
}

Vector top_escape(const LossSpec& loss) {
  return top_eigpair(-loss.gradient(SymMat::zero(loss.dim()))).vector;
}

/// Initial factors for depth L (a single d x k factor when L = 2).
std::vector<Matrix> initial_factors(const ExperimentConfig& cfg, const LossSpec& loss, int L) {
  const int d = cfg.dim;
  const double s = cfg.init_scale;
  switch (cfg.init_shape) {
    case InitShape::Identity: {
      const double e = std::pow(s, 1.0 / L);
      return std::vector<Matrix>(L, e * Matrix::Identity(d, d));
    }
    case InitShape::Random: {
      Rng rng = make_stream(cfg.seed, "init");
      return balanced_init(d, L, s, rng).factors;
    }
    case InitShape::Rank1TopEig:
      return deep_glrl_init({}, top_escape(loss), s, L);
  }
  return {};
}

Matrix initial_w(const ExperimentConfig& cfg, const LossSpec& loss) {
  const auto fs = initial_factors(cfg, loss, 2);
  return fs[0] * fs[1];
}

Trajectory concat_phases(const GlrlReport& rep) {
  Trajectory out;
  double offset = 0.0;
  for (std::size_t p = 0; p < rep.phases.size(); ++p) {
    const Trajectory& t = rep.phases[p].trajectory;
    // later phases start eps away from the previous end; drop that duplicate time
    for (std::size_t k = (p == 0 ? 0 : 1); k < t.size(); ++k) {
      out.times.push_back(offset + t.times[k]);
      out.states.push_back(t.states[k]);
      out.loss.push_back(t.loss[k]);
      out.grad_norm.push_back(t.grad_norm[k]);
      if (!t.eigenvalues.empty()) {
        out.eigenvalues.push_back(t.eigenvalues[k]);
        out.lowrank.push_back(t.lowrank[k]);
      }
    }
    offset += t.final_time();
    out.steps += t.steps;
    out.termination = t.termination;
  }
  return out;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& output_root) {
  const Instance inst = build_instance(cfg);
  RunResult res;
  res.dir = cfg.output;
  if (res.dir.is_relative() && !output_root.empty()) res.dir = output_root / res.dir;
  std::filesystem::create_directories(res.dir);

  const IntegratorConfig& ic = cfg.integrator;
  Trajectory& tr = res.trajectory;
  auto& rows = res.summary;
  bool diverged = false;

  switch (cfg.algorithm) {
    case Algorithm::GD: {
      const auto fs = initial_factors(cfg, inst.loss, cfg.depth);
      if (cfg.depth == 2) {
        tr = gd_factored(inst.loss, fs[0], ic, cfg.horizon);
      } else {
        DeepFactorState st{cfg.depth, fs, 1e-10};
        tr = gd_deep_factored(inst.loss, st, ic, cfg.horizon);
      }
      diverged = tr.termination == Termination::Diverged;
      rows.push_back(summary_row(cfg, inst, tr.final_state(), 0, 0, tr.final_time(), tr.steps,
                                 std::string(to_string(tr.termination)),
                                 tr.termination == Termination::Stationary));
      break;
    }
    case Algorithm::GLRL:
    case Algorithm::DeepGLRL: {
      GlrlConfig g;
      g.epsilon = cfg.glrl_epsilon;
      g.inner = ic;
      g.max_rank = cfg.max_rank;
      g.exit_tol = cfg.exit_tol;
      g.depth = cfg.depth;
      const GlrlReport rep =
          cfg.algorithm == Algorithm::GLRL ? glrl_run(inst.loss, g) : deep_glrl_run(inst.loss, g);
      diverged = rep.diverged;
      tr = concat_phases(rep);
      for (const auto& ph : rep.phases)
        rows.push_back(summary_row(cfg, inst, ph.critical_point, ph.rank, ph.rank,
                                   ph.trajectory.final_time(), ph.trajectory.steps,
                                   std::string(to_string(ph.trajectory.termination)),
                                   ph.converged));
      Row last = summary_row(cfg, inst, rep.final_W, -1, static_cast<int>(rep.phases.size()),
                             tr.empty() ? 0.0 : tr.final_time(), tr.steps,
                             rep.converged ? "exit" : (rep.rank_budget_exhausted ? "rank_budget" : "stopped"),
                             rep.converged);
      last["phase"] = "final";
      rows.push_back(last);
      break;
    }
    case Algorithm::R1MP: {
      const int mr = cfg.max_rank == 0 ? cfg.dim : cfg.max_rank;
      const R1mpResult r = r1mp_run(inst.loss, mr, cfg.exit_tol);
      append_state(tr, 0.0, Matrix::Zero(cfg.dim, cfg.dim), inst.loss.value(Matrix::Zero(cfg.dim, cfg.dim)),
                   inst.loss.gradient(SymMat::zero(cfg.dim)).frobenius(), ic.diagnostics);
      // greedy runs are prefix-consistent, so a shorter budget replays rank k
      for (const auto& h : r.history) {
        const R1mpResult sub = r1mp_run(inst.loss, h.rank, -1.0);
        const Matrix W = sub.estimate.mat();
        append_state(tr, h.rank, W, h.loss, inst.loss.gradient(sub.estimate).frobenius(),
                     ic.diagnostics);
        rows.push_back(summary_row(cfg, inst, W, h.rank, h.rank, h.rank, h.rank,
                                   h.ridge_used ? "ridge" : "ok", false));
      }
      Row last = summary_row(cfg, inst, r.estimate.mat(), -1, static_cast<int>(r.history.size()),
                             static_cast<double>(r.history.size()),
                             static_cast<std::int64_t>(r.history.size()),
                             r.converged ? "exit" : "rank_budget", r.converged);
      last["phase"] = "final";
      rows.push_back(last);
      break;
    }
    case Algorithm::NuclearMin: {
      ProxConfig pc;
      pc.steps_per_stage = cfg.nuclear_steps;
      const NuclearMinResult r =
          nuclear_min(inst.loss, default_lambda_path(inst.loss, cfg.nuclear_stages), pc);
      append_state(tr, 0.0, r.W.mat(), r.loss, inst.loss.gradient(r.W).frobenius(),
                   ic.diagnostics);
      rows.push_back(summary_row(cfg, inst, r.W.mat(), 0, numerical_rank(r.W, 1e-8), 0.0,
                                 r.total_steps, "ok", true));
      break;
    }
    case Algorithm::KernelDepth: {
      const double L = cfg.infinite_depth ? kInfiniteDepth : cfg.depth;
      tr = flow_kernel_depth(inst.loss, initial_w(cfg, inst.loss), L, ic, cfg.horizon);
      diverged = tr.termination == Termination::Diverged;
      rows.push_back(summary_row(cfg, inst, tr.final_state(), 0, 0, tr.final_time(), tr.steps,
                                 std::string(to_string(tr.termination)),
                                 tr.termination == Termination::Stationary));
      break;
    }
  }

  const Matrix* ref = inst.truth ? &inst.truth->mat() : nullptr;
  write_trajectory_csv(res.dir / "trajectory.csv", tr, ref);
  if (cfg.write_states) write_states_csv(res.dir / "states.csv", tr);
  CsvTable table(kSummaryCols);
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& c : kSummaryCols) cells.push_back(r.at(c));
    table.add_row(std::move(cells));
  }
  table.write(res.dir / "summary.csv");
  {
    std::ofstream out(res.dir / "config.resolved");
    if (!out) throw Error(ErrorCode::IoError, "cannot write config.resolved");
    out << dump_config(cfg);
  }
  res.exit_code = diverged ? kExitDiverged : kExitOk;
  return res;
}

}  // namespace glrl
