#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "glrl/dynamics.hpp"
#include "glrl/glrl.hpp"

namespace glrl {

/// Name of the seeding scheme; bump when stream derivation changes.
inline constexpr std::string_view kRngScheme = "mt19937_64+fnv1a-splitmix/v1";

/// Independent generator for a named consumer ("truth", "measure", "init",
/// "noise", ...). Streams depend only on (seed, name), so adding a consumer
/// never shifts the numbers another consumer sees.
Rng make_stream(std::uint64_t seed, std::string_view name);

/// Random PSD rank-r matrix Q S Q^T with ||.||_F = frob_norm; Q from the QR of
/// a Gaussian matrix, S with r entries |N(0,1)| rescaled.
SymMat gen_ground_truth(int d, int r, double frob_norm, Rng& rng);

/// Each unordered pair (i, j), i <= j, independently with probability p.
std::vector<std::pair<int, int>> gen_observed_pairs(int d, double p, Rng& rng);

/// One symmetrized entry measurement per observed pair with y = W*_ij.
std::vector<Measurement> gen_measurements(const SymMat& truth, double p, Rng& rng);

/// ||W - W*||_F^2 / d^2.
double test_loss(const Matrix& W, const SymMat& truth);

enum class InitShape { Identity, Random, Rank1TopEig };
enum class LossKind { Completion, FullObservation, Counterexample, Linear };
enum class Algorithm { GD, GLRL, DeepGLRL, R1MP, NuclearMin, KernelDepth };

struct ExperimentConfig {
  std::uint64_t seed = 0;
  int dim = 20;
  int rank = 3;
  double observe_prob = 0.3;
  /// ||W*||_F; 0 means dim.
  double truth_norm = 0.0;
  LossKind loss_kind = LossKind::Completion;
  double R = 100.0;              ///< counterexample parameter
  std::vector<double> linear_q;  ///< diagonal of Q for the linear loss
  int depth = 2;
  bool infinite_depth = false;  ///< kernel dynamics at L = infinity
  InitShape init_shape = InitShape::Random;
  double init_scale = 1e-3;
  IntegratorConfig integrator = [] {
    IntegratorConfig c;
    c.record_every = 100;
    return c;
  }();
  double horizon = 100.0;
  Algorithm algorithm = Algorithm::GD;
  double glrl_epsilon = 1e-7;
  int max_rank = 0;
  double exit_tol = 1e-8;
  int nuclear_stages = 40;
  int nuclear_steps = 500;
  std::string output = "out";
  bool write_states = false;

  /// Sets one field from its textual form. Throws ConfigError.
  void set(const std::string& key, const std::string& value);
  /// Every field as key -> value text, for the resolved-config dump.
  std::map<std::string, std::string> to_map() const;
  void validate() const;
};

/// All accepted configuration keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines; '#' starts a comment.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
std::string dump_config(const ExperimentConfig& cfg);

/// Loss, ground truth (when one exists) and initialization derived from a
/// config.
struct Instance {
  LossSpec loss;
  std::optional<SymMat> truth;
};
Instance build_instance(const ExperimentConfig& cfg);

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 2 diverged
  std::filesystem::path dir;
  Trajectory trajectory;
  std::vector<std::map<std::string, std::string>> summary;
};

/// Runs one configured experiment and writes trajectory.csv, summary.csv,
/// config.resolved (and states.csv when requested) into cfg.output. The
/// output path is resolved against `output_root` when relative.
RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& output_root = {});

/// Exit code convention shared with the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiverged = 2;
inline constexpr int kExitConfig = 3;

}  // namespace glrl
