#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ietagc/config.hpp"
#include "ietagc/dataset.hpp"
#include "ietagc/iet.hpp"
#include "ietagc/schedule.hpp"

namespace ietagc {

/// Exit codes shared by all commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;         // unexpected failure
inline constexpr int kExitParse = 2;         // config / spec error
inline constexpr int kExitDiverged = 3;      // training divergence
inline constexpr int kExitIncompatible = 4;  // mismatched artifacts

/// Fully resolved experiment description. Every field maps 1:1 to a config
/// key (see known_config_keys); from_config validates all constraints and
/// reports offending field paths.
struct ExperimentSpec {
  Config config;

  // data.*
  std::string data_kind = "mixture";  // mixture | patterns | file
  std::string data_path;
  int components = 8, per_component = 62, d = 8;
  double sigma = 0.05;
  int count = 512, grid = 8;
  PatternMix mix;
  std::vector<DupSpec> dup;

  // schedule.*
  int T = 100;
  bool explicit_T = false;  // schedule.t came from the input, not the default
  double beta_min = 1e-4, beta_max = 0.02;

  // model.*
  int time_embed = 32, hidden1 = 128, hidden2 = 128;

  // iet.*
  int K = 1;
  ShardMode mode = ShardMode::IidRandom;
  double dirichlet_alpha = 0.3;
  int M = 1, E = 100;
  BankPolicy bank_policy = BankPolicy::Average;

  // train.* / agc.* / dp.* / input_noise.*
  TrainConfig train;

  // audit.*
  int audit_n = 50;
  std::vector<double> thresholds{0.4, 0.5, 0.6};
  int gen_count = 4096;
  bool include_nearest = true;

  // analyze.*
  int draws_per_t = 8;
  int t_points = 20;
  double decile = 0.1;
  int dup_min = 2;

  std::uint64_t seed = 1234;
  int checkpoint_interval = 0;  // rounds between periodic checkpoints

  static ExperimentSpec from_config(const Config& c);

  /// Generates (mixture/patterns) or loads (file) the dataset.
  Dataset build_dataset() const;

  /// The denoiser architecture for dimension d.
  DenoiserArch arch_for(int data_d) const;
};

const std::set<std::string>& known_config_keys();

/// Reads the embedded config back out of a train/gen-data manifest.
Config config_from_manifest(const std::string& manifest_path);

int cmd_train(const ExperimentSpec& spec, const std::string& out_dir);
int cmd_audit(const ExperimentSpec& spec, const std::string& checkpoint_path,
              const std::string& data_path, const std::string& out_dir,
              const std::string& label);
int cmd_analyze(const ExperimentSpec& spec, const std::string& run_dir,
                const std::string& out_dir);
int cmd_compare(const std::vector<std::string>& report_paths,
                const std::string& out_path);
int cmd_gen_data(const ExperimentSpec& spec, const std::string& out_dir);

}  // namespace ietagc
