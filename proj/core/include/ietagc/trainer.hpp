#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ietagc/dataset.hpp"
#include "ietagc/denoiser.hpp"
#include "ietagc/memory_bank.hpp"
#include "ietagc/rng.hpp"
#include "ietagc/schedule.hpp"

namespace ietagc {

enum class Method { Default, Agc, DpSgd, InputNoise };

std::string method_name(Method m);
Method method_from_string(const std::string& s);

struct TrainConfig {
  Method method = Method::Default;
  double eta = 1e-3;
  int batch_size = 64;
  int epochs = 0;
  double lambda = 0.5;          // AGC skip threshold
  double gamma = 0.8;           // bank EMA smoothing
  double tau = 0.0005;          // DP-SGD noise multiplier
  double input_noise_var = 0.1;
  std::uint64_t seed = 0;

  // Stream identity: which shard this loop trains and the absolute index of
  // its first epoch. Sharded and plain runs that cover the same (shard,
  // epoch) cells therefore consume identical random streams.
  int shard_id = 0;
  int first_epoch = 0;

  bool per_sample_update = false;  // replay the bank strictly per sample
  std::string last_checkpoint;     // referenced in divergence errors

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // absolute epoch index
  double mean_loss = 0.0;
  std::size_t skipped = 0;
  double grad_norm_mean = 0.0;
  double grad_norm_max = 0.0;
};

struct TrainOutput {
  Denoiser model;
  MemoryBank bank;
  std::vector<EpochStats> stats;
  std::vector<SkipRecord> skips;
};

/// theta <- theta - eta * g, in place. Non-finite gradient entries abort.
void sgd_step(std::vector<double>& params, std::span<const double> grad, double eta);

/// g + z with z Gaussian, per-coordinate sigma = ||g||_2 * tau. tau = 0
/// returns g unchanged and draws nothing.
std::vector<double> dp_noise(std::vector<double> g, double tau, Rng& rng);
std::vector<double> dp_noise(std::vector<double> g, double tau, std::uint64_t seed);

/// x + Gaussian(0, var) elementwise. var = 0 returns x unchanged and draws
/// nothing.
Sample add_input_noise(const Sample& x, double var, Rng& rng);
Sample add_input_noise(const Sample& x, double var, std::uint64_t seed);

/// Runs cfg.epochs shuffled full passes over the listed samples. Each
/// presentation draws t uniform on [1,T] and fresh Gaussian noise; the
/// method decides the transform (AGC masking, DP gradient noise, input
/// noise). Deterministic given (model, data, members, cfg, sched, bank).
TrainOutput train_epochs(Denoiser model, const Dataset& data,
                         std::span<const std::size_t> members,
                         const TrainConfig& cfg, MemoryBank bank,
                         const Schedule& sched);

/// Whole-dataset overload.
TrainOutput train_epochs(Denoiser model, const Dataset& data,
                         const TrainConfig& cfg, MemoryBank bank,
                         const Schedule& sched);

}  // namespace ietagc
