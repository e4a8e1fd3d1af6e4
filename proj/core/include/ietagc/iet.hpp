#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ietagc/dataset.hpp"
#include "ietagc/trainer.hpp"

namespace ietagc {

enum class ShardMode { IidClasswise, IidRandom, Dirichlet };

std::string shard_mode_name(ShardMode m);
ShardMode shard_mode_from_string(const std::string& s);

/// How memory banks cross the aggregation barrier: averaged like the model
/// weights, or one bank threaded sequentially through the shards.
enum class BankPolicy { Average, SequentialShared };

std::string bank_policy_name(BankPolicy p);
BankPolicy bank_policy_from_string(const std::string& s);

struct ShardPlan {
  int K = 1;
  ShardMode mode = ShardMode::IidRandom;
  double dirichlet_alpha = 0.0;
  std::vector<int> assignment;  // index = sample id, value = shard in [0, K)

  /// Per-shard member ids, ascending within each shard.
  std::vector<std::vector<std::size_t>> members() const;
  void validate(std::size_t n_samples) const;
};

struct RoundConfig {
  int M = 1;  // aggregation rounds
  int E = 1;  // epochs per shard per round
  int first_round = 0;  // absolute index of the first round this call runs
  TrainConfig inner;
  BankPolicy bank_policy = BankPolicy::Average;
};

/// Per-(round, shard) training summary for the experiment log.
struct ShardRoundLog {
  int round = 0;
  int shard = 0;
  std::vector<EpochStats> epochs;
  double param_dist = 0.0;  // ||theta_shard - theta_aggregated||_2
};

struct IetResult {
  Denoiser model;
  MemoryBank bank;
  std::vector<ShardRoundLog> rounds;
  std::vector<SkipRecord> skips;
};

/// Splits sample ids into K shards. iid_classwise balances every class
/// across shards (and degrades to iid_random when labels are absent);
/// dirichlet draws per-class shard proportions from Dir(alpha).
ShardPlan split_dataset(const Dataset& data, int K, ShardMode mode,
                        std::uint64_t seed, double alpha = 0.0);

/// Elementwise unweighted mean of the flat parameter vectors. Bit-exact
/// identity when all inputs are identical.
Denoiser aggregate(const std::vector<Denoiser>& models);

/// Elementwise mean of bank values; update counts are summed. Bit-exact
/// identity when all inputs are identical.
MemoryBank aggregate_banks(const std::vector<MemoryBank>& banks);

/// Runs M rounds: broadcast the global model (and bank, per policy) to every
/// shard, train E epochs per shard, aggregate. Deterministic; shard streams
/// are keyed by shard identity and absolute epoch, not execution order, so
/// calling this M times with first_round advancing and M=1 is identical to
/// one M-round call. init_bank seeds the global bank (fresh zero bank when
/// null).
IetResult run_iet(const Dataset& data, const ShardPlan& plan,
                  const RoundConfig& rc, const Schedule& sched, Denoiser init,
                  const MemoryBank* init_bank = nullptr);

}  // namespace ietagc
