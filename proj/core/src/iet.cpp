#include "ietagc/iet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace ietagc {

std::string shard_mode_name(ShardMode m) {
  switch (m) {
    case ShardMode::IidClasswise: return "iid_classwise";
    case ShardMode::IidRandom: return "iid_random";
    case ShardMode::Dirichlet: return "dirichlet";
  }
  throw ConfigError("unknown shard mode enum value");
}

ShardMode shard_mode_from_string(const std::string& s) {
  if (s == "iid_classwise") return ShardMode::IidClasswise;
  if (s == "iid_random") return ShardMode::IidRandom;
  if (s == "dirichlet") return ShardMode::Dirichlet;
  throw ConfigError("unknown shard mode '" + s +
                    "' (expected iid_classwise|iid_random|dirichlet)");
}

std::string bank_policy_name(BankPolicy p) {
  switch (p) {
    case BankPolicy::Average: return "average";
    case BankPolicy::SequentialShared: return "sequential_shared";
  }
  throw ConfigError("unknown bank policy enum value");
}

BankPolicy bank_policy_from_string(const std::string& s) {
  if (s == "average") return BankPolicy::Average;
  if (s == "sequential_shared") return BankPolicy::SequentialShared;
  throw ConfigError("unknown bank policy '" + s +
                    "' (expected average|sequential_shared)");
}

std::vector<std::vector<std::size_t>> ShardPlan::members() const {
  std::vector<std::vector<std::size_t>> out(K);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const int s = assignment[i];
    if (s < 0 || s >= K) throw ShapeError("shard plan: assignment out of range");
    out[s].push_back(i);
  }
  return out;  // ascending by construction
}

void ShardPlan::validate(std::size_t n_samples) const {
  if (K < 1) throw ConfigError("shard plan: K must be >= 1");
  if (assignment.size() != n_samples)
    throw ShapeError("shard plan: assignment size does not match dataset");
  for (int s : assignment)
    if (s < 0 || s >= K) throw ShapeError("shard plan: assignment out of range");
}

namespace {

// Marsaglia–Tsang Gamma(alpha, 1) sampler.
double gamma_draw(double alpha, Rng& rng) {
  if (alpha < 1.0) {
    const double u = rng.uniform();
    return gamma_draw(alpha + 1.0, rng) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Deal a shuffled id list into K blocks, remainder to the lowest shards.
void deal_blocks(const std::vector<std::size_t>& ids, int K,
                 std::vector<int>& assignment) {
  const std::size_t n = ids.size();
  const std::size_t base = n / K, rem = n % K;
  std::size_t pos = 0;
  for (int s = 0; s < K; ++s) {
    const std::size_t take = base + (static_cast<std::size_t>(s) < rem ? 1 : 0);
    for (std::size_t j = 0; j < take; ++j) assignment[ids[pos++]] = s;
  }
}

}  // namespace

ShardPlan split_dataset(const Dataset& data, int K, ShardMode mode,
                        std::uint64_t seed, double alpha) {
  const std::size_t n = data.size();
  if (K < 1) throw ConfigError("split_dataset: K must be >= 1");
  if (static_cast<std::size_t>(K) > n)
    throw ConfigError("split_dataset: K exceeds dataset size");
  if (mode == ShardMode::Dirichlet) {
    if (!data.labels_present)
      throw ConfigError("split_dataset: dirichlet mode requires class labels");
    if (!(alpha > 0.0))
      throw ConfigError("split_dataset: dirichlet mode requires alpha > 0");
  }
  // A dataset without class information has a single nominal class, so the
  // classwise split degrades to the plain random one.
  ShardMode effective = mode;
  if (mode == ShardMode::IidClasswise && !data.labels_present)
    effective = ShardMode::IidRandom;

  ShardPlan plan;
  plan.K = K;
  plan.mode = mode;
  plan.dirichlet_alpha = (mode == ShardMode::Dirichlet) ? alpha : 0.0;
  plan.assignment.assign(n, 0);
  Rng rng(derive_seed(seed, "split"));

  if (effective == ShardMode::IidRandom) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    rng.shuffle(ids);
    deal_blocks(ids, K, plan.assignment);
  } else if (effective == ShardMode::IidClasswise) {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i)
      by_class[data.samples[i].label].push_back(i);
    for (auto& [label, ids] : by_class) {
      rng.shuffle(ids);
      deal_blocks(ids, K, plan.assignment);
    }
  } else {  // Dirichlet
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i)
      by_class[data.samples[i].label].push_back(i);
    for (auto& [label, ids] : by_class) {
      std::vector<double> q(K);
      double sum = 0.0;
      for (int s = 0; s < K; ++s) sum += (q[s] = gamma_draw(alpha, rng));
      for (int s = 0; s < K; ++s) q[s] /= sum;
      for (std::size_t id : ids) {
        const double u = rng.uniform();
        double acc = 0.0;
        int pick = K - 1;
        for (int s = 0; s < K; ++s) {
          acc += q[s];
          if (u < acc) { pick = s; break; }
        }
        plan.assignment[id] = pick;
      }
    }
    // Dirichlet draws can leave a shard empty; repair deterministically by
    // moving the highest-id member of the currently largest shard.
    for (;;) {
      std::vector<std::size_t> sizes(K, 0);
      for (int s : plan.assignment) ++sizes[s];
      int empty = -1;
      for (int s = 0; s < K; ++s)
        if (sizes[s] == 0) { empty = s; break; }
      if (empty < 0) break;
      const int donor = static_cast<int>(
          std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      for (std::size_t i = n; i-- > 0;) {
        if (plan.assignment[i] == donor) {
          plan.assignment[i] = empty;
          break;
        }
      }
    }
  }
  plan.validate(n);
  return plan;
}

Denoiser aggregate(const std::vector<Denoiser>& models) {
  if (models.empty()) throw ConfigError("aggregate: empty model list");
  const Denoiser& ref = models.front();
  for (const Denoiser& m : models)
    if (!(m.arch() == ref.arch()))
      throw ShapeError("aggregate: architecture mismatch");
  if (models.size() == 1) return ref;

  bool all_same = true;
  for (std::size_t j = 1; j < models.size() && all_same; ++j)
    all_same = (models[j].flat() == ref.flat());
  if (all_same) return ref;

  // Baseline-shifted mean: ref + mean(theta_j - ref). Algebraically the
  // plain mean, but exactly the identity on equal inputs.
  const std::size_t P = ref.flat().size();
  const double invK = 1.0 / static_cast<double>(models.size());
  std::vector<double> out(ref.flat());
  std::vector<double> acc(P, 0.0);
  for (const Denoiser& m : models) {
    const std::vector<double>& f = m.flat();
    for (std::size_t i = 0; i < P; ++i) acc[i] += f[i] - out[i];
  }
  for (std::size_t i = 0; i < P; ++i) out[i] += acc[i] * invK;
  return Denoiser::from_flat(ref.arch(), std::move(out));
}

MemoryBank aggregate_banks(const std::vector<MemoryBank>& banks) {
  if (banks.empty()) throw ConfigError("aggregate_banks: empty bank list");
  const MemoryBank& ref = banks.front();
  for (const MemoryBank& b : banks) {
    if (b.T() != ref.T()) throw ShapeError("aggregate_banks: length mismatch");
    if (b.gamma() != ref.gamma())
      throw ConfigError("aggregate_banks: gamma mismatch");
  }
  if (banks.size() == 1) return ref;

  MemoryBank out = ref;
  const std::size_t T = ref.values().size();
  const double invK = 1.0 / static_cast<double>(banks.size());
  bool all_same = true;
  for (std::size_t j = 1; j < banks.size() && all_same; ++j)
    all_same = (banks[j].values() == ref.values());
  if (!all_same) {
    std::vector<double> acc(T, 0.0);
    for (const MemoryBank& b : banks)
      for (std::size_t i = 0; i < T; ++i) acc[i] += b.values()[i] - ref.values()[i];
    for (std::size_t i = 0; i < T; ++i)
      out.mutable_values()[i] = ref.values()[i] + acc[i] * invK;
  }
  for (std::size_t i = 0; i < T; ++i) {
    std::uint64_t c = 0;
    for (const MemoryBank& b : banks) c += b.update_counts()[i];
    out.mutable_update_counts()[i] = c;
  }
  return out;
}

IetResult run_iet(const Dataset& data, const ShardPlan& plan,
                  const RoundConfig& rc, const Schedule& sched, Denoiser init,
                  const MemoryBank* init_bank) {
  plan.validate(data.size());
  if (rc.M < 1) throw ConfigError("run_iet: M must be >= 1");
  if (rc.E < 0) throw ConfigError("run_iet: E must be >= 0");
  if (rc.first_round < 0) throw ConfigError("run_iet: first_round must be >= 0");
  rc.inner.validate();
  if (init.arch().d != data.d)
    throw ShapeError("run_iet: model/data dimension mismatch");
  const auto members = plan.members();
  for (const auto& ms : members)
    if (ms.empty()) throw ConfigError("run_iet: empty shard");
  if (init_bank && init_bank->T() != sched.T)
    throw ShapeError("run_iet: bank length does not match schedule T");

  IetResult res{std::move(init),
                init_bank ? *init_bank : MemoryBank(sched.T, rc.inner.gamma),
                {},
                {}};

  for (int m = 0; m < rc.M; ++m) {
    const int round = rc.first_round + m;
    std::vector<Denoiser> shard_models;
    std::vector<MemoryBank> shard_banks;
    shard_models.reserve(plan.K);
    MemoryBank threaded = res.bank;  // used by the sequential policy
    for (int i = 0; i < plan.K; ++i) {
      TrainConfig cfg = rc.inner;
      cfg.shard_id = i;
      cfg.first_epoch = round * rc.E;
      cfg.epochs = rc.E;
      MemoryBank start =
          (rc.bank_policy == BankPolicy::SequentialShared) ? threaded : res.bank;
      try {
        TrainOutput out = train_epochs(res.model, data, members[i], cfg,
                                       std::move(start), sched);
        if (rc.bank_policy == BankPolicy::SequentialShared)
          threaded = out.bank;
        else
          shard_banks.push_back(std::move(out.bank));
        shard_models.push_back(std::move(out.model));
        ShardRoundLog log;
        log.round = round;
        log.shard = i;
        log.epochs = std::move(out.stats);
        res.rounds.push_back(std::move(log));
        res.skips.insert(res.skips.end(), out.skips.begin(), out.skips.end());
      } catch (const TrainingDivergedError& err) {
        std::ostringstream msg;
        msg << "round " << round << ", shard " << i << ": " << err.what();
        TrainingDivergedError wrapped(msg.str(), err.epoch, err.batch);
        wrapped.last_checkpoint = err.last_checkpoint;
        throw wrapped;
      }
    }
    Denoiser next = aggregate(shard_models);
    for (int i = 0; i < plan.K; ++i) {
      double sq = 0.0;
      const auto& a = shard_models[i].flat();
      const auto& b = next.flat();
      for (std::size_t p = 0; p < a.size(); ++p) {
        const double dd = a[p] - b[p];
        sq += dd * dd;
      }
      res.rounds[res.rounds.size() - plan.K + i].param_dist = std::sqrt(sq);
    }
    res.model = std::move(next);
    res.bank = (rc.bank_policy == BankPolicy::SequentialShared)
                   ? std::move(threaded)
                   : aggregate_banks(shard_banks);
  }
  return res;
}

}  // namespace ietagc
