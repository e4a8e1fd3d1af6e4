#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "doctest.h"
#include "ietagc/dataset.hpp"
#include "ietagc/denoiser.hpp"
#include "ietagc/errors.hpp"
#include "ietagc/iet.hpp"
#include "ietagc/rng.hpp"
#include "ietagc/schedule.hpp"

using namespace ietagc;

namespace {

Dataset demo_data(std::uint64_t seed = 6) {
  return gen_mixture(3, 10, 2, {}, seed, 0.05);
}

DenoiserArch demo_arch() {
  DenoiserArch a;
  a.d = 2;
  a.time_embed = 4;
  a.hidden1 = 12;
  a.hidden2 = 12;
  return a;
}

Schedule demo_sched() { return build_schedule(8, 1e-4, 0.25); }

TrainConfig inner_cfg(Method m = Method::Agc) {
  TrainConfig cfg;
  cfg.method = m;
  cfg.eta = 0.01;
  cfg.batch_size = 8;
  cfg.seed = 404;
  return cfg;
}

void check_partition(const ShardPlan& plan, int n) {
  REQUIRE(static_cast<int>(plan.assignment.size()) == n);
  const auto members = plan.members();
  REQUIRE(static_cast<int>(members.size()) == plan.K);
  std::set<std::size_t> seen;
  for (int k = 0; k < plan.K; ++k) {
    CHECK(!members[k].empty());
    CHECK(std::is_sorted(members[k].begin(), members[k].end()));
    for (std::size_t id : members[k]) {
      CHECK(plan.assignment[id] == k);
      CHECK(seen.insert(id).second);  // no sample in two shards
    }
  }
  CHECK(static_cast<int>(seen.size()) == n);
}

}  // namespace

TEST_CASE("mode and policy names round-trip") {
  for (ShardMode m :
       {ShardMode::IidClasswise, ShardMode::IidRandom, ShardMode::Dirichlet})
    CHECK(shard_mode_from_string(shard_mode_name(m)) == m);
  for (BankPolicy p : {BankPolicy::Average, BankPolicy::SequentialShared})
    CHECK(bank_policy_from_string(bank_policy_name(p)) == p);
  CHECK_THROWS_AS(shard_mode_from_string("random"), ConfigError);
  CHECK_THROWS_AS(bank_policy_from_string("shared"), ConfigError);
}

TEST_CASE("iid_random split partitions with balanced sizes") {
  Dataset data = demo_data();  // 30 samples
  const ShardPlan plan = split_dataset(data, 4, ShardMode::IidRandom, 9);
  check_partition(plan, 30);
  const auto members = plan.members();
  std::vector<std::size_t> sizes;
  for (const auto& m : members) sizes.push_back(m.size());
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);  // 30 over 4 -> sizes 8,8,7,7 in some order
  CHECK(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}) == 30);
}

TEST_CASE("iid_classwise balances every class across shards") {
  Dataset data = demo_data();  // 3 classes x 10
  const ShardPlan plan = split_dataset(data, 3, ShardMode::IidClasswise, 10);
  check_partition(plan, 30);
  const auto members = plan.members();
  for (int k = 0; k < 3; ++k) {
    std::map<int, int> per_class;
    for (std::size_t id : members[k]) ++per_class[data.samples[id].label];
    for (const auto& [lbl, cnt] : per_class) {
      CHECK(cnt >= 3);
      CHECK(cnt <= 4);  // 10 of each class over 3 shards
    }
    CHECK(per_class.size() == 3);
  }
}

TEST_CASE("dirichlet split skews shards but never empties one") {
  Dataset data = demo_data();
  const ShardPlan plan =
      split_dataset(data, 3, ShardMode::Dirichlet, 11, 0.3);
  check_partition(plan, 30);
  CHECK(plan.dirichlet_alpha == 0.3);

  // Low alpha should produce visibly non-uniform class mixtures in at least
  // one shard (not a strict guarantee per seed, so only sanity-check the
  // mechanism across a few seeds).
  bool skew_seen = false;
  for (std::uint64_t seed = 1; seed <= 6 && !skew_seen; ++seed) {
    const ShardPlan p = split_dataset(data, 3, ShardMode::Dirichlet, seed, 0.1);
    const auto members = p.members();
    for (const auto& shard : members) {
      std::map<int, int> per_class;
      for (std::size_t id : shard) ++per_class[data.samples[id].label];
      for (const auto& [lbl, cnt] : per_class)
        if (cnt >= 8) skew_seen = true;  // one class dominates a shard
    }
  }
  CHECK(skew_seen);

  CHECK_THROWS_AS(split_dataset(data, 3, ShardMode::Dirichlet, 11, 0.0),
                  ConfigError);
  Dataset unlabeled = data;
  for (auto& s : unlabeled.samples) s.label = -1;
  unlabeled.labels_present = false;
  CHECK_THROWS_AS(
      split_dataset(unlabeled, 3, ShardMode::Dirichlet, 11, 0.3),
      ConfigError);
}

TEST_CASE("split validation") {
  Dataset data = demo_data();
  CHECK_THROWS_AS(split_dataset(data, 0, ShardMode::IidRandom, 1),
                  ConfigError);
  CHECK_THROWS_AS(split_dataset(data, 31, ShardMode::IidRandom, 1),
                  ConfigError);  // more shards than samples
  const ShardPlan plan = split_dataset(data, 2, ShardMode::IidRandom, 1);
  ShardPlan broken = plan;
  broken.assignment[0] = 5;
  CHECK_THROWS_AS(broken.validate(30), ShapeError);
  CHECK_THROWS_AS(plan.validate(29), ShapeError);
}

TEST_CASE("split is deterministic in the seed") {
  Dataset data = demo_data();
  const ShardPlan a = split_dataset(data, 4, ShardMode::IidClasswise, 21);
  const ShardPlan b = split_dataset(data, 4, ShardMode::IidClasswise, 21);
  const ShardPlan c = split_dataset(data, 4, ShardMode::IidClasswise, 22);
  CHECK(a.assignment == b.assignment);
  CHECK(a.assignment != c.assignment);
}

TEST_CASE("aggregate is the exact unweighted mean and an identity on copies") {
  Denoiser base(demo_arch());
  base = Denoiser::random_init(base.arch(), 2);

  // Identity: averaging three bitwise-identical models returns those params.
  const Denoiser same = aggregate({base, base, base});
  CHECK(same.flat() == base.flat());

  // Mean: compare against a naive elementwise mean.
  Denoiser m1 = base, m2 = base, m3 = base;
  Rng rng(77);
  for (double& v : m1.mutable_flat()) v += 0.1 * rng.normal();
  for (double& v : m2.mutable_flat()) v += 0.1 * rng.normal();
  for (double& v : m3.mutable_flat()) v += 0.1 * rng.normal();
  const Denoiser avg = aggregate({m1, m2, m3});
  for (std::size_t i = 0; i < base.flat().size(); ++i) {
    const double naive =
        (m1.flat()[i] + m2.flat()[i] + m3.flat()[i]) / 3.0;
    CHECK(avg.flat()[i] == doctest::Approx(naive).epsilon(1e-12));
  }

  // Permutation invariance of the result within tight tolerance.
  const Denoiser avg2 = aggregate({m3, m1, m2});
  for (std::size_t i = 0; i < base.flat().size(); ++i)
    CHECK(avg.flat()[i] == doctest::Approx(avg2.flat()[i]).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate({}), ConfigError);
  Denoiser other(DenoiserArch{3, 4, 12, 12});
  other = Denoiser::random_init(other.arch(), 3);
  CHECK_THROWS_AS(aggregate({base, other}), ShapeError);
}

TEST_CASE("aggregate_banks averages values and sums counts") {
  MemoryBank a(4, 0.8), b(4, 0.8);
  a.update(1, 2.0);
  a.update(1, 4.0);  // l[1] = 0.8*0.4 + 0.2*4 = 1.12
  b.update(2, 10.0);
  const MemoryBank merged = aggregate_banks({a, b});
  REQUIRE(merged.T() == 4);
  CHECK(merged.value(1) == doctest::Approx((a.value(1) + 0.0) / 2).epsilon(1e-15));
  CHECK(merged.value(2) == doctest::Approx((0.0 + b.value(2)) / 2).epsilon(1e-15));
  CHECK(merged.value(3) == 0.0);
  CHECK(merged.update_counts()[0] == 2);  // t=1 stored at index 0
  CHECK(merged.update_counts()[1] == 1);

  const MemoryBank twin = aggregate_banks({a, a});
  CHECK(twin.values() == a.values());  // bit-exact identity

  MemoryBank wrong(5, 0.8);
  CHECK_THROWS_AS(aggregate_banks({a, wrong}), ShapeError);
  CHECK_THROWS_AS(aggregate_banks({}), ConfigError);
}

TEST_CASE("K = 1 IET reproduces plain training bit-exactly") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 5);

  RoundConfig rc;
  rc.M = 2;
  rc.E = 3;
  rc.inner = inner_cfg(Method::Agc);

  const ShardPlan plan = split_dataset(data, 1, ShardMode::IidRandom, 1);
  const IetResult iet = run_iet(data, plan, rc, sched, init);

  TrainConfig direct = rc.inner;
  direct.epochs = rc.M * rc.E;
  direct.shard_id = 0;
  direct.first_epoch = 0;
  const TrainOutput plain =
      train_epochs(init, data, direct, MemoryBank(sched.T, direct.gamma), sched);

  CHECK(iet.model.flat() == plain.model.flat());
  CHECK(iet.bank.values() == plain.bank.values());
  CHECK(iet.skips.size() == plain.skips.size());
}

TEST_CASE("one M-round call equals M single-round calls with first_round") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 8);
  const ShardPlan plan = split_dataset(data, 3, ShardMode::IidClasswise, 2);

  RoundConfig whole;
  whole.M = 3;
  whole.E = 2;
  whole.inner = inner_cfg();
  const IetResult full = run_iet(data, plan, whole, sched, init);

  Denoiser model = init;
  MemoryBank bank(sched.T, whole.inner.gamma);
  std::size_t skips = 0;
  for (int m = 0; m < 3; ++m) {
    RoundConfig one = whole;
    one.M = 1;
    one.first_round = m;
    const IetResult step = run_iet(data, plan, one, sched, model, &bank);
    model = step.model;
    bank = step.bank;
    skips += step.skips.size();
  }
  CHECK(model.flat() == full.model.flat());
  CHECK(bank.values() == full.bank.values());
  CHECK(bank.update_counts() == full.bank.update_counts());
  CHECK(skips == full.skips.size());
}

TEST_CASE("run_iet logs one entry per (round, shard) and is deterministic") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 12);
  const ShardPlan plan = split_dataset(data, 2, ShardMode::IidRandom, 3);

  RoundConfig rc;
  rc.M = 2;
  rc.E = 2;
  rc.inner = inner_cfg();
  const IetResult a = run_iet(data, plan, rc, sched, init);
  const IetResult b = run_iet(data, plan, rc, sched, init);
  CHECK(a.model.flat() == b.model.flat());

  REQUIRE(a.rounds.size() == 4);
  std::set<std::pair<int, int>> cells;
  for (const auto& log : a.rounds) {
    cells.insert({log.round, log.shard});
    CHECK(static_cast<int>(log.epochs.size()) == rc.E);
    CHECK(log.param_dist >= 0.0);
    CHECK(std::isfinite(log.param_dist));
  }
  CHECK(cells.size() == 4);
  CHECK(cells.count({0, 0}) == 1);
  CHECK(cells.count({1, 1}) == 1);

  // Absolute epoch indices advance across rounds.
  for (const auto& log : a.rounds)
    for (int e = 0; e < rc.E; ++e)
      CHECK(log.epochs[e].epoch == log.round * rc.E + e);
}

TEST_CASE("a round of zero epochs returns the initial model bit-exactly") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 15);
  const ShardPlan plan = split_dataset(data, 2, ShardMode::IidRandom, 3);

  RoundConfig rc;
  rc.M = 1;
  rc.E = 0;
  rc.inner = inner_cfg();
  const IetResult idle = run_iet(data, plan, rc, sched, init);
  CHECK(idle.model.flat() == init.flat());  // aggregate of identical copies
  REQUIRE(idle.rounds.size() == 2);         // rounds still logged, just empty
  CHECK(idle.rounds[0].epochs.empty());
  CHECK(idle.rounds[0].param_dist == 0.0);
}

TEST_CASE("bank policies differ and sequential threads one bank through") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 19);
  const ShardPlan plan = split_dataset(data, 3, ShardMode::IidRandom, 4);

  RoundConfig avg;
  avg.M = 2;
  avg.E = 2;
  avg.inner = inner_cfg(Method::Agc);
  RoundConfig seq = avg;
  seq.bank_policy = BankPolicy::SequentialShared;

  const IetResult ra = run_iet(data, plan, avg, sched, init);
  const IetResult rs = run_iet(data, plan, seq, sched, init);

  // Same shard streams, different bank evolution -> different bank contents.
  CHECK(ra.bank.values() != rs.bank.values());

  // Sequential: every presentation in a round updates one shared bank, so
  // counts after M rounds equal M * n exactly; averaged banks divide by K.
  std::uint64_t seq_updates = 0;
  for (auto c : rs.bank.update_counts()) seq_updates += c;
  CHECK(seq_updates == static_cast<std::uint64_t>(avg.M) *
                           static_cast<std::uint64_t>(data.size()) *
                           static_cast<std::uint64_t>(avg.E));
}

TEST_CASE("run_iet validates structural preconditions") {
  const Dataset data = demo_data();
  const Schedule sched = demo_sched();
  Denoiser init(demo_arch());
  init = Denoiser::random_init(init.arch(), 23);
  RoundConfig rc;
  rc.M = 1;
  rc.E = 1;
  rc.inner = inner_cfg();

  ShardPlan plan = split_dataset(data, 2, ShardMode::IidRandom, 3);
  ShardPlan broken = plan;
  broken.assignment.pop_back();
  CHECK_THROWS_AS(run_iet(data, broken, rc, sched, init), ShapeError);

  RoundConfig bad = rc;
  bad.M = -1;
  CHECK_THROWS_AS(run_iet(data, plan, bad, sched, init), ConfigError);

  MemoryBank wrong(sched.T + 2, rc.inner.gamma);
  CHECK_THROWS_AS(run_iet(data, plan, rc, sched, init, &wrong), ShapeError);
}
