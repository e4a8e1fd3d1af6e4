#include "ietagc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "binio.hpp"
#include "ietagc/audit.hpp"
#include "ietagc/checkpoint.hpp"
#include "ietagc/diffusion.hpp"
#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ietagc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<DupSpec> parse_dup(const std::string& text) {
  std::vector<DupSpec> out;
  if (text.empty()) return out;
  const auto strict_int = [](const std::string& s) {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  };
  for (const std::string& item : split(text, ',')) {
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw ConfigError("config field 'data.dup': expected 'component:copies' "
                        "entries, got '" + item + "'");
    try {
      DupSpec d;
      d.component = strict_int(item.substr(0, colon));
      d.copies = strict_int(item.substr(colon + 1));
      out.push_back(d);
    } catch (const std::exception&) {
      throw ConfigError("config field 'data.dup': bad entry '" + item + "'");
    }
  }
  return out;
}

std::string dup_to_string(const std::vector<DupSpec>& dup) {
  std::string out;
  for (const DupSpec& d : dup) {
    if (!out.empty()) out += ',';
    out += std::to_string(d.component) + ':' + std::to_string(d.copies);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (double x : v) {
    if (!out.empty()) out += ',';
    out += fmt(x);
  }
  return out;
}

void require(bool ok, const std::string& field, const std::string& rule) {
  if (!ok) throw ConfigError("config field '" + field + "': " + rule);
}

}  // namespace

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "data.kind", "data.path", "data.components", "data.per_component",
      "data.d", "data.sigma", "data.count", "data.grid", "data.flat_frac",
      "data.gradient_frac", "data.texture_frac", "data.dup",
      "schedule.t", "schedule.beta_min", "schedule.beta_max",
      "model.time_embed", "model.hidden1", "model.hidden2",
      "iet.k", "iet.mode", "iet.alpha", "iet.rounds", "iet.epochs_per_round",
      "iet.bank_policy",
      "train.method", "train.eta", "train.batch_size", "train.epochs",
      "agc.lambda", "agc.gamma", "agc.per_sample_update",
      "dp.tau", "input_noise.var",
      "audit.n", "audit.thresholds", "audit.gen_count", "audit.include_nearest",
      "analyze.draws_per_t", "analyze.t_points", "analyze.decile",
      "analyze.dup_min",
      "seed", "checkpoint.interval",
  };
  return keys;
}

ExperimentSpec ExperimentSpec::from_config(const Config& c) {
  c.check_known(known_config_keys());
  ExperimentSpec s;

  s.data_kind = c.get_string("data.kind", "mixture");
  require(s.data_kind == "mixture" || s.data_kind == "patterns" ||
              s.data_kind == "file",
          "data.kind", "must be mixture|patterns|file");
  s.data_path = c.get_string("data.path", "");
  require(s.data_kind != "file" || !s.data_path.empty(), "data.path",
          "required when data.kind = file");
  s.components = c.get_int("data.components", s.components);
  require(s.components >= 1, "data.components", "must be >= 1");
  s.per_component = c.get_int("data.per_component", s.per_component);
  require(s.per_component >= 1, "data.per_component", "must be >= 1");
  s.d = c.get_int("data.d", s.d);
  require(s.d >= 1, "data.d", "must be >= 1");
  s.sigma = c.get_double("data.sigma", s.sigma);
  require(s.sigma > 0.0, "data.sigma", "must be > 0");
  s.count = c.get_int("data.count", s.count);
  require(s.count >= 1, "data.count", "must be >= 1");
  s.grid = c.get_int("data.grid", s.grid);
  require(s.grid >= 2, "data.grid", "must be >= 2");
  s.mix.flat = c.get_double("data.flat_frac", s.mix.flat);
  s.mix.gradient = c.get_double("data.gradient_frac", s.mix.gradient);
  s.mix.texture = c.get_double("data.texture_frac", s.mix.texture);
  require(s.mix.flat >= 0 && s.mix.gradient >= 0 && s.mix.texture >= 0 &&
              s.mix.flat + s.mix.gradient + s.mix.texture > 0,
          "data.flat_frac", "family fractions must be >= 0 and not all zero");
  s.dup = parse_dup(c.get_string("data.dup", ""));
  for (const DupSpec& d : s.dup) {
    require(d.component >= 0, "data.dup", "component must be >= 0");
    require(d.copies >= 1, "data.dup", "copies must be >= 1");
  }

  s.T = c.get_int("schedule.t", s.T);
  s.explicit_T = c.has("schedule.t");
  require(s.T >= 2, "schedule.t", "must be >= 2");
  s.beta_min = c.get_double("schedule.beta_min", s.beta_min);
  s.beta_max = c.get_double("schedule.beta_max", s.beta_max);
  require(s.beta_min > 0 && s.beta_min <= s.beta_max && s.beta_max < 1,
          "schedule.beta_min", "need 0 < beta_min <= beta_max < 1");

  s.time_embed = c.get_int("model.time_embed", s.time_embed);
  require(s.time_embed >= 2 && s.time_embed % 2 == 0, "model.time_embed",
          "must be even and >= 2");
  s.hidden1 = c.get_int("model.hidden1", s.hidden1);
  s.hidden2 = c.get_int("model.hidden2", s.hidden2);
  require(s.hidden1 >= 1 && s.hidden2 >= 1, "model.hidden1", "must be >= 1");

  s.K = c.get_int("iet.k", s.K);
  require(s.K >= 1, "iet.k", "must be >= 1");
  try {
    s.mode = shard_mode_from_string(c.get_string("iet.mode", "iid_random"));
    s.bank_policy =
        bank_policy_from_string(c.get_string("iet.bank_policy", "average"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'iet.mode'/'iet.bank_policy': ") +
                      e.what());
  }
  s.dirichlet_alpha = c.get_double("iet.alpha", s.dirichlet_alpha);
  require(s.dirichlet_alpha > 0.0, "iet.alpha", "must be > 0");
  s.M = c.get_int("iet.rounds", s.M);
  require(s.M >= 1, "iet.rounds", "must be >= 1");
  if (c.has("iet.epochs_per_round"))
    s.E = c.get_int("iet.epochs_per_round", s.E);
  else if (c.has("train.epochs"))
    s.E = c.get_int("train.epochs", s.E);
  else
    s.E = 100;
  require(s.E >= 0, "iet.epochs_per_round", "must be >= 0");

  try {
    s.train.method = method_from_string(c.get_string("train.method", "default"));
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config field 'train.method': ") + e.what());
  }
  s.train.eta = c.get_double("train.eta", s.train.eta);
  s.train.batch_size = c.get_int("train.batch_size", s.train.batch_size);
  s.train.lambda = c.get_double("agc.lambda", s.train.lambda);
  s.train.gamma = c.get_double("agc.gamma", s.train.gamma);
  s.train.per_sample_update =
      c.get_bool("agc.per_sample_update", s.train.per_sample_update);
  s.train.tau = c.get_double("dp.tau", s.train.tau);
  s.train.input_noise_var =
      c.get_double("input_noise.var", s.train.input_noise_var);
  s.seed = c.get_uint64("seed", s.seed);
  s.train.seed = s.seed;
  s.train.epochs = s.E;
  s.train.validate();

  s.audit_n = c.get_int("audit.n", s.audit_n);
  require(s.audit_n >= 1, "audit.n", "must be >= 1");
  s.thresholds = c.get_double_list("audit.thresholds", s.thresholds);
  for (double t : s.thresholds)
    require(t >= 0.0, "audit.thresholds", "entries must be >= 0");
  s.gen_count = c.get_int("audit.gen_count", s.gen_count);
  require(s.gen_count >= 1, "audit.gen_count", "must be >= 1");
  s.include_nearest = c.get_bool("audit.include_nearest", s.include_nearest);

  s.draws_per_t = c.get_int("analyze.draws_per_t", s.draws_per_t);
  require(s.draws_per_t >= 1, "analyze.draws_per_t", "must be >= 1");
  s.t_points = c.get_int("analyze.t_points", s.t_points);
  require(s.t_points >= 1, "analyze.t_points", "must be >= 1");
  s.decile = c.get_double("analyze.decile", s.decile);
  require(s.decile > 0.0 && s.decile <= 0.5, "analyze.decile",
          "must be in (0, 0.5]");
  s.dup_min = c.get_int("analyze.dup_min", s.dup_min);
  require(s.dup_min >= 2, "analyze.dup_min", "must be >= 2");

  s.checkpoint_interval = c.get_int("checkpoint.interval", 0);
  require(s.checkpoint_interval >= 0, "checkpoint.interval", "must be >= 0");

  // The manifest embeds the fully resolved configuration so a rerun does not
  // depend on compiled-in defaults.
  Config resolved;
  resolved.set("data.kind", s.data_kind);
  if (!s.data_path.empty()) resolved.set("data.path", s.data_path);
  resolved.set("data.components", std::to_string(s.components));
  resolved.set("data.per_component", std::to_string(s.per_component));
  resolved.set("data.d", std::to_string(s.d));
  resolved.set("data.sigma", fmt(s.sigma));
  resolved.set("data.count", std::to_string(s.count));
  resolved.set("data.grid", std::to_string(s.grid));
  resolved.set("data.flat_frac", fmt(s.mix.flat));
  resolved.set("data.gradient_frac", fmt(s.mix.gradient));
  resolved.set("data.texture_frac", fmt(s.mix.texture));
  resolved.set("data.dup", dup_to_string(s.dup));
  resolved.set("schedule.t", std::to_string(s.T));
  resolved.set("schedule.beta_min", fmt(s.beta_min));
  resolved.set("schedule.beta_max", fmt(s.beta_max));
  resolved.set("model.time_embed", std::to_string(s.time_embed));
  resolved.set("model.hidden1", std::to_string(s.hidden1));
  resolved.set("model.hidden2", std::to_string(s.hidden2));
  resolved.set("iet.k", std::to_string(s.K));
  resolved.set("iet.mode", shard_mode_name(s.mode));
  resolved.set("iet.alpha", fmt(s.dirichlet_alpha));
  resolved.set("iet.rounds", std::to_string(s.M));
  resolved.set("iet.epochs_per_round", std::to_string(s.E));
  resolved.set("iet.bank_policy", bank_policy_name(s.bank_policy));
  resolved.set("train.method", method_name(s.train.method));
  resolved.set("train.eta", fmt(s.train.eta));
  resolved.set("train.batch_size", std::to_string(s.train.batch_size));
  resolved.set("agc.lambda", fmt(s.train.lambda));
  resolved.set("agc.gamma", fmt(s.train.gamma));
  resolved.set("agc.per_sample_update",
               s.train.per_sample_update ? "true" : "false");
  resolved.set("dp.tau", fmt(s.train.tau));
  resolved.set("input_noise.var", fmt(s.train.input_noise_var));
  resolved.set("audit.n", std::to_string(s.audit_n));
  resolved.set("audit.thresholds", join_doubles(s.thresholds));
  resolved.set("audit.gen_count", std::to_string(s.gen_count));
  resolved.set("audit.include_nearest", s.include_nearest ? "true" : "false");
  resolved.set("analyze.draws_per_t", std::to_string(s.draws_per_t));
  resolved.set("analyze.t_points", std::to_string(s.t_points));
  resolved.set("analyze.decile", fmt(s.decile));
  resolved.set("analyze.dup_min", std::to_string(s.dup_min));
  resolved.set("seed", std::to_string(s.seed));
  resolved.set("checkpoint.interval", std::to_string(s.checkpoint_interval));
  s.config = std::move(resolved);
  return s;
}

Dataset ExperimentSpec::build_dataset() const {
  if (data_kind == "mixture")
    return gen_mixture(components, per_component, d, dup, seed, sigma);
  if (data_kind == "patterns") return gen_patterns(count, grid, mix, dup, seed);
  return load_dataset(data_path);
}

DenoiserArch ExperimentSpec::arch_for(int data_d) const {
  DenoiserArch a;
  a.d = data_d;
  a.time_embed = time_embed;
  a.hidden1 = hidden1;
  a.hidden2 = hidden2;
  return a;
}

namespace {

json config_to_json(const Config& c) {
  json j = json::object();
  for (const auto& [k, v] : c.values()) j[k] = v;
  return j;
}

void write_manifest(const fs::path& path, const std::string& kind,
                    const Config& config, std::uint64_t dataset_hash,
                    const std::vector<std::string>& outputs) {
  json j;
  j["format_version"] = 1;
  j["kind"] = kind;
  j["config"] = config_to_json(config);
  j["dataset_hash"] = hex64(dataset_hash);
  j["outputs"] = outputs;
  write_text(path, j.dump(2) + "\n");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path + ": invalid JSON (" + e.what() + ")");
  }
}

}  // namespace

Config config_from_manifest(const std::string& manifest_path) {
  const json j = read_json_file(manifest_path);
  if (!j.contains("config") || !j.at("config").is_object())
    throw IoError(manifest_path + ": manifest has no config object");
  Config c;
  for (const auto& [k, v] : j.at("config").items()) {
    if (!v.is_string())
      throw IoError(manifest_path + ": config values must be strings");
    c.set(k, v.get<std::string>());
  }
  return c;
}

namespace {

void write_epoch_stats_csv(const fs::path& path,
                           const std::vector<ShardRoundLog>& rounds) {
  std::ostringstream out;
  out << "round,shard,epoch,mean_loss,skipped,grad_norm_mean,grad_norm_max\n";
  for (const ShardRoundLog& r : rounds)
    for (const EpochStats& e : r.epochs)
      out << r.round << ',' << r.shard << ',' << e.epoch << ','
          << fmt(e.mean_loss) << ',' << e.skipped << ','
          << fmt(e.grad_norm_mean) << ',' << fmt(e.grad_norm_max) << '\n';
  write_text(path, out.str());
}

void write_rounds_csv(const fs::path& path,
                      const std::vector<ShardRoundLog>& rounds) {
  std::ostringstream out;
  out << "round,shard,epochs,final_mean_loss,skipped_total,param_dist\n";
  for (const ShardRoundLog& r : rounds) {
    std::size_t skipped = 0;
    for (const EpochStats& e : r.epochs) skipped += e.skipped;
    const double final_loss = r.epochs.empty() ? 0.0 : r.epochs.back().mean_loss;
    out << r.round << ',' << r.shard << ',' << r.epochs.size() << ','
        << fmt(final_loss) << ',' << skipped << ',' << fmt(r.param_dist)
        << '\n';
  }
  write_text(path, out.str());
}

void write_skips_csv(const fs::path& path,
                     const std::vector<SkipRecord>& skips) {
  std::ostringstream out;
  out << "sample_id,epoch,t,loss,ratio\n";
  for (const SkipRecord& s : skips)
    out << s.sample_id << ',' << s.epoch << ',' << s.t << ',' << fmt(s.loss)
        << ',' << fmt(s.ratio) << '\n';
  write_text(path, out.str());
}

std::vector<SkipRecord> read_skips_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<SkipRecord> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {
      first = false;
      continue;  // header
    }
    if (line.empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 5)
      throw IoError(path.string() + ": malformed skip row '" + line + "'");
    try {
      SkipRecord r;
      r.sample_id = std::stoll(cols[0]);
      r.epoch = std::stoi(cols[1]);
      r.t = std::stoi(cols[2]);
      r.loss = std::stod(cols[3]);
      r.ratio = std::stod(cols[4]);
      out.push_back(r);
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed skip row '" + line + "'");
    }
  }
  return out;
}

}  // namespace

int cmd_train(const ExperimentSpec& spec, const std::string& out_dir) {
  const fs::path out(out_dir);
  fs::create_directories(out);

  Dataset data = spec.build_dataset();
  save_dataset(data, out / "dataset.bin");
  const std::uint64_t data_hash = data.content_hash();

  const Schedule sched = build_schedule(spec.T, spec.beta_min, spec.beta_max);
  const DenoiserArch arch = spec.arch_for(data.d);
  Denoiser model = Denoiser::random_init(arch, derive_seed(spec.seed, "init"));
  const ShardPlan plan =
      split_dataset(data, spec.K, spec.mode, spec.seed, spec.dirichlet_alpha);

  RoundConfig rc;
  rc.E = spec.E;
  rc.bank_policy = spec.bank_policy;
  rc.inner = spec.train;

  MemoryBank bank(sched.T, spec.train.gamma);
  std::vector<ShardRoundLog> rounds;
  std::vector<SkipRecord> skips;
  std::vector<std::string> outputs = {"dataset.bin", "checkpoint.bin",
                                      "epoch_stats.csv", "rounds.csv",
                                      "skips.csv", "manifest.json"};
  std::string last_ck;

  try {
    for (int m = 0; m < spec.M; ++m) {
      RoundConfig one = rc;
      one.M = 1;
      one.first_round = m;
      one.inner.last_checkpoint = last_ck;
      IetResult res = run_iet(data, plan, one, sched, std::move(model), &bank);
      model = std::move(res.model);
      bank = std::move(res.bank);
      for (auto& r : res.rounds) rounds.push_back(std::move(r));
      skips.insert(skips.end(), res.skips.begin(), res.skips.end());
      if (spec.checkpoint_interval > 0 &&
          (m + 1) % spec.checkpoint_interval == 0 && m + 1 < spec.M) {
        char name[48];
        std::snprintf(name, sizeof name, "checkpoint_round_%04d.bin", m + 1);
        const fs::path ck_path = out / name;
        save_checkpoint(ck_path.string(), {arch, sched.T, model.flat(), bank});
        last_ck = ck_path.string();
        outputs.push_back(name);
      }
    }
  } catch (const TrainingDivergedError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    write_text(out / "divergence.txt", std::string(e.what()) + "\n");
    return kExitDiverged;
  }

  save_checkpoint((out / "checkpoint.bin").string(),
                  {arch, sched.T, model.flat(), bank});
  write_epoch_stats_csv(out / "epoch_stats.csv", rounds);
  write_rounds_csv(out / "rounds.csv", rounds);
  write_skips_csv(out / "skips.csv", skips);
  std::sort(outputs.begin(), outputs.end());
  write_manifest(out / "manifest.json", "train", spec.config, data_hash,
                 outputs);

  double final_loss = 0.0;
  if (!rounds.empty() && !rounds.back().epochs.empty())
    final_loss = rounds.back().epochs.back().mean_loss;
  std::cout << "trained " << method_name(spec.train.method) << ": K=" << spec.K
            << " M=" << spec.M << " E=" << spec.E << " seed=" << spec.seed
            << " final_mean_loss=" << fmt_short(final_loss)
            << " skips=" << skips.size() << "\n"
            << "outputs in " << out.string() << "\n";
  return kExitOk;
}

int cmd_audit(const ExperimentSpec& spec, const std::string& checkpoint_path,
              const std::string& data_path, const std::string& out_dir,
              const std::string& label) {
  const Checkpoint ck = load_checkpoint(checkpoint_path);
  const Dataset data = load_dataset(data_path);

  if (ck.arch.d != data.d) {
    std::cerr << "incompatible artifacts: checkpoint " << checkpoint_path
              << " (d=" << ck.arch.d << ", T=" << ck.T << ") vs dataset "
              << data_path << " (d=" << data.d << ", n=" << data.size()
              << ")\n";
    return kExitIncompatible;
  }
  if (spec.explicit_T && spec.T != ck.T) {
    std::cerr << "incompatible artifacts: requested schedule.t=" << spec.T
              << " but checkpoint " << checkpoint_path << " was trained with T="
              << ck.T << "\n";
    return kExitIncompatible;
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  const Schedule sched = build_schedule(ck.T, spec.beta_min, spec.beta_max);
  const Denoiser model = ck.model();

  const std::vector<Sample> generated = sample_generate(
      model, sched, spec.gen_count, derive_seed(spec.seed, "audit"));
  const std::vector<MemorizationVerdict> verdicts =
      audit_verdicts(generated, data, spec.audit_n, spec.thresholds);
  const MqCounts mq = mq_from_verdicts(verdicts, spec.thresholds);
  const double frechet = frechet_distance(generated, data.samples);

  Dataset gen_ds;
  gen_ds.samples = generated;
  gen_ds.d = data.d;
  gen_ds.labels_present = false;
  save_dataset(gen_ds, out / "generated.bin");

  std::ostringstream csv;
  csv << "generated_id,nearest_train_id,raw_l2,nn_ratio";
  for (double t : spec.thresholds) csv << ",mem_" << fmt_short(t);
  csv << '\n';
  for (const auto& v : verdicts) {
    csv << v.generated_id << ',' << v.nearest_train_id << ',' << fmt(v.raw_l2)
        << ',' << fmt(v.nn_ratio);
    for (const auto& [thr, flag] : v.flags) csv << ',' << (flag ? 1 : 0);
    csv << '\n';
  }
  write_text(out / "verdicts.csv", csv.str());

  json rep;
  rep["format_version"] = 1;
  rep["kind"] = "audit";
  rep["label"] = label;
  rep["checkpoint"] = checkpoint_path;
  rep["dataset_hash"] = hex64(data.content_hash());
  rep["gen_count"] = spec.gen_count;
  rep["n_neighbors"] = spec.audit_n;
  rep["include_nearest"] = spec.include_nearest;
  rep["seed"] = spec.seed;
  rep["schedule_t"] = ck.T;
  json thr = json::array();
  for (double t : spec.thresholds) thr.push_back(t);
  rep["thresholds"] = thr;
  json mqj = json::object();
  for (std::size_t i = 0; i < mq.thresholds.size(); ++i)
    mqj[fmt_short(mq.thresholds[i])] = mq.counts[i];
  rep["mq"] = mqj;
  rep["frechet"] = frechet;
  write_text(out / "report.json", rep.dump(2) + "\n");

  std::cout << "audit " << (label.empty() ? checkpoint_path : label) << ": ";
  for (std::size_t i = 0; i < mq.thresholds.size(); ++i)
    std::cout << "MQ_" << fmt_short(mq.thresholds[i]) << "=" << mq.counts[i]
              << " ";
  std::cout << "frechet=" << fmt_short(frechet) << " gen=" << spec.gen_count
            << "\n"
            << "outputs in " << out.string() << "\n";
  return kExitOk;
}

int cmd_analyze(const ExperimentSpec& spec, const std::string& run_dir,
                const std::string& out_dir) {
  const fs::path run(run_dir);
  for (const char* f :
       {"manifest.json", "dataset.bin", "checkpoint.bin", "skips.csv"}) {
    if (!fs::exists(run / f))
      throw IoError("analyze: missing " + (run / f).string() +
                    " (need a completed training run directory)");
  }
  const ExperimentSpec run_spec = ExperimentSpec::from_config(
      config_from_manifest((run / "manifest.json").string()));
  const Dataset data = load_dataset(run / "dataset.bin");
  const Checkpoint ck = load_checkpoint((run / "checkpoint.bin").string());
  const std::vector<SkipRecord> skips = read_skips_csv(run / "skips.csv");

  const fs::path out(out_dir.empty() ? run : fs::path(out_dir));
  fs::create_directories(out);
  json analysis;
  analysis["format_version"] = 1;
  analysis["kind"] = "analysis";
  std::vector<std::string> notes;

  // Skip histogram (Fig.-4 style).
  const int total_epochs = run_spec.M * run_spec.E;
  const SkipHistogram hist = skip_histogram(skips, data.size(), total_epochs);
  const std::vector<char> dup_mask = data.duplicated_mask(spec.dup_min);
  {
    std::ostringstream csv;
    csv << "sample_id,skip_count,is_duplicate\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
      csv << i << ',' << hist.counts[i] << ',' << (dup_mask[i] ? 1 : 0) << '\n';
    write_text(out / "skip_histogram.csv", csv.str());
  }
  analysis["total_epochs"] = total_epochs;
  analysis["skip_q50"] = hist.q50;
  analysis["skip_q90"] = hist.q90;
  analysis["skip_q99"] = hist.q99;
  analysis["skip_max"] = hist.max_count;

  std::vector<double> dup_counts, unique_counts;
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    (dup_mask[i] ? dup_counts : unique_counts)
        .push_back(static_cast<double>(hist.counts[i]));
  if (!dup_counts.empty() && !unique_counts.empty()) {
    analysis["dup_median_skips"] = percentile(dup_counts, 50.0);
    analysis["unique_median_skips"] = percentile(unique_counts, 50.0);
  }

  // Most/least-skipped deciles (Fig.-5 style groups).
  const std::size_t n = data.size();
  const std::size_t group_size = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(spec.decile * n)));
  std::vector<std::size_t> by_most(n), by_least(n);
  std::iota(by_most.begin(), by_most.end(), std::size_t{0});
  std::stable_sort(by_most.begin(), by_most.end(),
                   [&](std::size_t a, std::size_t b) {
                     return hist.counts[a] > hist.counts[b];
                   });
  by_least.assign(by_most.rbegin(), by_most.rend());
  std::vector<Sample> most, least;
  for (std::size_t i = 0; i < group_size; ++i) {
    most.push_back(data.samples[by_most[i]]);
    least.push_back(data.samples[by_least[i]]);
  }
  analysis["decile_size"] = group_size;

  const ClusteringResult clusters = clustering_analysis(most, least, data);
  {
    std::ostringstream csv;
    csv << "group,distance\n";
    for (double d : clusters.most_skipped) csv << "most_skipped," << fmt(d) << '\n';
    for (double d : clusters.least_skipped)
      csv << "least_skipped," << fmt(d) << '\n';
    write_text(out / "cluster_distances.csv", csv.str());
  }
  const auto mean_of = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  };
  analysis["most_skipped_mean_distance"] = mean_of(clusters.most_skipped);
  analysis["least_skipped_mean_distance"] = mean_of(clusters.least_skipped);

  // Spectral energy needs grid-shaped samples.
  const auto g = static_cast<std::size_t>(
      std::llround(std::sqrt(static_cast<double>(data.d))));
  if (g * g == static_cast<std::size_t>(data.d)) {
    std::ostringstream csv;
    csv << "sample_id,group,energy\n";
    double most_sum = 0.0, least_sum = 0.0;
    for (const Sample& s : most) {
      const double e = spectral_energy(s);
      most_sum += e;
      csv << s.id << ",most_skipped," << fmt(e) << '\n';
    }
    for (const Sample& s : least) {
      const double e = spectral_energy(s);
      least_sum += e;
      csv << s.id << ",least_skipped," << fmt(e) << '\n';
    }
    write_text(out / "spectral_energy.csv", csv.str());
    analysis["most_skipped_mean_energy"] =
        most_sum / static_cast<double>(most.size());
    analysis["least_skipped_mean_energy"] =
        least_sum / static_cast<double>(least.size());
  } else {
    notes.push_back("spectral energy skipped: d is not a perfect square");
  }

  // Loss profiles for duplicated vs unique samples (Fig.-2 style).
  std::vector<Sample> memorized, control;
  for (std::size_t i = 0; i < n; ++i)
    (dup_mask[i] ? memorized : control).push_back(data.samples[i]);
  if (!memorized.empty() && !control.empty()) {
    const Schedule sched =
        build_schedule(ck.T, run_spec.beta_min, run_spec.beta_max);
    const std::vector<int> grid = default_t_grid(ck.T, spec.t_points);
    const std::vector<LossProfileRow> rows =
        loss_profile(ck.model(), memorized, control, sched, grid,
                     spec.draws_per_t, derive_seed(spec.seed, "analyze"));
    std::ostringstream csv;
    csv << "t,mem_mean,mem_p15,mem_p85,ctl_mean,ctl_p15,ctl_p85\n";
    for (const LossProfileRow& r : rows)
      csv << r.t << ',' << fmt(r.mem_mean) << ',' << fmt(r.mem_p15) << ','
          << fmt(r.mem_p85) << ',' << fmt(r.ctl_mean) << ',' << fmt(r.ctl_p15)
          << ',' << fmt(r.ctl_p85) << '\n';
    write_text(out / "loss_profile.csv", csv.str());
  } else {
    notes.push_back(
        "loss profile skipped: dataset has no duplicated group of size >= " +
        std::to_string(spec.dup_min));
  }

  json notes_json = json::array();
  for (const std::string& s : notes) notes_json.push_back(s);
  analysis["notes"] = notes_json;
  write_text(out / "analysis.json", analysis.dump(2) + "\n");

  std::cout << "analyze " << run.string() << ": skips q50=" << hist.q50
            << " q90=" << hist.q90 << " q99=" << hist.q99
            << " decile_size=" << group_size << "\n"
            << "outputs in " << out.string() << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& report_paths,
                const std::string& out_path) {
  if (report_paths.size() < 2)
    throw ConfigError("compare: need at least two report files");

  struct Row {
    std::string label;
    json rep;
  };
  std::vector<Row> rows;
  for (const std::string& p : report_paths) {
    json j = read_json_file(p);
    std::string label = j.value("label", "");
    if (label.empty()) label = fs::path(p).parent_path().filename().string();
    if (label.empty()) label = p;
    rows.push_back({label, std::move(j)});
  }

  // Union of thresholds across reports, ascending.
  std::vector<double> thresholds;
  for (const Row& r : rows)
    if (r.rep.contains("thresholds"))
      for (const auto& t : r.rep.at("thresholds"))
        thresholds.push_back(t.get<double>());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const json& first = rows.front().rep;
  auto note_if_differs = [&](const Row& r, const char* key) -> std::string {
    if (!r.rep.contains(key) || !first.contains(key)) return "";
    if (r.rep.at(key) == first.at(key)) return "";
    return std::string(key) + " differs";
  };

  std::ostringstream csv;
  csv << "label,gen_count,n_neighbors";
  for (double t : thresholds) csv << ",mq_" << fmt_short(t);
  csv << ",frechet,notes\n";

  std::ostringstream table;
  table << "label | gen | n";
  for (double t : thresholds) table << " | MQ_" << fmt_short(t);
  table << " | frechet | notes\n";

  for (const Row& r : rows) {
    std::string notes;
    for (const char* key :
         {"gen_count", "n_neighbors", "dataset_hash", "include_nearest",
          "thresholds", "schedule_t"}) {
      const std::string w = note_if_differs(r, key);
      if (!w.empty()) notes += (notes.empty() ? "" : "; ") + w;
    }
    auto cell = [&](const char* key) -> std::string {
      return r.rep.contains(key) ? r.rep.at(key).dump() : "";
    };
    std::string gen = cell("gen_count"), nn = cell("n_neighbors");
    csv << r.label << ',' << gen << ',' << nn;
    table << r.label << " | " << gen << " | " << nn;
    for (double t : thresholds) {
      std::string v;
      if (r.rep.contains("mq") && r.rep.at("mq").contains(fmt_short(t)))
        v = r.rep.at("mq").at(fmt_short(t)).dump();
      csv << ',' << v;
      table << " | " << v;
    }
    std::string fr;
    if (r.rep.contains("frechet")) fr = fmt_short(r.rep.at("frechet").get<double>());
    csv << ',' << fr << ',' << notes << '\n';
    table << " | " << fr << " | " << notes << '\n';
  }

  if (!out_path.empty()) write_text(out_path, csv.str());
  std::cout << table.str();
  if (!out_path.empty()) std::cout << "comparison written to " << out_path << "\n";
  return kExitOk;
}

int cmd_gen_data(const ExperimentSpec& spec, const std::string& out_dir) {
  if (spec.data_kind == "file")
    throw ConfigError("gen-data: data.kind=file has nothing to generate");
  const fs::path out(out_dir);
  fs::create_directories(out);
  const Dataset data = spec.build_dataset();
  save_dataset(data, out / "dataset.bin");
  export_dataset_csv(data, out / "dataset.csv");
  write_manifest(out / "manifest.json", "gen-data", spec.config,
                 data.content_hash(),
                 {"dataset.bin", "dataset.csv", "manifest.json"});
  std::cout << "generated " << spec.data_kind << " dataset: n=" << data.size()
            << " d=" << data.d << " classes=" << data.class_count()
            << " dup_groups=" << data.duplication_map.size() << " hash="
            << hex64(data.content_hash()) << "\n"
            << "outputs in " << out.string() << "\n";
  return kExitOk;
}

}  // namespace ietagc
