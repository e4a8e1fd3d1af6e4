#include "ietagc/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ietagc/diffusion.hpp"
#include "ietagc/errors.hpp"

namespace ietagc {

std::string method_name(Method m) {
  switch (m) {
    case Method::Default: return "default";
    case Method::Agc: return "agc";
    case Method::DpSgd: return "dp_sgd";
    case Method::InputNoise: return "input_noise";
  }
  throw ConfigError("unknown method enum value");
}

Method method_from_string(const std::string& s) {
  if (s == "default") return Method::Default;
  if (s == "agc") return Method::Agc;
  if (s == "dp_sgd") return Method::DpSgd;
  if (s == "input_noise") return Method::InputNoise;
  throw ConfigError("unknown method '" + s +
                    "' (expected default|agc|dp_sgd|input_noise)");
}

void TrainConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw ConfigError("train: eta must be positive and finite");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw ConfigError("train: lambda must be >= 0 and finite");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ConfigError("train: gamma must be in (0, 1)");
  if (tau < 0.0 || !std::isfinite(tau))
    throw ConfigError("train: tau must be >= 0 and finite");
  if (input_noise_var < 0.0 || !std::isfinite(input_noise_var))
    throw ConfigError("train: input_noise_var must be >= 0 and finite");
  if (shard_id < 0) throw ConfigError("train: shard_id must be >= 0");
  if (first_epoch < 0) throw ConfigError("train: first_epoch must be >= 0");
}

void sgd_step(std::vector<double>& params, std::span<const double> grad,
              double eta) {
  if (params.size() != grad.size())
    throw ShapeError("sgd_step: gradient size mismatch");
  for (double g : grad)
    if (!std::isfinite(g))
      throw TrainingDivergedError("sgd_step: non-finite gradient", -1, -1);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= eta * grad[i];
}

std::vector<double> dp_noise(std::vector<double> g, double tau, Rng& rng) {
  if (tau < 0.0) throw ConfigError("dp_noise: tau must be >= 0");
  if (tau == 0.0) return g;
  double sq = 0.0;
  for (double v : g) sq += v * v;
  const double sigma = std::sqrt(sq) * tau;
  for (double& v : g) v += sigma * rng.normal();
  return g;
}

std::vector<double> dp_noise(std::vector<double> g, double tau,
                             std::uint64_t seed) {
  Rng rng(seed);
  return dp_noise(std::move(g), tau, rng);
}

Sample add_input_noise(const Sample& x, double var, Rng& rng) {
  if (var < 0.0) throw ConfigError("add_input_noise: var must be >= 0");
  Sample out = x;
  if (var == 0.0) return out;
  const double sd = std::sqrt(var);
  for (double& v : out.x) v += sd * rng.normal();
  return out;
}

Sample add_input_noise(const Sample& x, double var, std::uint64_t seed) {
  Rng rng(seed);
  return add_input_noise(x, var, rng);
}

TrainOutput train_epochs(Denoiser model, const Dataset& data,
                         std::span<const std::size_t> members,
                         const TrainConfig& cfg, MemoryBank bank,
                         const Schedule& sched) {
  cfg.validate();
  if (members.empty()) throw ConfigError("train: empty dataset");
  if (model.arch().d != data.d)
    throw ShapeError("train: model/data dimension mismatch");
  if (bank.T() != sched.T)
    throw ShapeError("train: bank length does not match schedule T");
  for (std::size_t idx : members)
    if (idx >= data.size()) throw ShapeError("train: member index out of range");

  TrainOutput out{std::move(model), std::move(bank), {}, {}};
  const int d = data.d;
  const auto shard = static_cast<std::uint64_t>(cfg.shard_id);

  for (int e = 0; e < cfg.epochs; ++e) {
    const int abs_epoch = cfg.first_epoch + e;
    const auto ep = static_cast<std::uint64_t>(abs_epoch);
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", shard, ep));
    Rng draw_rng(derive_seed(cfg.seed, "draw", shard, ep));
    Rng dp_rng(derive_seed(cfg.seed, "dp", shard, ep));
    Rng xnoise_rng(derive_seed(cfg.seed, "xnoise", shard, ep));

    std::vector<std::size_t> order(members.begin(), members.end());
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0, gn_sum = 0.0, gn_max = 0.0;
    std::size_t skipped = 0, n_batches = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t bsz =
          std::min<std::size_t>(cfg.batch_size, order.size() - b0);
      const int batch_index = static_cast<int>(b0 / cfg.batch_size);

      std::vector<Sample> noisy;
      if (cfg.method == Method::InputNoise) noisy.reserve(bsz);
      std::vector<BatchItem> batch(bsz);
      for (std::size_t i = 0; i < bsz; ++i) {
        const std::size_t idx = order[b0 + i];
        const Sample* s = &data.samples[idx];
        NoiseDraw draw;
        draw.t = 1 + static_cast<int>(draw_rng.uniform_int(sched.T));
        draw.epsilon = draw_rng.normal_vec(d);
        if (cfg.method == Method::InputNoise && cfg.input_noise_var > 0.0) {
          noisy.push_back(add_input_noise(*s, cfg.input_noise_var, xnoise_rng));
          s = &noisy.back();
        }
        batch[i] = BatchItem{s, std::move(draw)};
      }

      MaskFn mask_fn;
      if (cfg.method == Method::Agc) {
        mask_fn = [&](const std::vector<double>& losses) {
          std::vector<char> mask(bsz, 0);
          if (cfg.per_sample_update) {
            for (std::size_t i = 0; i < bsz; ++i) {
              const int t = batch[i].draw.t;
              const double r = out.bank.ratio(losses[i], t);
              out.bank.update(t, losses[i]);
              if (r < cfg.lambda) {
                mask[i] = 1;
                out.skips.push_back({batch[i].sample->id, abs_epoch, t,
                                     losses[i], r});
              }
            }
          } else {
            std::vector<MaskEntry> entries(bsz);
            for (std::size_t i = 0; i < bsz; ++i)
              entries[i] = {batch[i].sample->id, batch[i].draw.t, losses[i]};
            out.bank.apply_mask(entries, cfg.lambda, abs_epoch, &out.skips,
                                &mask);
            for (std::size_t i = 0; i < bsz; ++i)
              out.bank.update(batch[i].draw.t, losses[i]);
          }
          for (char m : mask) skipped += (m != 0);
          return mask;
        };
      }

      BatchGradient bg;
      try {
        bg = loss_gradient(out.model, batch, sched, mask_fn);
        for (double l : bg.losses)
          if (!std::isfinite(l))
            throw TrainingDivergedError("train: non-finite loss", abs_epoch,
                                        batch_index);
        if (cfg.method == Method::DpSgd)
          bg.grad = dp_noise(std::move(bg.grad), cfg.tau, dp_rng);
        sgd_step(out.model.mutable_flat(), bg.grad, cfg.eta);
      } catch (const TrainingDivergedError& err) {
        std::ostringstream msg;
        msg << err.what() << " (epoch " << abs_epoch << ", batch "
            << batch_index << ")";
        if (!cfg.last_checkpoint.empty())
          msg << "; last good checkpoint: " << cfg.last_checkpoint;
        TrainingDivergedError wrapped(msg.str(), abs_epoch, batch_index);
        wrapped.last_checkpoint = cfg.last_checkpoint;
        throw wrapped;
      }

      loss_sum = std::accumulate(bg.losses.begin(), bg.losses.end(), loss_sum);
      double sq = 0.0;
      for (double v : bg.grad) sq += v * v;
      const double gn = std::sqrt(sq);
      gn_sum += gn;
      gn_max = std::max(gn_max, gn);
      ++n_batches;
    }

    EpochStats st;
    st.epoch = abs_epoch;
    st.mean_loss = loss_sum / static_cast<double>(order.size());
    st.skipped = skipped;
    st.grad_norm_mean = n_batches ? gn_sum / static_cast<double>(n_batches) : 0.0;
    st.grad_norm_max = gn_max;
    out.stats.push_back(st);
  }
  return out;
}

TrainOutput train_epochs(Denoiser model, const Dataset& data,
                         const TrainConfig& cfg, MemoryBank bank,
                         const Schedule& sched) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return train_epochs(std::move(model), data, all, cfg, std::move(bank), sched);
}

}  // namespace ietagc
