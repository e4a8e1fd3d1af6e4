#include "ietagc/diffusion.hpp"

#include <cmath>

#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace ietagc {

namespace {

void check_draw(std::size_t d, const NoiseDraw& draw, const Schedule& sched) {
  if (draw.t < 1 || draw.t > sched.T)
    throw ConfigError("diffusion: draw timestep out of [1, T]");
  if (draw.epsilon.size() != d)
    throw ShapeError("diffusion: noise dimension mismatch");
}

}  // namespace

std::vector<double> forward_noise(std::span<const double> x, const NoiseDraw& draw,
                                  const Schedule& sched) {
  check_draw(x.size(), draw, sched);
  const double abar = sched.alpha[draw.t];
  const double cx = std::sqrt(abar);
  const double ce = std::sqrt(1.0 - abar);
  std::vector<double> x_t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    x_t[i] = cx * x[i] + ce * draw.epsilon[i];
  return x_t;
}

double per_sample_loss(const Denoiser& p, std::span<const double> x,
                       const NoiseDraw& draw, const Schedule& sched) {
  const std::vector<double> x_t = forward_noise(x, draw, sched);
  const std::vector<double> pred = p.forward(x_t, draw.t);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = draw.epsilon[i] - pred[i];
    loss += r * r;
  }
  return loss;
}

BatchGradient loss_gradient(const Denoiser& p, std::span<const BatchItem> batch,
                            const Schedule& sched, const MaskFn& mask_fn) {
  if (batch.empty()) throw ConfigError("loss_gradient: empty batch");
  const std::size_t B = batch.size();
  const int d = p.arch().d;

  // Forward pass: cache activations and compute true losses for every sample.
  std::vector<Activations> acts(B);
  std::vector<std::vector<double>> x_t(B);
  BatchGradient out;
  out.losses.resize(B);
  for (std::size_t i = 0; i < B; ++i) {
    const Sample& s = *batch[i].sample;
    if (static_cast<int>(s.x.size()) != d)
      throw ShapeError("loss_gradient: sample dimension mismatch");
    check_draw(s.x.size(), batch[i].draw, sched);
    x_t[i] = forward_noise(s.x, batch[i].draw, sched);
    p.forward_cached(x_t[i], batch[i].draw.t, acts[i]);
    double loss = 0.0;
    for (int k = 0; k < d; ++k) {
      const double r = batch[i].draw.epsilon[k] - acts[i].out[k];
      loss += r * r;
    }
    out.losses[i] = loss;
  }

  std::vector<char> mask;
  if (mask_fn) {
    mask = mask_fn(out.losses);
    if (mask.size() != B) throw ShapeError("loss_gradient: mask size mismatch");
  }

  // Backward pass: masked samples are dropped from the sum, the denominator
  // stays the full batch size.
  out.grad.assign(p.flat().size(), 0.0);
  const double w = 1.0 / static_cast<double>(B);
  std::vector<double> dout(d);
  for (std::size_t i = 0; i < B; ++i) {
    if (!mask.empty() && mask[i]) continue;
    // d/d(pred) of sum_k (eps_k - pred_k)^2 = -2 (eps - pred).
    for (int k = 0; k < d; ++k)
      dout[k] = -2.0 * (batch[i].draw.epsilon[k] - acts[i].out[k]);
    p.accumulate_grad(acts[i], dout, w, out.grad);
  }
  return out;
}

std::vector<Sample> sample_generate(const Denoiser& p, const Schedule& sched,
                                    int n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("sample_generate: n must be >= 1");
  const int d = p.arch().d;
  std::vector<Sample> out(n);
  Activations acts;
  for (int j = 0; j < n; ++j) {
    Rng rng(derive_seed(seed, "gen", static_cast<std::uint64_t>(j)));
    std::vector<double> x = rng.normal_vec(d);
    for (int t = sched.T; t >= 1; --t) {
      p.forward_cached(x, t, acts);
      const double beta = sched.beta[t - 1];
      const double coef = beta / std::sqrt(1.0 - sched.alpha[t]);
      const double inv = 1.0 / std::sqrt(1.0 - beta);
      for (int k = 0; k < d; ++k) x[k] = inv * (x[k] - coef * acts.out[k]);
      if (t > 1) {
        const double sb = std::sqrt(beta);
        for (int k = 0; k < d; ++k) x[k] += sb * rng.normal();
      }
    }
    for (double v : x)
      if (!std::isfinite(v))
        throw NumericalError("sample_generate: non-finite sample");
    out[j].x = std::move(x);
    out[j].label = -1;
    out[j].id = j;
  }
  return out;
}

}  // namespace ietagc
