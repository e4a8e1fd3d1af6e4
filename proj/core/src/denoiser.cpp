#include "ietagc/denoiser.hpp"

#include <cmath>
#include <stdexcept>

#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace ietagc {

namespace {

void check_arch(const DenoiserArch& a) {
  if (a.d < 1) throw ConfigError("denoiser: d must be >= 1");
  if (a.time_embed < 2 || a.time_embed % 2 != 0)
    throw ConfigError("denoiser: time_embed must be even and >= 2");
  if (a.hidden1 < 1 || a.hidden2 < 1)
    throw ConfigError("denoiser: hidden widths must be >= 1");
}

}  // namespace

std::size_t DenoiserArch::param_count() const {
  const std::size_t in = static_cast<std::size_t>(input_width());
  const std::size_t h1 = hidden1, h2 = hidden2, out = d;
  return h1 * in + h1 + h2 * h1 + h2 + out * h2;
}

Denoiser::Denoiser(const DenoiserArch& arch) : arch_(arch) {
  check_arch(arch_);
  const std::size_t in = arch_.input_width();
  const std::size_t h1 = arch_.hidden1, h2 = arch_.hidden2;
  w1_ = 0;
  b1_ = w1_ + h1 * in;
  w2_ = b1_ + h1;
  b2_ = w2_ + h2 * h1;
  w3_ = b2_ + h2;
  params_.assign(arch_.param_count(), 0.0);
}

Denoiser Denoiser::random_init(const DenoiserArch& arch, std::uint64_t seed) {
  Denoiser p(arch);
  Rng rng(seed);
  const int in = arch.input_width();
  auto fill = [&](std::size_t off, std::size_t rows, std::size_t cols) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i)
      p.params_[off + i] = scale * rng.normal();
  };
  fill(p.w1_, arch.hidden1, in);
  fill(p.w2_, arch.hidden2, arch.hidden1);
  fill(p.w3_, arch.d, arch.hidden2);
  return p;
}

Denoiser Denoiser::from_flat(const DenoiserArch& arch, std::vector<double> flat) {
  Denoiser p(arch);
  if (flat.size() != p.params_.size())
    throw ShapeError("denoiser: flat parameter size mismatch");
  p.params_ = std::move(flat);
  return p;
}

bool Denoiser::all_finite() const {
  for (double v : params_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double> Denoiser::time_embedding(int t, int width) {
  if (width < 2 || width % 2 != 0)
    throw ConfigError("time_embedding: width must be even and >= 2");
  const int half = width / 2;
  std::vector<double> e(width);
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    e[2 * k] = std::sin(t * freq);
    e[2 * k + 1] = std::cos(t * freq);
  }
  return e;
}

void Denoiser::forward_cached(std::span<const double> x_t, int t,
                              Activations& acts) const {
  const int d = arch_.d, te = arch_.time_embed;
  const int in = arch_.input_width();
  const int h1 = arch_.hidden1, h2 = arch_.hidden2;
  if (static_cast<int>(x_t.size()) != d)
    throw ShapeError("denoiser forward: x_t dimension mismatch");
  if (t < 1) throw ConfigError("denoiser forward: t must be >= 1");

  acts.input.resize(in);
  for (int i = 0; i < d; ++i) acts.input[i] = x_t[i];
  const int half = te / 2;
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    acts.input[d + 2 * k] = std::sin(t * freq);
    acts.input[d + 2 * k + 1] = std::cos(t * freq);
  }

  acts.a1.resize(h1);
  for (int r = 0; r < h1; ++r) {
    const double* w = &params_[w1_ + static_cast<std::size_t>(r) * in];
    double z = params_[b1_ + r];
    for (int c = 0; c < in; ++c) z += w[c] * acts.input[c];
    acts.a1[r] = std::tanh(z);
  }

  acts.a2.resize(h2);
  for (int r = 0; r < h2; ++r) {
    const double* w = &params_[w2_ + static_cast<std::size_t>(r) * h1];
    double z = params_[b2_ + r];
    for (int c = 0; c < h1; ++c) z += w[c] * acts.a1[c];
    acts.a2[r] = std::tanh(z);
  }

  acts.out.resize(d);
  for (int r = 0; r < d; ++r) {
    const double* w = &params_[w3_ + static_cast<std::size_t>(r) * h2];
    double z = 0.0;
    for (int c = 0; c < h2; ++c) z += w[c] * acts.a2[c];
    acts.out[r] = z;
  }
}

std::vector<double> Denoiser::forward(std::span<const double> x_t, int t) const {
  Activations acts;
  forward_cached(x_t, t, acts);
  return std::move(acts.out);
}

void Denoiser::accumulate_grad(const Activations& acts,
                               std::span<const double> dout, double weight,
                               std::span<double> grad) const {
  const int d = arch_.d, in = arch_.input_width();
  const int h1 = arch_.hidden1, h2 = arch_.hidden2;
  if (static_cast<int>(dout.size()) != d)
    throw ShapeError("accumulate_grad: dout dimension mismatch");
  if (grad.size() != params_.size())
    throw ShapeError("accumulate_grad: grad size mismatch");

  std::vector<double> dz3(d);
  for (int r = 0; r < d; ++r) dz3[r] = weight * dout[r];

  // Output layer: dW3 = dz3 a2^T, da2 = W3^T dz3.
  std::vector<double> da2(h2, 0.0);
  for (int r = 0; r < d; ++r) {
    double* g = &grad[w3_ + static_cast<std::size_t>(r) * h2];
    const double* w = &params_[w3_ + static_cast<std::size_t>(r) * h2];
    const double dz = dz3[r];
    for (int c = 0; c < h2; ++c) {
      g[c] += dz * acts.a2[c];
      da2[c] += w[c] * dz;
    }
  }

  // Hidden 2 (tanh): dz2 = da2 * (1 - a2^2).
  std::vector<double> dz2(h2);
  for (int r = 0; r < h2; ++r) dz2[r] = da2[r] * (1.0 - acts.a2[r] * acts.a2[r]);
  std::vector<double> da1(h1, 0.0);
  for (int r = 0; r < h2; ++r) {
    double* g = &grad[w2_ + static_cast<std::size_t>(r) * h1];
    const double* w = &params_[w2_ + static_cast<std::size_t>(r) * h1];
    const double dz = dz2[r];
    for (int c = 0; c < h1; ++c) {
      g[c] += dz * acts.a1[c];
      da1[c] += w[c] * dz;
    }
    grad[b2_ + r] += dz;
  }

  // Hidden 1 (tanh).
  std::vector<double> dz1(h1);
  for (int r = 0; r < h1; ++r) dz1[r] = da1[r] * (1.0 - acts.a1[r] * acts.a1[r]);
  for (int r = 0; r < h1; ++r) {
    double* g = &grad[w1_ + static_cast<std::size_t>(r) * in];
    const double dz = dz1[r];
    for (int c = 0; c < in; ++c) g[c] += dz * acts.input[c];
    grad[b1_ + r] += dz;
  }
}

}  // namespace ietagc
