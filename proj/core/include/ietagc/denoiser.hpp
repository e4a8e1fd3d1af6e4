#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ietagc {

/// Fixed MLP shape: input is concat(x_t, sinusoidal time embedding), two
/// tanh hidden layers, linear output with no bias (so an all-zero network
/// predicts zero noise).
struct DenoiserArch {
  int d = 0;
  int time_embed = 32;  // even
  int hidden1 = 128;
  int hidden2 = 128;

  bool operator==(const DenoiserArch&) const = default;

  int input_width() const { return d + time_embed; }
  std::size_t param_count() const;
};

/// Per-sample forward activations, kept so the backward pass can reuse them.
struct Activations {
  std::vector<double> input;  // concat(x_t, embedding)
  std::vector<double> a1;
  std::vector<double> a2;
  std::vector<double> out;
};

/// Denoiser network. Parameters live in one flat vector with layout
/// W1 (h1 x in, row-major), b1, W2 (h2 x h1), b2, W3 (d x h2); the flat view
/// is the exchange format for averaging, SGD and checkpoints.
class Denoiser {
 public:
  explicit Denoiser(const DenoiserArch& arch);

  /// Seeded Gaussian init, weight scale 1/sqrt(fan_in), zero biases.
  static Denoiser random_init(const DenoiserArch& arch, std::uint64_t seed);

  /// Rebuild from a flat vector (checkpoint load path).
  static Denoiser from_flat(const DenoiserArch& arch, std::vector<double> flat);

  const DenoiserArch& arch() const { return arch_; }
  const std::vector<double>& flat() const { return params_; }
  std::vector<double>& mutable_flat() { return params_; }

  bool all_finite() const;

  /// Predicted noise for x_t at timestep t. Pure in (params, x_t, t).
  std::vector<double> forward(std::span<const double> x_t, int t) const;

  void forward_cached(std::span<const double> x_t, int t, Activations& acts) const;

  /// Backprop of one sample: accumulates d(loss)/d(params) into grad, where
  /// d(loss)/d(out) = dout scaled by weight. grad must have param_count()
  /// entries.
  void accumulate_grad(const Activations& acts, std::span<const double> dout,
                       double weight, std::span<double> grad) const;

  static std::vector<double> time_embedding(int t, int width);

 private:
  DenoiserArch arch_;
  std::vector<double> params_;

  // Flat-layout offsets.
  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, w3_ = 0;
};

}  // namespace ietagc
