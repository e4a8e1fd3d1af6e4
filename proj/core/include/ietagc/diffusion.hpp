#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ietagc/dataset.hpp"
#include "ietagc/denoiser.hpp"
#include "ietagc/schedule.hpp"

namespace ietagc {

/// One forward-process draw: which timestep and which Gaussian noise.
struct NoiseDraw {
  int t = 1;
  std::vector<double> epsilon;
};

/// One batch element: a sample by reference plus its noise draw.
struct BatchItem {
  const Sample* sample = nullptr;
  NoiseDraw draw;
};

struct BatchGradient {
  std::vector<double> grad;     // mean over the full batch size
  std::vector<double> losses;   // true per-sample losses, mask ignored
};

/// x_t = sqrt(abar_t) x + sqrt(1 - abar_t) eps.
std::vector<double> forward_noise(std::span<const double> x, const NoiseDraw& draw,
                                  const Schedule& sched);

/// Squared L2 between drawn and predicted noise, summed over dimensions.
double per_sample_loss(const Denoiser& p, std::span<const double> x,
                       const NoiseDraw& draw, const Schedule& sched);

/// Decides, from the true per-sample losses, which samples' gradients to
/// drop (mask[i] != 0 means drop). A null callback masks nothing.
using MaskFn = std::function<std::vector<char>(const std::vector<double>& losses)>;

/// Mean gradient of the per-sample loss over the batch. Masked samples
/// contribute zero gradient but stay in the denominator, and their true
/// losses are still reported.
BatchGradient loss_gradient(const Denoiser& p, std::span<const BatchItem> batch,
                            const Schedule& sched, const MaskFn& mask_fn = nullptr);

/// Ancestral sampling from pure noise; one independent seeded stream per
/// generated sample, so results are independent of n and of ordering.
std::vector<Sample> sample_generate(const Denoiser& p, const Schedule& sched,
                                    int n, std::uint64_t seed);

}  // namespace ietagc
