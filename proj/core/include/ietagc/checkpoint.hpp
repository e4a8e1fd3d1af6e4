#pragma once

#include <optional>
#include <string>

#include "ietagc/denoiser.hpp"
#include "ietagc/memory_bank.hpp"

namespace ietagc {

/// Model checkpoint: architecture, schedule length, flat parameters, and
/// optionally the memory bank so fine-tuning resumes warm.
struct Checkpoint {
  DenoiserArch arch;
  int T = 0;  // schedule length the model was trained with
  std::vector<double> params;
  std::optional<MemoryBank> bank;

  Denoiser model() const { return Denoiser::from_flat(arch, params); }
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ietagc
