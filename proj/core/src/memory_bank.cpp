#include "ietagc/memory_bank.hpp"

#include <cmath>
#include <limits>

#include "ietagc/errors.hpp"

namespace ietagc {

MemoryBank::MemoryBank(int T, double gamma, double init_value)
    : values_(T > 0 ? static_cast<std::size_t>(T) : 0, init_value),
      counts_(values_.size(), 0),
      gamma_(gamma) {
  if (T < 1) throw ConfigError("memory bank: T must be >= 1");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw ConfigError("memory bank: gamma must be in (0, 1)");
  if (!std::isfinite(init_value) || init_value < 0.0)
    throw ConfigError("memory bank: init value must be finite and >= 0");
}

double MemoryBank::value(int t) const {
  if (t < 1 || t > T()) throw ShapeError("memory bank: t out of [1, T]");
  return values_[t - 1];
}

double MemoryBank::ratio(double loss, int t) const {
  const double l = value(t);
  if (l == 0.0) return std::numeric_limits<double>::infinity();
  return loss / l;
}

void MemoryBank::update(int t, double loss) {
  if (t < 1 || t > T()) throw ShapeError("memory bank: t out of [1, T]");
  if (!std::isfinite(loss) || loss < 0.0)
    throw NumericalError("memory bank: loss must be finite and >= 0");
  values_[t - 1] = gamma_ * values_[t - 1] + (1.0 - gamma_) * loss;
  ++counts_[t - 1];
}

std::vector<double> MemoryBank::apply_mask(std::span<const MaskEntry> entries,
                                           double lambda, int epoch,
                                           std::vector<SkipRecord>* skips,
                                           std::vector<char>* mask_out) const {
  if (lambda < 0.0) throw ConfigError("memory bank: lambda must be >= 0");
  std::vector<double> masked(entries.size());
  if (mask_out) mask_out->assign(entries.size(), 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const MaskEntry& e = entries[i];
    const double r = ratio(e.loss, e.t);
    if (r < lambda) {
      masked[i] = 0.0;
      if (mask_out) (*mask_out)[i] = 1;
      if (skips) skips->push_back({e.sample_id, epoch, e.t, e.loss, r});
    } else {
      masked[i] = e.loss;
    }
  }
  return masked;
}

}  // namespace ietagc
