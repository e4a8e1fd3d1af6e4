#include "ietagc/schedule.hpp"

#include <cmath>
#include <string>

#include "ietagc/errors.hpp"

namespace ietagc {

namespace {

constexpr double kTerminalAlphaMax = 1e-4;

std::vector<double> cumulative_alpha(const std::vector<double>& betas) {
  std::vector<double> alpha(betas.size() + 1);
  alpha[0] = 1.0;
  for (std::size_t i = 0; i < betas.size(); ++i)
    alpha[i + 1] = alpha[i] * (1.0 - betas[i]);
  return alpha;
}

std::vector<double> linear_betas(int T, double beta_min, double beta_max) {
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i)
    betas[static_cast<std::size_t>(i)] =
        beta_min + (beta_max - beta_min) * static_cast<double>(i) / (T - 1);
  return betas;
}

double terminal_alpha(int T, double beta_min, double beta_max) {
  double a = 1.0;
  for (double b : linear_betas(T, beta_min, beta_max)) a *= 1.0 - b;
  return a;
}

}  // namespace

Schedule Schedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("schedule: need at least one beta");
  for (double b : betas)
    if (!(b > 0.0 && b < 1.0))
      throw ConfigError("schedule: betas must lie in (0, 1)");
  Schedule s;
  s.T = static_cast<int>(betas.size());
  s.alpha = cumulative_alpha(betas);
  s.beta = std::move(betas);
  s.beta_max_requested = s.beta_max_used = s.beta.back();
  return s;
}

Schedule build_schedule(int T, double beta_min, double beta_max) {
  if (T < 2) throw ConfigError("build_schedule: T must be >= 2");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw ConfigError("build_schedule: need 0 < beta_min <= beta_max < 1");

  double used_max = beta_max;
  bool adjusted = false;
  if (terminal_alpha(T, beta_min, beta_max) > kTerminalAlphaMax) {
    adjusted = true;
    // terminal alpha is strictly decreasing in beta_max; bisect for the
    // smallest beta_max that satisfies the bound.
    double lo = beta_max;
    double hi = 1.0 - 1e-9;
    if (terminal_alpha(T, beta_min, hi) > kTerminalAlphaMax)
      throw ConfigError("build_schedule: cannot reach the terminal alpha bound "
                        "with T=" + std::to_string(T));
    for (int iter = 0; iter < 200; ++iter) {
      double mid = 0.5 * (lo + hi);
      if (terminal_alpha(T, beta_min, mid) > kTerminalAlphaMax)
        lo = mid;
      else
        hi = mid;
    }
    used_max = hi;
  }

  Schedule s;
  s.T = T;
  s.beta = linear_betas(T, beta_min, used_max);
  s.alpha = cumulative_alpha(s.beta);
  s.beta_max_adjusted = adjusted;
  s.beta_max_requested = beta_max;
  s.beta_max_used = used_max;
  return s;
}

}  // namespace ietagc
