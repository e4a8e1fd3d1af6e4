#include "ietagc/audit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "ietagc/diffusion.hpp"
#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace ietagc {

namespace {

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("l2: dimension mismatch");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("percentile: empty value list");
  if (p < 0.0 || p > 100.0) throw ConfigError("percentile: p out of [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const double frac = rank - static_cast<double>(lo);
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] * (1.0 - frac) + values[lo + 1] * frac;
}

NnResult nn_ratio(const Sample& xbar, const Dataset& train, int n,
                  bool include_nearest) {
  if (train.size() < 2) throw ConfigError("nn_ratio: need at least 2 training points");
  if (n < 1) throw ConfigError("nn_ratio: n must be >= 1");

  std::vector<std::pair<double, std::int64_t>> dist(train.size());
  for (std::size_t i = 0; i < train.size(); ++i)
    dist[i] = {l2(xbar.x, train.samples[i].x), train.samples[i].id};
  std::sort(dist.begin(), dist.end());

  NnResult r;
  r.raw_l2 = dist[0].first;
  r.nearest_id = dist[0].second;

  const std::size_t start = include_nearest ? 0 : 1;
  const std::size_t avail = train.size() - start;
  const std::size_t take = std::min<std::size_t>(n, avail);
  double mean = 0.0;
  for (std::size_t i = 0; i < take; ++i) mean += dist[start + i].first;
  mean /= static_cast<double>(take);

  if (mean == 0.0) {
    r.ratio = (r.raw_l2 == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    r.ratio = r.raw_l2 / mean;
  }
  return r;
}

std::vector<MemorizationVerdict> audit_verdicts(
    const std::vector<Sample>& generated, const Dataset& train, int n,
    const std::vector<double>& thresholds) {
  if (generated.empty()) throw ConfigError("audit: empty generated set");
  std::vector<MemorizationVerdict> out;
  out.reserve(generated.size());
  for (const Sample& g : generated) {
    const NnResult r = nn_ratio(g, train, n);
    MemorizationVerdict v;
    v.generated_id = g.id;
    v.nearest_train_id = r.nearest_id;
    v.raw_l2 = r.raw_l2;
    v.nn_ratio = r.ratio;
    for (double d : thresholds) v.flags.emplace_back(d, r.ratio <= d);
    out.push_back(std::move(v));
  }
  return out;
}

MqCounts mq_from_verdicts(const std::vector<MemorizationVerdict>& verdicts,
                          const std::vector<double>& thresholds) {
  MqCounts mq;
  mq.thresholds = thresholds;
  mq.counts.assign(thresholds.size(), 0);
  for (const auto& v : verdicts)
    for (std::size_t k = 0; k < thresholds.size(); ++k)
      if (v.nn_ratio <= thresholds[k]) ++mq.counts[k];
  return mq;
}

MqCounts mq_counts(const std::vector<Sample>& generated, const Dataset& train,
                   int n, const std::vector<double>& thresholds) {
  return mq_from_verdicts(audit_verdicts(generated, train, n, thresholds),
                          thresholds);
}

namespace {

Eigen::MatrixXd sample_matrix(const std::vector<Sample>& s) {
  const std::size_t m = s.size();
  const std::size_t d = s.front().x.size();
  Eigen::MatrixXd X(m, d);
  for (std::size_t i = 0; i < m; ++i) {
    if (s[i].x.size() != d) throw ShapeError("frechet: ragged sample set");
    for (std::size_t j = 0; j < d; ++j) X(i, j) = s[i].x[j];
  }
  return X;
}

// Symmetric PSD square root via eigendecomposition; negative eigenvalues
// beyond a relative tolerance are a numerical failure, below it they clamp.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& M, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, std::abs(ev.maxCoeff()));
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8 * scale)
      throw NumericalError(std::string(what) + ": matrix not PSD");
    ev(i) = std::sqrt(std::max(0.0, ev(i)));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const std::vector<Sample>& a,
                        const std::vector<Sample>& b) {
  if (a.empty() || b.empty()) throw ConfigError("frechet: empty sample set");
  const std::size_t d = a.front().x.size();
  if (b.front().x.size() != d) throw ShapeError("frechet: dimension mismatch");
  if (a.size() <= d || b.size() <= d)
    throw ConfigError("frechet: need more samples than dimensions");

  const Eigen::MatrixXd Xa = sample_matrix(a);
  const Eigen::MatrixXd Xb = sample_matrix(b);
  const Eigen::RowVectorXd mua = Xa.colwise().mean();
  const Eigen::RowVectorXd mub = Xb.colwise().mean();
  const Eigen::MatrixXd Ca = (Xa.rowwise() - mua).transpose() *
                             (Xa.rowwise() - mua) /
                             static_cast<double>(Xa.rows() - 1);
  const Eigen::MatrixXd Cb = (Xb.rowwise() - mub).transpose() *
                             (Xb.rowwise() - mub) /
                             static_cast<double>(Xb.rows() - 1);

  const Eigen::MatrixXd sqa = psd_sqrt(Ca, "frechet: covariance a");
  Eigen::MatrixXd inner = sqa * Cb * sqa;
  inner = 0.5 * (inner + inner.transpose().eval());
  const Eigen::MatrixXd cross = psd_sqrt(inner, "frechet: cross term");

  const double mean_term = (mua - mub).squaredNorm();
  const double trace_term = Ca.trace() + Cb.trace() - 2.0 * cross.trace();
  return std::max(0.0, mean_term + trace_term);
}

std::vector<int> default_t_grid(int T, int points) {
  if (T < 1) throw ConfigError("t_grid: T must be >= 1");
  if (points < 1) throw ConfigError("t_grid: points must be >= 1");
  std::vector<int> grid;
  const int p = std::min(points, T);
  for (int k = 0; k < p; ++k) {
    const int t =
        1 + static_cast<int>(std::llround(static_cast<double>(k) *
                                          (T - 1) / std::max(1, p - 1)));
    if (grid.empty() || grid.back() != t) grid.push_back(t);
  }
  return grid;
}

std::vector<LossProfileRow> loss_profile(const Denoiser& p,
                                         const std::vector<Sample>& memorized,
                                         const std::vector<Sample>& control,
                                         const Schedule& sched,
                                         const std::vector<int>& t_grid,
                                         int draws_per_t, std::uint64_t seed) {
  if (memorized.empty() || control.empty())
    throw ConfigError("loss_profile: both groups must be nonempty");
  if (draws_per_t < 1) throw ConfigError("loss_profile: draws_per_t must be >= 1");

  // Losses of one group at one timestep; noise keyed by (t, slot) only, so
  // equal groups see equal draws.
  auto group_losses = [&](const std::vector<Sample>& group, int t) {
    std::vector<double> losses;
    losses.reserve(group.size() * draws_per_t);
    for (std::size_t slot = 0; slot < group.size(); ++slot) {
      Rng rng(derive_seed(seed, "profile", static_cast<std::uint64_t>(t), slot));
      for (int k = 0; k < draws_per_t; ++k) {
        NoiseDraw draw{t, rng.normal_vec(p.arch().d)};
        losses.push_back(per_sample_loss(p, group[slot].x, draw, sched));
      }
    }
    return losses;
  };

  std::vector<LossProfileRow> rows;
  rows.reserve(t_grid.size());
  for (int t : t_grid) {
    if (t < 1 || t > sched.T) throw ConfigError("loss_profile: t out of [1, T]");
    LossProfileRow row;
    row.t = t;
    std::vector<double> mem = group_losses(memorized, t);
    std::vector<double> ctl = group_losses(control, t);
    row.mem_mean = std::accumulate(mem.begin(), mem.end(), 0.0) / mem.size();
    row.ctl_mean = std::accumulate(ctl.begin(), ctl.end(), 0.0) / ctl.size();
    row.mem_p15 = percentile(mem, 15.0);
    row.mem_p85 = percentile(mem, 85.0);
    row.ctl_p15 = percentile(ctl, 15.0);
    row.ctl_p85 = percentile(ctl, 85.0);
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::uint64_t nearest_rank(const std::vector<std::uint64_t>& sorted, double p) {
  // Smallest value v such that at least p% of entries are <= v.
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  return sorted[std::min(rank - 1, n - 1)];
}

}  // namespace

SkipHistogram skip_histogram(const std::vector<SkipRecord>& records,
                             std::size_t n_samples, int total_epochs) {
  if (n_samples == 0) throw ConfigError("skip_histogram: n_samples must be >= 1");
  SkipHistogram h;
  h.total_epochs = total_epochs;
  h.counts.assign(n_samples, 0);
  for (const SkipRecord& r : records) {
    if (r.sample_id < 0 || static_cast<std::size_t>(r.sample_id) >= n_samples)
      throw ShapeError("skip_histogram: sample id out of range");
    ++h.counts[r.sample_id];
  }
  std::vector<std::uint64_t> sorted = h.counts;
  std::sort(sorted.begin(), sorted.end());
  h.q50 = nearest_rank(sorted, 50.0);
  h.q90 = nearest_rank(sorted, 90.0);
  h.q99 = nearest_rank(sorted, 99.0);
  h.max_count = sorted.back();
  return h;
}

ClusteringResult clustering_analysis(const std::vector<Sample>& most_skipped,
                                     const std::vector<Sample>& least_skipped,
                                     const Dataset& full) {
  if (most_skipped.empty() || least_skipped.empty())
    throw ConfigError("clustering_analysis: both groups must be nonempty");
  auto distances = [&](const std::vector<Sample>& group) {
    std::vector<double> out;
    out.reserve(group.size() * full.size());
    for (const Sample& g : group)
      for (const Sample& s : full.samples)
        if (s.id != g.id) out.push_back(l2(g.x, s.x));
    return out;
  };
  return {distances(most_skipped), distances(least_skipped)};
}

double spectral_energy(const Sample& x) {
  const std::size_t d = x.x.size();
  const auto g = static_cast<std::size_t>(std::llround(std::sqrt(double(d))));
  if (g * g != d || d == 0)
    throw ShapeError("spectral_energy: sample size is not a perfect square");

  using C = std::complex<double>;
  const double pi = std::acos(-1.0);

  // Row-column unitary DFT: divide by sqrt(g) per 1-D transform.
  std::vector<C> rows(d), full(d);
  for (std::size_t r = 0; r < g; ++r) {
    for (std::size_t k = 0; k < g; ++k) {
      C acc(0.0, 0.0);
      for (std::size_t c = 0; c < g; ++c) {
        const double ang = -2.0 * pi * double(k) * double(c) / double(g);
        acc += x.x[r * g + c] * C(std::cos(ang), std::sin(ang));
      }
      rows[r * g + k] = acc / std::sqrt(double(g));
    }
  }
  for (std::size_t k2 = 0; k2 < g; ++k2) {
    for (std::size_t k1 = 0; k1 < g; ++k1) {
      C acc(0.0, 0.0);
      for (std::size_t r = 0; r < g; ++r) {
        const double ang = -2.0 * pi * double(k1) * double(r) / double(g);
        acc += rows[r * g + k2] * C(std::cos(ang), std::sin(ang));
      }
      full[k1 * g + k2] = acc / std::sqrt(double(g));
    }
  }
  double total = 0.0;
  for (const C& v : full) total += std::norm(v);
  return total - std::norm(full[0]);
}

}  // namespace ietagc
