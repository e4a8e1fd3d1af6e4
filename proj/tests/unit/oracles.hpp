#pragma once

// Independent reference implementations the tests check the library against.
// Everything here is deliberately written the slow, obvious way and shares no
// code with the library (the Fréchet oracle diagonalizes with cyclic Jacobi
// rotations instead of Eigen).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "ietagc/dataset.hpp"

namespace oracle {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p =
      std::filesystem::temp_directory_path() / ("ietagc_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct BruteNn {
  double raw = 0.0;
  double ratio = 0.0;
};

inline BruteNn brute_nn(const std::vector<double>& q,
                        const std::vector<ietagc::Sample>& train,
                        std::size_t n, bool include_nearest) {
  std::vector<double> d;
  d.reserve(train.size());
  for (const auto& s : train) d.push_back(l2(q, s.x));
  std::sort(d.begin(), d.end());
  const std::size_t start = include_nearest ? 0 : 1;
  const std::size_t take = std::min(n, d.size() - start);
  double mean = 0.0;
  for (std::size_t i = 0; i < take; ++i) mean += d[start + i];
  mean /= static_cast<double>(take);
  BruteNn r;
  r.raw = d[0];
  r.ratio = mean == 0.0 ? (r.raw == 0.0
                               ? 0.0
                               : std::numeric_limits<double>::infinity())
                        : r.raw / mean;
  return r;
}

inline std::size_t brute_mq(const std::vector<ietagc::Sample>& generated,
                            const std::vector<ietagc::Sample>& train,
                            std::size_t n, double threshold) {
  std::size_t count = 0;
  for (const auto& g : generated)
    if (brute_nn(g.x, train, n, true).ratio <= threshold) ++count;
  return count;
}

struct Eig {
  std::size_t d = 0;
  std::vector<double> values;   // diagonal
  std::vector<double> vectors;  // columns are eigenvectors, row-major d x d
};

inline Eig jacobi_eig(std::vector<double> a, std::size_t d) {
  std::vector<double> v(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a[p * d + q] * a[p * d + q];
    if (off < 1e-28) break;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) {
        const double apq = a[p * d + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k * d + p], akq = a[k * d + q];
          a[k * d + p] = c * akp - s * akq;
          a[k * d + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p * d + k], aqk = a[q * d + k];
          a[p * d + k] = c * apk - s * aqk;
          a[q * d + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k * d + p], vkq = v[k * d + q];
          v[k * d + p] = c * vkp - s * vkq;
          v[k * d + q] = s * vkp + c * vkq;
        }
      }
  }
  Eig e;
  e.d = d;
  e.vectors = std::move(v);
  e.values.resize(d);
  for (std::size_t i = 0; i < d; ++i) e.values[i] = a[i * d + i];
  return e;
}

inline std::vector<double> mat_mul(const std::vector<double>& a,
                                   const std::vector<double>& b,
                                   std::size_t d) {
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j)
        out[i * d + j] += a[i * d + k] * b[k * d + j];
  return out;
}

inline std::vector<double> sqrtm_psd(const std::vector<double>& m,
                                     std::size_t d) {
  const Eig e = jacobi_eig(m, d);
  std::vector<double> out(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k)
        s += e.vectors[i * d + k] * std::sqrt(std::max(0.0, e.values[k])) *
             e.vectors[j * d + k];
      out[i * d + j] = s;
    }
  return out;
}

inline double brute_frechet(const std::vector<ietagc::Sample>& a,
                            const std::vector<ietagc::Sample>& b) {
  const std::size_t d = a.front().x.size();
  auto stats = [&](const std::vector<ietagc::Sample>& s,
                   std::vector<double>& mu, std::vector<double>& cov) {
    mu.assign(d, 0.0);
    for (const auto& x : s)
      for (std::size_t i = 0; i < d; ++i) mu[i] += x.x[i];
    for (double& m : mu) m /= static_cast<double>(s.size());
    cov.assign(d * d, 0.0);
    for (const auto& x : s)
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          cov[i * d + j] += (x.x[i] - mu[i]) * (x.x[j] - mu[j]);
    for (double& c : cov) c /= static_cast<double>(s.size() - 1);
  };
  std::vector<double> mua, mub, ca, cb;
  stats(a, mua, ca);
  stats(b, mub, cb);
  const std::vector<double> sa = sqrtm_psd(ca, d);
  std::vector<double> inner = mat_mul(mat_mul(sa, cb, d), sa, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (inner[i * d + j] + inner[j * d + i]);
      inner[i * d + j] = inner[j * d + i] = avg;
    }
  const std::vector<double> cross = sqrtm_psd(inner, d);
  double mean_term = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    mean_term += (mua[i] - mub[i]) * (mua[i] - mub[i]);
  double trace_term = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    trace_term += ca[i * d + i] + cb[i * d + i] - 2.0 * cross[i * d + i];
  return std::max(0.0, mean_term + trace_term);
}

}  // namespace oracle
