#include "ietagc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "binio.hpp"
#include "ietagc/errors.hpp"
#include "ietagc/rng.hpp"

namespace ietagc {

namespace {

constexpr char kMagic[5] = "IADS";
constexpr std::uint32_t kVersion = 1;

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

std::string sample_key(const Sample& s) {
  std::string key;
  key.reserve(s.x.size() * 8);
  for (double v : s.x) binio::put_f64(key, v);
  return key;
}

// Dup entries address the j-th entry for a component to that component's
// j-th base sample, so several entries on one component form distinct groups.
void inject_duplicates(Dataset& data, const std::vector<DupSpec>& dup_spec,
                       const std::vector<std::int64_t>& component_start,
                       const std::vector<int>& component_size) {
  std::unordered_map<int, int> used;
  for (const DupSpec& spec : dup_spec) {
    if (spec.copies == 0) continue;
    if (spec.copies < 0) throw ConfigError("dup_spec: copies must be nonnegative");
    if (spec.component < 0 ||
        spec.component >= static_cast<int>(component_start.size()))
      throw ConfigError("dup_spec: component index out of range");
    int j = used[spec.component]++;
    if (j >= component_size[spec.component])
      throw ConfigError("dup_spec: more entries than samples in component " +
                        std::to_string(spec.component));
    std::int64_t rep = component_start[spec.component] + j;
    for (int k = 0; k < spec.copies; ++k) {
      Sample copy = data.samples[static_cast<std::size_t>(rep)];
      copy.id = data.size();
      data.samples.push_back(std::move(copy));
    }
    data.duplication_map[rep] = spec.copies;
  }
}

}  // namespace

int Dataset::class_count() const {
  if (!labels_present) return 1;
  int max_label = 0;
  for (const Sample& s : samples) max_label = std::max(max_label, s.label);
  return max_label + 1;
}

std::vector<std::vector<std::int64_t>> Dataset::equality_groups() const {
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<std::int64_t>> groups;
  for (const Sample& s : samples) {
    std::string key = sample_key(s);
    auto [it, inserted] = index.try_emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(s.id);
  }
  return groups;
}

std::vector<char> Dataset::duplicated_mask(int min_group) const {
  std::vector<char> mask(samples.size(), 0);
  for (const auto& group : equality_groups()) {
    if (static_cast<int>(group.size()) < min_group) continue;
    for (std::int64_t id : group) mask[static_cast<std::size_t>(id)] = 1;
  }
  return mask;
}

std::uint64_t Dataset::content_hash() const {
  std::string buf;
  binio::put_u32(buf, static_cast<std::uint32_t>(d));
  binio::put_u64(buf, static_cast<std::uint64_t>(samples.size()));
  binio::put_u8(buf, labels_present ? 1 : 0);
  for (const Sample& s : samples) {
    for (double v : s.x) binio::put_f64(buf, v);
    if (labels_present) binio::put_i32(buf, s.label);
  }
  for (const auto& [rep, copies] : duplication_map) {
    binio::put_i64(buf, rep);
    binio::put_i32(buf, copies);
  }
  return binio::fnv1a(buf);
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.id != static_cast<std::int64_t>(i))
      throw ShapeError("dataset: sample id must equal its position");
    if (static_cast<int>(s.x.size()) != d)
      throw ShapeError("dataset: sample dimension mismatch at id " +
                       std::to_string(i));
    if (labels_present && s.label < 0)
      throw ShapeError("dataset: missing label at id " + std::to_string(i));
  }
  for (const auto& [rep, copies] : duplication_map) {
    if (rep < 0 || rep >= static_cast<std::int64_t>(samples.size()))
      throw ShapeError("dataset: duplication representative out of range");
    if (copies <= 0) throw ShapeError("dataset: nonpositive duplicate count");
  }
}

Dataset gen_mixture(int components, int per_component, int d,
                    const std::vector<DupSpec>& dup_spec, std::uint64_t seed,
                    double sigma) {
  if (components < 1) throw ConfigError("gen_mixture: components must be >= 1");
  if (per_component < 1) throw ConfigError("gen_mixture: per_component must be >= 1");
  if (d < 1) throw ConfigError("gen_mixture: d must be >= 1");
  if (sigma < 0) throw ConfigError("gen_mixture: sigma must be >= 0");

  const double min_sep = d <= 3 ? 0.5 : 0.8;
  Rng mean_rng(derive_seed(seed, "mixture.means"));
  std::vector<std::vector<double>> means;
  for (int c = 0; c < components; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      std::vector<double> m(static_cast<std::size_t>(d));
      for (double& v : m) v = -0.75 + 1.5 * mean_rng.uniform();
      placed = true;
      for (const auto& other : means) {
        double dist2 = 0;
        for (int j = 0; j < d; ++j) {
          double diff = m[static_cast<std::size_t>(j)] - other[static_cast<std::size_t>(j)];
          dist2 += diff * diff;
        }
        if (dist2 < min_sep * min_sep) {
          placed = false;
          break;
        }
      }
      if (placed) means.push_back(std::move(m));
    }
    if (!placed)
      throw ConfigError("gen_mixture: could not place " +
                        std::to_string(components) +
                        " separated components in dimension " + std::to_string(d));
  }

  Dataset data;
  data.d = d;
  data.labels_present = true;
  Rng draw_rng(derive_seed(seed, "mixture.samples"));
  std::vector<std::int64_t> component_start;
  std::vector<int> component_size;
  for (int c = 0; c < components; ++c) {
    component_start.push_back(data.size());
    component_size.push_back(per_component);
    for (int k = 0; k < per_component; ++k) {
      Sample s;
      s.x.resize(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j)
        s.x[static_cast<std::size_t>(j)] =
            clamp_unit(means[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +
                       sigma * draw_rng.normal());
      s.label = c;
      s.id = data.size();
      data.samples.push_back(std::move(s));
    }
  }

  inject_duplicates(data, dup_spec, component_start, component_size);
  data.validate();
  return data;
}

Dataset gen_patterns(int count, int grid, const PatternMix& mix,
                     const std::vector<DupSpec>& dup_spec, std::uint64_t seed) {
  if (count < 1) throw ConfigError("gen_patterns: count must be >= 1");
  if (grid < 2) throw ConfigError("gen_patterns: grid must be >= 2");
  double total = mix.flat + mix.gradient + mix.texture;
  if (!(total > 0)) throw ConfigError("gen_patterns: pattern mix must be positive");

  // Largest-remainder allocation of images to the three families.
  double frac[3] = {mix.flat / total, mix.gradient / total, mix.texture / total};
  int alloc[3];
  double rem[3];
  int assigned = 0;
  for (int f = 0; f < 3; ++f) {
    double want = frac[f] * count;
    alloc[f] = static_cast<int>(std::floor(want));
    rem[f] = want - alloc[f];
    assigned += alloc[f];
  }
  while (assigned < count) {
    int best = 0;
    for (int f = 1; f < 3; ++f)
      if (rem[f] > rem[best]) best = f;
    ++alloc[best];
    rem[best] = -1;
    ++assigned;
  }

  const int d = grid * grid;
  Dataset data;
  data.d = d;
  data.labels_present = true;
  Rng rng(derive_seed(seed, "patterns.samples"));
  std::vector<std::int64_t> family_start;
  std::vector<int> family_size;

  for (int family = 0; family < 3; ++family) {
    family_start.push_back(data.size());
    family_size.push_back(alloc[family]);
    for (int k = 0; k < alloc[family]; ++k) {
      Sample s;
      s.x.resize(static_cast<std::size_t>(d));
      if (family == 0) {
        double level = -0.9 + 1.8 * rng.uniform();
        std::fill(s.x.begin(), s.x.end(), level);
      } else if (family == 1) {
        double theta = 2.0 * std::numbers::pi * rng.uniform();
        double amp = 0.4 + 0.5 * rng.uniform();
        double offset = -0.2 + 0.4 * rng.uniform();
        for (int i = 0; i < grid; ++i)
          for (int j = 0; j < grid; ++j) {
            double u = static_cast<double>(i) / (grid - 1) - 0.5;
            double v = static_cast<double>(j) / (grid - 1) - 0.5;
            double ramp = std::cos(theta) * u + std::sin(theta) * v;
            s.x[static_cast<std::size_t>(i * grid + j)] =
                clamp_unit(amp * ramp / 0.71 + offset);
          }
      } else {
        struct Wave {
          int fx, fy;
          double amp, phase;
        };
        Wave waves[3];
        // Frequencies span [2, grid/2] (the high-frequency band); tiny grids
        // degrade to the highest frequency they can represent.
        const int f_lo = std::min(2, grid - 1);
        const int f_hi = std::max(f_lo, grid / 2);
        const auto f_span = static_cast<std::uint64_t>(f_hi - f_lo + 1);
        for (Wave& w : waves) {
          w.fx = f_lo + static_cast<int>(rng.uniform_int(f_span));
          w.fy = f_lo + static_cast<int>(rng.uniform_int(f_span));
          w.amp = 0.25 + 0.15 * rng.uniform();
          w.phase = 2.0 * std::numbers::pi * rng.uniform();
        }
        for (int i = 0; i < grid; ++i)
          for (int j = 0; j < grid; ++j) {
            double v = 0.1 * rng.normal();
            for (const Wave& w : waves)
              v += w.amp * std::sin(2.0 * std::numbers::pi *
                                        (w.fx * i + w.fy * j) / grid +
                                    w.phase);
            s.x[static_cast<std::size_t>(i * grid + j)] = clamp_unit(v);
          }
      }
      s.label = family;
      s.id = data.size();
      data.samples.push_back(std::move(s));
    }
  }

  inject_duplicates(data, dup_spec, family_start, family_size);
  data.validate();
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::string buf;
  buf.append(kMagic, 4);
  binio::put_u32(buf, kVersion);
  binio::put_u32(buf, static_cast<std::uint32_t>(data.d));
  binio::put_u64(buf, static_cast<std::uint64_t>(data.samples.size()));
  binio::put_u8(buf, data.labels_present ? 1 : 0);
  for (const Sample& s : data.samples)
    for (double v : s.x) binio::put_f64(buf, v);
  if (data.labels_present)
    for (const Sample& s : data.samples) binio::put_i32(buf, s.label);
  binio::put_u32(buf, static_cast<std::uint32_t>(data.duplication_map.size()));
  for (const auto& [rep, copies] : data.duplication_map) {
    binio::put_i64(buf, rep);
    binio::put_i32(buf, copies);
  }
  binio::put_u64(buf, data.content_hash());
  binio::write_file(path, buf);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::string buf = binio::read_file(path);
  binio::Reader r(buf, "dataset " + path.string());
  if (r.bytes(4) != std::string(kMagic, 4))
    throw IoError("dataset " + path.string() + ": bad magic");
  std::uint32_t version = r.u32();
  if (version != kVersion)
    throw IoError("dataset " + path.string() + ": unsupported format version " +
                  std::to_string(version));
  Dataset data;
  data.d = static_cast<int>(r.u32());
  std::uint64_t n = r.u64();
  data.labels_present = r.u8() != 0;
  data.samples.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Sample& s = data.samples[i];
    s.id = static_cast<std::int64_t>(i);
    s.x.resize(static_cast<std::size_t>(data.d));
    for (double& v : s.x) v = r.f64();
  }
  if (data.labels_present)
    for (std::uint64_t i = 0; i < n; ++i) data.samples[i].label = r.i32();
  std::uint32_t dup_entries = r.u32();
  for (std::uint32_t i = 0; i < dup_entries; ++i) {
    std::int64_t rep = r.i64();
    int copies = r.i32();
    data.duplication_map[rep] = copies;
  }
  std::uint64_t stored_hash = r.u64();
  if (!r.at_end())
    throw IoError("dataset " + path.string() + ": trailing bytes");
  if (stored_hash != data.content_hash())
    throw IoError("dataset " + path.string() + ": content hash mismatch");
  data.validate();
  return data;
}

void export_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "id,label";
  for (int j = 0; j < data.d; ++j) out << ",x" << j;
  out << "\n";
  char num[64];
  for (const Sample& s : data.samples) {
    out << s.id << "," << s.label;
    for (double v : s.x) {
      std::snprintf(num, sizeof(num), "%.17g", v);
      out << "," << num;
    }
    out << "\n";
  }
}

}  // namespace ietagc
