#include "ietagc/checkpoint.hpp"

#include "binio.hpp"
#include "ietagc/errors.hpp"

namespace ietagc {

namespace {
constexpr char kMagic[4] = {'I', 'A', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  if (ck.params.size() != ck.arch.param_count())
    throw ShapeError("checkpoint: parameter count does not match architecture");
  std::string buf;
  buf.append(kMagic, 4);
  binio::put_u32(buf, kVersion);
  binio::put_u32(buf, static_cast<std::uint32_t>(ck.arch.d));
  binio::put_u32(buf, static_cast<std::uint32_t>(ck.arch.time_embed));
  binio::put_u32(buf, static_cast<std::uint32_t>(ck.arch.hidden1));
  binio::put_u32(buf, static_cast<std::uint32_t>(ck.arch.hidden2));
  binio::put_u32(buf, static_cast<std::uint32_t>(ck.T));
  binio::put_u64(buf, ck.params.size());
  for (double v : ck.params) binio::put_f64(buf, v);
  binio::put_u8(buf, ck.bank.has_value() ? 1 : 0);
  if (ck.bank) {
    binio::put_f64(buf, ck.bank->gamma());
    binio::put_u32(buf, static_cast<std::uint32_t>(ck.bank->T()));
    for (double v : ck.bank->values()) binio::put_f64(buf, v);
    for (std::uint64_t c : ck.bank->update_counts()) binio::put_u64(buf, c);
  }
  binio::put_u64(buf, binio::fnv1a(buf));
  binio::write_file(path, buf);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string buf = binio::read_file(path);
  if (buf.size() < 12 || buf.compare(0, 4, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  const std::uint64_t stored =
      binio::Reader(buf.substr(buf.size() - 8), "checkpoint").u64();
  if (binio::fnv1a(buf.substr(0, buf.size() - 8)) != stored)
    throw IoError("checkpoint: hash mismatch (corrupt file) in " + path);

  binio::Reader r(buf, "checkpoint");
  r.bytes(4);  // magic
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw IoError("checkpoint: unsupported format version in " + path);

  Checkpoint ck;
  ck.arch.d = static_cast<int>(r.u32());
  ck.arch.time_embed = static_cast<int>(r.u32());
  ck.arch.hidden1 = static_cast<int>(r.u32());
  ck.arch.hidden2 = static_cast<int>(r.u32());
  ck.T = static_cast<int>(r.u32());
  const std::uint64_t n = r.u64();
  if (n != ck.arch.param_count())
    throw IoError("checkpoint: parameter count mismatch in " + path);
  ck.params.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) ck.params[i] = r.f64();
  if (r.u8()) {
    const double gamma = r.f64();
    const int bank_T = static_cast<int>(r.u32());
    MemoryBank bank(bank_T, gamma);
    for (int i = 0; i < bank_T; ++i) bank.mutable_values()[i] = r.f64();
    for (int i = 0; i < bank_T; ++i) bank.mutable_update_counts()[i] = r.u64();
    ck.bank = std::move(bank);
  }
  r.u64();  // trailing hash
  if (!r.at_end()) throw IoError("checkpoint: trailing bytes in " + path);
  return ck;
}

}  // namespace ietagc
