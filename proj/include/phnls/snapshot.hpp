#pragma once

// PHNL field snapshot files:
//   "PHNL" | u32 version | u32 d | u32 N_x | u32 n_max | u32 q |
//   f64 L | f64 alpha | f64 omega | u32 x_space | u32 y_space |
//   interleaved (re, im) f64 in storage order (x fastest, y slowest).
// All values little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "phnls/error.hpp"
#include "phnls/field.hpp"

namespace phnls::snapshot {

inline constexpr std::uint32_t kVersion = 1;
inline constexpr char kMagic[4] = {'P', 'H', 'N', 'L'};

namespace detail {
inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}
inline void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((bits >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& buf) : buf_(buf) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  void bytes(char* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }
  [[nodiscard]] bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("snapshot: truncated file");
  }
  const std::vector<unsigned char>& buf_;
  std::size_t pos_ = 0;
};
}  // namespace detail

inline std::vector<unsigned char> encode(const Field& f) {
  std::vector<unsigned char> out;
  out.reserve(64 + f.data().size() * 16);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  const auto& c = f.domain();
  detail::put_u32(out, kVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(c.d));
  detail::put_u32(out, static_cast<std::uint32_t>(c.n_x));
  detail::put_u32(out, static_cast<std::uint32_t>(c.n_max));
  detail::put_u32(out, static_cast<std::uint32_t>(c.q));
  detail::put_f64(out, c.L);
  detail::put_f64(out, c.alpha);
  detail::put_f64(out, c.omega);
  detail::put_u32(out, static_cast<std::uint32_t>(f.x_space()));
  detail::put_u32(out, static_cast<std::uint32_t>(f.y_space()));
  for (const auto& v : f.data()) {
    detail::put_f64(out, v.real());
    detail::put_f64(out, v.imag());
  }
  return out;
}

/// Decodes a snapshot. A grid with a matching domain may be supplied to share
/// the Hermite tables; otherwise a new grid is built.
inline Field decode(const std::vector<unsigned char>& buf, GridPtr grid = nullptr) {
  detail::Reader r(buf);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("snapshot: bad magic");
  if (const auto v = r.u32(); v != kVersion) throw FormatError("snapshot: unsupported version " + std::to_string(v));
  DomainConfig c;
  c.d = static_cast<int>(r.u32());
  c.n_x = static_cast<int>(r.u32());
  c.n_max = static_cast<int>(r.u32());
  c.q = static_cast<int>(r.u32());
  c.L = r.f64();
  c.alpha = r.f64();
  c.omega = r.f64();
  const auto xs = r.u32();
  const auto ys = r.u32();
  if (xs > 1 || ys > 1) throw FormatError("snapshot: bad representation tag");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("snapshot: invalid domain: ") + e.what());
  }
  if (!grid || !(grid->domain() == c)) grid = make_grid(c);
  Field f(grid, static_cast<XSpace>(xs), static_cast<YSpace>(ys));
  for (auto& v : f.data()) {
    const double re = r.f64();
    const double im = r.f64();
    v = complex(re, im);
  }
  if (!r.done()) throw FormatError("snapshot: trailing bytes");
  return f;
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline void save(const Field& f, const std::filesystem::path& path) {
  const auto bytes = encode(f);
  write_atomic(path, std::string(bytes.begin(), bytes.end()));
}

inline Field load(const std::filesystem::path& path, GridPtr grid = nullptr) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open snapshot " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode(buf, std::move(grid));
}

}  // namespace phnls::snapshot
