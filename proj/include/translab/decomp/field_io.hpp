#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "translab/core.hpp"
#include "translab/decomp/grid.hpp"

namespace translab::decomp {

// Layout (little-endian, no padding):
//   char[8]  magic "TLFIELD1"
//   int32[4] nodes x, y, z, t
//   float64  lambda (box side is 2 pi lambda)
//   float64  dt
//   uint8    side (0 physical, 1 Fourier)
//   then size * 2 float64: re, im interleaved, flat index (x, y, z, t), t fastest.
static_assert(std::endian::native == std::endian::little, "field dump assumes a little-endian host");

inline constexpr char field_magic[8] = {'T', 'L', 'F', 'I', 'E', 'L', 'D', '1'};

/// One blob in the layout above. Spatial snapshots use t extent 1, dt 0.
struct FieldBlob {
  std::array<std::int32_t, 4> dims{};
  double lambda = 0, dt = 0;
  Side side = Side::physical;
  std::vector<cplx> values;
};

inline void write_blob(std::ostream& os, const FieldBlob& b) {
  os.write(field_magic, 8);
  os.write(reinterpret_cast<const char*>(b.dims.data()), 16);
  os.write(reinterpret_cast<const char*>(&b.lambda), 8);
  os.write(reinterpret_cast<const char*>(&b.dt), 8);
  const std::uint8_t side = b.side == Side::fourier;
  os.write(reinterpret_cast<const char*>(&side), 1);
  os.write(reinterpret_cast<const char*>(b.values.data()), static_cast<std::streamsize>(b.values.size() * sizeof(cplx)));
}

inline FieldBlob read_blob(std::istream& is, const std::string& path) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, field_magic, 8) != 0) throw InputError("read_field: bad magic in " + path);
  FieldBlob b;
  is.read(reinterpret_cast<char*>(b.dims.data()), 16);
  is.read(reinterpret_cast<char*>(&b.lambda), 8);
  is.read(reinterpret_cast<char*>(&b.dt), 8);
  std::uint8_t side = 0;
  is.read(reinterpret_cast<char*>(&side), 1);
  if (!is || side > 1) throw InputError("read_field: truncated header in " + path);
  std::size_t total = 1;
  for (auto d : b.dims) {
    if (d < 1 || d > (1 << 16)) throw InputError("read_field: bad extent in " + path);
    total *= static_cast<std::size_t>(d);
  }
  b.side = side ? Side::fourier : Side::physical;
  b.values.resize(total);
  is.read(reinterpret_cast<char*>(b.values.data()), static_cast<std::streamsize>(total * sizeof(cplx)));
  if (!is) throw InputError("read_field: truncated data in " + path);
  return b;
}

inline void write_field(const std::string& path, const Field& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("write_field: cannot open " + path);
  const auto& g = *f.grid;
  FieldBlob b;
  const auto d = g.dims();
  for (int a = 0; a < 4; ++a) b.dims[a] = d[a];
  b.lambda = g.space().lambda();
  b.dt = g.dt();
  b.side = f.side;
  b.values = f.values;
  write_blob(os, b);
  if (!os) throw NumericalError("write_field: write failed for " + path);
}

inline Field read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("read_field: cannot open " + path);
  auto b = read_blob(is, path);
  if (is.peek() != std::char_traits<char>::eof()) throw InputError("read_field: trailing bytes in " + path);
  auto g = std::make_shared<const SpaceTimeGrid>(Torus(b.lambda, {b.dims[0], b.dims[1], b.dims[2]}), b.dims[3], b.dt);
  Field f = Field::zeros(g, b.side);
  f.values = std::move(b.values);
  return f;
}

}  // namespace translab::decomp
