#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "ksns/field.hpp"

namespace ksns {

// Field snapshot file: 64-byte little-endian header followed by row-major
// float64 samples.
//
//   offset  size  content
//        0     8  magic "KSNSFLD1"
//        8     4  dim (u32)
//       12    12  n[3] (u32 each; sample extents, trailing 1s in 2D)
//       24    24  L[3] (f64 each)
//       48     8  time (f64)
//       56     4  field id (u32)
//       60     4  reserved (zero)
//
// Face-staggered components are stored with their face extents and a
// component-specific field id; scalars use the cell extents.

namespace field_id {
inline constexpr uint32_t rho = 1, m = 2, c = 3, p = 4;
inline constexpr uint32_t u0 = 5, u1 = 6, u2 = 7;
}  // namespace field_id

struct SnapshotHeader {
  char magic[8];
  uint32_t dim;
  uint32_t n[3];
  double L[3];
  double time;
  uint32_t id;
  uint32_t reserved;
};
static_assert(sizeof(SnapshotHeader) == 64, "snapshot header must pack to 64 bytes");

inline void write_snapshot_raw(const std::string& path, const BoxDomain& dom,
                               const std::array<int, 3>& extents,
                               const double* data, long count, double time,
                               uint32_t id) {
  SnapshotHeader h{};
  std::memcpy(h.magic, "KSNSFLD1", 8);
  h.dim = static_cast<uint32_t>(dom.dim());
  for (int a = 0; a < 3; ++a) {
    h.n[a] = static_cast<uint32_t>(extents[a]);
    h.L[a] = dom.length(a);
  }
  h.time = time;
  h.id = id;
  h.reserved = 0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("write_snapshot: short write to " + path);
}

inline void write_snapshot(const std::string& path, const Field& f, double time,
                           uint32_t id) {
  write_snapshot_raw(path, f.domain, f.domain.cells(), f.values.data(),
                     f.domain.cell_count(), time, id);
}

inline void write_snapshot_component(const std::string& path,
                                     const VectorField& v, int a, double time,
                                     uint32_t id) {
  write_snapshot_raw(path, v.domain, v.domain.face_extents(a),
                     v.comp[a].data(), v.domain.face_count(a), time, id);
}

struct Snapshot {
  SnapshotHeader header{};
  Eigen::ArrayXd samples;

  // Reassemble a cell Field (only valid for scalar snapshots).
  Field as_field() const {
    BoxDomain dom(static_cast<int>(header.dim),
                  {static_cast<int>(header.n[0]), static_cast<int>(header.n[1]),
                   static_cast<int>(header.n[2])},
                  {header.L[0], header.L[1], header.L[2]});
    if (samples.size() != dom.cell_count())
      throw std::runtime_error("snapshot: extents are not cell extents");
    Field f(dom);
    f.values = samples;
    return f;
  }
};

inline Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
  Snapshot s;
  in.read(reinterpret_cast<char*>(&s.header), sizeof(s.header));
  if (!in || std::memcmp(s.header.magic, "KSNSFLD1", 8) != 0)
    throw std::runtime_error("read_snapshot: bad header in " + path);
  long count = 1;
  for (int a = 0; a < 3; ++a) count *= static_cast<long>(s.header.n[a]);
  s.samples.resize(count);
  in.read(reinterpret_cast<char*>(s.samples.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("read_snapshot: truncated " + path);
  return s;
}

}  // namespace ksns
