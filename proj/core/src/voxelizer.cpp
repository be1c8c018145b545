#include "auvox/voxelizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace auvox {

std::size_t VoxelGrid::set_voxel_count() const {
  return static_cast<std::size_t>(
      std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t(1)));
}

NormalizedLandmarks normalize(const LandmarkSet& landmarks, DegeneratePolicy policy) {
  const auto& pts = landmarks.points;
  if (pts.size() < 2)
    throw DataError("normalize requires at least 2 landmarks, frame '" + landmarks.frame_id + "'");

  Point3 mins = pts[0], maxs = pts[0];
  for (const auto& p : pts) {
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p[a]))
        throw NonFiniteError("non-finite coordinate in frame '" + landmarks.frame_id + "'");
      mins[a] = std::min(mins[a], p[a]);
      maxs[a] = std::max(maxs[a], p[a]);
    }
  }

  NormalizedLandmarks out;
  std::array<double, 3> range;
  for (int a = 0; a < 3; ++a) {
    range[a] = maxs[a] - mins[a];
    if (range[a] == 0.0) {
      if (policy == DegeneratePolicy::Error)
        throw DegenerateAxisError("axis " + std::string(1, "xyz"[a]) +
                                  " is degenerate (max == min) in frame '" +
                                  landmarks.frame_id + "'");
      out.degenerate_axis[a] = true;
    }
  }

  out.points.reserve(pts.size());
  for (const auto& p : pts) {
    Point3 q;
    for (int a = 0; a < 3; ++a)
      q[a] = out.degenerate_axis[a] ? 0.0 : (p[a] - mins[a]) / range[a];
    out.points.push_back(q);
  }
  return out;
}

ScaledLandmarks scale(const NormalizedLandmarks& norm, std::size_t c) {
  if (c < 2) throw InvalidCError("grid side must be >= 2, got " + std::to_string(c));
  ScaledLandmarks out;
  out.c = c;
  out.points.reserve(norm.points.size());
  const double factor = static_cast<double>(c - 1);
  for (const auto& p : norm.points) {
    std::array<std::uint32_t, 3> q;
    for (int a = 0; a < 3; ++a) {
      // Round half up, then clamp; truncation would bias toward the origin.
      double v = std::floor(p[a] * factor + 0.5);
      v = std::clamp(v, 0.0, factor);
      q[a] = static_cast<std::uint32_t>(v);
    }
    out.points.push_back(q);
  }
  return out;
}

VoxelGrid voxelize(const ScaledLandmarks& scaled) {
  VoxelGrid grid(scaled.c);
  for (const auto& p : scaled.points) grid.set(p[0], p[1], p[2]);
  return grid;
}

VoxelGrid encode_frame(const LandmarkSet& landmarks, std::size_t c, DegeneratePolicy policy) {
  return voxelize(scale(normalize(landmarks, policy), c));
}

namespace {

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const std::string& bytes, std::size_t off) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off])) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 1])) << 8) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 2])) << 16) |
         (static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 3])) << 24);
}

}  // namespace

std::string serialize_grid(const VoxelGrid& grid) {
  std::string out = "AUVX";
  out.push_back(char(1));  // version
  put_u32_le(out, static_cast<std::uint32_t>(grid.c()));
  const auto& occ = grid.occupancy();
  const std::size_t nbytes = (occ.size() + 7) / 8;
  std::string packed(nbytes, '\0');
  for (std::size_t i = 0; i < occ.size(); ++i)
    if (occ[i]) packed[i / 8] |= static_cast<char>(1u << (i % 8));
  out += packed;
  return out;
}

VoxelGrid parse_grid(const std::string& bytes) {
  if (bytes.size() < 9 || bytes.compare(0, 4, "AUVX") != 0)
    throw BadMagicError("not an AUVX grid file");
  if (bytes[4] != 1)
    throw VersionMismatchError("unsupported AUVX version " + std::to_string(int(bytes[4])));
  const std::size_t c = get_u32_le(bytes, 5);
  if (c < 2) throw InvalidCError("grid side in file is " + std::to_string(c));
  const std::size_t n = c * c * c;
  const std::size_t nbytes = (n + 7) / 8;
  if (bytes.size() != 9 + nbytes)
    throw BadMagicError("AUVX payload length mismatch: expected " + std::to_string(9 + nbytes) +
                        " bytes, got " + std::to_string(bytes.size()));
  VoxelGrid grid(c);
  for (std::size_t i = 0; i < n; ++i) {
    if ((static_cast<unsigned char>(bytes[9 + i / 8]) >> (i % 8)) & 1u) {
      const std::size_t x = i / (c * c), y = (i / c) % c, z = i % c;
      grid.set(x, y, z);
    }
  }
  return grid;
}

}  // namespace auvox
