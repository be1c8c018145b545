#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "auvox/landmark_io.hpp"

namespace auvox {

inline constexpr std::size_t kDefaultGridSide = 24;

// Per-axis min-max normalized landmarks; every coordinate in [0,1].
struct NormalizedLandmarks {
  std::vector<Point3> points;
  // Axes that were degenerate (max == min) and were mapped to 0. Only ever
  // non-empty under DegeneratePolicy::ZeroFill.
  std::array<bool, 3> degenerate_axis = {false, false, false};
};

// Integer landmarks in [0, c-1]^3.
struct ScaledLandmarks {
  std::size_t c = kDefaultGridSide;
  std::vector<std::array<std::uint32_t, 3>> points;
};

// C x C x C binary occupancy array. Linear index is (x*c + y)*c + z.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  explicit VoxelGrid(std::size_t c) : c_(c), occupancy_(c * c * c, 0) {}

  std::size_t c() const { return c_; }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const {
    return occupancy_[(x * c_ + y) * c_ + z];
  }
  void set(std::size_t x, std::size_t y, std::size_t z) {
    occupancy_[(x * c_ + y) * c_ + z] = 1;
  }
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

  std::size_t set_voxel_count() const;
  bool operator==(const VoxelGrid& other) const = default;

 private:
  std::size_t c_ = 0;
  std::vector<std::uint8_t> occupancy_;
};

// A flat axis (max == min) is corrupt tracking; the default is to reject the
// frame. ZeroFill maps the axis to 0 and records it in degenerate_axis.
enum class DegeneratePolicy { Error, ZeroFill };

NormalizedLandmarks normalize(const LandmarkSet& landmarks,
                              DegeneratePolicy policy = DegeneratePolicy::Error);

ScaledLandmarks scale(const NormalizedLandmarks& norm, std::size_t c);

VoxelGrid voxelize(const ScaledLandmarks& scaled);

// normalize -> scale -> voxelize.
VoxelGrid encode_frame(const LandmarkSet& landmarks, std::size_t c = kDefaultGridSide,
                       DegeneratePolicy policy = DegeneratePolicy::Error);

// Binary grid file: magic "AUVX", u8 version, u32 c (little-endian), then
// ceil(c^3/8) bytes of occupancy bit-packed in linear-index order
// ((x*c + y)*c + z), least significant bit first within each byte.
std::string serialize_grid(const VoxelGrid& grid);
VoxelGrid parse_grid(const std::string& bytes);

}  // namespace auvox
