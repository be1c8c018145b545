#include "auvox/voxelizer.hpp"

#include <cmath>
#include <set>

#include "auvox/rng.hpp"
#include "doctest.h"

using namespace auvox;

namespace {

// Independent reference encoder used as the oracle. Written directly from
// the per-axis min-max + scale-by-(C-1) definition, deliberately sharing no
// code with the production path.
std::vector<std::uint8_t> reference_encode(const std::vector<Point3>& pts, std::size_t c) {
  double mins[3], maxs[3];
  for (int a = 0; a < 3; ++a) {
    mins[a] = pts[0][a];
    maxs[a] = pts[0][a];
    for (const auto& p : pts) {
      if (p[a] < mins[a]) mins[a] = p[a];
      if (p[a] > maxs[a]) maxs[a] = p[a];
    }
  }
  std::vector<std::uint8_t> occ(c * c * c, 0);
  for (const auto& p : pts) {
    std::size_t idx[3];
    for (int a = 0; a < 3; ++a) {
      const double norm = (p[a] - mins[a]) / (maxs[a] - mins[a]);
      double scaled = std::floor(norm * double(c - 1) + 0.5);
      if (scaled < 0) scaled = 0;
      if (scaled > double(c - 1)) scaled = double(c - 1);
      idx[a] = static_cast<std::size_t>(scaled);
    }
    occ[(idx[0] * c + idx[1]) * c + idx[2]] = 1;
  }
  return occ;
}

LandmarkSet random_frame(Rng& rng, std::size_t n = 83) {
  LandmarkSet set;
  set.frame_id = "r";
  for (std::size_t i = 0; i < n; ++i)
    set.points.push_back({rng.uniform(-80, 80), rng.uniform(-100, 100), rng.uniform(0, 60)});
  return set;
}

}  // namespace

TEST_SUITE_BEGIN("voxelizer");

TEST_CASE("normalize applies the per-axis min-max formula") {
  LandmarkSet set;
  set.points = {{0, 0, 0}, {1, 2, 4}, {2, 4, 8}};
  const auto norm = normalize(set);
  CHECK(norm.points[0] == Point3{0, 0, 0});
  CHECK(norm.points[1] == Point3{0.5, 0.5, 0.5});
  CHECK(norm.points[2] == Point3{1, 1, 1});
}

TEST_CASE("degenerate axis is an error by default, zero-filled when relaxed") {
  LandmarkSet set;
  set.points = {{5, 5, 5}, {5, 5, 5}};
  CHECK_THROWS_AS(normalize(set), DegenerateAxisError);

  const auto relaxed = normalize(set, DegeneratePolicy::ZeroFill);
  CHECK(relaxed.degenerate_axis == std::array<bool, 3>{true, true, true});
  CHECK(relaxed.points[0] == Point3{0, 0, 0});

  LandmarkSet flat_z;
  flat_z.points = {{0, 0, 3}, {1, 1, 3}};
  CHECK_THROWS_AS(normalize(flat_z), DegenerateAxisError);
  const auto rz = normalize(flat_z, DegeneratePolicy::ZeroFill);
  CHECK(rz.degenerate_axis == std::array<bool, 3>{false, false, true});
}

TEST_CASE("normalize is affine invariant") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    LandmarkSet set = random_frame(rng, 20);
    LandmarkSet moved = set;
    const double a = rng.uniform(0.05, 20.0);
    const Point3 b = {rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-500, 500)};
    for (auto& p : moved.points)
      for (int ax = 0; ax < 3; ++ax) p[ax] = a * p[ax] + b[ax];

    const auto n1 = normalize(set), n2 = normalize(moved);
    for (std::size_t i = 0; i < n1.points.size(); ++i)
      for (int ax = 0; ax < 3; ++ax)
        CHECK(n1.points[i][ax] == doctest::Approx(n2.points[i][ax]).epsilon(1e-9));
  }
}

TEST_CASE("scale rounds half up and clamps to the endpoints") {
  NormalizedLandmarks norm;
  norm.points = {{0.5, 0.0, 1.0}};
  const auto scaled = scale(norm, 24);
  CHECK(scaled.points[0][0] == 12);  // 0.5 * 23 = 11.5 rounds up
  CHECK(scaled.points[0][1] == 0);
  CHECK(scaled.points[0][2] == 23);
}

TEST_CASE("c=2 collapses nearby coordinates") {
  NormalizedLandmarks norm;
  norm.points = {{0.49, 0.49, 0.49}, {0.51, 0.51, 0.51}};
  const auto scaled = scale(norm, 2);
  CHECK(scaled.points[0] == std::array<std::uint32_t, 3>{0, 0, 0});
  CHECK(scaled.points[1] == std::array<std::uint32_t, 3>{1, 1, 1});
}

TEST_CASE("invalid grid side is rejected") {
  NormalizedLandmarks norm;
  norm.points = {{0.5, 0.5, 0.5}};
  CHECK_THROWS_AS(scale(norm, 1), InvalidCError);
  CHECK_THROWS_AS(scale(norm, 0), InvalidCError);
}

TEST_CASE("voxelize sets one cell per distinct point and collisions collapse") {
  ScaledLandmarks s;
  s.c = 24;
  s.points = {{0, 0, 0}};
  CHECK(voxelize(s).set_voxel_count() == 1);
  CHECK(voxelize(s).at(0, 0, 0) == 1);

  s.points = {{3, 4, 5}, {3, 4, 5}};
  CHECK(voxelize(s).set_voxel_count() == 1);

  s.points.clear();
  for (std::uint32_t i = 0; i < 83; ++i) s.points.push_back({i % 24, (i / 24) % 24, i % 7});
  // some of those may collide; distinct triples count once
  std::set<std::array<std::uint32_t, 3>> uniq(s.points.begin(), s.points.end());
  CHECK(voxelize(s).set_voxel_count() == uniq.size());
}

TEST_CASE("encode_frame matches the independent reference on random frames") {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const LandmarkSet set = random_frame(rng);
    const VoxelGrid grid = encode_frame(set, 24);
    CHECK(grid.occupancy() == reference_encode(set.points, 24));
  }
}

TEST_CASE("encode_frame is translation and uniform-scale invariant") {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const LandmarkSet set = random_frame(rng);
    LandmarkSet moved = set;
    const double a = rng.uniform(0.1, 10.0);
    const Point3 t = {rng.uniform(-1000, 1000), rng.uniform(-1000, 1000),
                      rng.uniform(-1000, 1000)};
    for (auto& p : moved.points)
      for (int ax = 0; ax < 3; ++ax) p[ax] = a * p[ax] + t[ax];
    CHECK(encode_frame(set, 24) == encode_frame(moved, 24));
  }
}

TEST_CASE("set voxel count stays within [1, N]") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const LandmarkSet set = random_frame(rng);
    const auto count = encode_frame(set, 24).set_voxel_count();
    CHECK(count >= 1);
    CHECK(count <= set.points.size());
  }
}

TEST_CASE("finer grids usually preserve more voxels than coarse ones") {
  Rng rng(55);
  int kept = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    const LandmarkSet set = random_frame(rng);
    if (encode_frame(set, 24).set_voxel_count() >= encode_frame(set, 12).set_voxel_count())
      ++kept;
  }
  CHECK(kept >= trials * 95 / 100);
}

TEST_CASE("grid file round-trips and rejects corruption") {
  Rng rng(66);
  const VoxelGrid grid = encode_frame(random_frame(rng), 24);
  const std::string bytes = serialize_grid(grid);
  CHECK(bytes.substr(0, 4) == "AUVX");
  CHECK(bytes.size() == 9 + (24 * 24 * 24 + 7) / 8);
  CHECK(parse_grid(bytes) == grid);

  CHECK_THROWS_AS(parse_grid(bytes.substr(0, bytes.size() - 1)), BadMagicError);
  CHECK_THROWS_AS(parse_grid("XXXX" + bytes.substr(4)), BadMagicError);
  std::string vbad = bytes;
  vbad[4] = 2;
  CHECK_THROWS_AS(parse_grid(vbad), VersionMismatchError);
}

TEST_CASE("encoding is deterministic across calls") {
  Rng rng(88);
  const LandmarkSet set = random_frame(rng);
  CHECK(encode_frame(set, 24) == encode_frame(set, 24));
}

TEST_SUITE_END();
