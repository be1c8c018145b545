#include "auvox/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "auvox/rng.hpp"

namespace auvox {

void SynthSpec::validate() const {
  if (subjects < 1) throw InvalidSpecError("subjects must be >= 1");
  if (frames_per_subject < 1) throw InvalidSpecError("frames_per_subject must be >= 1");
  if (au_ids.empty()) throw InvalidSpecError("au list must be non-empty");
  if (occurrence_rates.size() != au_ids.size())
    throw InvalidSpecError("one occurrence rate per AU required");
  for (double r : occurrence_rates)
    if (r < 0.0 || r > 1.0) throw InvalidSpecError("occurrence rates must be in [0,1]");
  if (sigma < 0.0) throw InvalidSpecError("sigma must be >= 0");
  if (unknown_rate < 0.0 || unknown_rate > 1.0)
    throw InvalidSpecError("unknown_rate must be in [0,1]");
  if (displacement_scale <= 0.0) throw InvalidSpecError("displacement_scale must be > 0");
  if (!displacements.empty()) {
    if (displacements.size() != au_ids.size())
      throw InvalidSpecError("one displacement pattern per AU required");
    for (const auto& d : displacements) {
      if (d.active.empty()) throw InvalidSpecError("every AU needs a nonzero displacement");
      for (const auto& [idx, off] : d.active)
        if (idx >= kDefaultLandmarkCount)
          throw InvalidSpecError("displacement landmark index out of range");
    }
  }
}

std::vector<Point3> neutral_face_template() {
  std::vector<Point3> pts;
  pts.reserve(kDefaultLandmarkCount);
  // 9x9 grid over the face plane; depth is a dome that falls off with the
  // squared distance from the nose axis. A fixed sub-unit jitter keeps the
  // points off exact voxel-rounding boundaries, which a perfectly regular
  // grid would sit on.
  Rng jitter(0x7e3a11ce);
  for (int row = 0; row < 9; ++row) {
    for (int col = 0; col < 9; ++col) {
      const double x = -40.0 + 10.0 * col + jitter.uniform(-0.4, 0.4);
      const double y = -50.0 + 12.5 * row + jitter.uniform(-0.4, 0.4);
      const double z = 30.0 - (x * x + y * y) / 150.0 + jitter.uniform(-0.4, 0.4);
      pts.push_back({x, y, z});
    }
  }
  pts.push_back({0.3, -5.1, 42.0});   // nose tip
  pts.push_back({0.2, -58.2, 18.1});  // chin
  return pts;
}

double face_template_scale() {
  const auto pts = neutral_face_template();
  double scale = 0.0;
  for (int a = 0; a < 3; ++a) {
    double lo = pts[0][a], hi = pts[0][a];
    for (const auto& p : pts) {
      lo = std::min(lo, p[a]);
      hi = std::max(hi, p[a]);
    }
    scale = std::max(scale, hi - lo);
  }
  return scale;
}

std::vector<std::string> default_au_ids() {
  return {"1", "2", "4", "6", "7", "10", "12", "14", "15", "17", "23", "24"};
}

std::vector<double> default_occurrence_rates() {
  // Matches the BP4D occurrence distribution used throughout the tests.
  return {0.2107, 0.1704, 0.2022, 0.4610, 0.5490, 0.5939,
          0.5618, 0.4660, 0.1696, 0.3437, 0.1656, 0.1516};
}

namespace {

constexpr std::size_t kLandmarksPerAu = 5;

Point3 direction_for(std::size_t au_index) {
  constexpr double r = 0.70710678118654752440;  // 1/sqrt(2)
  static const Point3 dirs[6] = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0},
                                 {r, r, 0.0},     {0.0, r, r},     {r, 0.0, r}};
  return dirs[au_index % 6];
}

// The Unknown state moves the same landmarks along a rotated direction, so
// all three classes are geometrically separable.
Point3 rotate_axes(const Point3& d) { return {d[2], d[0], d[1]}; }

std::vector<AuDisplacement> build_default_displacements(std::size_t au_count,
                                                        double magnitude) {
  // Only interior grid points (rows/cols 1..7) move. The hull landmarks pin
  // the bounding box, so one AU's displacement never shifts the min-max
  // normalization of the others and each AU keeps a local, superposable
  // voxel signature.
  std::vector<std::size_t> interior;
  for (std::size_t r = 1; r <= 7; ++r)
    for (std::size_t c = 1; c <= 7; ++c) interior.push_back(9 * r + c);

  std::vector<AuDisplacement> out;
  for (std::size_t a = 0; a < au_count; ++a) {
    AuDisplacement d;
    const Point3 dir = direction_for(a);
    const Point3 alt = rotate_axes(dir);
    const int sign = (a % 2 == 0) ? 1 : -1;
    for (std::size_t j = 0; j < kLandmarksPerAu; ++j) {
      const std::size_t idx = interior[(a * kLandmarksPerAu + j) % interior.size()];
      d.active.push_back({idx,
                          {sign * magnitude * dir[0], sign * magnitude * dir[1],
                           sign * magnitude * dir[2]}});
      d.ambiguous.push_back({idx,
                             {sign * magnitude * alt[0], sign * magnitude * alt[1],
                              sign * magnitude * alt[2]}});
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::string frame_name(std::size_t subject, std::size_t frame) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%03zu_f%04zu", subject, frame);
  return buf;
}

std::string subject_name(std::size_t subject) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "s%03zu", subject);
  return buf;
}

}  // namespace

Dataset generate_dataset(const SynthSpec& spec_in) {
  SynthSpec spec = spec_in;
  if (spec.au_ids.empty()) spec.au_ids = default_au_ids();
  if (spec.occurrence_rates.empty()) {
    const auto defaults = default_occurrence_rates();
    for (std::size_t a = 0; a < spec.au_ids.size(); ++a)
      spec.occurrence_rates.push_back(defaults[a % defaults.size()]);
  }
  spec.validate();

  const auto base = neutral_face_template();
  const double scale = face_template_scale();
  const auto displacements =
      spec.displacements.empty()
          ? build_default_displacements(spec.au_ids.size(), spec.displacement_scale * scale)
          : spec.displacements;
  const double noise = spec.sigma * scale;

  Dataset ds;
  ds.n_landmarks = base.size();
  ds.labels.au_ids = spec.au_ids;

  const Rng root(spec.seed);
  std::size_t global_frame = 0;
  for (std::size_t s = 0; s < spec.subjects; ++s) {
    for (std::size_t f = 0; f < spec.frames_per_subject; ++f, ++global_frame) {
      Rng rng = root.derive("frame", global_frame);

      LabelTable::Row row;
      row.frame_id = frame_name(s, f);
      row.subject_id = subject_name(s);

      std::vector<Point3> pts = base;
      for (std::size_t a = 0; a < spec.au_ids.size(); ++a) {
        const bool unknown = rng.uniform01() < spec.unknown_rate;
        const bool active = rng.uniform01() < spec.occurrence_rates[a];
        if (unknown) {
          row.states.push_back(AuState::Unknown);
          for (const auto& [idx, off] : displacements[a].ambiguous)
            for (int ax = 0; ax < 3; ++ax) pts[idx][ax] += off[ax];
        } else {
          row.states.push_back(active ? AuState::Present : AuState::Absent);
          if (active)
            for (const auto& [idx, off] : displacements[a].active)
              for (int ax = 0; ax < 3; ++ax) pts[idx][ax] += off[ax];
        }
      }

      if (noise > 0.0)
        for (auto& p : pts)
          for (int ax = 0; ax < 3; ++ax) p[ax] += noise * rng.gaussian();

      // Rigid translation plus uniform scale; the voxelizer divides both out.
      const double a = rng.uniform(0.5, 2.0);
      Point3 t;
      for (int ax = 0; ax < 3; ++ax) t[ax] = rng.uniform(-100.0, 100.0);
      for (auto& p : pts)
        for (int ax = 0; ax < 3; ++ax) p[ax] = a * p[ax] + t[ax];

      LandmarkSet frame;
      frame.frame_id = row.frame_id;
      frame.subject_id = row.subject_id;
      frame.points = std::move(pts);
      ds.frames.push_back(std::move(frame));
      ds.labels.frame_index.emplace(row.frame_id, ds.labels.rows.size());
      ds.labels.rows.push_back(std::move(row));
    }
  }
  return ds;
}

void write_dataset(const SynthSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  Dataset ds = generate_dataset(spec);

  fs::create_directories(fs::path(out_dir) / "landmarks");
  DatasetManifest manifest;
  manifest.n_landmarks = ds.n_landmarks;
  manifest.label_file = "labels.csv";

  for (const auto& frame : ds.frames) {
    const std::string rel = "landmarks/" + frame.frame_id + ".txt";
    std::ofstream out(fs::path(out_dir) / rel, std::ios::binary);
    if (!out) throw DataError("cannot write " + rel);
    out << serialize_landmark_file(frame.points);
    manifest.entries.push_back({frame.frame_id, frame.subject_id, rel});
  }
  {
    std::ofstream out(fs::path(out_dir) / "labels.csv", std::ios::binary);
    out << serialize_label_file(ds.labels);
  }
  {
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    out << serialize_manifest(manifest);
  }
}

}  // namespace auvox
