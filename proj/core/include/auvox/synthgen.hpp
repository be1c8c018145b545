#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "auvox/landmark_io.hpp"

namespace auvox {

// Sparse landmark displacement: which landmarks move, and by how much, when
// an AU's state is active. Offsets are in neutral-template units.
struct AuDisplacement {
  std::vector<std::pair<std::size_t, Point3>> active;    // Present state
  std::vector<std::pair<std::size_t, Point3>> ambiguous; // Unknown state
};

struct SynthSpec {
  std::size_t subjects = 20;
  std::size_t frames_per_subject = 50;
  std::vector<std::string> au_ids;        // defaults to the canonical 12
  std::vector<double> occurrence_rates;   // per AU, in [0,1]
  std::vector<AuDisplacement> displacements;  // empty -> built from defaults
  double displacement_scale = 0.04;  // fraction of face scale per active AU
  double sigma = 0.0;                // Gaussian noise, fraction of face scale
  double unknown_rate = 0.0;         // probability an AU lands in the Unknown state
  std::uint64_t seed = 0;

  void validate() const;  // throws InvalidSpecError
};

// 83 canonical points: a 9x9 planar grid with a parabolic depth dome plus a
// nose tip and a chin point. Not derived from any real face data.
std::vector<Point3> neutral_face_template();

// Largest axis extent of the neutral template; displacement and noise
// magnitudes are fractions of this.
double face_template_scale();

// Canonical AU id list and their Table-1-style default occurrence rates.
std::vector<std::string> default_au_ids();
std::vector<double> default_occurrence_rates();

// Deterministic in spec.seed; each frame's randomness derives from
// (seed, frame index), so frames are independent of generation order.
//
// Each frame is: template + active-AU displacements + noise, then a random
// rigid translation and uniform scale (which encode_frame divides out).
// An AU in the Unknown state is labeled 9 and displaces along its ambiguous
// pattern, giving the third class its own geometric signature.
Dataset generate_dataset(const SynthSpec& spec);

// Writes manifest.json, labels.csv and landmarks/<frame>.txt under out_dir
// using the landmark_io formats.
void write_dataset(const SynthSpec& spec, const std::string& out_dir);

}  // namespace auvox
