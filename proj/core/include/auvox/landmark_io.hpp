#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "auvox/error.hpp"

namespace auvox {

inline constexpr std::size_t kDefaultLandmarkCount = 83;

using Point3 = std::array<double, 3>;

// One frame's ordered 3D landmarks, in raw sensor coordinates.
struct LandmarkSet {
  std::string frame_id;
  std::string subject_id;
  std::vector<Point3> points;
};

enum class AuState : std::uint8_t { Absent = 0, Present = 1, Unknown = 2 };

// Per-frame AU annotations. Rows keep file order; frame_index gives O(1)
// lookup by frame id.
struct LabelTable {
  struct Row {
    std::string frame_id;
    std::string subject_id;
    std::vector<AuState> states;  // one per au_ids entry
  };

  std::vector<std::string> au_ids;  // canonical ids, e.g. "1", "12"
  std::vector<Row> rows;
  std::unordered_map<std::string, std::size_t> frame_index;

  bool empty() const { return rows.empty(); }
  const Row& row(const std::string& frame_id) const;
};

struct DatasetManifest {
  struct Entry {
    std::string frame_id;
    std::string subject_id;
    std::string landmark_file;  // relative to the manifest's directory
  };

  std::size_t n_landmarks = kDefaultLandmarkCount;
  std::string label_file;  // relative to the manifest's directory
  std::vector<Entry> entries;
};

// Fully loaded dataset: labels plus one landmark set per manifest entry,
// in manifest order.
struct Dataset {
  std::size_t n_landmarks = kDefaultLandmarkCount;
  LabelTable labels;
  std::vector<LandmarkSet> frames;
};

// "AU07" -> "7", "AU12" -> "12"; tokens without the AU prefix pass through
// with leading zeros stripped.
std::string canonical_au_id(const std::string& header_token);
// "7" -> "AU07"; non-numeric ids pass through unchanged.
std::string au_header_token(const std::string& au_id);

std::vector<Point3> parse_landmark_file(const std::string& raw, std::size_t expected_n);
std::string serialize_landmark_file(const std::vector<Point3>& points);

LabelTable parse_label_file(const std::string& raw);
std::string serialize_label_file(const LabelTable& table);

DatasetManifest parse_manifest(const std::string& raw);
std::string serialize_manifest(const DatasetManifest& manifest);

// Reads the manifest at `path`, then the label file and every landmark file,
// resolving relative paths against the manifest's directory. Validates frame
// counts, uniqueness and the join against the label table.
Dataset load_dataset(const std::string& manifest_path);

struct AuOccurrence {
  std::string au_id;
  double percent;  // 100 * present / (present + absent)
};

// Per-AU occurrence percentages among frames with a known label. AUs whose
// every frame is Unknown are omitted (the "-" convention).
std::vector<AuOccurrence> occurrence_stats(const LabelTable& table);

}  // namespace auvox
