#include "auvox/landmark_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace auvox {
namespace {

// Splits on '\n'; a trailing newline does not produce an extra empty line.
// Trailing '\r' is stripped so CRLF files parse too.
std::vector<std::string> split_lines(const std::string& raw) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find('\n', start);
    if (end == std::string::npos) {
      if (start < raw.size()) lines.push_back(raw.substr(start));
      break;
    }
    std::string line = raw.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t) toks.push_back(std::move(t));
  return toks;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(',', start);
    if (end == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, end - start));
    start = end + 1;
  }
  return cells;
}

double parse_double_token(const std::string& tok, std::size_t line_no) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw MalformedLineError("line " + std::to_string(line_no) +
                             ": non-numeric token '" + tok + "'");
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

const LabelTable::Row& LabelTable::row(const std::string& frame_id) const {
  auto it = frame_index.find(frame_id);
  if (it == frame_index.end()) throw DataError("no label row for frame '" + frame_id + "'");
  return rows[it->second];
}

std::string canonical_au_id(const std::string& header_token) {
  std::string s = header_token;
  if (s.size() >= 2 && (s[0] == 'A' || s[0] == 'a') && (s[1] == 'U' || s[1] == 'u'))
    s = s.substr(2);
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i] == '0') ++i;
  return s.substr(i);
}

std::string au_header_token(const std::string& au_id) {
  bool numeric = !au_id.empty() &&
                 std::all_of(au_id.begin(), au_id.end(),
                             [](unsigned char c) { return std::isdigit(c); });
  if (!numeric) return au_id;
  std::string s = au_id;
  while (s.size() < 2) s = "0" + s;
  return "AU" + s;
}

std::vector<Point3> parse_landmark_file(const std::string& raw, std::size_t expected_n) {
  if (expected_n < 1) throw DataError("expected_n must be >= 1");
  auto lines = split_lines(raw);
  if (lines.size() != expected_n)
    throw WrongCountError("expected " + std::to_string(expected_n) + " landmark lines, got " +
                          std::to_string(lines.size()));
  std::vector<Point3> points;
  points.reserve(expected_n);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto toks = split_ws(lines[i]);
    if (toks.size() != 3)
      throw MalformedLineError("line " + std::to_string(i + 1) + ": expected 3 coordinates, got " +
                               std::to_string(toks.size()));
    Point3 p;
    for (int a = 0; a < 3; ++a) p[a] = parse_double_token(toks[a], i + 1);
    for (int a = 0; a < 3; ++a)
      if (!std::isfinite(p[a]))
        throw NonFiniteError("line " + std::to_string(i + 1) + ": non-finite coordinate");
    points.push_back(p);
  }
  return points;
}

std::string serialize_landmark_file(const std::vector<Point3>& points) {
  std::string out;
  char buf[96];
  for (const auto& p : points) {
    // %.17g round-trips every finite double exactly.
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    out += buf;
  }
  return out;
}

LabelTable parse_label_file(const std::string& raw) {
  auto lines = split_lines(raw);
  if (lines.empty()) throw MalformedLineError("label file is empty");
  auto header = split_csv_row(lines[0]);
  if (header.size() < 3 || header[0] != "frame_id" || header[1] != "subject_id")
    throw MalformedLineError("label header must start with 'frame_id,subject_id' and list AU columns");

  LabelTable table;
  for (std::size_t i = 2; i < header.size(); ++i)
    table.au_ids.push_back(canonical_au_id(header[i]));

  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto cells = split_csv_row(lines[li]);
    if (cells.size() != header.size())
      throw MalformedLineError("line " + std::to_string(li + 1) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    LabelTable::Row row;
    row.frame_id = cells[0];
    row.subject_id = cells[1];
    for (std::size_t c = 2; c < cells.size(); ++c) {
      const std::string& v = cells[c];
      if (v == "1")
        row.states.push_back(AuState::Present);
      else if (v == "0")
        row.states.push_back(AuState::Absent);
      else if (v == "9")
        row.states.push_back(AuState::Unknown);
      else
        throw UnknownCellValueError("line " + std::to_string(li + 1) + ", column " +
                                    header[c] + ": cell '" + v + "' is not 0, 1 or 9");
    }
    if (table.frame_index.count(row.frame_id))
      throw DuplicateFrameError("duplicate frame_id '" + row.frame_id + "'");
    table.frame_index.emplace(row.frame_id, table.rows.size());
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string serialize_label_file(const LabelTable& table) {
  std::string out = "frame_id,subject_id";
  for (const auto& id : table.au_ids) out += "," + au_header_token(id);
  out += "\n";
  for (const auto& row : table.rows) {
    out += row.frame_id + "," + row.subject_id;
    for (AuState s : row.states)
      out += (s == AuState::Present) ? ",1" : (s == AuState::Absent) ? ",0" : ",9";
    out += "\n";
  }
  return out;
}

DatasetManifest parse_manifest(const std::string& raw) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest is not valid JSON: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.n_landmarks = j.at("n_landmarks").get<std::size_t>();
    m.label_file = j.at("label_file").get<std::string>();
    for (const auto& e : j.at("entries")) {
      DatasetManifest::Entry entry;
      entry.frame_id = e.at("frame_id").get<std::string>();
      entry.subject_id = e.at("subject_id").get<std::string>();
      entry.landmark_file = e.at("landmark_file").get<std::string>();
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest missing required field: ") + e.what());
  }
  if (m.n_landmarks < 1) throw DataError("manifest n_landmarks must be >= 1");
  return m;
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  nlohmann::json j;
  j["n_landmarks"] = manifest.n_landmarks;
  j["label_file"] = manifest.label_file;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries)
    j["entries"].push_back({{"frame_id", e.frame_id},
                            {"subject_id", e.subject_id},
                            {"landmark_file", e.landmark_file}});
  return j.dump(2) + "\n";
}

Dataset load_dataset(const std::string& manifest_path) {
  namespace fs = std::filesystem;
  DatasetManifest manifest = parse_manifest(read_file(manifest_path));
  fs::path base = fs::path(manifest_path).parent_path();

  Dataset ds;
  ds.n_landmarks = manifest.n_landmarks;
  ds.labels = parse_label_file(read_file((base / manifest.label_file).string()));

  std::unordered_map<std::string, bool> seen;
  for (const auto& entry : manifest.entries) {
    if (seen.count(entry.frame_id))
      throw DuplicateFrameError("manifest lists frame '" + entry.frame_id + "' twice");
    seen.emplace(entry.frame_id, true);
    if (!ds.labels.frame_index.count(entry.frame_id))
      throw DataError("frame '" + entry.frame_id + "' has no row in the label file");

    LandmarkSet set;
    set.frame_id = entry.frame_id;
    set.subject_id = entry.subject_id;
    const std::string path = (base / entry.landmark_file).string();
    try {
      set.points = parse_landmark_file(read_file(path), ds.n_landmarks);
    } catch (const DataError& e) {
      throw DataError("frame '" + entry.frame_id + "' (" + path + "): " + e.what());
    }
    ds.frames.push_back(std::move(set));
  }
  return ds;
}

std::vector<AuOccurrence> occurrence_stats(const LabelTable& table) {
  if (table.empty()) throw EmptyTableError("label table has no rows");
  std::vector<AuOccurrence> out;
  for (std::size_t a = 0; a < table.au_ids.size(); ++a) {
    std::size_t present = 0, absent = 0;
    for (const auto& row : table.rows) {
      if (row.states[a] == AuState::Present) ++present;
      else if (row.states[a] == AuState::Absent) ++absent;
    }
    if (present + absent == 0) continue;  // all Unknown: omitted, like "-" rows
    out.push_back({table.au_ids[a],
                   100.0 * static_cast<double>(present) / static_cast<double>(present + absent)});
  }
  return out;
}

}  // namespace auvox
