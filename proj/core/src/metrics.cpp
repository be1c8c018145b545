#include "auvox/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "auvox/error.hpp"
#include "json.hpp"

namespace auvox {

double f1_frame(const ConfusionCounts& c) {
  if (c.tp + c.fp == 0 || c.tp + c.fn == 0) return 0.0;
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * recall * precision / (recall + precision);
}

double f1_macro_3class(const ThreeClassCounts& counts) {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i) sum += f1_frame(counts.per_class[i]);
  return sum / 3.0;
}

double f1_micro_3class(const ThreeClassCounts& counts) {
  const std::uint64_t total = counts.support[0] + counts.support[1] + counts.support[2];
  if (total == 0) return 0.0;
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    sum += f1_frame(counts.per_class[i]) *
           (static_cast<double>(counts.support[i]) / static_cast<double>(total));
  return sum;
}

double f1_micro_pooled_3class(const ThreeClassCounts& counts) {
  ConfusionCounts pooled;
  for (int i = 0; i < 3; ++i) pooled += counts.per_class[i];
  return f1_frame(pooled);
}

template <typename S>
void accumulate_binary_counts(const Tensor<S>& pred, const Tensor<S>& targets,
                              const Tensor<std::uint8_t>& known, double threshold,
                              std::vector<ConfusionCounts>& per_au) {
  if (pred.rank() != 2 || !pred.same_shape(targets) || pred.dims() != known.dims())
    throw ShapeMismatchError("accumulate_binary_counts: shape mismatch");
  const std::size_t au_count = pred.dim(1);
  if (per_au.size() != au_count)
    throw ShapeMismatchError("accumulate_binary_counts: per_au size mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!known[i]) continue;
    ConfusionCounts& c = per_au[i % au_count];
    const bool predicted = static_cast<double>(pred[i]) >= threshold;
    const bool actual = static_cast<double>(targets[i]) > 0.5;
    if (predicted && actual) ++c.tp;
    else if (predicted && !actual) ++c.fp;
    else if (!predicted && actual) ++c.fn;
    else ++c.tn;
  }
}

template <typename S>
void accumulate_3class_counts(const Tensor<S>& pred, const Tensor<std::uint8_t>& classes,
                              std::vector<ThreeClassCounts>& per_au) {
  if (pred.rank() != 3 || pred.dim(2) != 3)
    throw ShapeMismatchError("accumulate_3class_counts: pred must be [B, A, 3]");
  const std::size_t au_count = pred.dim(1);
  if (classes.rank() != 2 || classes.dim(1) != au_count || classes.dim(0) != pred.dim(0) ||
      per_au.size() != au_count)
    throw ShapeMismatchError("accumulate_3class_counts: shape mismatch");

  for (std::size_t i = 0; i < classes.size(); ++i) {
    const S* p = pred.data() + i * 3;
    int arg = 0;
    if (p[1] > p[arg]) arg = 1;
    if (p[2] > p[arg]) arg = 2;
    const int actual = classes[i];
    ThreeClassCounts& c = per_au[i % au_count];
    ++c.support[actual];
    for (int cls = 0; cls < 3; ++cls) {
      const bool predicted = arg == cls;
      const bool is = actual == cls;
      if (predicted && is) ++c.per_class[cls].tp;
      else if (predicted && !is) ++c.per_class[cls].fp;
      else if (!predicted && is) ++c.per_class[cls].fn;
      else ++c.per_class[cls].tn;
    }
  }
}

template void accumulate_binary_counts(const Tensor<float>&, const Tensor<float>&,
                                       const Tensor<std::uint8_t>&, double,
                                       std::vector<ConfusionCounts>&);
template void accumulate_binary_counts(const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<std::uint8_t>&, double,
                                       std::vector<ConfusionCounts>&);
template void accumulate_3class_counts(const Tensor<float>&, const Tensor<std::uint8_t>&,
                                       std::vector<ThreeClassCounts>&);
template void accumulate_3class_counts(const Tensor<double>&, const Tensor<std::uint8_t>&,
                                       std::vector<ThreeClassCounts>&);

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "text") return ReportFormat::Text;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "json") return ReportFormat::Json;
  throw UsageError("unknown format '" + name + "' (expected text, csv or json)");
}

double MetricsReport::average(std::size_t col) const {
  const auto& values = columns.at(col).values;
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

namespace {

// Percent with two decimals, half-up; the layout the paper's tables use.
double percent2(double fraction) {
  return std::floor(fraction * 10000.0 + 0.5) / 100.0;
}

std::string format_cell(double fraction) {
  if (std::isnan(fraction)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", percent2(fraction));
  return buf;
}

// Binary reports always render the canonical two-column layout; a fold count
// that was not run shows as "-".
std::vector<MetricsReport::Column> csv_columns(const MetricsReport& r) {
  bool binary = !r.columns.empty();
  for (const auto& col : r.columns)
    binary = binary && (col.name == "f1_3fold" || col.name == "f1_10fold");
  if (!binary) return r.columns;
  const std::vector<double> blank(r.au_ids.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<MetricsReport::Column> out = {{"f1_3fold", blank}, {"f1_10fold", blank}};
  for (const auto& col : r.columns) out[col.name == "f1_3fold" ? 0 : 1].values = col.values;
  return out;
}

double column_average(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::string emit_csv(const MetricsReport& r) {
  const auto columns = csv_columns(r);
  std::string out = "au";
  for (const auto& col : columns) out += "," + col.name;
  out += "\n";
  for (std::size_t i = 0; i < r.au_ids.size(); ++i) {
    out += r.au_ids[i];
    for (const auto& col : columns) out += "," + format_cell(col.values[i]);
    out += "\n";
  }
  out += "avg";
  for (const auto& col : columns) out += "," + format_cell(column_average(col.values));
  out += "\n";
  for (const auto& note : r.notes) out += "# " + note + "\n";
  if (!r.provenance_json.empty()) out += "# provenance " + r.provenance_json + "\n";
  return out;
}

std::string emit_text(const MetricsReport& r) {
  std::ostringstream os;
  if (!r.title.empty()) os << r.title << "\n";
  os << "AU";
  for (const auto& col : r.columns) os << "\t" << col.name;
  os << "\n";
  for (std::size_t i = 0; i < r.au_ids.size(); ++i) {
    os << r.au_ids[i];
    for (const auto& col : r.columns) os << "\t" << format_cell(col.values[i]);
    os << "\n";
  }
  os << "Avg";
  for (std::size_t c = 0; c < r.columns.size(); ++c) os << "\t" << format_cell(r.average(c));
  os << "\n";
  for (const auto& note : r.notes) os << "note: " << note << "\n";
  if (!r.provenance_json.empty()) os << "provenance: " << r.provenance_json << "\n";
  return os.str();
}

std::string emit_json(const MetricsReport& r) {
  nlohmann::json j;
  j["title"] = r.title;
  j["au_ids"] = r.au_ids;
  j["columns"] = nlohmann::json::array();
  for (std::size_t c = 0; c < r.columns.size(); ++c) {
    nlohmann::json col;
    col["name"] = r.columns[c].name;
    nlohmann::json vals = nlohmann::json::array();
    for (double v : r.columns[c].values)
      vals.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(percent2(v)));
    col["values"] = vals;
    const double avg = r.average(c);
    col["avg"] = std::isnan(avg) ? nlohmann::json(nullptr) : nlohmann::json(percent2(avg));
    j["columns"].push_back(col);
  }
  j["notes"] = r.notes;
  if (!r.provenance_json.empty()) j["provenance"] = nlohmann::json::parse(r.provenance_json);
  return j.dump(2) + "\n";
}

}  // namespace

std::string emit_report(const MetricsReport& report, ReportFormat format) {
  for (const auto& col : report.columns)
    if (col.values.size() != report.au_ids.size())
      throw ShapeMismatchError("report column '" + col.name + "' length mismatch");
  switch (format) {
    case ReportFormat::Csv: return emit_csv(report);
    case ReportFormat::Json: return emit_json(report);
    case ReportFormat::Text: default: return emit_text(report);
  }
}

MetricsReport merge_binary_reports(const MetricsReport& threefold, const MetricsReport& tenfold) {
  if (threefold.au_ids != tenfold.au_ids)
    throw ShapeMismatchError("cannot merge reports over different AU lists");
  if (threefold.columns.size() != 1 || tenfold.columns.size() != 1 ||
      threefold.columns[0].name != "f1_3fold" || tenfold.columns[0].name != "f1_10fold")
    throw ShapeMismatchError("merge expects a single-column f1_3fold and f1_10fold report");
  MetricsReport out;
  out.title = threefold.title;
  out.au_ids = threefold.au_ids;
  out.columns = {threefold.columns[0], tenfold.columns[0]};
  out.notes = threefold.notes;
  for (const auto& n : tenfold.notes) out.notes.push_back(n);
  out.provenance_json = threefold.provenance_json;
  return out;
}

}  // namespace auvox
