#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "auvox/tensor.hpp"

namespace auvox {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  std::uint64_t total() const { return tp + fp + fn + tn; }
};

// F1 = 2RP / (R + P); zero whenever a denominator is zero, so AUs that never
// occur in a test fold stay comparable.
double f1_frame(const ConfusionCounts& counts);

// One-vs-rest counts and supports for the three classes of one AU, in class
// order {present, absent, unknown}.
struct ThreeClassCounts {
  std::array<ConfusionCounts, 3> per_class;
  std::array<std::uint64_t, 3> support = {0, 0, 0};

  ThreeClassCounts& operator+=(const ThreeClassCounts& o) {
    for (int i = 0; i < 3; ++i) {
      per_class[i] += o.per_class[i];
      support[i] += o.support[i];
    }
    return *this;
  }
};

// Unweighted mean of the three per-class F1 scores.
double f1_macro_3class(const ThreeClassCounts& counts);
// Support-weighted mean of the three per-class F1 scores.
double f1_micro_3class(const ThreeClassCounts& counts);
// Pooled-count alternative: F1 of the summed per-class confusion counts.
// Provided under its own name; f1_micro_3class is what reports use.
double f1_micro_pooled_3class(const ThreeClassCounts& counts);

// Streaming accumulation; partial counts from shards merge with +=.
// Binary: prediction positive iff p >= threshold; entries with known == 0
// are excluded. per_au must have pred.dim(1) entries.
template <typename S>
void accumulate_binary_counts(const Tensor<S>& pred, const Tensor<S>& targets,
                              const Tensor<std::uint8_t>& known, double threshold,
                              std::vector<ConfusionCounts>& per_au);

// ThreeClass: predicted class is the argmax of each AU's 3-vector.
template <typename S>
void accumulate_3class_counts(const Tensor<S>& pred, const Tensor<std::uint8_t>& classes,
                              std::vector<ThreeClassCounts>& per_au);

enum class ReportFormat { Text, Csv, Json };
ReportFormat report_format_from_name(const std::string& name);

// Per-AU results in the layout of the paper-style tables: AU rows, then an
// Avg row. Values are fractions in [0,1]; emission renders percents with two
// decimals. A NaN value renders as "-" (AU not evaluated in that column).
struct MetricsReport {
  struct Column {
    std::string name;  // f1_3fold | f1_10fold | f1_macro | f1_micro
    std::vector<double> values;
  };

  std::string title;
  std::vector<std::string> au_ids;
  std::vector<Column> columns;
  std::vector<std::string> notes;
  std::string provenance_json;  // resolved config, seed, tool version

  // Arithmetic mean of the column's non-NaN values; NaN if none.
  double average(std::size_t col) const;
};

std::string emit_report(const MetricsReport& report, ReportFormat format);

// Joins a 3-fold and a 10-fold binary report over the same AU list into one
// two-column report.
MetricsReport merge_binary_reports(const MetricsReport& threefold,
                                   const MetricsReport& tenfold);

}  // namespace auvox
