#include "auvox/metrics.hpp"

#include <cmath>
#include <sstream>

#include "auvox/rng.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace auvox;

namespace {

// Brute-force per-class tally over flat prediction/label arrays; the oracle
// the streaming accumulators are checked against.
ConfusionCounts tally_binary(const std::vector<int>& pred, const std::vector<int>& truth) {
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 1 && truth[i] == 1) ++c.tp;
    if (pred[i] == 1 && truth[i] == 0) ++c.fp;
    if (pred[i] == 0 && truth[i] == 1) ++c.fn;
    if (pred[i] == 0 && truth[i] == 0) ++c.tn;
  }
  return c;
}

double brute_force_f1(const std::vector<int>& pred, const std::vector<int>& truth) {
  const ConfusionCounts c = tally_binary(pred, truth);
  if (c.tp + c.fp == 0 || c.tp + c.fn == 0) return 0.0;
  const double p = double(c.tp) / double(c.tp + c.fp);
  const double r = double(c.tp) / double(c.tp + c.fn);
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("f1 of hand-computed counts") {
  CHECK(f1_frame({3, 1, 2, 10}) == doctest::Approx(0.6667).epsilon(1e-4));
  // P = R implies F1 = P
  CHECK(f1_frame({6, 2, 2, 0}) == doctest::Approx(0.75));
  CHECK(f1_frame({0, 0, 5, 5}) == 0.0);
  CHECK(f1_frame({0, 5, 0, 5}) == 0.0);
  CHECK(f1_frame({0, 0, 0, 5}) == 0.0);
}

TEST_CASE("f1 is 1 exactly when there are no errors and some positives") {
  CHECK(f1_frame({7, 0, 0, 3}) == 1.0);
  CHECK(f1_frame({7, 1, 0, 3}) < 1.0);
  CHECK(f1_frame({7, 0, 1, 3}) < 1.0);
}

TEST_CASE("accumulated f1 matches a brute-force tally on random sets") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.uniform_int(40);
    Tensor<float> prob({n, 1}), target({n, 1});
    Tensor<std::uint8_t> known({n, 1});
    std::vector<int> pred(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      prob[i] = static_cast<float>(rng.uniform01());
      truth[i] = rng.uniform01() < 0.3 ? 1 : 0;
      target[i] = static_cast<float>(truth[i]);
      known[i] = 1;
      pred[i] = prob[i] >= 0.5f ? 1 : 0;
    }
    std::vector<ConfusionCounts> per_au(1);
    accumulate_binary_counts(prob, target, known, 0.5, per_au);
    CHECK(f1_frame(per_au[0]) == doctest::Approx(brute_force_f1(pred, truth)).epsilon(1e-12));
  }
}

TEST_CASE("macro F1 is the unweighted class mean") {
  ThreeClassCounts c;
  c.per_class[0] = {9, 1, 1, 9};   // F1 = 0.9
  c.per_class[1] = {9, 1, 1, 9};
  c.per_class[2] = {9, 1, 1, 9};
  CHECK(f1_macro_3class(c) == doctest::Approx(0.9));

  c.per_class[0] = {5, 0, 0, 5};   // F1 = 1
  c.per_class[1] = {2, 2, 2, 4};   // F1 = 0.5
  c.per_class[2] = {0, 3, 3, 4};   // F1 = 0
  CHECK(f1_macro_3class(c) == doctest::Approx(0.5));
}

TEST_CASE("micro F1 weights classes by support") {
  ThreeClassCounts c;
  c.per_class[0] = {8, 0, 0, 2};  // F1 = 1
  c.per_class[1] = {0, 1, 1, 8};  // F1 = 0
  c.per_class[2] = {0, 1, 1, 8};  // F1 = 0
  c.support = {8, 1, 1};
  CHECK(f1_micro_3class(c) == doctest::Approx(0.8));

  c.support = {4, 4, 4};  // equal supports reduce to the macro mean
  CHECK(f1_micro_3class(c) == doctest::Approx(f1_macro_3class(c)));

  c.support = {10, 0, 0};  // single-class labels: that class's F1
  CHECK(f1_micro_3class(c) == doctest::Approx(f1_frame(c.per_class[0])));
}

TEST_CASE("3-class accumulation matches a brute-force tally") {
  Rng rng(88);
  const std::size_t frames = 10;
  Tensor<float> pred({frames, 1, 3});
  Tensor<std::uint8_t> truth({frames, 1});
  std::vector<int> pred_cls(frames), true_cls(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double best = -1.0;
    for (int j = 0; j < 3; ++j) {
      const double v = rng.uniform01();
      pred[i * 3 + j] = static_cast<float>(v);
      if (v > best) {
        best = v;
        pred_cls[i] = j;
      }
    }
    true_cls[i] = static_cast<int>(rng.uniform_int(3));
    truth[i] = static_cast<std::uint8_t>(true_cls[i]);
  }

  std::vector<ThreeClassCounts> per_au(1);
  accumulate_3class_counts(pred, truth, per_au);

  for (int cls = 0; cls < 3; ++cls) {
    std::vector<int> p(frames), t(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      p[i] = pred_cls[i] == cls ? 1 : 0;
      t[i] = true_cls[i] == cls ? 1 : 0;
    }
    CHECK(f1_frame(per_au[0].per_class[cls]) == doctest::Approx(brute_force_f1(p, t)));
  }
  double macro = 0.0;
  for (int cls = 0; cls < 3; ++cls) {
    std::vector<int> p(frames), t(frames);
    for (std::size_t i = 0; i < frames; ++i) {
      p[i] = pred_cls[i] == cls ? 1 : 0;
      t[i] = true_cls[i] == cls ? 1 : 0;
    }
    macro += brute_force_f1(p, t);
  }
  CHECK(f1_macro_3class(per_au[0]) == doctest::Approx(macro / 3.0));
}

TEST_CASE("binary accumulation thresholds at 0.5 and skips unknowns") {
  Tensor<float> pred({4, 2});
  Tensor<float> targets({4, 2});
  Tensor<std::uint8_t> known({4, 2});
  const float pv[] = {0.9f, 0.2f, 0.5f, 0.4f, 0.1f, 0.8f, 0.6f, 0.3f};
  const float tv[] = {1, 0, 1, 1, 0, 1, 0, 0};
  for (int i = 0; i < 8; ++i) {
    pred[i] = pv[i];
    targets[i] = tv[i];
    known[i] = 1;
  }
  known[6] = 0;  // frame 3, AU 0 unlabeled

  std::vector<ConfusionCounts> per_au(2);
  accumulate_binary_counts(pred, targets, known, 0.5, per_au);
  // AU0: (0.9,1)->tp (0.5,1)->tp (0.1,0)->tn, one skipped
  CHECK(per_au[0].tp == 2);
  CHECK(per_au[0].tn == 1);
  CHECK(per_au[0].total() == 3);
  // AU1: (0.2,0)->tn (0.4,1)->fn (0.8,1)->tp (0.3,0)->tn
  CHECK(per_au[1].tp == 1);
  CHECK(per_au[1].fn == 1);
  CHECK(per_au[1].tn == 2);
}

TEST_CASE("streaming accumulation equals a one-shot tally") {
  Rng rng(31);
  const std::size_t n = 64;
  Tensor<float> pred({n, 3}), targets({n, 3});
  Tensor<std::uint8_t> known({n, 3});
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred[i] = static_cast<float>(rng.uniform01());
    targets[i] = rng.uniform01() < 0.5 ? 1.0f : 0.0f;
    known[i] = 1;
  }
  std::vector<ConfusionCounts> oneshot(3);
  accumulate_binary_counts(pred, targets, known, 0.5, oneshot);

  // shard into pieces and merge
  std::vector<ConfusionCounts> merged(3);
  for (std::size_t begin = 0; begin < n; begin += 17) {
    const std::size_t end = std::min(n, begin + 17);
    Tensor<float> p({end - begin, 3}), t({end - begin, 3});
    Tensor<std::uint8_t> k({end - begin, 3});
    for (std::size_t i = begin * 3; i < end * 3; ++i) {
      p[i - begin * 3] = pred[i];
      t[i - begin * 3] = targets[i];
      k[i - begin * 3] = known[i];
    }
    std::vector<ConfusionCounts> shard(3);
    accumulate_binary_counts(p, t, k, 0.5, shard);
    for (int a = 0; a < 3; ++a) merged[a] += shard[a];
  }
  for (int a = 0; a < 3; ++a) {
    CHECK(merged[a].tp == oneshot[a].tp);
    CHECK(merged[a].fp == oneshot[a].fp);
    CHECK(merged[a].fn == oneshot[a].fn);
    CHECK(merged[a].tn == oneshot[a].tn);
  }
}

TEST_CASE("report emission renders percents with two decimals") {
  MetricsReport r;
  r.au_ids = {"12"};
  r.columns = {{"f1_3fold", {0.9789}}};
  const std::string csv = emit_report(r, ReportFormat::Csv);
  CHECK(csv.find("au,f1_3fold,f1_10fold\n") == 0);
  CHECK(csv.find("12,97.89,-\n") != std::string::npos);
  CHECK(csv.find("avg,97.89,-\n") != std::string::npos);
}

TEST_CASE("empty AU list emits header plus a dash avg row") {
  MetricsReport r;
  r.columns = {{"f1_3fold", {}}};
  const std::string csv = emit_report(r, ReportFormat::Csv);
  CHECK(csv.find("au,f1_3fold,f1_10fold\n") == 0);
  CHECK(csv.find("avg,-,-") != std::string::npos);
}

TEST_CASE("csv and json emissions decode to identical values") {
  MetricsReport r;
  r.au_ids = {"1", "2", "4"};
  r.columns = {{"f1_macro", {0.93812, 0.5, 1.0}}, {"f1_micro", {0.96013, 0.25, 0.0}}};
  const std::string csv = emit_report(r, ReportFormat::Csv);
  const auto j = nlohmann::json::parse(emit_report(r, ReportFormat::Json));

  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "au,f1_macro,f1_micro");
  for (int row = 0; row < 3; ++row) {
    std::getline(is, line);
    std::istringstream cells(line);
    std::string au, m, u;
    std::getline(cells, au, ',');
    std::getline(cells, m, ',');
    std::getline(cells, u, ',');
    CHECK(au == r.au_ids[row]);
    CHECK(std::stod(m) == doctest::Approx(j["columns"][0]["values"][row].get<double>()));
    CHECK(std::stod(u) == doctest::Approx(j["columns"][1]["values"][row].get<double>()));
  }
}

TEST_CASE("report averages match the mean of the listed rows") {
  MetricsReport r;
  r.au_ids = {"1", "2"};
  r.columns = {{"f1_3fold", {0.9, 0.8}}};
  CHECK(r.average(0) == doctest::Approx(0.85));
}

TEST_CASE("merging 3-fold and 10-fold reports") {
  MetricsReport r3, r10;
  r3.au_ids = r10.au_ids = {"1", "12"};
  r3.columns = {{"f1_3fold", {0.9, 0.95}}};
  r10.columns = {{"f1_10fold", {0.92, 0.97}}};
  const auto merged = merge_binary_reports(r3, r10);
  REQUIRE(merged.columns.size() == 2);
  const std::string csv = emit_report(merged, ReportFormat::Csv);
  CHECK(csv.find("au,f1_3fold,f1_10fold") == 0);
  CHECK(csv.find("12,95.00,97.00") != std::string::npos);

  MetricsReport other;
  other.au_ids = {"7"};
  other.columns = {{"f1_10fold", {0.5}}};
  CHECK_THROWS_AS(merge_binary_reports(r3, other), ShapeMismatchError);
}

TEST_SUITE_END();
