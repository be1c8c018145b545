#include "auvox/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "auvox/loss.hpp"
#include "auvox/version.hpp"
#include "json.hpp"

namespace auvox {

std::size_t FoldPlan::fold_of(const std::string& subject) const {
  auto it = assignment.find(subject);
  if (it == assignment.end()) throw DataError("subject '" + subject + "' not in fold plan");
  return it->second;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (const auto& [subject, fold] : assignment) ++sizes[fold];
  return sizes;
}

FoldPlan make_folds(const std::vector<std::string>& subjects, std::size_t k,
                    std::uint64_t seed) {
  if (k < 2) throw TooFewFoldsError("fold count must be >= 2, got " + std::to_string(k));
  std::vector<std::string> unique(subjects);
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.size() < k)
    throw TooFewSubjectsError(std::to_string(unique.size()) + " subjects cannot fill " +
                              std::to_string(k) + " folds");

  Rng rng = Rng(seed).derive("folds");
  rng.shuffle(unique);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < unique.size(); ++i) plan.assignment[unique[i]] = i % k;
  return plan;
}

EncodedTargets encode_labels(const LabelTable& table, Variant variant,
                             const std::vector<std::string>& au_ids) {
  std::vector<std::size_t> au_pos;
  for (const auto& id : au_ids) {
    auto it = std::find(table.au_ids.begin(), table.au_ids.end(), id);
    if (it == table.au_ids.end()) throw DataError("AU '" + id + "' not in label table");
    au_pos.push_back(static_cast<std::size_t>(it - table.au_ids.begin()));
  }

  EncodedTargets out;
  out.variant = variant;
  out.au_count = au_ids.size();
  const std::size_t n = table.rows.size();
  if (variant == Variant::Binary) {
    out.binary = Tensor<float>({n, out.au_count});
    out.known = Tensor<std::uint8_t>({n, out.au_count});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t a = 0; a < au_pos.size(); ++a) {
        const AuState s = table.rows[r].states[au_pos[a]];
        out.binary.at(r, a) = s == AuState::Present ? 1.0f : 0.0f;
        out.known.at(r, a) = s == AuState::Unknown ? 0 : 1;
      }
    }
  } else {
    out.classes = Tensor<std::uint8_t>({n, out.au_count});
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t a = 0; a < au_pos.size(); ++a) {
        const AuState s = table.rows[r].states[au_pos[a]];
        out.classes.at(r, a) = s == AuState::Present  ? kClassPresent
                               : s == AuState::Absent ? kClassAbsent
                                                      : kClassUnknown;
      }
    }
  }
  return out;
}

std::string balance_mode_name(BalanceMode mode) {
  switch (mode) {
    case BalanceMode::Weight: return "weight";
    case BalanceMode::Undersample: return "undersample";
    default: return "none";
  }
}

BalanceMode balance_mode_from_name(const std::string& name) {
  if (name == "weight") return BalanceMode::Weight;
  if (name == "undersample") return BalanceMode::Undersample;
  if (name == "none") return BalanceMode::None;
  throw UsageError("unknown balance mode '" + name + "'");
}

BalanceWeights balance_weights(const EncodedTargets& targets,
                               const std::vector<std::size_t>& train_rows,
                               const std::vector<std::string>& au_ids) {
  if (targets.variant != Variant::Binary)
    throw DataError("balance weights apply to the binary encoding");
  BalanceWeights out;
  for (std::size_t a = 0; a < targets.au_count; ++a) {
    std::size_t pos = 0, neg = 0;
    for (std::size_t r : train_rows) {
      if (!targets.known.at(r, a)) continue;
      if (targets.binary.at(r, a) > 0.5f) ++pos;
      else ++neg;
    }
    if (pos == 0) {
      // No positives to upweight; train this AU unweighted and flag it.
      out.positive_weight.push_back(1.0);
      out.flagged.push_back(au_ids[a]);
    } else if (neg == 0) {
      out.positive_weight.push_back(1.0);
    } else {
      out.positive_weight.push_back(static_cast<double>(neg) / static_cast<double>(pos));
    }
  }
  return out;
}

std::vector<std::size_t> balance_undersample(const EncodedTargets& targets,
                                             const std::vector<std::size_t>& train_rows,
                                             Rng rng) {
  if (targets.variant != Variant::Binary)
    throw DataError("undersampling applies to the binary encoding");
  std::vector<std::size_t> order(train_rows);
  rng.shuffle(order);

  const std::size_t au_count = targets.au_count;
  std::vector<std::int64_t> pos(au_count, 0), neg(au_count, 0);
  std::vector<std::size_t> kept;
  for (std::size_t r : order) {
    int toward = 0, away = 0;
    for (std::size_t a = 0; a < au_count; ++a) {
      if (!targets.known.at(r, a)) continue;
      const bool is_pos = targets.binary.at(r, a) > 0.5f;
      const std::int64_t delta = pos[a] - neg[a];  // >0: positives lead
      if (is_pos ? (delta <= 0) : (delta >= 0)) ++toward;
      else ++away;
    }
    if (away > toward) continue;
    kept.push_back(r);
    for (std::size_t a = 0; a < au_count; ++a) {
      if (!targets.known.at(r, a)) continue;
      if (targets.binary.at(r, a) > 0.5f) ++pos[a];
      else ++neg[a];
    }
  }
  if (kept.empty()) kept.push_back(order.front());
  return kept;
}

namespace {

Tensor<float> assemble_batch(const std::vector<VoxelGrid>& grids,
                             const std::vector<std::size_t>& rows, std::size_t begin,
                             std::size_t end, std::size_t c) {
  Tensor<float> x({end - begin, c, c, c});
  for (std::size_t i = begin; i < end; ++i) {
    const VoxelGrid& g = grids[rows[i]];
    if (g.c() != c) throw ShapeMismatchError("grid side does not match network input");
    grid_input_slice(g.occupancy(), c, x.data() + (i - begin) * c * c * c);
  }
  return x;
}

Tensor<float> gather_binary(const EncodedTargets& t, const std::vector<std::size_t>& rows,
                            std::size_t begin, std::size_t end) {
  Tensor<float> y({end - begin, t.au_count});
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t a = 0; a < t.au_count; ++a) y.at(i - begin, a) = t.binary.at(rows[i], a);
  return y;
}

Tensor<std::uint8_t> gather_known(const EncodedTargets& t, const std::vector<std::size_t>& rows,
                                  std::size_t begin, std::size_t end) {
  Tensor<std::uint8_t> m({end - begin, t.au_count});
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t a = 0; a < t.au_count; ++a) m.at(i - begin, a) = t.known.at(rows[i], a);
  return m;
}

Tensor<std::uint8_t> gather_classes(const EncodedTargets& t,
                                    const std::vector<std::size_t>& rows, std::size_t begin,
                                    std::size_t end) {
  Tensor<std::uint8_t> cl({end - begin, t.au_count});
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t a = 0; a < t.au_count; ++a) cl.at(i - begin, a) = t.classes.at(rows[i], a);
  return cl;
}

}  // namespace

Network<float> train_network(const ArchitectureDescriptor& desc,
                             const std::vector<VoxelGrid>& grids, const EncodedTargets& targets,
                             const std::vector<std::size_t>& train_rows,
                             const std::vector<std::string>& au_ids, const TrainOptions& options,
                             const EpochCallback& on_epoch) {
  if (train_rows.empty()) throw DataError("training split is empty");
  if (options.epochs < 1) throw DataError("epochs must be >= 1");
  if (options.batch_size < 1) throw DataError("batch size must be >= 1");
  if (targets.variant != desc.variant)
    throw ShapeMismatchError("target encoding does not match network variant");
  if (targets.au_count != desc.au_count)
    throw ShapeMismatchError("target AU count does not match descriptor");

  Network<float> net(desc, options.seed);
  AdamState<float> adam(options.adam);
  Rng rng = Rng(options.seed).derive("train");

  std::vector<double> pos_weight;
  std::vector<std::size_t> base_rows(train_rows);
  if (desc.variant == Variant::Binary && options.balance == BalanceMode::Weight)
    pos_weight = balance_weights(targets, train_rows, au_ids).positive_weight;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::vector<std::size_t> order = base_rows;
    if (desc.variant == Variant::Binary && options.balance == BalanceMode::Undersample)
      order = balance_undersample(targets, base_rows, rng.derive("undersample", epoch));
    rng.derive("shuffle", epoch).shuffle(order);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const std::size_t end = std::min(order.size(), begin + options.batch_size);
      if (options.used_rows)
        for (std::size_t i = begin; i < end; ++i) options.used_rows->insert(order[i]);

      Tensor<float> x = assemble_batch(grids, order, begin, end, desc.input_c);
      net.zero_grad();
      Tensor<float> pred = net.forward(x, true);

      LossResult<float> res;
      if (desc.variant == Variant::Binary) {
        res = binary_cross_entropy(pred, gather_binary(targets, order, begin, end),
                                   gather_known(targets, order, begin, end), pos_weight);
      } else {
        res = categorical_cross_entropy(pred, gather_classes(targets, order, begin, end));
      }
      if (!std::isfinite(res.value))
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      net.backward(res.dpred);
      adam.step(net.params());

      loss_sum += res.value * static_cast<double>(res.counted);
      loss_count += res.counted;
    }
    if (on_epoch) on_epoch(epoch, loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count));
  }
  return net;
}

BinaryEvalResult evaluate_binary(Network<float>& net, const std::vector<VoxelGrid>& grids,
                                 const EncodedTargets& targets,
                                 const std::vector<std::size_t>& rows, double threshold,
                                 std::size_t batch_size) {
  BinaryEvalResult result;
  result.per_au.assign(targets.au_count, ConfusionCounts{});
  for (std::size_t begin = 0; begin < rows.size(); begin += batch_size) {
    const std::size_t end = std::min(rows.size(), begin + batch_size);
    Tensor<float> x = assemble_batch(grids, rows, begin, end, net.descriptor().input_c);
    Tensor<float> pred = net.forward(x, false);
    accumulate_binary_counts(pred, gather_binary(targets, rows, begin, end),
                             gather_known(targets, rows, begin, end), threshold, result.per_au);
  }
  return result;
}

ThreeClassEvalResult evaluate_3class(Network<float>& net, const std::vector<VoxelGrid>& grids,
                                     const EncodedTargets& targets,
                                     const std::vector<std::size_t>& rows,
                                     std::size_t batch_size) {
  ThreeClassEvalResult result;
  result.per_au.assign(targets.au_count, ThreeClassCounts{});
  for (std::size_t begin = 0; begin < rows.size(); begin += batch_size) {
    const std::size_t end = std::min(rows.size(), begin + batch_size);
    Tensor<float> x = assemble_batch(grids, rows, begin, end, net.descriptor().input_c);
    Tensor<float> pred = net.forward(x, false);
    for (std::size_t i = 0; i + 2 < pred.size(); i += 3) {
      const double sum = static_cast<double>(pred[i]) + pred[i + 1] + pred[i + 2];
      result.max_head_sum_deviation = std::max(result.max_head_sum_deviation,
                                               std::abs(sum - 1.0));
    }
    accumulate_3class_counts(pred, gather_classes(targets, rows, begin, end), result.per_au);
  }
  return result;
}

void ExperimentConfig::validate() const {
  if (k < 2) throw TooFewFoldsError("cross-validation needs k >= 2, got " + std::to_string(k));
  if (epochs < 1) throw DataError("epochs must be >= 1");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (c < 2) throw InvalidCError("grid side must be >= 2");
  if (threshold <= 0.0 || threshold >= 1.0) throw DataError("threshold must be in (0,1)");
}

std::string ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["variant"] = variant_name(variant);
  j["folds"] = k;
  j["seed"] = seed;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["c"] = c;
  j["balance"] = balance_mode_name(balance);
  j["threshold"] = threshold;
  j["deterministic"] = deterministic;
  j["pool_folds"] = pool_folds;
  j["adam"] = {{"alpha", adam.alpha}, {"beta1", adam.beta1}, {"beta2", adam.beta2},
               {"eps", adam.eps}};
  j["descriptor"] = nlohmann::json::parse(descriptor_to_json(descriptor));
  j["version"] = kVersion;
  return j.dump();
}

ExperimentConfig config_from_json(const std::string& json, const ExperimentConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");

  ExperimentConfig cfg = base;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "variant") cfg.variant = variant_from_name(value.get<std::string>());
      else if (key == "folds") cfg.k = value.get<std::size_t>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
      else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
      else if (key == "c") cfg.c = value.get<std::size_t>();
      else if (key == "balance") cfg.balance = balance_mode_from_name(value.get<std::string>());
      else if (key == "threshold") cfg.threshold = value.get<double>();
      else if (key == "deterministic") cfg.deterministic = value.get<bool>();
      else if (key == "pool_folds") cfg.pool_folds = value.get<bool>();
      else if (key == "adam") {
        cfg.adam.alpha = value.value("alpha", cfg.adam.alpha);
        cfg.adam.beta1 = value.value("beta1", cfg.adam.beta1);
        cfg.adam.beta2 = value.value("beta2", cfg.adam.beta2);
        cfg.adam.eps = value.value("eps", cfg.adam.eps);
      } else if (key == "descriptor") {
        if (value.contains("conv_filters"))
          cfg.descriptor.conv_filters = value["conv_filters"].get<std::vector<std::size_t>>();
        if (value.contains("kernel")) cfg.descriptor.kernel = value["kernel"].get<std::size_t>();
        if (value.contains("pool_after"))
          cfg.descriptor.pool_after = value["pool_after"].get<std::vector<std::size_t>>();
        if (value.contains("dense"))
          cfg.descriptor.dense = value["dense"].get<std::vector<std::size_t>>();
      } else if (key == "version") {
        // accepted and ignored: configs echoed from reports carry it
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config field has the wrong type: ") + e.what());
  }
  return cfg;
}

namespace {

struct FoldSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

FoldSplit split_for_fold(const Dataset& ds, const FoldPlan& plan, std::size_t fold) {
  FoldSplit s;
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    if (plan.fold_of(ds.frames[i].subject_id) == fold) s.test_rows.push_back(i);
    else s.train_rows.push_back(i);
  }
  return s;
}

void check_disjoint(const Dataset& ds, const std::unordered_set<std::size_t>& used,
                    const std::vector<std::size_t>& test_rows, std::size_t fold) {
  std::set<std::string> test_subjects;
  for (std::size_t r : test_rows) {
    if (used.count(r))
      throw DataError("leakage: test frame '" + ds.frames[r].frame_id +
                      "' reached the optimizer in fold " + std::to_string(fold));
    test_subjects.insert(ds.frames[r].subject_id);
  }
  for (std::size_t r : used)
    if (test_subjects.count(ds.frames[r].subject_id))
      throw DataError("leakage: subject '" + ds.frames[r].subject_id +
                      "' is on both sides of fold " + std::to_string(fold));
}

std::vector<std::string> dataset_subjects(const Dataset& ds) {
  std::vector<std::string> subjects;
  for (const auto& f : ds.frames) subjects.push_back(f.subject_id);
  return subjects;
}

std::string fold_column_name(std::size_t k) {
  return "f1_" + std::to_string(k) + "fold";
}

std::string report_provenance(const ExperimentConfig& cfg, const std::string& run_kind) {
  nlohmann::json j;
  j["tool"] = std::string(kToolName) + " " + kVersion;
  j["run"] = run_kind;
  j["config"] = nlohmann::json::parse(cfg.to_json());
  return j.dump();
}

struct FoldOutcome {
  std::vector<ConfusionCounts> binary;
  std::vector<ThreeClassCounts> threeclass;
  std::vector<std::string> flagged;
  double max_head_dev = 0.0;
};

}  // namespace

EncodedTargets align_targets_to_frames(const EncodedTargets& by_row, const Dataset& dataset) {
  EncodedTargets out;
  out.variant = by_row.variant;
  out.au_count = by_row.au_count;
  const std::size_t n = dataset.frames.size();
  const std::size_t a = by_row.au_count;
  if (by_row.variant == Variant::Binary) {
    out.binary = Tensor<float>({n, a});
    out.known = Tensor<std::uint8_t>({n, a});
  } else {
    out.classes = Tensor<std::uint8_t>({n, a});
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto it = dataset.labels.frame_index.find(dataset.frames[i].frame_id);
    if (it == dataset.labels.frame_index.end())
      throw DataError("frame '" + dataset.frames[i].frame_id + "' missing from label table");
    const std::size_t r = it->second;
    for (std::size_t col = 0; col < a; ++col) {
      if (by_row.variant == Variant::Binary) {
        out.binary.at(i, col) = by_row.binary.at(r, col);
        out.known.at(i, col) = by_row.known.at(r, col);
      } else {
        out.classes.at(i, col) = by_row.classes.at(r, col);
      }
    }
  }
  return out;
}

std::vector<VoxelGrid> encode_dataset(const Dataset& dataset, std::size_t c) {
  std::vector<VoxelGrid> grids;
  grids.reserve(dataset.frames.size());
  for (const auto& frame : dataset.frames) {
    try {
      grids.push_back(encode_frame(frame, c));
    } catch (const DataError& e) {
      throw DataError("frame '" + frame.frame_id + "': " + e.what());
    }
  }
  return grids;
}

namespace {

// Shared driver for run_cv and run_cross_dataset. When eval_rows_override is
// null each fold evaluates on its held-out rows; otherwise every fold model
// evaluates on the given rows of eval_* (the cross-dataset case).
MetricsReport run_folds(const ExperimentConfig& config, const Dataset& train_ds,
                        const std::vector<std::string>& au_ids,
                        const std::vector<VoxelGrid>* eval_grids,
                        const EncodedTargets* eval_targets, const Dataset* eval_ds,
                        const FoldEpochCallback& on_epoch, const std::string& run_kind) {
  config.validate();
  if (train_ds.frames.empty()) throw EmptyTableError("training dataset has no frames");

  ArchitectureDescriptor desc = config.descriptor;
  desc.variant = config.variant;
  desc.input_c = config.c;
  desc.au_count = au_ids.size();
  desc.validate();

  const EncodedTargets train_targets = align_targets_to_frames(
      encode_labels(train_ds.labels, config.variant, au_ids), train_ds);
  const std::vector<VoxelGrid> train_grids = encode_dataset(train_ds, config.c);

  const bool cross = eval_grids != nullptr;
  const FoldPlan plan = make_folds(dataset_subjects(train_ds), config.k, config.seed);

  std::vector<FoldOutcome> outcomes(config.k);
  auto run_one_fold = [&](std::size_t fold) {
    FoldSplit split = split_for_fold(train_ds, plan, fold);
    if (split.train_rows.empty() || (!cross && split.test_rows.empty()))
      throw DataError("fold " + std::to_string(fold) + " has an empty split");

    TrainOptions options;
    options.epochs = config.epochs;
    options.batch_size = config.batch_size;
    options.adam = config.adam;
    options.balance = config.balance;
    options.seed = Rng(config.seed).derive("fold", fold).next_u64();
    std::unordered_set<std::size_t> used_rows;
    options.used_rows = &used_rows;

    EpochCallback epoch_cb;
    if (on_epoch)
      epoch_cb = [&, fold](std::size_t epoch, double loss) { on_epoch(fold, epoch, loss); };

    FoldOutcome out;
    if (config.variant == Variant::Binary && config.balance == BalanceMode::Weight)
      out.flagged = balance_weights(train_targets, split.train_rows, au_ids).flagged;

    Network<float> net = train_network(desc, train_grids, train_targets, split.train_rows,
                                       au_ids, options, epoch_cb);
    check_disjoint(train_ds, used_rows, split.test_rows, fold);

    const std::vector<VoxelGrid>& grids = cross ? *eval_grids : train_grids;
    const EncodedTargets& targets = cross ? *eval_targets : train_targets;
    std::vector<std::size_t> eval_rows;
    if (cross) {
      eval_rows.resize(eval_ds->frames.size());
      for (std::size_t i = 0; i < eval_rows.size(); ++i) eval_rows[i] = i;
    } else {
      eval_rows = split.test_rows;
    }

    if (config.variant == Variant::Binary) {
      out.binary = evaluate_binary(net, grids, targets, eval_rows, config.threshold,
                                   config.batch_size).per_au;
    } else {
      auto res = evaluate_3class(net, grids, targets, eval_rows, config.batch_size);
      out.threeclass = std::move(res.per_au);
      out.max_head_dev = res.max_head_sum_deviation;
    }
    return out;
  };

  if (config.deterministic) {
    for (std::size_t fold = 0; fold < config.k; ++fold) outcomes[fold] = run_one_fold(fold);
  } else {
    std::vector<std::future<FoldOutcome>> futures;
    for (std::size_t fold = 0; fold < config.k; ++fold)
      futures.push_back(std::async(std::launch::async, run_one_fold, fold));
    for (std::size_t fold = 0; fold < config.k; ++fold) outcomes[fold] = futures[fold].get();
  }

  // Cross-dataset reports average per-fold F1; within-dataset runs pool
  // counts across folds by default.
  const bool average_folds = cross || !config.pool_folds;
  MetricsReport report;
  report.au_ids = au_ids;
  report.title = run_kind + " " + variant_name(config.variant) + " k=" + std::to_string(config.k);
  const std::size_t au_count = au_ids.size();

  if (config.variant == Variant::Binary) {
    MetricsReport::Column col{fold_column_name(config.k), {}};
    for (std::size_t a = 0; a < au_count; ++a) {
      if (average_folds) {
        double sum = 0.0;
        for (const auto& oc : outcomes) sum += f1_frame(oc.binary[a]);
        col.values.push_back(sum / static_cast<double>(config.k));
      } else {
        ConfusionCounts pooled;
        for (const auto& oc : outcomes) pooled += oc.binary[a];
        col.values.push_back(f1_frame(pooled));
      }
    }
    report.columns.push_back(std::move(col));
  } else {
    MetricsReport::Column macro{"f1_macro", {}}, micro{"f1_micro", {}};
    for (std::size_t a = 0; a < au_count; ++a) {
      if (average_folds) {
        double ms = 0.0, us = 0.0;
        for (const auto& oc : outcomes) {
          ms += f1_macro_3class(oc.threeclass[a]);
          us += f1_micro_3class(oc.threeclass[a]);
        }
        macro.values.push_back(ms / static_cast<double>(config.k));
        micro.values.push_back(us / static_cast<double>(config.k));
      } else {
        ThreeClassCounts pooled;
        for (const auto& oc : outcomes) pooled += oc.threeclass[a];
        macro.values.push_back(f1_macro_3class(pooled));
        micro.values.push_back(f1_micro_3class(pooled));
      }
    }
    report.columns.push_back(std::move(macro));
    report.columns.push_back(std::move(micro));
    double dev = 0.0;
    for (const auto& oc : outcomes) dev = std::max(dev, oc.max_head_dev);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max softmax head deviation %.3g", dev);
    report.notes.push_back(buf);
  }

  report.notes.push_back(average_folds ? "fold scores averaged" : "fold counts pooled");
  report.notes.push_back(config.deterministic ? "deterministic mode" : "parallel mode");
  report.notes.push_back("micro variant: support-weighted mean of per-class F1");
  for (std::size_t fold = 0; fold < config.k; ++fold)
    for (const auto& au : outcomes[fold].flagged)
      report.notes.push_back("AU " + au + ": no positive training frames in fold " +
                             std::to_string(fold));
  report.provenance_json = report_provenance(config, run_kind);
  return report;
}

}  // namespace

MetricsReport run_cv(const ExperimentConfig& config, const Dataset& dataset,
                     const FoldEpochCallback& on_epoch) {
  return run_folds(config, dataset, dataset.labels.au_ids, nullptr, nullptr, nullptr, on_epoch,
                   "crossval");
}

MetricsReport run_cross_dataset(const ExperimentConfig& config, const Dataset& train,
                                const Dataset& test, const FoldEpochCallback& on_epoch) {
  std::vector<std::string> common;
  for (const auto& id : train.labels.au_ids)
    if (std::find(test.labels.au_ids.begin(), test.labels.au_ids.end(), id) !=
        test.labels.au_ids.end())
      common.push_back(id);
  if (common.empty())
    throw EmptyAuIntersectionError("train and test label tables share no AUs");
  if (test.frames.empty()) throw EmptyTableError("test dataset has no frames");

  const EncodedTargets test_targets =
      align_targets_to_frames(encode_labels(test.labels, config.variant, common), test);
  const std::vector<VoxelGrid> test_grids = encode_dataset(test, config.c);
  return run_folds(config, train, common, &test_grids, &test_targets, &test, on_epoch,
                   "crossdataset");
}

}  // namespace auvox
