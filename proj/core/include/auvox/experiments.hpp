#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "auvox/adam.hpp"
#include "auvox/landmark_io.hpp"
#include "auvox/metrics.hpp"
#include "auvox/network.hpp"
#include "auvox/voxelizer.hpp"

namespace auvox {

// Subject-disjoint cross-validation partition. Frame-level splits would leak
// near-duplicate frames of the same subject across the boundary.
struct FoldPlan {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::unordered_map<std::string, std::size_t> assignment;  // subject -> fold

  std::size_t fold_of(const std::string& subject) const;
  std::vector<std::size_t> fold_sizes() const;
};

// Deterministic in (subject set, k, seed): subjects are sorted, shuffled with
// the portable generator, then dealt round-robin so sizes differ by at most 1.
FoldPlan make_folds(const std::vector<std::string>& subjects, std::size_t k,
                    std::uint64_t seed);

// Binary: targets/known per (frame, AU); Unknown entries are masked out of
// the loss and the metrics. ThreeClass: class indices with Unknown as its own
// class, order {0 = present, 1 = absent, 2 = unknown}.
struct EncodedTargets {
  Variant variant = Variant::Binary;
  std::size_t au_count = 0;
  Tensor<float> binary;           // [N, A], 0/1 (Binary only)
  Tensor<std::uint8_t> known;     // [N, A], 1 = labeled (Binary only)
  Tensor<std::uint8_t> classes;   // [N, A] (ThreeClass only)
};

inline constexpr std::uint8_t kClassPresent = 0;
inline constexpr std::uint8_t kClassAbsent = 1;
inline constexpr std::uint8_t kClassUnknown = 2;

// Row r of the result corresponds to table.rows[r]; au_ids selects and orders
// the encoded AUs (useful for cross-dataset intersections). Pass table.au_ids
// for the identity encoding.
EncodedTargets encode_labels(const LabelTable& table, Variant variant,
                             const std::vector<std::string>& au_ids);

enum class BalanceMode { Weight, Undersample, None };
std::string balance_mode_name(BalanceMode mode);
BalanceMode balance_mode_from_name(const std::string& name);

struct BalanceWeights {
  std::vector<double> positive_weight;  // per AU; w+ = n_neg / n_pos, w- = 1
  std::vector<std::string> flagged;     // AUs with no positive training frames
};

// Weight mode over the given training rows only.
BalanceWeights balance_weights(const EncodedTargets& targets,
                               const std::vector<std::size_t>& train_rows,
                               const std::vector<std::string>& au_ids);

// Undersample mode: one greedy pass in seeded random order; a frame is kept
// when, over the AUs it has known labels for, more would move toward pos/neg
// balance than away from it. Exact per-AU balance is generally impossible
// jointly, so this equalizes rates as nearly as the multi-label constraint
// allows.
std::vector<std::size_t> balance_undersample(const EncodedTargets& targets,
                                             const std::vector<std::size_t>& train_rows,
                                             Rng rng);

struct TrainOptions {
  std::size_t epochs = 250;
  std::size_t batch_size = 64;
  AdamHyperparams adam;
  BalanceMode balance = BalanceMode::Weight;
  std::uint64_t seed = 0;
  // Collects the rows actually fed to the optimizer, for leakage checks.
  std::unordered_set<std::size_t>* used_rows = nullptr;
};

// epoch is 1-based; loss is the mean training loss of that epoch.
using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

// Trains a fresh network on grids[row] / targets[row] for row in train_rows.
// Deterministic in (descriptor, options.seed, row order): batches are formed
// from a seeded shuffle per epoch and reduced in a fixed order.
Network<float> train_network(const ArchitectureDescriptor& desc,
                             const std::vector<VoxelGrid>& grids,
                             const EncodedTargets& targets,
                             const std::vector<std::size_t>& train_rows,
                             const std::vector<std::string>& au_ids,
                             const TrainOptions& options,
                             const EpochCallback& on_epoch = nullptr);

struct BinaryEvalResult {
  std::vector<ConfusionCounts> per_au;
};

struct ThreeClassEvalResult {
  std::vector<ThreeClassCounts> per_au;
  double max_head_sum_deviation = 0.0;  // max |sum(softmax) - 1| seen
};

BinaryEvalResult evaluate_binary(Network<float>& net, const std::vector<VoxelGrid>& grids,
                                 const EncodedTargets& targets,
                                 const std::vector<std::size_t>& rows, double threshold,
                                 std::size_t batch_size = 64);

ThreeClassEvalResult evaluate_3class(Network<float>& net, const std::vector<VoxelGrid>& grids,
                                     const EncodedTargets& targets,
                                     const std::vector<std::size_t>& rows,
                                     std::size_t batch_size = 64);

struct ExperimentConfig {
  Variant variant = Variant::Binary;
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::size_t epochs = 250;
  std::size_t batch_size = 64;
  std::size_t c = kDefaultGridSide;
  BalanceMode balance = BalanceMode::Weight;
  double threshold = 0.5;
  bool deterministic = true;  // false allows folds to train in parallel
  bool pool_folds = true;     // false averages per-fold F1 instead
  AdamHyperparams adam;
  ArchitectureDescriptor descriptor;  // variant/au_count/input_c are resolved per run

  void validate() const;
  // Full resolved configuration as JSON, embedded in reports for provenance.
  std::string to_json() const;
};

// Overlays JSON fields onto base; unknown keys are rejected.
ExperimentConfig config_from_json(const std::string& json, const ExperimentConfig& base = {});

// Per-epoch training progress across folds, for the epoch,loss stream.
using FoldEpochCallback =
    std::function<void(std::size_t fold, std::size_t epoch, double loss)>;

// k-fold cross-validation on one dataset: per fold, trains on the other k-1
// folds and evaluates on the held-out fold. Per-AU confusion counts are
// pooled across folds before F1 (default) or per-fold F1s are averaged.
MetricsReport run_cv(const ExperimentConfig& config, const Dataset& dataset,
                     const FoldEpochCallback& on_epoch = nullptr);

// Trains k fold models on the training dataset (each on k-1 folds) and
// evaluates every model on the full test dataset, reporting per-fold-averaged
// per-AU F1 over the AU intersection of the two label sets.
MetricsReport run_cross_dataset(const ExperimentConfig& config, const Dataset& train,
                                const Dataset& test,
                                const FoldEpochCallback& on_epoch = nullptr);

// Grids for every frame, in dataset order, at side c.
std::vector<VoxelGrid> encode_dataset(const Dataset& dataset, std::size_t c);

// Reorders label-table encodings to dataset.frames order.
EncodedTargets align_targets_to_frames(const EncodedTargets& by_row, const Dataset& dataset);

}  // namespace auvox
