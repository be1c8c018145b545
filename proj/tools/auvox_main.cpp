// Command-line front end for the AU detection pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
// Diagnostics and progress go to stderr; data artifacts go to files or stdout.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "auvox/checkpoint.hpp"
#include "auvox/experiments.hpp"
#include "auvox/gradcheck.hpp"
#include "auvox/landmark_io.hpp"
#include "auvox/loss.hpp"
#include "auvox/metrics.hpp"
#include "auvox/synthgen.hpp"
#include "auvox/version.hpp"
#include "auvox/voxelizer.hpp"
#include "json.hpp"

namespace {

using namespace auvox;

std::string read_file_or_throw(const std::string& path, bool usage_error = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (usage_error) throw UsageError("cannot open '" + path + "'");
    throw DataError("cannot open '" + path + "'");
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file_or_throw(const std::string& path, const std::string& bytes) {
  if (auto dir = std::filesystem::path(path).parent_path(); !dir.empty())
    std::filesystem::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << bytes;
}

void emit_artifact(const std::string& out_path, const std::string& bytes) {
  if (out_path.empty()) {
    std::cout << bytes;
  } else {
    write_file_or_throw(out_path, bytes);
    std::cerr << "wrote " << out_path << "\n";
  }
}

// Shared flags that mirror the experiment config; flags override config-file
// values, which override defaults.
struct CommonArgs {
  std::string config_path;
  std::optional<std::string> variant;
  std::optional<std::size_t> folds;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> c;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> balance;
  std::optional<double> threshold;
  std::optional<std::size_t> batch_size;
  bool deterministic = false;
  bool parallel = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool with_folds = true) {
  cmd->add_option("--config", args.config_path, "JSON experiment config file");
  cmd->add_option("--variant", args.variant, "binary or 3class")
      ->check(CLI::IsMember({"binary", "3class"}));
  if (with_folds)
    cmd->add_option("--folds", args.folds, "cross-validation folds (3 or 10)")
        ->check(CLI::IsMember({"3", "10"}));
  cmd->add_option("--epochs", args.epochs, "training epochs (default 250)");
  cmd->add_option("--c", args.c, "voxel grid side (default 24)");
  cmd->add_option("--seed", args.seed, "random seed (default 0)");
  cmd->add_option("--balance", args.balance, "weight, undersample or none")
      ->check(CLI::IsMember({"weight", "undersample", "none"}));
  cmd->add_option("--threshold", args.threshold, "binary decision threshold (default 0.5)");
  cmd->add_option("--batch-size", args.batch_size, "minibatch size (default 64)");
  auto* det = cmd->add_flag("--deterministic", args.deterministic,
                            "single-threaded, bit-reproducible (default)");
  cmd->add_flag("--parallel", args.parallel, "train folds in parallel")->excludes(det);
}

ExperimentConfig resolve_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty())
    cfg = config_from_json(read_file_or_throw(args.config_path, /*usage_error=*/true), cfg);
  if (args.variant) cfg.variant = variant_from_name(*args.variant);
  if (args.folds) cfg.k = *args.folds;
  if (args.epochs) cfg.epochs = *args.epochs;
  if (args.c) cfg.c = *args.c;
  if (args.seed) cfg.seed = *args.seed;
  if (args.balance) cfg.balance = balance_mode_from_name(*args.balance);
  if (args.threshold) cfg.threshold = *args.threshold;
  if (args.batch_size) cfg.batch_size = *args.batch_size;
  if (args.parallel) cfg.deterministic = false;
  if (args.deterministic) cfg.deterministic = true;
  cfg.validate();
  return cfg;
}

std::string provenance_json(const ExperimentConfig& cfg, const std::string& run_kind) {
  nlohmann::json j;
  j["tool"] = std::string(kToolName) + " " + kVersion;
  j["run"] = run_kind;
  j["config"] = nlohmann::json::parse(cfg.to_json());
  return j.dump();
}

FoldEpochCallback stderr_epoch_stream() {
  // Stable machine-parseable stream: one "epoch,loss" line per epoch, with a
  // "# fold N" marker line whenever the fold changes. Parallel fold training
  // funnels through one mutex so lines stay whole.
  struct State {
    std::mutex mutex;
    std::optional<std::size_t> last_fold;
  };
  auto state = std::make_shared<State>();
  return [state](std::size_t fold, std::size_t epoch, double loss) {
    std::lock_guard<std::mutex> lock(state->mutex);
    if (!state->last_fold.has_value() || *state->last_fold != fold) {
      state->last_fold = fold;
      std::fprintf(stderr, "# fold %zu\n", fold);
    }
    std::fprintf(stderr, "%zu,%.17g\n", epoch, loss);
  };
}

// ------------------------------------------------------------ subcommands

int cmd_stats(const std::string& manifest, const std::string& out,
              const std::string& format_name) {
  Dataset ds = load_dataset(manifest);
  auto stats = occurrence_stats(ds.labels);
  const ReportFormat format = report_format_from_name(format_name);

  std::string body;
  if (format == ReportFormat::Json) {
    nlohmann::json j;
    j["tool"] = std::string(kToolName) + " " + kVersion;
    j["manifest"] = manifest;
    j["occurrence_percent"] = nlohmann::json::object();
    for (const auto& s : stats) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f", s.percent);
      j["occurrence_percent"][s.au_id] = std::stod(buf);
    }
    body = j.dump(2) + "\n";
  } else {
    body = "au,percent\n";
    for (const auto& s : stats) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s,%.2f\n", s.au_id.c_str(), s.percent);
      body += buf;
    }
    body += "# tool " + std::string(kToolName) + " " + kVersion + "\n";
  }
  emit_artifact(out, body);
  return 0;
}

int cmd_voxelize(const std::string& input, const std::string& manifest, std::size_t n,
                 std::size_t c, const std::string& out, const std::string& out_dir,
                 bool print) {
  if (input.empty() == manifest.empty())
    throw UsageError("voxelize needs exactly one of --input or --manifest");

  auto dump = [](const VoxelGrid& g) {
    for (std::size_t x = 0; x < g.c(); ++x)
      for (std::size_t y = 0; y < g.c(); ++y)
        for (std::size_t z = 0; z < g.c(); ++z)
          if (g.at(x, y, z)) std::printf("%zu %zu %zu\n", x, y, z);
  };

  if (!input.empty()) {
    LandmarkSet set;
    set.frame_id = input;
    set.points = parse_landmark_file(read_file_or_throw(input), n);
    VoxelGrid grid = encode_frame(set, c);
    if (print) dump(grid);
    if (!out.empty()) write_file_or_throw(out, serialize_grid(grid));
    std::fprintf(stderr, "%zu set voxels\n", grid.set_voxel_count());
    return 0;
  }

  if (out_dir.empty()) throw UsageError("--manifest mode requires --out-dir");
  Dataset ds = load_dataset(manifest);
  std::filesystem::create_directories(out_dir);
  for (const auto& frame : ds.frames) {
    VoxelGrid grid = encode_frame(frame, c);
    write_file_or_throw((std::filesystem::path(out_dir) / (frame.frame_id + ".auvx")).string(),
                        serialize_grid(grid));
  }
  nlohmann::json prov;
  prov["tool"] = std::string(kToolName) + " " + kVersion;
  prov["manifest"] = manifest;
  prov["c"] = c;
  prov["frames"] = ds.frames.size();
  write_file_or_throw((std::filesystem::path(out_dir) / "voxelize.provenance.json").string(),
                      prov.dump(2) + "\n");
  std::fprintf(stderr, "encoded %zu frames at c=%zu\n", ds.frames.size(), c);
  return 0;
}

int cmd_train(const CommonArgs& common, const std::string& manifest, const std::string& out) {
  if (out.empty()) throw UsageError("train requires --out for the checkpoint");
  ExperimentConfig cfg = resolve_config(common);
  Dataset ds = load_dataset(manifest);

  ArchitectureDescriptor desc = cfg.descriptor;
  desc.variant = cfg.variant;
  desc.input_c = cfg.c;
  desc.au_count = ds.labels.au_ids.size();
  desc.validate();

  EncodedTargets targets =
      align_targets_to_frames(encode_labels(ds.labels, cfg.variant, ds.labels.au_ids), ds);
  std::vector<VoxelGrid> grids = encode_dataset(ds, cfg.c);
  std::vector<std::size_t> rows(ds.frames.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  TrainOptions options;
  options.epochs = cfg.epochs;
  options.batch_size = cfg.batch_size;
  options.adam = cfg.adam;
  options.balance = cfg.balance;
  options.seed = cfg.seed;

  auto stream = stderr_epoch_stream();
  Network<float> net =
      train_network(desc, grids, targets, rows, ds.labels.au_ids, options,
                    [&](std::size_t epoch, double loss) { stream(0, epoch, loss); });

  write_file_or_throw(out, save_checkpoint(net, provenance_json(cfg, "train")));
  std::cerr << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& model, const std::string& manifest,
             const std::string& out, const std::string& format_name) {
  ExperimentConfig cfg = resolve_config(common);
  LoadedCheckpoint lc = load_checkpoint(read_file_or_throw(model));
  Network<float>& net = lc.network;
  const ArchitectureDescriptor& desc = net.descriptor();

  Dataset ds = load_dataset(manifest);
  if (ds.labels.au_ids.size() != desc.au_count)
    throw ShapeMismatchError("dataset has " + std::to_string(ds.labels.au_ids.size()) +
                             " AUs but the checkpoint expects " +
                             std::to_string(desc.au_count));

  EncodedTargets targets = align_targets_to_frames(
      encode_labels(ds.labels, desc.variant, ds.labels.au_ids), ds);
  std::vector<VoxelGrid> grids = encode_dataset(ds, desc.input_c);
  std::vector<std::size_t> rows(ds.frames.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  MetricsReport report;
  report.title = "eval " + variant_name(desc.variant);
  report.au_ids = ds.labels.au_ids;
  if (desc.variant == Variant::Binary) {
    auto res = evaluate_binary(net, grids, targets, rows, cfg.threshold, cfg.batch_size);
    MetricsReport::Column col{"f1", {}};
    for (const auto& c : res.per_au) col.values.push_back(f1_frame(c));
    report.columns.push_back(std::move(col));
  } else {
    auto res = evaluate_3class(net, grids, targets, rows, cfg.batch_size);
    MetricsReport::Column macro{"f1_macro", {}}, micro{"f1_micro", {}};
    for (const auto& c : res.per_au) {
      macro.values.push_back(f1_macro_3class(c));
      micro.values.push_back(f1_micro_3class(c));
    }
    report.columns.push_back(std::move(macro));
    report.columns.push_back(std::move(micro));
  }
  nlohmann::json prov = nlohmann::json::parse(provenance_json(cfg, "eval"));
  prov["model"] = model;
  if (!lc.provenance_json.empty())
    prov["model_provenance"] = nlohmann::json::parse(lc.provenance_json);
  report.provenance_json = prov.dump();

  emit_artifact(out, emit_report(report, report_format_from_name(format_name)));
  return 0;
}

int cmd_crossval(const CommonArgs& common, const std::string& manifest, const std::string& out,
                 const std::string& format_name) {
  ExperimentConfig cfg = resolve_config(common);
  Dataset ds = load_dataset(manifest);
  MetricsReport report = run_cv(cfg, ds, stderr_epoch_stream());
  emit_artifact(out, emit_report(report, report_format_from_name(format_name)));
  return 0;
}

int cmd_crossdataset(const CommonArgs& common, const std::string& train_manifest,
                     const std::string& test_manifest, const std::string& out,
                     const std::string& format_name) {
  ExperimentConfig cfg = resolve_config(common);
  Dataset train = load_dataset(train_manifest);
  Dataset test = load_dataset(test_manifest);
  MetricsReport report = run_cross_dataset(cfg, train, test, stderr_epoch_stream());
  emit_artifact(out, emit_report(report, report_format_from_name(format_name)));
  return 0;
}

int cmd_gradcheck(const std::string& descriptor_name, std::uint64_t seed,
                  std::size_t coords_per_tensor) {
  ArchitectureDescriptor desc;
  if (descriptor_name == "default-binary") desc = ArchitectureDescriptor::binary_default();
  else if (descriptor_name == "default-3class")
    desc = ArchitectureDescriptor::three_class_default();
  else if (descriptor_name == "tiny-binary") desc = ArchitectureDescriptor::tiny(Variant::Binary);
  else if (descriptor_name == "tiny-3class")
    desc = ArchitectureDescriptor::tiny(Variant::ThreeClass);
  else throw UsageError("unknown descriptor '" + descriptor_name + "'");

  GradCheckOptions opts;
  // The full-size descriptors have too many parameters to difference them
  // all; a deterministic sample per tensor still covers every layer.
  if (descriptor_name.rfind("default", 0) == 0)
    opts.coords_per_tensor = coords_per_tensor == 0 ? 20 : coords_per_tensor;
  else
    opts.coords_per_tensor = coords_per_tensor;

  GradCheckReport report = gradient_check_network(desc, seed, opts);
  std::printf("max_rel_err=%.3e coords=%zu worst=%s\n", report.max_rel_err,
              report.coords_checked, report.worst_param.c_str());
  if (!report.passed(opts.tolerance)) {
    std::fprintf(stderr, "gradient check FAILED (tolerance %.1e)\n", opts.tolerance);
    return 3;
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, std::size_t subjects, std::size_t frames,
              std::size_t aus, double sigma, double unknown_rate, double rate,
              double displacement, std::uint64_t seed) {
  if (out_dir.empty()) throw UsageError("synth requires --out");
  SynthSpec spec;
  spec.subjects = subjects;
  spec.frames_per_subject = frames;
  spec.sigma = sigma;
  spec.unknown_rate = unknown_rate;
  spec.displacement_scale = displacement;
  spec.seed = seed;
  if (aus != 12) {
    for (std::size_t a = 0; a < aus; ++a) spec.au_ids.push_back(std::to_string(a + 1));
  }
  if (rate >= 0.0) spec.occurrence_rates.assign(std::max<std::size_t>(aus, 1), rate);

  write_dataset(spec, out_dir);

  nlohmann::json prov;
  prov["tool"] = std::string(kToolName) + " " + kVersion;
  prov["spec"] = {{"subjects", spec.subjects},
                  {"frames_per_subject", spec.frames_per_subject},
                  {"aus", aus},
                  {"sigma", spec.sigma},
                  {"unknown_rate", spec.unknown_rate},
                  {"displacement_scale", spec.displacement_scale},
                  {"seed", spec.seed}};
  write_file_or_throw((std::filesystem::path(out_dir) / "synth.provenance.json").string(),
                      prov.dump(2) + "\n");
  std::fprintf(stderr, "wrote %zu frames to %s\n", subjects * frames, out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Action-unit detection from voxelized 3D facial landmarks"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
  app.require_subcommand(1);

  // stats
  auto* stats = app.add_subcommand("stats", "Per-AU occurrence percentages of a dataset");
  std::string stats_manifest, stats_out, stats_format = "csv";
  stats->add_option("--manifest", stats_manifest, "dataset manifest JSON")->required();
  stats->add_option("--out", stats_out, "output path (default stdout)");
  stats->add_option("--format", stats_format)->check(CLI::IsMember({"csv", "json", "text"}));

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "Encode landmark frames as binary voxel grids");
  std::string vox_input, vox_manifest, vox_out, vox_out_dir;
  std::size_t vox_n = kDefaultLandmarkCount, vox_c = kDefaultGridSide;
  bool vox_print = false;
  vox->add_option("--input", vox_input, "single landmark file");
  vox->add_option("--manifest", vox_manifest, "dataset manifest JSON");
  vox->add_option("--n", vox_n, "landmarks per frame (default 83)");
  vox->add_option("--c", vox_c, "grid side (default 24)");
  vox->add_option("--out", vox_out, "output .auvx path (single-file mode)");
  vox->add_option("--out-dir", vox_out_dir, "output directory (manifest mode)");
  vox->add_flag("--print", vox_print, "print set voxel coordinates to stdout");

  // train
  auto* train = app.add_subcommand("train", "Train one network on a whole dataset");
  CommonArgs train_args;
  std::string train_manifest, train_out;
  add_common_options(train, train_args, /*with_folds=*/false);
  train->add_option("--manifest", train_manifest)->required();
  train->add_option("--out", train_out, "checkpoint output path");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  CommonArgs eval_args;
  std::string eval_model, eval_manifest, eval_out, eval_format = "text";
  add_common_options(eval, eval_args, /*with_folds=*/false);
  eval->add_option("--model", eval_model)->required();
  eval->add_option("--manifest", eval_manifest)->required();
  eval->add_option("--out", eval_out, "output path (default stdout)");
  eval->add_option("--format", eval_format)->check(CLI::IsMember({"csv", "json", "text"}));

  // crossval
  auto* cv = app.add_subcommand("crossval", "Subject-disjoint k-fold cross-validation");
  CommonArgs cv_args;
  std::string cv_manifest, cv_out, cv_format = "text";
  add_common_options(cv, cv_args);
  cv->add_option("--manifest", cv_manifest)->required();
  cv->add_option("--out", cv_out, "output path (default stdout)");
  cv->add_option("--format", cv_format)->check(CLI::IsMember({"csv", "json", "text"}));

  // crossdataset
  auto* cd = app.add_subcommand("crossdataset", "Train on one dataset, test on another");
  CommonArgs cd_args;
  std::string cd_train, cd_test, cd_out, cd_format = "text";
  add_common_options(cd, cd_args);
  cd->add_option("--train-manifest", cd_train)->required();
  cd->add_option("--test-manifest", cd_test)->required();
  cd->add_option("--out", cd_out, "output path (default stdout)");
  cd->add_option("--format", cd_format)->check(CLI::IsMember({"csv", "json", "text"}));

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::string gc_descriptor = "tiny-binary";
  std::uint64_t gc_seed = 7;
  std::size_t gc_coords = 0;
  gc->add_option("--descriptor", gc_descriptor,
                 "default-binary, default-3class, tiny-binary or tiny-3class");
  gc->add_option("--seed", gc_seed);
  gc->add_option("--coords-per-tensor", gc_coords,
                 "coordinates sampled per tensor (0 = all; defaults sample 20 on full-size)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic landmark dataset");
  std::string synth_out;
  std::size_t synth_subjects = 20, synth_frames = 50, synth_aus = 12;
  double synth_sigma = 0.02, synth_unknown = 0.0, synth_rate = -1.0, synth_disp = 0.04;
  std::uint64_t synth_seed = 0;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--subjects", synth_subjects);
  synth->add_option("--frames-per-subject", synth_frames);
  synth->add_option("--aus", synth_aus, "AU count (12 uses the canonical ids and rates)");
  synth->add_option("--sigma", synth_sigma, "noise, fraction of face scale");
  synth->add_option("--unknown-rate", synth_unknown, "probability of the Unknown state");
  synth->add_option("--rate", synth_rate, "uniform occurrence rate (default: table rates)");
  synth->add_option("--displacement", synth_disp, "per-AU displacement, fraction of face scale");
  synth->add_option("--seed", synth_seed);

  try {
    app.parse(argc, argv);
    if (*stats) return cmd_stats(stats_manifest, stats_out, stats_format);
    if (*vox) return cmd_voxelize(vox_input, vox_manifest, vox_n, vox_c, vox_out, vox_out_dir,
                                  vox_print);
    if (*train) return cmd_train(train_args, train_manifest, train_out);
    if (*eval) return cmd_eval(eval_args, eval_model, eval_manifest, eval_out, eval_format);
    if (*cv) return cmd_crossval(cv_args, cv_manifest, cv_out, cv_format);
    if (*cd) return cmd_crossdataset(cd_args, cd_train, cd_test, cd_out, cd_format);
    if (*gc) return cmd_gradcheck(gc_descriptor, gc_seed, gc_coords);
    if (*synth)
      return cmd_synth(synth_out, synth_subjects, synth_frames, synth_aus, synth_sigma,
                       synth_unknown, synth_rate, synth_disp, synth_seed);
    throw UsageError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::Usage: return 1;
      case Error::Category::Data: return 2;
      case Error::Category::Numerical: return 3;
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
