#pragma once

// Experiment runner: desk scenario, preprocessing arms, detector training and
// evaluation per (replicate, SNR, arm) cell, resumable CSV sweeps and reports.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lis/channel.hpp"
#include "lis/dae.hpp"
#include "lis/glrt.hpp"
#include "lis/imaging.hpp"
#include "lis/lof.hpp"
#include "lis/metrics.hpp"
#include "lis/scenario.hpp"

namespace lis::harness {

// Preprocessing arms. kRaw, kAveraging and kDae feed LOF; kGlrt is the
// statistical test on raw frames.
enum class Arm { kRaw, kAveraging, kDae, kGlrt };

std::string arm_name(Arm arm);
Arm arm_from(const std::string& name);
std::string detector_name(Arm arm);  // "lof" or "glrt"

struct LofSettings {
  std::vector<std::size_t> k_candidates{1, 2, 3, 4, 5, 6, 8, 10};
  lof::Metric metric = lof::Metric::kEuclidean;
  FeatureMode feature_mode = FeatureMode::kResized;
  int feature_size = 32;        // features are feature_size x feature_size pixels
  double tau_quantile = 0.99;
};

struct GlrtSettings {
  double alpha = 0.05;
  double alpha0 = 0.05;
  std::size_t n_mc = 10000;
  glrt::BesselArgument convention = glrt::BesselArgument::kPowerDensity;
};

struct DaeSettings {
  int target_rows = 128;  // virtual high-resolution surface over the same aperture
  int target_cols = 128;
  double target_snr_db = 10.0;
  int image_size = 32;    // R = image_size^2
  int input_averaging = 0;  // S of the corrupted input; 0 means the config's averaging
  dae::Config net;
};

struct ExperimentConfig {
  std::string name = "desk";
  std::string scene_file;  // empty: built-in desk scene
  RouteSpec route;
  int lis_rows = 32;
  int lis_cols = 32;
  double spacing_wavelengths = 0.5;
  int samples_per_point = 10;  // N_s
  int averaging = 100;         // S for the averaging and DAE arms
  std::vector<double> snr_db{10, 5, 0, -5, -10};
  std::vector<Arm> arms{Arm::kRaw, Arm::kAveraging, Arm::kDae, Arm::kGlrt};
  double split_train = 0.8;
  double split_valid = 0.1;
  double split_test = 0.1;
  std::uint64_t master_seed = 1;
  int replicates = 5;
  bool changing_environment = false;
  Vec3 environment_shift{1.0, 0.5, 0.0};
  int threads = 0;  // 0: hardware concurrency
  LofSettings lof;
  GlrtSettings glrt;
  DaeSettings dae;
};

/// Throws std::invalid_argument on inconsistent settings.
void validate(const ExperimentConfig& config);
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json_text(const ExperimentConfig& config);

/// Scene after applying the config's surface overrides, plus the changed scene.
struct Environment {
  ExperimentConfig config;
  Scene scene;
  Scene changed_scene;  // equals scene unless changing_environment
  Trajectory route;
  std::vector<ChannelSnapshot> channels;       // per trajectory point
  std::vector<ChannelSnapshot> test_channels;  // evaluation-time channels
  std::vector<ChannelSnapshot> target_channels;  // high-resolution surface, correct points; DAE arm only
  double target_sigma2 = 0.0;

  std::size_t correct_count() const { return config.route.correct_points; }
  std::size_t anomalous_count() const { return config.route.anomalous_points; }
  double sigma2_for(double snr_db) const;
};

Environment prepare(const ExperimentConfig& config);

struct SampleRef {
  std::size_t point = 0;
  std::size_t sample = 0;
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

struct Split {
  std::vector<SampleRef> train, valid, test;
};

/// Shuffled sample-level split of the correct points' N_s samples.
Split split_correct(std::size_t correct_points, std::size_t samples, double train_fraction, double valid_fraction,
                    std::uint64_t seed);

/// Seed shared by every arm of one (replicate, SNR) cell.
std::uint64_t cell_seed(std::uint64_t master, int replicate, double snr_db);

/// The split every arm of a cell uses.
Split cell_split(const Environment& env, std::uint64_t cell_seed);

/// One power frame per sample. S = 1 for kRaw and kGlrt, config.averaging otherwise.
/// Test-time frames use the evaluation channels.
PowerFrame arm_frame(const Environment& env, Arm arm, std::uint64_t seed, double sigma2, SampleRef ref,
                     bool evaluation);

struct LofData {
  lof::PointSet train, valid, test;
  std::vector<bool> test_anomalous;
  std::vector<SampleRef> test_refs;
};

/// Clean-target training pairs for the DAE arm (train split only).
std::vector<dae::ImagePair> dae_pairs(const Environment& env, std::uint64_t seed, double snr_db, const Split& split);

dae::TrainResult train_dae_arm(const Environment& env, int replicate, double snr_db);

/// Features for every split; the DAE arm needs its trained model.
LofData lof_data(const Environment& env, Arm arm, int replicate, double snr_db, const dae::DaeModel* dae = nullptr);

struct LofOutcome {
  lof::LofModel model;
  std::vector<lof::Prediction> predictions;  // per test sample
  metrics::Confusion confusion;
};

lof::LofModel train_lof(const LofData& data, const LofSettings& settings);
LofOutcome evaluate_lof(lof::LofModel model, const LofData& data);

glrt::GlrtModel train_glrt_arm(const Environment& env, int replicate, double snr_db);

struct GlrtDecision {
  std::size_t point = 0;
  bool anomalous_truth = false;
  bool anomalous = false;
};

/// Fresh N_v frames at every correct point and every anomalous point.
std::vector<GlrtDecision> evaluate_glrt_arm(const glrt::GlrtModel& model, const Environment& env, int replicate,
                                            double snr_db);

struct CellKey {
  std::string config_id;
  int replicate = 0;
  double snr_db = 0.0;
  Arm arm = Arm::kRaw;
  std::string id() const;  // stable text key
};

struct CellResult {
  CellKey key;
  std::uint64_t master_seed = 0;
  std::string unit;  // "sample" or "point"
  metrics::Confusion confusion;
  std::size_t chosen_k = 0;  // LOF arms
  std::string status = "ok";
};

CellResult run_cell(const Environment& env, const CellKey& key);

std::string results_header();
std::string format_row(const CellResult& result);
CellResult parse_row(const std::string& line);
std::vector<CellResult> read_results(const std::filesystem::path& path);

/// Grid order: replicate, then SNR in config order, then arm in config order.
std::vector<CellKey> sweep_cells(const ExperimentConfig& config);

/// Runs every missing cell, appending rows as they finish, then rewrites the
/// file in grid order. Failed cells are written with status "error: ...".
/// Returns the number of cells computed in this call.
std::size_t run_sweep(const ExperimentConfig& config, const std::filesystem::path& results,
                      const std::function<void(const CellResult&)>& progress = {});

struct SummaryRow {
  std::string config_id;
  std::string detector;
  std::string preprocessing;
  double snr_db = 0.0;
  std::size_t runs = 0;
  std::size_t undefined = 0;  // runs with undefined PF1
  double pf1_mean = 0.0;      // undefined PF1 counted as 0
  double pf1_min = 0.0;
  double pf1_max = 0.0;
  double nf1_mean = 0.0;
};

/// Per (config, detector, preprocessing, SNR) aggregates over replicates, ordered
/// by config, arm, then decreasing SNR. Error rows are skipped.
std::vector<SummaryRow> summarize(const std::vector<CellResult>& results);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
/// Text table per config: one line per SNR, one column per arm (mean PF1).
void print_tables(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace lis::harness
