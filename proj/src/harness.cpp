#include "lis/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "lis/random.hpp"
#include "lis/scene_io.hpp"

namespace lis::harness {
namespace {

using json = nlohmann::json;

// Stream tags for derive_seed, so each random quantity in a cell has its own stream.
enum Stream : std::uint64_t { kSplit = 1, kRawFrames, kAveragedFrames, kTargetFrames, kDaeInit, kGlrtMc };

constexpr Arm kAllArms[] = {Arm::kRaw, Arm::kAveraging, Arm::kDae, Arm::kGlrt};

bool uses_dae(const ExperimentConfig& c) { return std::find(c.arms.begin(), c.arms.end(), Arm::kDae) != c.arms.end(); }

std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream row(line);
  while (std::getline(row, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
    }
  }
}

std::string feature_mode_name(FeatureMode m) {
  switch (m) {
    case FeatureMode::kRawFlatten:
      return "flatten";
    case FeatureMode::kResized:
      return "resized";
    case FeatureMode::kNormalized:
      return "normalized";
  }
  return "resized";
}

FeatureMode feature_mode_from(const std::string& s) {
  if (s == "flatten") return FeatureMode::kRawFlatten;
  if (s == "resized") return FeatureMode::kResized;
  if (s == "normalized") return FeatureMode::kNormalized;
  throw std::invalid_argument("config: unknown feature mode '" + s + "'");
}

Scene scene_for(const ExperimentConfig& c) {
  Scene s = c.scene_file.empty() ? desk_scene() : load_scene(c.scene_file);
  const double center = s.lis.anchor.x + 0.5 * (s.lis.cols - 1) * s.lis.spacing;
  s.lis.rows = c.lis_rows;
  s.lis.cols = c.lis_cols;
  s.lis.spacing = c.spacing_wavelengths * s.wavelength();
  s.lis.anchor.x = center - 0.5 * (s.lis.cols - 1) * s.lis.spacing;
  validate(s);
  return s;
}

// Same aperture, more elements.
Scene target_scene(const Scene& s, int rows, int cols) {
  Scene t = s;
  t.lis.rows = rows;
  t.lis.cols = cols;
  const double width = (s.lis.cols - 1) * s.lis.spacing;
  t.lis.spacing = cols > 1 ? width / (cols - 1) : s.lis.spacing;
  validate(t);
  return t;
}

int averaging_of(const Environment& env, Arm arm) {
  const ExperimentConfig& c = env.config;
  if (arm == Arm::kDae) return c.dae.input_averaging > 0 ? c.dae.input_averaging : c.averaging;
  return arm == Arm::kAveraging ? c.averaging : 1;
}

std::vector<double> features_of(const Environment& env, Arm arm, const PowerFrame& frame,
                                const dae::DaeModel* model) {
  const ExperimentConfig& c = env.config;
  const RadioImage image = to_image(frame, c.lis_cols, c.lis_rows, averaging_of(env, arm));
  const int f = c.lof.feature_size;
  if (arm != Arm::kDae) return to_features(image, c.lof.feature_mode, f, f).values;
  if (model == nullptr) throw std::invalid_argument("lof_data: the DAE arm needs a trained model");
  const int r = c.dae.image_size;
  const auto input = to_features(image, FeatureMode::kResized, r, r).values;
  return to_features(dae::denoise(*model, input), r, r, c.lof.feature_mode, f, f).values;
}

}  // namespace

// Names ------------------------------------------------------------------

std::string arm_name(Arm arm) {
  switch (arm) {
    case Arm::kRaw:
      return "raw";
    case Arm::kAveraging:
      return "averaging";
    case Arm::kDae:
      return "dae";
    case Arm::kGlrt:
      return "glrt";
  }
  return "raw";
}

Arm arm_from(const std::string& name) {
  for (Arm a : kAllArms) {
    if (arm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown arm '" + name + "'");
}

std::string detector_name(Arm arm) { return arm == Arm::kGlrt ? "glrt" : "lof"; }

// Config -----------------------------------------------------------------

void validate(const ExperimentConfig& c) {
  if (c.name.empty() || c.name.find_first_of(",|\n") != std::string::npos) {
    throw std::invalid_argument("config: name must be non-empty without ',' or '|'");
  }
  if (std::abs(c.split_train + c.split_valid + c.split_test - 1.0) > 1e-9) {
    throw std::invalid_argument("config: split ratios must sum to 1");
  }
  if (!(c.split_train > 0 && c.split_valid > 0 && c.split_test > 0)) {
    throw std::invalid_argument("config: split ratios must be positive");
  }
  if (c.snr_db.empty()) throw std::invalid_argument("config: SNR grid is empty");
  if (c.arms.empty()) throw std::invalid_argument("config: no arms selected");
  if (!(c.route.delta_d > 0.0)) throw std::invalid_argument("config: delta_d must be positive");
  if (c.samples_per_point < 1 || c.averaging < 1 || c.replicates < 1) {
    throw std::invalid_argument("config: samples, averaging and replicates must be positive");
  }
  if (c.lis_rows < 1 || c.lis_cols < 1 || c.lis_rows * c.lis_cols < 2 || !(c.spacing_wavelengths > 0)) {
    throw std::invalid_argument("config: bad surface dimensions");
  }
  if (c.lof.k_candidates.empty() || c.lof.feature_size < 1) throw std::invalid_argument("config: bad LOF settings");
  if (c.dae.image_size < 1 || c.dae.target_rows < 2 || c.dae.target_cols < 2) {
    throw std::invalid_argument("config: bad DAE image sizes");
  }
  if (c.dae.input_averaging < 0) throw std::invalid_argument("config: bad DAE input averaging");
  if (c.threads < 0) throw std::invalid_argument("config: threads must be >= 0");
  for (double s : c.snr_db) {
    if (!std::isfinite(s)) throw std::invalid_argument("config: non-finite SNR");
    if (uses_dae(c) && s > c.dae.target_snr_db) {
      throw std::invalid_argument("config: DAE target SNR must not be below any sweep SNR");
    }
  }
}

ExperimentConfig config_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  check_keys(j,
             {"name", "scene_file", "route", "lis", "samples_per_point", "averaging", "snr_db", "arms", "split",
              "master_seed", "replicates", "changing_environment", "environment_shift", "threads", "lof", "glrt",
              "dae"},
             "top level");
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.scene_file = j.value("scene_file", c.scene_file);
  if (j.contains("route")) {
    const json& r = j.at("route");
    check_keys(r, {"kind", "delta_d", "correct_points", "anomalous_points", "step", "wall_distance", "height"},
               "route");
    c.route.kind = route_kind_from(r.value("kind", route_kind_name(c.route.kind)));
    c.route.delta_d = r.value("delta_d", c.route.delta_d);
    c.route.correct_points = r.value("correct_points", c.route.correct_points);
    c.route.anomalous_points = r.value("anomalous_points", c.route.anomalous_points);
    c.route.step = r.value("step", c.route.step);
    c.route.wall_distance = r.value("wall_distance", c.route.wall_distance);
    c.route.height = r.value("height", c.route.height);
  }
  if (j.contains("lis")) {
    const json& l = j.at("lis");
    check_keys(l, {"rows", "cols", "spacing_wavelengths"}, "lis");
    c.lis_rows = l.value("rows", c.lis_rows);
    c.lis_cols = l.value("cols", c.lis_cols);
    c.spacing_wavelengths = l.value("spacing_wavelengths", c.spacing_wavelengths);
  }
  c.samples_per_point = j.value("samples_per_point", c.samples_per_point);
  c.averaging = j.value("averaging", c.averaging);
  c.snr_db = j.value("snr_db", c.snr_db);
  if (j.contains("arms")) {
    c.arms.clear();
    for (const auto& a : j.at("arms")) c.arms.push_back(arm_from(a.get<std::string>()));
  }
  if (j.contains("split")) {
    const auto s = j.at("split").get<std::vector<double>>();
    if (s.size() != 3) throw std::invalid_argument("config: split needs three ratios");
    c.split_train = s[0];
    c.split_valid = s[1];
    c.split_test = s[2];
  }
  c.master_seed = j.value("master_seed", c.master_seed);
  c.replicates = j.value("replicates", c.replicates);
  c.changing_environment = j.value("changing_environment", c.changing_environment);
  if (j.contains("environment_shift")) {
    const auto v = j.at("environment_shift").get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("config: environment_shift needs three values");
    c.environment_shift = {v[0], v[1], v[2]};
  }
  c.threads = j.value("threads", c.threads);
  if (j.contains("lof")) {
    const json& l = j.at("lof");
    check_keys(l, {"k_candidates", "metric", "feature_mode", "feature_size", "tau_quantile"}, "lof");
    c.lof.k_candidates = l.value("k_candidates", c.lof.k_candidates);
    const std::string metric = l.value("metric", std::string("euclidean"));
    if (metric == "euclidean") {
      c.lof.metric = lof::Metric::kEuclidean;
    } else if (metric == "manhattan") {
      c.lof.metric = lof::Metric::kManhattan;
    } else {
      throw std::invalid_argument("config: unknown metric '" + metric + "'");
    }
    c.lof.feature_mode = feature_mode_from(l.value("feature_mode", feature_mode_name(c.lof.feature_mode)));
    c.lof.feature_size = l.value("feature_size", c.lof.feature_size);
    c.lof.tau_quantile = l.value("tau_quantile", c.lof.tau_quantile);
  }
  if (j.contains("glrt")) {
    const json& g = j.at("glrt");
    check_keys(g, {"alpha", "alpha0", "n_mc", "convention"}, "glrt");
    c.glrt.alpha = g.value("alpha", c.glrt.alpha);
    c.glrt.alpha0 = g.value("alpha0", c.glrt.alpha0);
    c.glrt.n_mc = g.value("n_mc", c.glrt.n_mc);
    const std::string conv = g.value("convention", std::string("power_density"));
    if (conv == "power_density") {
      c.glrt.convention = glrt::BesselArgument::kPowerDensity;
    } else if (conv == "as_printed") {
      c.glrt.convention = glrt::BesselArgument::kAsPrinted;
    } else {
      throw std::invalid_argument("config: unknown Bessel convention '" + conv + "'");
    }
  }
  if (j.contains("dae")) {
    const json& d = j.at("dae");
    check_keys(d,
               {"target_rows", "target_cols", "target_snr_db", "image_size", "input_averaging", "latent", "epochs", "batch_size",
                "learning_rate", "beta1", "beta2", "epsilon", "leak"},
               "dae");
    c.dae.target_rows = d.value("target_rows", c.dae.target_rows);
    c.dae.target_cols = d.value("target_cols", c.dae.target_cols);
    c.dae.target_snr_db = d.value("target_snr_db", c.dae.target_snr_db);
    c.dae.image_size = d.value("image_size", c.dae.image_size);
    c.dae.input_averaging = d.value("input_averaging", c.dae.input_averaging);
    dae::Config& n = c.dae.net;
    n.latent = d.value("latent", n.latent);
    n.epochs = d.value("epochs", n.epochs);
    n.batch_size = d.value("batch_size", n.batch_size);
    n.learning_rate = d.value("learning_rate", n.learning_rate);
    n.beta1 = d.value("beta1", n.beta1);
    n.beta2 = d.value("beta2", n.beta2);
    n.epsilon = d.value("epsilon", n.epsilon);
    n.leak = d.value("leak", n.leak);
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c = config_from_json_text(read_text_file(path));
  if (!c.scene_file.empty() && std::filesystem::path(c.scene_file).is_relative()) {
    c.scene_file = (path.parent_path() / c.scene_file).string();
  }
  return c;
}

std::string config_to_json_text(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["scene_file"] = c.scene_file;
  j["route"] = {{"kind", route_kind_name(c.route.kind)},
                {"delta_d", c.route.delta_d},
                {"correct_points", c.route.correct_points},
                {"anomalous_points", c.route.anomalous_points},
                {"step", c.route.step},
                {"wall_distance", c.route.wall_distance},
                {"height", c.route.height}};
  j["lis"] = {{"rows", c.lis_rows}, {"cols", c.lis_cols}, {"spacing_wavelengths", c.spacing_wavelengths}};
  j["samples_per_point"] = c.samples_per_point;
  j["averaging"] = c.averaging;
  j["snr_db"] = c.snr_db;
  j["arms"] = json::array();
  for (Arm a : c.arms) j["arms"].push_back(arm_name(a));
  j["split"] = {c.split_train, c.split_valid, c.split_test};
  j["master_seed"] = c.master_seed;
  j["replicates"] = c.replicates;
  j["changing_environment"] = c.changing_environment;
  j["environment_shift"] = {c.environment_shift.x, c.environment_shift.y, c.environment_shift.z};
  j["threads"] = c.threads;
  j["lof"] = {{"k_candidates", c.lof.k_candidates},
              {"metric", c.lof.metric == lof::Metric::kEuclidean ? "euclidean" : "manhattan"},
              {"feature_mode", feature_mode_name(c.lof.feature_mode)},
              {"feature_size", c.lof.feature_size},
              {"tau_quantile", c.lof.tau_quantile}};
  j["glrt"] = {{"alpha", c.glrt.alpha},
               {"alpha0", c.glrt.alpha0},
               {"n_mc", c.glrt.n_mc},
               {"convention",
                c.glrt.convention == glrt::BesselArgument::kPowerDensity ? "power_density" : "as_printed"}};
  j["dae"] = {{"target_rows", c.dae.target_rows},   {"target_cols", c.dae.target_cols},
              {"target_snr_db", c.dae.target_snr_db}, {"image_size", c.dae.image_size},
              {"input_averaging", c.dae.input_averaging},
              {"latent", c.dae.net.latent},          {"epochs", c.dae.net.epochs},
              {"batch_size", c.dae.net.batch_size},  {"learning_rate", c.dae.net.learning_rate},
              {"beta1", c.dae.net.beta1},            {"beta2", c.dae.net.beta2},
              {"epsilon", c.dae.net.epsilon},        {"leak", c.dae.net.leak}};
  return j.dump(2) + "\n";
}

// Environment ------------------------------------------------------------

double Environment::sigma2_for(double snr_db) const { return sigma_for_snr(channels, snr_db); }

Environment prepare(const ExperimentConfig& config) {
  validate(config);
  Environment env;
  env.config = config;
  env.scene = scene_for(config);
  env.route = build_routes(env.scene, config.route);
  env.channels = channels_along(env.scene, env.route);
  if (config.changing_environment) {
    env.changed_scene = relocate_scatterers(env.scene, config.environment_shift);
    env.test_channels = channels_along(env.changed_scene, env.route);
  } else {
    env.changed_scene = env.scene;
    env.test_channels = env.channels;
  }
  if (uses_dae(config)) {
    const Scene fine = target_scene(env.scene, config.dae.target_rows, config.dae.target_cols);
    Trajectory correct;
    correct.points.assign(env.route.points.begin(), env.route.points.begin() + config.route.correct_points);
    correct.labels.assign(correct.points.size(), PointLabel::kCorrect);
    env.target_channels = channels_along(fine, correct);
    env.target_sigma2 = sigma_for_snr(env.target_channels, config.dae.target_snr_db);
  }
  return env;
}

// Data ---------------------------------------------------------------------

Split split_correct(std::size_t correct_points, std::size_t samples, double train_fraction, double valid_fraction,
                    std::uint64_t seed) {
  std::vector<SampleRef> all;
  all.reserve(correct_points * samples);
  for (std::size_t p = 0; p < correct_points; ++p) {
    for (std::size_t s = 0; s < samples; ++s) all.push_back({p, s});
  }
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  const auto n = static_cast<double>(all.size());
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * n));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= all.size()) {
    throw std::invalid_argument("split_correct: a split would be empty");
  }
  Split split;
  split.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.valid.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train),
                     all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  split.test.assign(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), all.end());
  auto by_ref = [](const SampleRef& a, const SampleRef& b) {
    return a.point != b.point ? a.point < b.point : a.sample < b.sample;
  };
  std::sort(split.train.begin(), split.train.end(), by_ref);
  std::sort(split.valid.begin(), split.valid.end(), by_ref);
  std::sort(split.test.begin(), split.test.end(), by_ref);
  return split;
}

std::uint64_t cell_seed(std::uint64_t master, int replicate, double snr_db) {
  return derive_seed(master, {static_cast<std::uint64_t>(replicate), std::bit_cast<std::uint64_t>(snr_db)});
}

PowerFrame arm_frame(const Environment& env, Arm arm, std::uint64_t seed, double sigma2, SampleRef ref,
                     bool evaluation) {
  const auto& channels = evaluation ? env.test_channels : env.channels;
  if (ref.point >= channels.size()) throw std::out_of_range("arm_frame: point out of range");
  const int s = averaging_of(env, arm);
  const std::uint64_t stream = s == 1 ? kRawFrames : kAveragedFrames;
  const std::uint64_t frame_seed = derive_seed(seed, {stream, ref.point, ref.sample});
  if (s == 1) return sample_power(channels[ref.point], sigma2, frame_seed, ref.sample);
  return sample_averaged_power(channels[ref.point], sigma2, s, frame_seed, ref.sample);
}

Split cell_split(const Environment& env, std::uint64_t seed) {
  const ExperimentConfig& c = env.config;
  return split_correct(c.route.correct_points, static_cast<std::size_t>(c.samples_per_point), c.split_train,
                       c.split_valid, derive_seed(seed, {kSplit}));
}

std::vector<dae::ImagePair> dae_pairs(const Environment& env, std::uint64_t seed, double snr_db, const Split& split) {
  const ExperimentConfig& c = env.config;
  if (env.target_channels.size() != c.route.correct_points) {
    throw std::invalid_argument("dae_pairs: environment was prepared without the DAE arm");
  }
  const double sigma2 = env.sigma2_for(snr_db);
  const int r = c.dae.image_size;
  std::vector<dae::ImagePair> pairs;
  pairs.reserve(split.train.size());
  for (const SampleRef& ref : split.train) {
    const PowerFrame noisy = arm_frame(env, Arm::kDae, seed, sigma2, ref, false);
    const RadioImage corrupted = to_image(noisy, c.lis_cols, c.lis_rows, averaging_of(env, Arm::kDae));
    const PowerFrame clean = sample_power(env.target_channels[ref.point], env.target_sigma2,
                                          derive_seed(seed, {kTargetFrames, ref.point, ref.sample}), ref.sample);
    const RadioImage target = to_image(clean, c.dae.target_cols, c.dae.target_rows);
    pairs.push_back({to_features(corrupted, FeatureMode::kResized, r, r).values,
                     to_features(target, FeatureMode::kResized, r, r).values, snr_db, c.dae.target_snr_db});
  }
  return pairs;
}

dae::TrainResult train_dae_arm(const Environment& env, int replicate, double snr_db) {
  const std::uint64_t seed = cell_seed(env.config.master_seed, replicate, snr_db);
  const auto pairs = dae_pairs(env, seed, snr_db, cell_split(env, seed));
  dae::Config net = env.config.dae.net;
  net.seed = derive_seed(seed, {kDaeInit});
  return dae::train(pairs, net);
}

LofData lof_data(const Environment& env, Arm arm, int replicate, double snr_db, const dae::DaeModel* model) {
  if (arm == Arm::kGlrt) throw std::invalid_argument("lof_data: the GLRT arm has no image features");
  const ExperimentConfig& c = env.config;
  const std::uint64_t seed = cell_seed(c.master_seed, replicate, snr_db);
  const double sigma2 = env.sigma2_for(snr_db);
  const Split split = cell_split(env, seed);
  const std::size_t dim = static_cast<std::size_t>(c.lof.feature_size) * c.lof.feature_size;

  auto features = [&](SampleRef ref, bool evaluation) {
    return features_of(env, arm, arm_frame(env, arm, seed, sigma2, ref, evaluation), model);
  };
  LofData data{lof::PointSet(dim), lof::PointSet(dim), lof::PointSet(dim), {}, {}};
  for (const SampleRef& ref : split.train) data.train.add(features(ref, false));
  for (const SampleRef& ref : split.valid) data.valid.add(features(ref, false));
  for (const SampleRef& ref : split.test) {
    data.test.add(features(ref, true));
    data.test_anomalous.push_back(false);
    data.test_refs.push_back(ref);
  }
  for (std::size_t j = 0; j < c.route.anomalous_points; ++j) {
    for (int s = 0; s < c.samples_per_point; ++s) {
      const SampleRef ref{c.route.correct_points + j, static_cast<std::size_t>(s)};
      data.test.add(features(ref, true));
      data.test_anomalous.push_back(true);
      data.test_refs.push_back(ref);
    }
  }
  return data;
}

lof::LofModel train_lof(const LofData& data, const LofSettings& settings) {
  const std::size_t k = lof::select_k(data.train, data.valid, settings.k_candidates, settings.metric);
  lof::LofModel model = lof::fit(data.train, k, settings.metric);
  model.tau = lof::calibrate_tau(model, data.valid, settings.tau_quantile);
  return model;
}

LofOutcome evaluate_lof(lof::LofModel model, const LofData& data) {
  LofOutcome out;
  out.predictions.reserve(data.test.size());
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    out.predictions.push_back(lof::predict(model, data.test[i]));
    out.confusion.add(out.predictions.back().anomalous, data.test_anomalous[i]);
  }
  out.model = std::move(model);
  return out;
}

glrt::GlrtModel train_glrt_arm(const Environment& env, int replicate, double snr_db) {
  const ExperimentConfig& c = env.config;
  const std::uint64_t seed = cell_seed(c.master_seed, replicate, snr_db);
  const double sigma2 = env.sigma2_for(snr_db);
  const auto n = static_cast<std::size_t>(c.samples_per_point);
  std::vector<std::vector<PowerFrame>> frames(c.route.correct_points);
  std::vector<std::size_t> ids(c.route.correct_points);
  for (std::size_t p = 0; p < c.route.correct_points; ++p) {
    ids[p] = p;
    for (std::size_t s = 0; s < n; ++s) frames[p].push_back(arm_frame(env, Arm::kGlrt, seed, sigma2, {p, s}, false));
  }
  glrt::Config gc;
  gc.alpha = c.glrt.alpha;
  gc.alpha0 = c.glrt.alpha0;
  gc.n_train = n;
  gc.n_valid = n;
  gc.n_mc = c.glrt.n_mc;
  gc.seed = derive_seed(seed, {kGlrtMc});
  gc.convention = c.glrt.convention;
  return glrt::train(frames, ids, sigma2, gc);
}

std::vector<GlrtDecision> evaluate_glrt_arm(const glrt::GlrtModel& model, const Environment& env, int replicate,
                                            double snr_db) {
  const ExperimentConfig& c = env.config;
  const std::uint64_t seed = cell_seed(c.master_seed, replicate, snr_db);
  const double sigma2 = env.sigma2_for(snr_db);
  const auto n = static_cast<std::size_t>(c.samples_per_point);
  std::vector<GlrtDecision> out;
  const std::size_t total = c.route.correct_points + c.route.anomalous_points;
  std::vector<PowerFrame> frames(n);
  for (std::size_t p = 0; p < total; ++p) {
    const bool anomalous = p >= c.route.correct_points;
    // Correct points are revisited with sample indices the training never used.
    const std::size_t first = anomalous ? 0 : n;
    for (std::size_t s = 0; s < n; ++s) frames[s] = arm_frame(env, Arm::kGlrt, seed, sigma2, {p, first + s}, true);
    out.push_back({p, anomalous, glrt::is_anomalous(model, frames)});
  }
  return out;
}

// Cells --------------------------------------------------------------------

std::string CellKey::id() const {
  return config_id + "|" + std::to_string(replicate) + "|" + format_double(snr_db, "%g") + "|" + arm_name(arm);
}

CellResult run_cell(const Environment& env, const CellKey& key) {
  CellResult result;
  result.key = key;
  result.master_seed = env.config.master_seed;
  result.unit = key.arm == Arm::kGlrt ? "point" : "sample";
  try {
    if (key.arm == Arm::kGlrt) {
      const glrt::GlrtModel model = train_glrt_arm(env, key.replicate, key.snr_db);
      for (const GlrtDecision& d : evaluate_glrt_arm(model, env, key.replicate, key.snr_db)) {
        result.confusion.add(d.anomalous, d.anomalous_truth);
      }
    } else {
      std::optional<dae::TrainResult> net;
      if (key.arm == Arm::kDae) net = train_dae_arm(env, key.replicate, key.snr_db);
      const LofData data = lof_data(env, key.arm, key.replicate, key.snr_db, net ? &net->model : nullptr);
      const LofOutcome outcome = evaluate_lof(train_lof(data, env.config.lof), data);
      result.confusion = outcome.confusion;
      result.chosen_k = outcome.model.k;
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace_if(msg.begin(), msg.end(), [](char ch) { return ch == ',' || ch == '\n' || ch == '\r'; }, ';');
    result.confusion = {};
    result.chosen_k = 0;
    result.status = "error: " + msg;
  }
  return result;
}

std::string results_header() {
  return "config_id,master_seed,replicate,snr_db,detector,preprocessing,unit,k,TP,FP,TN,FN,PP,PN,RP,RN,PF1,NF1,status";
}

std::string format_row(const CellResult& r) {
  std::ostringstream row;
  const metrics::Confusion& c = r.confusion;
  metrics::Report m{};
  if (c.total() > 0) m = metrics::report(c);
  const std::string preprocessing = r.key.arm == Arm::kGlrt ? "raw" : arm_name(r.key.arm);
  row << r.key.config_id << ',' << r.master_seed << ',' << r.key.replicate << ',' << format_double(r.key.snr_db, "%g")
      << ',' << detector_name(r.key.arm) << ',' << preprocessing << ',' << r.unit << ',' << r.chosen_k << ',' << c.tp
      << ',' << c.fp << ',' << c.tn << ',' << c.fn;
  for (metrics::Metric v : {m.pp, m.pn, m.rp, m.rn, m.pf1, m.nf1}) row << ',' << metrics::format_metric(v);
  row << ',' << r.status;
  return row.str();
}

CellResult parse_row(const std::string& line) {
  const auto f = split_fields(line);
  if (f.size() != 19) throw std::invalid_argument("results: expected 19 fields in '" + line + "'");
  CellResult r;
  r.key.config_id = f[0];
  r.master_seed = std::stoull(f[1]);
  r.key.replicate = std::stoi(f[2]);
  r.key.snr_db = std::stod(f[3]);
  r.key.arm = f[4] == "glrt" ? Arm::kGlrt : arm_from(f[5]);
  if (f[4] != detector_name(r.key.arm)) throw std::invalid_argument("results: unknown detector '" + f[4] + "'");
  r.unit = f[6];
  r.chosen_k = std::stoull(f[7]);
  r.confusion = {std::stoull(f[8]), std::stoull(f[9]), std::stoull(f[10]), std::stoull(f[11])};
  r.status = f[18];
  return r;
}

std::vector<CellResult> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != results_header()) {
    throw std::runtime_error("results: bad header in " + path.string());
  }
  std::vector<CellResult> out;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_row(line));
  }
  return out;
}

std::vector<CellKey> sweep_cells(const ExperimentConfig& c) {
  std::vector<CellKey> cells;
  for (int r = 0; r < c.replicates; ++r) {
    for (double snr : c.snr_db) {
      for (Arm arm : c.arms) cells.push_back({c.name, r, snr, arm});
    }
  }
  return cells;
}

std::size_t run_sweep(const ExperimentConfig& config, const std::filesystem::path& results,
                      const std::function<void(const CellResult&)>& progress) {
  validate(config);
  const std::vector<CellKey> cells = sweep_cells(config);

  // Existing rows, kept verbatim; only successful rows count as done.
  std::vector<std::pair<std::string, std::string>> existing;  // key id, line
  std::set<std::string> done;
  if (std::filesystem::exists(results) && std::filesystem::file_size(results) > 0) {
    std::ifstream in(results);
    std::string line;
    if (!std::getline(in, line) || line != results_header()) {
      throw std::runtime_error("results: bad header in " + results.string());
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      CellResult r;
      try {
        r = parse_row(line);
      } catch (const std::exception&) {
        continue;  // truncated row from an interrupted run; recomputed below
      }
      existing.emplace_back(r.key.id(), line);
      if (r.status == "ok" && r.master_seed == config.master_seed) done.insert(r.key.id());
    }
  }
  std::vector<CellKey> pending;
  for (const CellKey& k : cells) {
    if (!done.count(k.id())) pending.push_back(k);
  }

  std::map<std::string, std::string> fresh;  // key id -> line
  if (!pending.empty()) {
    const Environment env = prepare(config);
    std::ofstream append(results, std::ios::app);
    if (!append) throw std::runtime_error("cannot open " + results.string());
    if (existing.empty()) append << results_header() << '\n' << std::flush;
    std::mutex mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < pending.size(); i = next++) {
        const CellResult r = run_cell(env, pending[i]);
        const std::string line = format_row(r);
        std::lock_guard<std::mutex> lock(mutex);
        append << line << '\n' << std::flush;
        fresh[r.key.id()] = line;
        if (progress) progress(r);
      }
    };
    unsigned n = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
    n = std::clamp<unsigned>(n, 1, static_cast<unsigned>(pending.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  // Rewrite in grid order; rows from other grids follow in their old order.
  std::map<std::string, std::string> latest;
  for (const auto& [id, line] : existing) latest[id] = line;
  for (const auto& [id, line] : fresh) latest[id] = line;
  std::set<std::string> in_grid;
  std::ostringstream body;
  body << results_header() << '\n';
  for (const CellKey& k : cells) {
    const std::string id = k.id();
    in_grid.insert(id);
    body << latest.at(id) << '\n';
  }
  std::set<std::string> emitted;
  for (const auto& [id, line] : existing) {
    if (!in_grid.count(id) && emitted.insert(id).second) body << latest.at(id) << '\n';
  }
  const std::filesystem::path tmp = results.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << body.str();
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, results);
  return pending.size();
}

// Reports ------------------------------------------------------------------

std::vector<SummaryRow> summarize(const std::vector<CellResult>& results) {
  struct Group {
    SummaryRow row;
    int config_rank = 0;
    Arm arm = Arm::kRaw;
    double pf1_sum = 0, nf1_sum = 0;
  };
  std::map<std::string, int> config_rank;
  std::map<std::tuple<int, int, double>, Group> groups;  // (config, arm, -snr)
  for (const CellResult& r : results) {
    if (r.status != "ok" || r.confusion.total() == 0) continue;
    const int rank = config_rank.emplace(r.key.config_id, static_cast<int>(config_rank.size())).first->second;
    Group& g = groups[{rank, static_cast<int>(r.key.arm), -r.key.snr_db}];
    const metrics::F1 f = metrics::f1(r.confusion);
    const double pf1 = f.pf1.value_or(0.0);
    if (g.row.runs == 0) {
      g.row.config_id = r.key.config_id;
      g.row.detector = detector_name(r.key.arm);
      g.row.preprocessing = r.key.arm == Arm::kGlrt ? "raw" : arm_name(r.key.arm);
      g.row.snr_db = r.key.snr_db;
      g.row.pf1_min = g.row.pf1_max = pf1;
    }
    ++g.row.runs;
    g.row.undefined += !f.pf1.has_value();
    g.row.pf1_min = std::min(g.row.pf1_min, pf1);
    g.row.pf1_max = std::max(g.row.pf1_max, pf1);
    g.pf1_sum += pf1;
    g.nf1_sum += f.nf1.value_or(0.0);
  }
  std::vector<SummaryRow> out;
  for (auto& [key, g] : groups) {
    g.row.pf1_mean = g.pf1_sum / static_cast<double>(g.row.runs);
    g.row.nf1_mean = g.nf1_sum / static_cast<double>(g.row.runs);
    out.push_back(g.row);
  }
  return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "config_id,detector,preprocessing,snr_db,runs,pf1_undefined,pf1_mean,pf1_min,pf1_max,nf1_mean\n";
  for (const SummaryRow& r : rows) {
    out << r.config_id << ',' << r.detector << ',' << r.preprocessing << ',' << format_double(r.snr_db, "%g") << ','
        << r.runs << ',' << r.undefined << ',' << format_double(r.pf1_mean, "%.6f") << ','
        << format_double(r.pf1_min, "%.6f") << ',' << format_double(r.pf1_max, "%.6f") << ','
        << format_double(r.nf1_mean, "%.6f") << '\n';
  }
}

void print_tables(std::ostream& out, const std::vector<SummaryRow>& rows) {
  std::vector<std::string> configs;
  for (const SummaryRow& r : rows) {
    if (std::find(configs.begin(), configs.end(), r.config_id) == configs.end()) configs.push_back(r.config_id);
  }
  for (const std::string& id : configs) {
    std::vector<std::string> columns;
    std::vector<double> snrs;
    std::map<std::pair<std::string, double>, double> cell;
    for (const SummaryRow& r : rows) {
      if (r.config_id != id) continue;
      const std::string col = r.detector + "/" + r.preprocessing;
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
      if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) snrs.push_back(r.snr_db);
      cell[{col, r.snr_db}] = r.pf1_mean;
    }
    std::sort(snrs.rbegin(), snrs.rend());
    out << "PF1 mean, " << id << '\n' << std::setw(8) << "snr_db";
    for (const auto& c : columns) out << std::setw(16) << c;
    out << '\n';
    for (double s : snrs) {
      out << std::setw(8) << format_double(s, "%g");
      for (const auto& c : columns) {
        const auto it = cell.find({c, s});
        out << std::setw(16) << (it == cell.end() ? std::string("-") : format_double(it->second, "%.3f"));
      }
      out << '\n';
    }
    out << '\n';
  }
}

}  // namespace lis::harness
