// Command-line front end for simulations, detector training/evaluation and sweeps.
// Every artifact goes to $LIS_OUT_DIR (default ./out).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lis/harness.hpp"
#include "lis/scene_io.hpp"

namespace fs = std::filesystem;
using namespace lis;
using namespace lis::harness;

namespace {

fs::path out_dir() {
  const char* env = std::getenv("LIS_OUT_DIR");
  fs::path dir = env != nullptr && *env != '\0' ? fs::path(env) : fs::path("out");
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string tag(double snr_db, int replicate) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "r%d_snr%g", replicate, snr_db);
  return buf;
}

// Flags that override the JSON config. Unset flags leave the config alone.
struct Overrides {
  std::string config_file;
  std::optional<std::string> name, route;
  std::optional<double> delta_d, spacing;
  std::optional<int> rows, cols, samples, averaging, replicates, threads;
  std::optional<std::uint64_t> seed;
  std::vector<double> snr;
  std::vector<std::string> arms;
  bool changing = false;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_file, "experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--name", name, "config id written to result rows");
    app->add_option("--route", route, "parallel or normal deviation")->check(CLI::IsMember({"parallel", "normal"}));
    app->add_option("--delta-d", delta_d, "anomalous route offset in meters");
    app->add_option("--rows", rows, "surface rows");
    app->add_option("--cols", cols, "surface columns");
    app->add_option("--spacing", spacing, "element spacing in wavelengths");
    app->add_option("--samples", samples, "samples per point (N_s)");
    app->add_option("--averaging", averaging, "snapshots averaged per sample (S)");
    app->add_option("--snr", snr, "SNR grid in dB");
    app->add_option("--arms", arms, "raw, averaging, dae, glrt");
    app->add_option("--replicates", replicates, "replicates per SNR");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--threads", threads, "sweep worker threads (0: all cores)");
    app->add_flag("--changing-environment", changing, "evaluate after relocating the interior scatterers");
  }

  ExperimentConfig apply() const {
    ExperimentConfig c = config_file.empty() ? ExperimentConfig{} : load_config(config_file);
    if (name) c.name = *name;
    if (route) c.route.kind = route_kind_from(*route);
    if (delta_d) c.route.delta_d = *delta_d;
    if (rows) c.lis_rows = *rows;
    if (cols) c.lis_cols = *cols;
    if (spacing) c.spacing_wavelengths = *spacing;
    if (samples) c.samples_per_point = *samples;
    if (averaging) c.averaging = *averaging;
    if (!snr.empty()) c.snr_db = snr;
    if (!arms.empty()) {
      c.arms.clear();
      for (const auto& a : arms) c.arms.push_back(arm_from(a));
    }
    if (replicates) c.replicates = *replicates;
    if (seed) c.master_seed = *seed;
    if (threads) c.threads = *threads;
    if (changing) c.changing_environment = true;
    validate(c);
    return c;
  }
};

// One (replicate, SNR) cell selector for the single-model commands.
struct CellArgs {
  int replicate = 0;
  double snr_db = 10.0;
  void attach(CLI::App* app) {
    app->add_option("--replicate", replicate, "replicate index")->check(CLI::NonNegativeNumber);
    app->add_option("--at-snr", snr_db, "SNR of the cell in dB");
  }
};

void print_metrics(const std::string& what, const metrics::Confusion& c) {
  const metrics::Report r = metrics::report(c);
  std::printf("%s: TP=%llu FP=%llu TN=%llu FN=%llu PP=%s RP=%s PF1=%s NF1=%s\n", what.c_str(),
              static_cast<unsigned long long>(c.tp), static_cast<unsigned long long>(c.fp),
              static_cast<unsigned long long>(c.tn), static_cast<unsigned long long>(c.fn),
              metrics::format_metric(r.pp).c_str(), metrics::format_metric(r.rp).c_str(),
              metrics::format_metric(r.pf1).c_str(), metrics::format_metric(r.nf1).c_str());
}

// simulate: routes, channel powers and sample images.
void simulate(const ExperimentConfig& c, const CellArgs& cell, int images_per_point) {
  const fs::path dir = out_dir();
  const Environment env = prepare(c);
  {
    auto out = open_out(dir / "routes.csv");
    out << "point,label,x,y,z\n";
    for (std::size_t p = 0; p < env.route.size(); ++p) {
      const Vec3 v = env.route.points[p];
      out << p << ',' << (env.route.labels[p] == PointLabel::kCorrect ? "correct" : "anomalous") << ',' << v.x << ','
          << v.y << ',' << v.z << '\n';
    }
  }
  {
    auto out = open_out(dir / "channel_power.csv");
    out << "point,element,power_w\n";
    out.precision(17);
    for (std::size_t p = 0; p < env.channels.size(); ++p) {
      const auto g = env.channels[p].power();
      for (std::size_t m = 0; m < g.size(); ++m) out << p << ',' << m << ',' << g[m] << '\n';
    }
  }
  const std::uint64_t seed = cell_seed(c.master_seed, cell.replicate, cell.snr_db);
  const double sigma2 = env.sigma2_for(cell.snr_db);
  std::vector<DatasetEntry> entries;
  const int n = std::min(images_per_point, c.samples_per_point);
  for (Arm arm : {Arm::kRaw, Arm::kAveraging}) {
    const int s = arm == Arm::kRaw ? 1 : c.averaging;
    for (std::size_t p = 0; p < env.route.size(); ++p) {
      for (int k = 0; k < n; ++k) {
        const SampleRef ref{p, static_cast<std::size_t>(k)};
        const RadioImage img = to_image(arm_frame(env, arm, seed, sigma2, ref, false), c.lis_cols, c.lis_rows, s);
        const fs::path rel = fs::path("images") / arm_name(arm) / ("p" + std::to_string(p) + "_s" + std::to_string(k) + ".pgm");
        fs::create_directories((dir / rel).parent_path());
        export_pgm(img, dir / rel);
        entries.push_back({entries.size(), p, ref.sample, env.route.labels[p], rel.string(), {}});
      }
    }
  }
  auto manifest = open_out(dir / "images.csv");
  write_manifest(manifest, entries);
  std::printf("%zu points, sigma2 %.6g W at %g dB, %zu images in %s\n", env.route.size(), sigma2, cell.snr_db,
              entries.size(), dir.string().c_str());
}

void train_glrt_cmd(const ExperimentConfig& c, const CellArgs& cell, fs::path model_path) {
  const fs::path dir = out_dir();
  if (model_path.empty()) model_path = dir / ("glrt_" + tag(cell.snr_db, cell.replicate) + ".bin");
  const Environment env = prepare(c);
  const glrt::GlrtModel model = train_glrt_arm(env, cell.replicate, cell.snr_db);
  glrt::save_model(model_path, model);
  auto out = open_out(dir / ("glrt_points_" + tag(cell.snr_db, cell.replicate) + ".csv"));
  out << "point,g0_mean,threshold\n";
  out.precision(17);
  for (const auto& p : model.points) {
    double mean = 0;
    for (double g : p.g0) mean += g;
    out << p.point << ',' << mean / static_cast<double>(p.g0.size()) << ',' << p.threshold << '\n';
  }
  std::printf("GLRT model with %zu points written to %s\n", model.points.size(), model_path.string().c_str());
}

void eval_glrt_cmd(const ExperimentConfig& c, const CellArgs& cell, fs::path model_path) {
  const fs::path dir = out_dir();
  if (model_path.empty()) model_path = dir / ("glrt_" + tag(cell.snr_db, cell.replicate) + ".bin");
  const glrt::GlrtModel model = glrt::load_model(model_path);
  const Environment env = prepare(c);
  auto out = open_out(dir / ("glrt_decisions_" + tag(cell.snr_db, cell.replicate) + ".csv"));
  out << "point,truth,decision\n";
  metrics::Confusion conf;
  for (const GlrtDecision& d : evaluate_glrt_arm(model, env, cell.replicate, cell.snr_db)) {
    out << d.point << ',' << (d.anomalous_truth ? "anomalous" : "correct") << ','
        << (d.anomalous ? "anomalous" : "correct") << '\n';
    conf.add(d.anomalous, d.anomalous_truth);
  }
  print_metrics("glrt", conf);
}

std::optional<dae::DaeModel> dae_for(const Environment& env, Arm arm, const CellArgs& cell, const fs::path& path) {
  if (arm != Arm::kDae) return std::nullopt;
  if (!path.empty()) return dae::load_model(path);
  std::fprintf(stderr, "no --dae-model given, training one\n");
  return train_dae_arm(env, cell.replicate, cell.snr_db).model;
}

void train_lof_cmd(ExperimentConfig c, const CellArgs& cell, Arm arm, fs::path model_path, const fs::path& dae_path) {
  if (arm == Arm::kGlrt) throw std::invalid_argument("train-lof: arm must be raw, averaging or dae");
  if (arm == Arm::kDae && dae_path.empty()) c.arms = {Arm::kDae};
  const fs::path dir = out_dir();
  if (model_path.empty()) model_path = dir / ("lof_" + arm_name(arm) + "_" + tag(cell.snr_db, cell.replicate) + ".csv");
  const Environment env = prepare(c);
  const auto net = dae_for(env, arm, cell, dae_path);
  const LofData data = lof_data(env, arm, cell.replicate, cell.snr_db, net ? &*net : nullptr);
  const lof::LofModel model = train_lof(data, c.lof);
  lof::save_model(model_path, model);
  std::printf("LOF model K=%zu tau=%.6g on %zu samples written to %s\n", model.k, model.tau, model.train.size(),
              model_path.string().c_str());
}

void eval_lof_cmd(ExperimentConfig c, const CellArgs& cell, Arm arm, fs::path model_path, const fs::path& dae_path) {
  if (arm == Arm::kGlrt) throw std::invalid_argument("eval-lof: arm must be raw, averaging or dae");
  if (arm == Arm::kDae && dae_path.empty()) c.arms = {Arm::kDae};
  const fs::path dir = out_dir();
  if (model_path.empty()) model_path = dir / ("lof_" + arm_name(arm) + "_" + tag(cell.snr_db, cell.replicate) + ".csv");
  lof::LofModel model = lof::load_model(model_path);
  const Environment env = prepare(c);
  const auto net = dae_for(env, arm, cell, dae_path);
  const LofData data = lof_data(env, arm, cell.replicate, cell.snr_db, net ? &*net : nullptr);
  const LofOutcome outcome = evaluate_lof(std::move(model), data);
  auto out = open_out(dir / ("lof_predictions_" + arm_name(arm) + "_" + tag(cell.snr_db, cell.replicate) + ".csv"));
  out << "point,sample,truth,score,decision\n";
  out.precision(17);
  for (std::size_t i = 0; i < outcome.predictions.size(); ++i) {
    out << data.test_refs[i].point << ',' << data.test_refs[i].sample << ','
        << (data.test_anomalous[i] ? "anomalous" : "correct") << ',' << outcome.predictions[i].score << ','
        << (outcome.predictions[i].anomalous ? "anomalous" : "correct") << '\n';
  }
  print_metrics("lof/" + arm_name(arm), outcome.confusion);
}

void train_dae_cmd(ExperimentConfig c, const CellArgs& cell, fs::path model_path, int examples) {
  c.arms = {Arm::kDae};
  const fs::path dir = out_dir();
  const std::string t = tag(cell.snr_db, cell.replicate);
  if (model_path.empty()) model_path = dir / ("dae_" + t + ".bin");
  const Environment env = prepare(c);
  const dae::TrainResult result = train_dae_arm(env, cell.replicate, cell.snr_db);
  dae::save_model(model_path, result.model);
  {
    auto out = open_out(dir / ("dae_loss_" + t + ".csv"));
    dae::write_loss_csv(out, result.epoch_loss);
  }
  // A few corrupted / target / denoised triples for inspection.
  const std::uint64_t seed = cell_seed(c.master_seed, cell.replicate, cell.snr_db);
  Split split = cell_split(env, seed);
  split.train.resize(std::min<std::size_t>(split.train.size(), static_cast<std::size_t>(examples)));
  const int r = c.dae.image_size;
  auto to_pgm = [&](const std::vector<double>& unit, const fs::path& path) {
    RadioImage img{r, r, {}, 0, 1};
    for (double v : unit) img.pixels.push_back(static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
    export_pgm(img, path);
  };
  const fs::path img_dir = dir / ("dae_examples_" + t);
  fs::create_directories(img_dir);
  const auto pairs = dae_pairs(env, seed, cell.snr_db, split);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string stem = "p" + std::to_string(split.train[i].point) + "_s" + std::to_string(split.train[i].sample);
    to_pgm(pairs[i].corrupted, img_dir / (stem + "_corrupted.pgm"));
    to_pgm(pairs[i].target, img_dir / (stem + "_target.pgm"));
    to_pgm(dae::denoise(result.model, pairs[i].corrupted), img_dir / (stem + "_denoised.pgm"));
  }
  std::printf("DAE (%zu parameters) final loss %.6g written to %s\n", result.model.parameter_count(),
              result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back(), model_path.string().c_str());
}

void sweep_cmd(const ExperimentConfig& c, fs::path results) {
  if (results.empty()) results = out_dir() / "results.csv";
  const auto start = std::chrono::steady_clock::now();
  std::size_t done = 0;
  const std::size_t total = sweep_cells(c).size();
  const std::size_t computed = run_sweep(c, results, [&](const CellResult& r) {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[%zu] %s %s (%.0fs)\n", ++done, r.key.id().c_str(), r.status.c_str(), s);
  });
  std::printf("%zu of %zu cells computed, results in %s\n", computed, total, results.string().c_str());
}

void report_cmd(std::vector<fs::path> inputs, fs::path summary) {
  if (inputs.empty()) inputs.push_back(out_dir() / "results.csv");
  if (summary.empty()) summary = out_dir() / "summary.csv";
  std::vector<CellResult> all;
  std::size_t errors = 0;
  for (const auto& in : inputs) {
    for (CellResult& r : read_results(in)) {
      errors += r.status != "ok";
      all.push_back(std::move(r));
    }
  }
  const auto rows = summarize(all);
  {
    auto out = open_out(summary);
    write_summary(out, rows);
  }
  print_tables(std::cout, rows);
  if (errors > 0) std::printf("%zu failed cells skipped\n", errors);
  std::printf("summary written to %s\n", summary.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Route-deviation detection with radio images from a large intelligent surface"};
  app.require_subcommand(1);

  Overrides ov;
  CellArgs cell;
  int images = 1, examples = 4;
  std::string arm_text = "averaging";
  fs::path model_path, dae_path, results, summary;
  std::vector<fs::path> inputs;

  auto* sim = app.add_subcommand("simulate", "routes, channel powers and radio images");
  ov.attach(sim);
  cell.attach(sim);
  sim->add_option("--images", images, "images per point and arm")->check(CLI::NonNegativeNumber);

  auto* tg = app.add_subcommand("train-glrt", "fit the hypothesis test on the correct route");
  auto* eg = app.add_subcommand("eval-glrt", "evaluate a GLRT model on fresh frames");
  auto* tl = app.add_subcommand("train-lof", "fit LOF on radio-image features");
  auto* el = app.add_subcommand("eval-lof", "evaluate a LOF model on the test split and anomalous route");
  auto* td = app.add_subcommand("train-dae", "train the denoising autoencoder");
  for (auto* sub : {tg, eg, tl, el, td}) {
    ov.attach(sub);
    cell.attach(sub);
    sub->add_option("--model", model_path, "model file (default under $LIS_OUT_DIR)");
  }
  for (auto* sub : {tl, el}) {
    sub->add_option("--arm", arm_text, "raw, averaging or dae")->check(CLI::IsMember({"raw", "averaging", "dae"}));
    sub->add_option("--dae-model", dae_path, "trained DAE for the dae arm")->check(CLI::ExistingFile);
  }
  td->add_option("--examples", examples, "example image triples to export")->check(CLI::NonNegativeNumber);

  auto* sw = app.add_subcommand("sweep", "run every (replicate, SNR, arm) cell, resuming finished ones");
  ov.attach(sw);
  sw->add_option("--results", results, "results CSV (default $LIS_OUT_DIR/results.csv)");

  auto* rp = app.add_subcommand("report", "summary tables from result CSVs");
  rp->add_option("inputs", inputs, "result CSVs (default $LIS_OUT_DIR/results.csv)");
  rp->add_option("--summary", summary, "summary CSV (default $LIS_OUT_DIR/summary.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) simulate(ov.apply(), cell, images);
    if (tg->parsed()) train_glrt_cmd(ov.apply(), cell, model_path);
    if (eg->parsed()) eval_glrt_cmd(ov.apply(), cell, model_path);
    if (tl->parsed()) train_lof_cmd(ov.apply(), cell, arm_from(arm_text), model_path, dae_path);
    if (el->parsed()) eval_lof_cmd(ov.apply(), cell, arm_from(arm_text), model_path, dae_path);
    if (td->parsed()) train_dae_cmd(ov.apply(), cell, model_path, examples);
    if (sw->parsed()) sweep_cmd(ov.apply(), results);
    if (rp->parsed()) report_cmd(inputs, summary);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
