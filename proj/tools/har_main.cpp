// Command-line front end: `har synth` builds a synthetic cohort on disk,
// `har run` executes an evaluation task against a cohort manifest.

#include <CLI11.hpp>
#include <Eigen/Core>

#include "har/eval.hpp"
#include "har/lfi.hpp"
#include "har/synth.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

namespace {

har::Config layered_config(const std::string& config_path, const std::vector<std::string>& sets) {
  auto cfg = har::Config::from_text(har::synth::kDefaultCohortConfig, "<defaults>");
  if (!config_path.empty()) cfg.merge_from(har::Config::from_file(config_path));
  for (const auto& kv : sets) cfg.apply_override(kv);
  return cfg;
}

int cmd_synth(const har::Config& cfg, const std::string& out_dir, std::uint64_t seed, bool dump) {
  if (dump) {
    std::fputs(cfg.canonical_text().c_str(), stdout);
    return 0;
  }
  if (out_dir.empty()) throw har::InvalidConfig("synth requires --out (or --dump-config)");

  const auto profiles = har::synth::profiles_from_config(cfg);
  const auto cohort = har::synth::cohort_from_config(cfg);
  const auto params = har::synth::synth_params_from_config(cfg);
  const auto wc = har::synth::window_config_from_config(cfg);
  const double common_rate = cfg.get_double("rate.common", 120.0);

  std::filesystem::create_directories(out_dir);

  har::data::Manifest manifest;
  manifest.common_rate_hz = common_rate;
  manifest.lfi_rate_hz = params.lfi_rate_hz;
  manifest.imu_rate_hz = params.imu_rate_hz;
  manifest.seed = seed;
  manifest.config_hash = cfg.hash_hex();
  manifest.window_samples = wc.window_samples;
  manifest.window_overlap = wc.overlap;

  std::vector<har::Index> class_counts(har::kNumActivities, 0);
  for (const auto& spec : cohort) {
    const auto stream = har::synth::gen_participant(spec, profiles, params, seed);
    const auto uniform = har::data::resample(stream, common_rate);
    const std::string file = spec.id + ".csv";
    const std::string path = (std::filesystem::path(out_dir) / file).string();
    har::data::write_participant_csv(path, uniform);

    const auto windows = har::data::make_windows(uniform, wc);
    for (const auto& w : windows) class_counts[static_cast<size_t>(w.label)]++;

    har::data::ManifestEntry entry;
    entry.id = spec.id;
    entry.file = file;
    entry.checksum = har::data::fnv1a64_file(path);
    entry.rows = uniform.channels.empty() ? 0 : uniform.channels.front().size();
    entry.raw_windows = static_cast<har::Index>(windows.size());
    manifest.raw_windows_total += entry.raw_windows;
    manifest.participants.push_back(entry);

    std::printf("%s: shift %.2f, %lld rows @ %.0f Hz, %lld windows -> %s\n", spec.id.c_str(),
                spec.shift, static_cast<long long>(entry.rows), common_rate,
                static_cast<long long>(entry.raw_windows), path.c_str());
  }

  har::Index max_count = 0;
  har::Index present = 0;
  for (har::Index c : class_counts) {
    max_count = std::max(max_count, c);
    present += c > 0 ? 1 : 0;
  }
  manifest.balanced_windows_total = present * max_count;

  const std::string mpath = (std::filesystem::path(out_dir) / "manifest.cfg").string();
  har::data::write_manifest(mpath, manifest);
  std::printf("cohort: %zu participants, %lld windows (%lld balanced), manifest %s\n",
              manifest.participants.size(), static_cast<long long>(manifest.raw_windows_total),
              static_cast<long long>(manifest.balanced_windows_total), mpath.c_str());
  std::printf("config_hash=%s\n", manifest.config_hash.c_str());
  return 0;
}

int cmd_dsp_demo() {
  const har::lfi::LaserParams laser;
  const har::lfi::RampConfig ramp;
  double max_dist_err = 0.0, max_vel_err = 0.0;
  int count = 0;
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      har::lfi::MotionSample truth;
      truth.distance_m = 15e-3 + 20e-3 * i / 10.0;
      truth.velocity_mps = -0.05 + 0.1 * j / 10.0;
      const auto est = har::lfi::round_trip(laser, ramp, truth);
      max_dist_err = std::max(max_dist_err, std::abs(est.distance_m - truth.distance_m));
      max_vel_err = std::max(max_vel_err, std::abs(est.velocity_mps - truth.velocity_mps));
      ++count;
    }
  }
  std::printf("fmcw round trip over %d samples (distance 15..35 mm, velocity -50..50 mm/s):\n",
              count);
  std::printf("  max distance error %.3f um\n", max_dist_err * 1e6);
  std::printf("  max velocity error %.3f mm/s\n", max_vel_err * 1e3);
  return 0;
}

int cmd_run(const har::Config& cfg, const std::string& manifest_path, const std::string& task,
            std::uint64_t seed, const std::string& out_dir) {
  if (task == "dsp-demo") return cmd_dsp_demo();

  if (manifest_path.empty()) throw har::InvalidConfig("task '" + task + "' requires --manifest");
  const auto hc = har::eval::harness_config(cfg);

  har::data::HarDataset ds;
  std::vector<har::data::SensorStream> streams;
  har::eval::RunOptions opt;
  if (hc.strict_standardize) {
    streams = har::data::load_streams(manifest_path, true);
    opt.raw_streams = &streams;
  } else {
    ds = har::data::load_dataset(manifest_path, hc.wc, true);
  }

  std::vector<har::eval::RunResult> runs;
  if (task == "ablate") {
    runs = har::eval::run_ablation(ds, hc, seed, {"all", "lfi", "imu"}, opt);
  } else {
    runs.push_back(har::eval::run_lopocv(task, ds, hc, seed, opt));
  }

  const std::string report = har::eval::summary_report(runs, hc);
  std::fputs(report.c_str(), stdout);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    har::eval::write_summary_report(
        (std::filesystem::path(out_dir) / "report.txt").string(), runs, hc);
    har::eval::write_runs_csv((std::filesystem::path(out_dir) / "runs.csv").string(), runs,
                              hc.n_classes);
    std::printf("wrote %s and %s\n",
                (std::filesystem::path(out_dir) / "report.txt").string().c_str(),
                (std::filesystem::path(out_dir) / "runs.csv").string().c_str());
  }
  std::printf("macro_f1=%.6f\n", runs.front().pooled.macro_f1);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic smart-glasses activity recognition toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir, manifest_path, task;
  std::vector<std::string> sets;
  std::uint64_t seed = 42;
  bool dump_config = false;
  int jobs = 1;

  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort (CSV + manifest)");
  synth->add_option("--config", config_path, "config file layered over the built-in defaults");
  synth->add_option("--out", out_dir, "output directory");
  synth->add_option("--seed", seed, "master seed (default 42)");
  synth->add_option("--set", sets, "override, key=value (repeatable)");
  synth->add_flag("--dump-config", dump_config, "print the merged config and exit");

  auto* run = app.add_subcommand("run", "run an evaluation task against a manifest");
  run->add_option("--manifest", manifest_path, "cohort manifest (from `har synth`)");
  run->add_option("--task", task, "rfc | cnn | transfer | ablate | dsp-demo")
      ->required()
      ->check(CLI::IsMember({"rfc", "cnn", "transfer", "ablate", "dsp-demo"}));
  run->add_option("--seed", seed, "master seed (default 42)");
  run->add_option("--out", out_dir, "directory for report.txt and runs.csv");
  run->add_option("--config", config_path, "config file layered over the built-in defaults");
  run->add_option("--set", sets, "override, key=value (repeatable)");
  run->add_option("--jobs", jobs, "worker threads (informational; math is single-threaded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    Eigen::setNbThreads(jobs);
    const auto cfg = layered_config(config_path, sets);
    if (synth->parsed()) return cmd_synth(cfg, out_dir, seed, dump_config);
    return cmd_run(cfg, manifest_path, task, seed, out_dir);
  } catch (const har::IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return 3;
  } catch (const har::NonFiniteLoss& e) {
    std::fprintf(stderr, "training diverged: %s\n", e.what());
    return 4;
  } catch (const har::InvalidConfig& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
