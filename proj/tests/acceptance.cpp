// Acceptance suite: end-to-end checks of the shipped pipeline, from the
// interferometry DSP oracle through the full leave-one-participant-out
// experiment on the default synthetic cohort. Each criterion prints PASS or
// FAIL together with the measured numbers; the process exits nonzero when
// any check fails. Checks are always on (no NDEBUG dependence).

#include "har/cnn.hpp"
#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/eval.hpp"
#include "har/lfi.hpp"
#include "har/personalize.hpp"
#include "har/rfc.hpp"
#include "har/synth.hpp"
#include "har/types.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

namespace {

using Clock = std::chrono::steady_clock;

double secs(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

int g_criteria_failed = 0;
int g_local_failures = 0;

void chk(bool ok, const std::string& what) {
  if (!ok) {
    ++g_local_failures;
    std::printf("    check failed: %s\n", what.c_str());
  }
}

template <typename F>
void criterion(int num, const char* title, F&& body) {
  std::printf("criterion %d: %s\n", num, title);
  g_local_failures = 0;
  const auto t0 = Clock::now();
  body();
  const double wall = secs(t0, Clock::now());
  if (g_local_failures == 0) {
    std::printf("  PASS: criterion %d (%s) [%.1f s]\n", num, title, wall);
  } else {
    ++g_criteria_failed;
    std::printf("  FAIL: criterion %d (%s), %d failed check(s) [%.1f s]\n", num, title,
                g_local_failures, wall);
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  using namespace har;

  // -------------------------------------------------------------------------
  // 1. Interferometry round trip: distance and velocity recovered from the
  //    sampled interference waveform within 0.1 mm and max(1 %, 1 mm/s).
  // -------------------------------------------------------------------------
  criterion(1, "interferometry round trip over 200 random motion samples", [] {
    const lfi::LaserParams laser;
    const lfi::RampConfig ramp;
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> ud(15e-3, 35e-3);
    std::uniform_real_distribution<double> uv(-0.05, 0.05);

    const auto t0 = Clock::now();
    double worst_d = 0.0, worst_v = 0.0;
    for (int i = 0; i < 200; ++i) {
      lfi::MotionSample truth;
      truth.distance_m = ud(rng);
      truth.velocity_mps = uv(rng);
      const lfi::MotionSample rec = lfi::round_trip(laser, ramp, truth);
      const double derr = std::abs(rec.distance_m - truth.distance_m);
      const double verr = std::abs(rec.velocity_mps - truth.velocity_mps);
      const double vtol = std::max(0.01 * std::abs(truth.velocity_mps), 1e-3);
      worst_d = std::max(worst_d, derr);
      worst_v = std::max(worst_v, verr / vtol);
      chk(derr <= 0.1e-3, "sample " + std::to_string(i) + ": distance error " + fmt(derr * 1e3) +
                              " mm exceeds 0.1 mm");
      chk(verr <= vtol, "sample " + std::to_string(i) + ": velocity error " + fmt(verr * 1e3) +
                            " mm/s exceeds max(1%, 1 mm/s)");
    }
    const double wall = secs(t0, Clock::now());
    std::printf("  worst distance error %.4f mm, worst velocity error %.3f of tolerance, %.2f s\n",
                worst_d * 1e3, worst_v, wall);
    chk(wall < 10.0, "round trip took " + fmt(wall) + " s, budget 10 s");
  });

  // -------------------------------------------------------------------------
  // 2. Frequency algebra: the up/down ramp combination identities and the
  //    linear maps between beat frequency, distance and velocity.
  // -------------------------------------------------------------------------
  criterion(2, "beat-frequency algebra and linearity", [] {
    const lfi::LaserParams laser;
    const lfi::RampConfig ramp;
    const double lambda = laser.wavelength_m;
    const double dlam_dt = laser.dlambda_di_m_per_a * ramp.current_slope_a_per_s();
    auto f0_of = [&](double d) { return 2.0 * laser.n_ext * d / (lambda * lambda) * dlam_dt; };
    auto fd_of = [&](double v) {
      return 2.0 * laser.n_ext * v * std::cos(laser.incidence_rad) / lambda;
    };

    // Exact combination on dyadic inputs: no rounding anywhere.
    {
      const lfi::RampFrequencies rf{100000.0 + 25000.0, 100000.0 - 25000.0};
      const lfi::BeatFrequencies bf = lfi::combine_freqs(rf);
      chk(bf.f0_hz == 100000.0, "f0 from (f_up+f_down)/2 not exact: " + fmt(bf.f0_hz));
      chk(bf.fd_hz == 25000.0, "fd from (f_up-f_down)/2 not exact: " + fmt(bf.fd_hz));
    }

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(10e-3, 50e-3);
    std::uniform_real_distribution<double> uv(-0.06, 0.06);
    for (int i = 0; i < 100; ++i) {
      const double d = ud(rng), v = uv(rng);
      const double f0 = f0_of(d), fd = fd_of(v);
      // Identity: splitting into ramp frequencies and recombining is lossless.
      const lfi::BeatFrequencies bf = lfi::combine_freqs({f0 + fd, f0 - fd});
      chk(std::abs(bf.f0_hz - f0) <= 1e-9 * std::abs(f0), "combine does not invert f0+fd/f0-fd");
      chk(std::abs(bf.fd_hz - fd) <= 1e-9 * std::abs(f0), "combine does not invert fd");
      // Inverse maps: frequency back to distance / velocity.
      const double d_rec = lfi::freq_to_distance(f0, laser, ramp);
      const double v_rec = lfi::freq_to_velocity(fd, laser);
      chk(std::abs(d_rec - d) <= 1e-12 * d, "freq_to_distance(f0(d)) != d at d=" + fmt(d));
      chk(std::abs(v_rec - v) <= 1e-12 * std::max(1.0, std::abs(v)),
          "freq_to_velocity(fd(v)) != v at v=" + fmt(v));
      // Linearity: doubling the input doubles the frequency exactly.
      chk(f0_of(2.0 * d) == 2.0 * f0, "f0 not linear in distance");
      chk(fd_of(2.0 * v) == 2.0 * fd, "fd not linear in velocity");
    }
    std::printf("  100 random (d, v) pairs plus exact dyadic case\n");
  });

  // -------------------------------------------------------------------------
  // 3. Gradient correctness: analytic gradients against central finite
  //    differences on 25 random tiny networks, double precision.
  // -------------------------------------------------------------------------
  criterion(3, "finite-difference gradient check on 25 random tiny networks", [] {
    const auto t0 = Clock::now();
    std::mt19937_64 meta(99);
    auto pick = [&](int lo, int hi) {
      return lo + static_cast<int>(meta() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    double worst_overall = 0.0;
    for (int cfg = 0; cfg < 25; ++cfg) {
      cnn::CnnSpec s;
      s.in_channels = pick(1, 3);
      s.n_classes = pick(2, 4);
      s.channels = {pick(2, 4), pick(2, 4), pick(2, 4), pick(2, 4)};
      s.kernel = (pick(0, 1) == 0) ? 3 : 5;
      s.pool = 2;
      s.input_length = 16 * pick(1, 3);  // 4 pool stages of 2 stay >= 1
      s.fc1 = pick(4, 8);
      s.dropout = (pick(0, 1) == 0) ? 0.0 : 0.3;
      s.validate();

      auto m = cnn::Model<double>::init(s, 1000 + static_cast<std::uint64_t>(cfg));
      const int batch = pick(2, 3);
      std::mt19937_64 xrng(500 + static_cast<std::uint64_t>(cfg));
      std::normal_distribution<double> gauss(0.0, 1.0);
      cnn::Model<double>::MatX x(s.in_channels,
                                 static_cast<Eigen::Index>(batch) * s.input_length);
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = gauss(xrng);
      }
      std::vector<int> labels(static_cast<size_t>(batch));
      for (auto& l : labels) l = pick(0, s.n_classes - 1);
      const std::uint64_t drop_seed = 77 + static_cast<std::uint64_t>(cfg);

      cnn::BatchCache<double> cache;
      const auto logits = cnn::forward(m, x, batch, /*train=*/true, drop_seed, &cache);
      cnn::Model<double>::MatX dlogits;
      cnn::softmax_ce<double>(logits, labels, &dlogits);
      auto grads = m.zeros_like();
      cnn::backward(m, cache, dlogits, grads);

      auto loss_at = [&]() {
        const auto lg = cnn::forward(m, x, batch, /*train=*/true, drop_seed);
        return cnn::softmax_ce<double>(lg, labels, nullptr);
      };

      auto ps = cnn::parameters(m);
      auto gs = cnn::parameters(grads);
      double worst = 0.0;
      for (size_t t = 0; t < ps.size(); ++t) {
        auto& p = *ps[t].tensor;
        // Three random entries per tensor cover every parameter kind
        // (conv weights/bias, batchnorm gain/shift, both FC layers).
        for (int probe = 0; probe < 3; ++probe) {
          const Eigen::Index r = static_cast<Eigen::Index>(meta() % static_cast<std::uint64_t>(p.rows()));
          const Eigen::Index c = static_cast<Eigen::Index>(meta() % static_cast<std::uint64_t>(p.cols()));
          const double orig = p(r, c);
          const double h = 1e-6 * std::max(1.0, std::abs(orig));
          p(r, c) = orig + h;
          const double up = loss_at();
          p(r, c) = orig - h;
          const double down = loss_at();
          p(r, c) = orig;
          const double fd = (up - down) / (2.0 * h);
          const double an = (*gs[t].tensor)(r, c);
          const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
          worst = std::max(worst, err);
        }
      }
      worst_overall = std::max(worst_overall, worst);
      chk(worst < 1e-4, "config " + std::to_string(cfg) + ": worst relative error " + fmt(worst));
    }
    const double wall = secs(t0, Clock::now());
    std::printf("  worst relative error %.3g over 25 configs, %.1f s\n", worst_overall, wall);
    chk(wall < 60.0, "gradient check took " + fmt(wall) + " s, budget 60 s");
  });

  // -------------------------------------------------------------------------
  // 4. Overfit oracle: the default architecture must reach 100 % training
  //    accuracy on 14 separable windows within 200 epochs.
  // -------------------------------------------------------------------------
  criterion(4, "default architecture overfits 14 separable windows", [] {
    cnn::CnnSpec s;  // stock architecture: 10 channels x 3600 samples
    std::mt19937_64 rng(31);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::vector<data::LabeledWindow> ws(14);
    for (int i = 0; i < 14; ++i) {
      auto& w = ws[static_cast<size_t>(i)];
      const int cls = i % s.n_classes;
      w.label = static_cast<Activity>(cls);
      w.data.resize(s.input_length, s.in_channels);
      for (Eigen::Index c = 0; c < w.data.cols(); ++c) {
        for (Eigen::Index r = 0; r < w.data.rows(); ++r) {
          w.data(r, c) = gauss(rng) + 0.5f * static_cast<float>(cls) * (c % 2 == 0 ? 1.0f : -1.0f);
        }
      }
    }
    std::vector<Index> idx(ws.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Index>(i);

    auto model = cnn::Model<float>::init(s, 5);
    cnn::TrainConfig tc;
    tc.epochs = 200;
    tc.seed = 5;
    tc.stop_at_train_accuracy = 1.0;
    const auto report = cnn::fit(model, ws, idx, tc);
    std::printf("  train accuracy %.3f after %d epoch(s)\n", report.train_accuracy,
                report.epochs_run);
    chk(report.train_accuracy == 1.0,
        "train accuracy " + fmt(report.train_accuracy) + " after 200 epochs");
    chk(report.epochs_run <= 200, "ran more epochs than allowed");
  });

  // -------------------------------------------------------------------------
  // 5. Pipeline arithmetic: window count, standardization values, balancing.
  // -------------------------------------------------------------------------
  criterion(5, "windowing, standardization and balancing arithmetic", [] {
    {
      data::SensorStream stream;
      stream.participant_id = "x";
      stream.channel_names = {"c0"};
      stream.channel_rates_hz = {120.0};
      stream.channels = {VectorXd::Zero(36000)};
      stream.labels.assign(36000, Activity::talk);
      stream.label_rate_hz = 120.0;
      data::WindowConfig wc;
      wc.window_samples = 3600;
      wc.overlap = 0.30;
      const auto ws = data::make_windows(stream, wc);
      std::printf("  36000 samples, window 3600, overlap 0.3 -> %zu windows\n", ws.size());
      chk(ws.size() == 13, "expected 13 windows, got " + std::to_string(ws.size()));
    }
    {
      data::SensorStream stream;
      stream.participant_id = "x";
      stream.channel_names = {"c0"};
      stream.channel_rates_hz = {1.0};
      VectorXd v(3);
      v << 1.0, 2.0, 3.0;
      stream.channels = {v};
      stream.labels.assign(3, Activity::talk);
      stream.label_rate_hz = 1.0;
      data::standardize(stream);
      const double target = std::sqrt(1.5);  // 1.224745...
      chk(std::abs(stream.channels[0][0] + target) < 1e-12, "standardize([1,2,3])[0]");
      chk(std::abs(stream.channels[0][1]) < 1e-12, "standardize([1,2,3])[1]");
      chk(std::abs(stream.channels[0][2] - target) < 1e-12, "standardize([1,2,3])[2]");
      chk(std::abs(stream.channels[0][2] - 1.2247) < 1e-4, "value differs from 1.2247 by >= 1e-4");
      std::printf("  standardize([1,2,3]) = [%.4f, %.4f, %.4f]\n", stream.channels[0][0],
                  stream.channels[0][1], stream.channels[0][2]);
    }
    {
      // Three classes with counts 4/2/1; balancing must equalize the counts
      // by appending duplicate indices and must not touch the windows.
      std::vector<data::LabeledWindow> ws(7);
      const int labels[7] = {0, 0, 0, 0, 1, 1, 2};
      for (int i = 0; i < 7; ++i) {
        ws[static_cast<size_t>(i)].label = static_cast<Activity>(labels[i]);
        ws[static_cast<size_t>(i)].data = MatrixXf::Constant(4, 2, static_cast<float>(i));
      }
      const std::vector<data::LabeledWindow> before = ws;
      std::vector<Index> subset(7);
      for (int i = 0; i < 7; ++i) subset[static_cast<size_t>(i)] = i;
      const auto balanced = data::balance_indices(ws, subset, 99);

      chk(balanced.size() == 12, "balanced size " + std::to_string(balanced.size()) + " != 12");
      Index counts[3] = {0, 0, 0};
      for (Index i : balanced) counts[static_cast<int>(ws[static_cast<size_t>(i)].label)]++;
      chk(counts[0] == 4 && counts[1] == 4 && counts[2] == 4, "class counts not equalized");
      bool prefix_ok = balanced.size() >= 7;
      for (int i = 0; i < 7 && prefix_ok; ++i) prefix_ok = balanced[static_cast<size_t>(i)] == i;
      chk(prefix_ok, "original indices not preserved in order");
      bool untouched = ws.size() == before.size();
      for (size_t i = 0; i < ws.size() && untouched; ++i) {
        untouched = ws[i].label == before[i].label &&
                    ws[i].data.rows() == before[i].data.rows() &&
                    std::memcmp(ws[i].data.data(), before[i].data.data(),
                                sizeof(float) * static_cast<size_t>(ws[i].data.size())) == 0;
      }
      chk(untouched, "balancing mutated the window store");
      std::printf("  counts 4/2/1 -> 4/4/4 over %zu indices, originals untouched\n",
                  balanced.size());
    }
  });

  // -------------------------------------------------------------------------
  // 6. Metric oracle: macro F1 on a hand-computed confusion matrix.
  // -------------------------------------------------------------------------
  criterion(6, "macro F1 oracle", [] {
    MatrixXd confusion(2, 2);
    confusion << 8, 2, 3, 7;
    const auto m = eval::metrics_from_confusion(confusion);
    std::printf("  macro F1 of [[8,2],[3,7]] = %.6f\n", m.macro_f1);
    chk(std::abs(m.macro_f1 - 0.7494) <= 1e-4,
        "macro F1 " + fmt(m.macro_f1) + " not within 1e-4 of 0.7494");

    MatrixXd perfect = MatrixXd::Zero(3, 3);
    perfect(0, 0) = 5;
    perfect(1, 1) = 7;
    perfect(2, 2) = 2;
    const auto p = eval::metrics_from_confusion(perfect);
    chk(p.macro_f1 == 1.0, "perfect confusion macro F1 " + fmt(p.macro_f1) + " != 1");
    chk(p.accuracy == 1.0, "perfect confusion accuracy != 1");
  });

  // -------------------------------------------------------------------------
  // 7 + 8. The scaled experiment: default cohort, fixed seed. Shared state
  // between the two criteria so the cohort and models are built once.
  // -------------------------------------------------------------------------
  const std::uint64_t seed = 42;
  const auto cfg = Config::from_text(synth::kDefaultCohortConfig, "<default>");
  const auto hc = eval::harness_config(cfg);

  data::HarDataset ds;
  double synth_wall = 0.0;
  {
    const auto t0 = Clock::now();
    const auto profiles = synth::profiles_from_config(cfg);
    const auto cohort = synth::cohort_from_config(cfg);
    const auto params = synth::synth_params_from_config(cfg);
    ds.rate_hz = cfg.get_double("rate.common", 120.0);
    ds.seed = seed;
    ds.config_hash = hc.config_hash;
    for (const auto& spec : cohort) {
      auto stream = synth::gen_participant(spec, profiles, params, seed);
      auto uni = data::resample(stream, ds.rate_hz);
      data::standardize(uni);
      auto ws = data::make_windows(uni, hc.wc);
      for (auto& w : ws) ds.windows.push_back(std::move(w));
      ds.participants.push_back(spec.id);
      if (ds.channel_names.empty()) ds.channel_names = uni.channel_names;
    }
    synth_wall = secs(t0, Clock::now());
  }

  eval::RunResult rfc_run, cnn_run, tr_run;
  criterion(7, "leave-one-participant-out experiment on the default cohort", [&] {
    std::printf("  cohort: %zu participants, %zu windows, synth %.1f s\n",
                ds.participants.size(), ds.windows.size(), synth_wall);
    chk(ds.participants.size() == 8, "expected 8 participants");

    rfc_run = eval::run_lopocv("rfc", ds, hc, seed);
    std::printf("  random forest: mean macro F1 %.4f (std %.4f), pooled %.4f, %.1f s\n",
                rfc_run.mean_macro_f1, rfc_run.std_macro_f1, rfc_run.pooled.macro_f1,
                rfc_run.wall_seconds);

    eval::RunOptions keep;
    keep.keep_models = true;
    cnn_run = eval::run_lopocv("cnn", ds, hc, seed, keep);
    std::printf("  cnn: mean macro F1 %.4f (std %.4f), pooled %.4f, %.1f s\n",
                cnn_run.mean_macro_f1, cnn_run.std_macro_f1, cnn_run.pooled.macro_f1,
                cnn_run.wall_seconds);
    for (const auto& fr : cnn_run.folds) {
      std::printf("    %s shift %.2f: macro F1 %.4f\n", fr.participant.c_str(), fr.shift,
                  fr.test.macro_f1);
    }

    eval::RunOptions reuse;
    reuse.base_models = &cnn_run.models;
    tr_run = eval::run_lopocv("transfer", ds, hc, seed, reuse);
    double base_hi = 0.0, adapted_hi = 0.0;
    int hi_folds = 0;
    for (const auto& fr : tr_run.folds) {
      const bool hi = fr.shift >= 1.5;
      std::printf("    %s shift %.2f: base %.4f -> adapted %.4f%s\n", fr.participant.c_str(),
                  fr.shift, fr.base_heldout.macro_f1, fr.adapted_heldout.macro_f1,
                  hi ? "  [shift >= 1.5]" : "");
      if (hi) {
        base_hi += fr.base_heldout.macro_f1;
        adapted_hi += fr.adapted_heldout.macro_f1;
        ++hi_folds;
      }
    }
    chk(hi_folds > 0, "no folds with shift >= 1.5");
    base_hi /= std::max(1, hi_folds);
    adapted_hi /= std::max(1, hi_folds);
    std::printf("  transfer on shift >= 1.5 folds: base %.4f -> adapted %.4f, %.1f s\n", base_hi,
                adapted_hi, tr_run.wall_seconds);

    chk(cnn_run.mean_macro_f1 >= 0.85,
        "(a) cnn mean macro F1 " + fmt(cnn_run.mean_macro_f1) + " < 0.85");
    chk(cnn_run.mean_macro_f1 >= rfc_run.mean_macro_f1,
        "(b) cnn mean macro F1 " + fmt(cnn_run.mean_macro_f1) + " < rfc " +
            fmt(rfc_run.mean_macro_f1));
    chk(adapted_hi >= base_hi, "(c) adapted mean " + fmt(adapted_hi) +
                                   " < base mean " + fmt(base_hi) + " on shift >= 1.5 folds");

    const double total = synth_wall + rfc_run.wall_seconds + cnn_run.wall_seconds +
                         tr_run.wall_seconds;
    std::printf("  experiment wall time %.1f s (budget 1800 s)\n", total);
    chk(total <= 1800.0, "experiment took " + fmt(total) + " s, budget 1800 s");
  });

  criterion(8, "sensor ablation ordering on the same cohort", [&] {
    const auto lfi_run = eval::run_subset("lfi", ds, hc, seed);
    const auto imu_run = eval::run_subset("imu", ds, hc, seed);
    auto f1 = [](const eval::RunResult& r, Activity a) {
      return r.pooled.per_class_f1[static_cast<Eigen::Index>(a)];
    };
    std::printf("  per-class F1 (lfi-only vs imu-only):\n");
    for (Activity a : {Activity::walk, Activity::cycle, Activity::read}) {
      std::printf("    %-5s  lfi %.4f  imu %.4f\n", to_string(a).c_str(), f1(lfi_run, a),
                  f1(imu_run, a));
    }
    std::printf("  wall %.1f s (lfi) + %.1f s (imu)\n", lfi_run.wall_seconds,
                imu_run.wall_seconds);
    chk(f1(imu_run, Activity::walk) > f1(lfi_run, Activity::walk),
        "imu-only does not beat lfi-only on walk");
    chk(f1(imu_run, Activity::cycle) > f1(lfi_run, Activity::cycle),
        "imu-only does not beat lfi-only on cycle");
    chk(f1(lfi_run, Activity::read) > f1(imu_run, Activity::read),
        "lfi-only does not beat imu-only on read");
  });

  // -------------------------------------------------------------------------
  // 9. Determinism: identical seed and config reproduce every reported
  //    number exactly, from the raw streams to adapted model weights.
  // -------------------------------------------------------------------------
  criterion(9, "bit-exact reproducibility under a fixed seed", [&] {
    {
      const auto profiles = synth::profiles_from_config(cfg);
      const auto cohort = synth::cohort_from_config(cfg);
      const auto params = synth::synth_params_from_config(cfg);
      const auto& spec3 = cohort.at(2);
      const auto a = synth::gen_participant(spec3, profiles, params, seed);
      const auto b = synth::gen_participant(spec3, profiles, params, seed);
      bool same = a.channels.size() == b.channels.size() && a.labels == b.labels;
      for (size_t c = 0; same && c < a.channels.size(); ++c) {
        same = a.channels[c].size() == b.channels[c].size() &&
               std::memcmp(a.channels[c].data(), b.channels[c].data(),
                           sizeof(double) * static_cast<size_t>(a.channels[c].size())) == 0;
      }
      chk(same, "participant stream differs between identical synth calls");
      std::printf("  %s stream: bitwise identical across re-synthesis\n", spec3.id.c_str());
    }
    {
      const auto again = eval::run_lopocv("rfc", ds, hc, seed);
      bool same = again.mean_macro_f1 == rfc_run.mean_macro_f1 &&
                  again.std_macro_f1 == rfc_run.std_macro_f1 &&
                  again.pooled.macro_f1 == rfc_run.pooled.macro_f1 &&
                  again.folds.size() == rfc_run.folds.size();
      for (size_t i = 0; same && i < again.folds.size(); ++i) {
        same = again.folds[i].test.macro_f1 == rfc_run.folds[i].test.macro_f1 &&
               again.folds[i].test.accuracy == rfc_run.folds[i].test.accuracy;
      }
      chk(same, "random forest numbers differ between identical runs");
      std::printf("  random forest rerun: all fold and pooled numbers identical\n");
    }
    {
      // Two-participant subset keeps a full train -> adapt -> evaluate cycle
      // affordable; the transfer task exercises every stochastic component
      // (shuffles, dropout, shot selection, Adam, batchnorm statistics).
      data::HarDataset sub;
      sub.rate_hz = ds.rate_hz;
      sub.seed = ds.seed;
      sub.channel_names = ds.channel_names;
      sub.participants = {ds.participants[0], ds.participants[1]};
      for (const auto& w : ds.windows) {
        if (w.participant_id == sub.participants[0] || w.participant_id == sub.participants[1]) {
          sub.windows.push_back(w);
        }
      }
      eval::RunOptions keep;
      keep.keep_models = true;
      const auto a = eval::run_lopocv("transfer", sub, hc, seed, keep);
      const auto b = eval::run_lopocv("transfer", sub, hc, seed, keep);
      bool same = a.folds.size() == b.folds.size();
      for (size_t i = 0; same && i < a.folds.size(); ++i) {
        same = a.folds[i].test.macro_f1 == b.folds[i].test.macro_f1 &&
               a.folds[i].base_heldout.macro_f1 == b.folds[i].base_heldout.macro_f1 &&
               a.folds[i].adapted_heldout.macro_f1 == b.folds[i].adapted_heldout.macro_f1 &&
               a.folds[i].n_shots == b.folds[i].n_shots;
      }
      chk(same, "transfer numbers differ between identical runs");
      bool weights_same = a.models.size() == b.models.size();
      for (size_t i = 0; weights_same && i < a.models.size(); ++i) {
        weights_same = a.models[i].w2.size() == b.models[i].w2.size() &&
                       std::memcmp(a.models[i].w2.data(), b.models[i].w2.data(),
                                   sizeof(float) * static_cast<size_t>(a.models[i].w2.size())) == 0;
      }
      chk(weights_same, "adapted output-layer weights differ between identical runs");
      std::printf("  transfer rerun on two participants: numbers and weights identical\n");
    }
  });

  if (g_criteria_failed == 0) {
    std::printf("acceptance: all 9 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion/criteria FAILED\n", g_criteria_failed);
  return 1;
}
