#include "har/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace har::synth {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGravity = 9.81;

// Segment durations are quantized to 50 ms so both 1000 Hz and 860 Hz sample
// counts stay exact integers (0.05 s * 860 = 43) and the tracks never drift.
double quantize_segment(double s) { return std::round(s * 20.0) / 20.0; }

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Saccade main sequence: duration grows with amplitude.
double saccade_duration_s(double amp_deg) {
  return clamp(0.02 + 0.002 * std::abs(amp_deg), 0.02, 0.08);
}

double arc_m(double amp_deg) { return amp_deg * kPi / 180.0 * lfi::kEyeRadiusM; }

struct Saccade {
  double t0 = 0.0;
  double dur = 0.0;
  double arc = 0.0;  // signed path length, meters
  bool horizontal = true;
  bool cross1 = false, cross2 = false;  // beam crosses the pupil, per sensor
};

struct Blink {
  double t0 = 0.0;
  double dur = 0.0;
};

// Raised-cosine velocity pulse integrating to `arc` over [t0, t0+dur].
void add_pulse(std::vector<double>& v, double rate, double t0, double dur, double arc) {
  const double peak = 2.0 * arc / dur;
  const auto i0 = static_cast<long>(std::ceil(t0 * rate));
  const auto i1 = std::min<long>(static_cast<long>((t0 + dur) * rate), static_cast<long>(v.size()) - 1);
  for (long i = std::max<long>(i0, 0); i <= i1; ++i) {
    const double tau = (static_cast<double>(i) / rate - t0) / dur;
    v[static_cast<size_t>(i)] += peak * 0.5 * (1.0 - std::cos(2.0 * kPi * tau));
  }
}

// Smooth 0->1->0 occupancy window with cosine edges; accumulates max into w.
void add_plateau(std::vector<double>& w, double rate, double t0, double dur, double edge) {
  const auto i0 = static_cast<long>(std::ceil(t0 * rate));
  const auto i1 = std::min<long>(static_cast<long>((t0 + dur) * rate), static_cast<long>(w.size()) - 1);
  for (long i = std::max<long>(i0, 0); i <= i1; ++i) {
    const double t = static_cast<double>(i) / rate - t0;
    double x = 1.0;
    if (t < edge) {
      x = 0.5 * (1.0 - std::cos(kPi * t / edge));
    } else if (t > dur - edge) {
      x = 0.5 * (1.0 - std::cos(kPi * (dur - t) / edge));
    }
    auto& slot = w[static_cast<size_t>(i)];
    slot = std::max(slot, x);
  }
}

// Mean-reverting (OU) noise track with the requested stationary RMS.
std::vector<double> ou_track(long n, double rate, double rms, double theta_hz,
                             std::mt19937_64& rng) {
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  if (rms <= 0.0 || n == 0) return x;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double a = std::exp(-theta_hz / rate);
  const double b = rms * std::sqrt(1.0 - a * a);
  double state = rms * gauss(rng);
  for (long i = 0; i < n; ++i) {
    x[static_cast<size_t>(i)] = state;
    state = a * state + b * gauss(rng);
  }
  return x;
}

}  // namespace

LfiTraces gen_eye_trajectory(const ActivityProfile& p, const EyeGeometry& g, double duration_s,
                             double rate_hz, double v_max_mps, std::uint64_t seed) {
  g.validate();
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) {
    throw InvalidConfig("trajectory duration and rate must be positive");
  }
  const auto n = static_cast<long>(std::llround(duration_s * rate_hz));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // --- event plan ------------------------------------------------------
  std::vector<Saccade> saccades;
  auto lognorm_amp = [&]() {
    return p.saccade_amp_deg * std::exp(p.amp_jitter * gauss(rng) - 0.5 * p.amp_jitter * p.amp_jitter);
  };
  auto next_gap = [&]() {
    const double mean = 1.0 / p.saccade_rate_hz;
    const double regular = (0.6 + 0.8 * unif(rng)) * mean;
    const double poisson = -std::log(1.0 - unif(rng)) * mean;
    return (1.0 - p.burstiness) * regular + p.burstiness * poisson;
  };

  if (p.saccade_rate_hz > 0.0) {
    double t = next_gap();
    if (p.reading_pattern) {
      // Lines of forward (positive horizontal) saccades closed by one large
      // return sweep plus a small downward line step.
      while (t < duration_s) {
        const int n_fwd = 5 + static_cast<int>(rng() % 3u);
        double line_arc = 0.0;
        for (int i = 0; i < n_fwd && t < duration_s; ++i) {
          const double amp = lognorm_amp();
          const double dur = saccade_duration_s(amp);
          saccades.push_back({t, dur, arc_m(amp), true,
                              unif(rng) < p.pupil_cross_frac, unif(rng) < p.pupil_cross_frac});
          line_arc += arc_m(amp);
          t += std::max(next_gap(), dur + 0.02);
        }
        if (t >= duration_s) break;
        const double ret_dur = saccade_duration_s(line_arc / arc_m(1.0));
        saccades.push_back({t, ret_dur, -line_arc, true, unif(rng) < p.pupil_cross_frac,
                            unif(rng) < p.pupil_cross_frac});
        saccades.push_back({t, ret_dur, -arc_m(0.5), false, false, false});  // next line
        t += std::max(next_gap(), ret_dur + 0.02);
      }
    } else {
      while (t < duration_s) {
        const double amp = lognorm_amp() * (unif(rng) < 0.5 ? -1.0 : 1.0);
        const double dur = saccade_duration_s(amp);
        saccades.push_back({t, dur, arc_m(amp), unif(rng) < p.horizontal_frac,
                            unif(rng) < p.pupil_cross_frac, unif(rng) < p.pupil_cross_frac});
        t += std::max(next_gap(), dur + 0.02);
      }
    }
  }

  std::vector<Blink> blinks;
  if (p.blink_rate_hz > 0.0) {
    double t = 0.3 + unif(rng) / p.blink_rate_hz;
    while (t < duration_s) {
      blinks.push_back({t, p.blink_duration_s * (0.8 + 0.4 * unif(rng))});
      t += std::max(-std::log(1.0 - unif(rng)) / p.blink_rate_hz, 0.5);
    }
  }

  // --- render ----------------------------------------------------------
  std::vector<double> vh = ou_track(n, rate_hz, p.fixation_drift_mps, 15.0, rng);
  std::vector<double> vv = ou_track(n, rate_hz, p.fixation_drift_mps, 15.0, rng);
  std::vector<double> base_wander = ou_track(n, rate_hz, 4e-5, 1.5, rng);
  std::vector<double> cross1(static_cast<size_t>(n), 0.0), cross2(static_cast<size_t>(n), 0.0);
  std::vector<double> lid(static_cast<size_t>(n), 0.0);

  for (const Saccade& s : saccades) {
    add_pulse(s.horizontal ? vh : vv, rate_hz, s.t0, s.dur, s.arc);
    if (s.cross1) add_plateau(cross1, rate_hz, s.t0, s.dur + 0.04, 0.012);
    if (s.cross2) add_plateau(cross2, rate_hz, s.t0, s.dur + 0.04, 0.012);
  }
  for (const Blink& b : blinks) {
    add_plateau(lid, rate_hz, b.t0, b.dur, 0.02);
    // Lid sweeping through the beam: approach spike then retreat spike.
    const double a = 0.45 * v_max_mps;
    add_pulse(vv, rate_hz, b.t0, 0.03, -a * 0.015);
    add_pulse(vv, rate_hz, b.t0 + b.dur - 0.03, 0.03, a * 0.015);
  }

  LfiTraces out;
  out.v1.resize(n);
  out.v2.resize(n);
  out.d1.resize(n);
  out.d2.resize(n);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double ph0 = phase(rng), ph1 = phase(rng);
  for (long i = 0; i < n; ++i) {
    const auto u = static_cast<size_t>(i);
    const double t = static_cast<double>(i) / rate_hz;
    double bounce = 0.0, bounce_v = 0.0;
    if (p.bounce_amp_m > 0.0 && p.bounce_freq_hz > 0.0) {
      const double w = 2.0 * kPi * p.bounce_freq_hz;
      const double arg = w * t + ph0 + 0.4 * std::sin(2.0 * kPi * 0.13 * t + ph1);
      bounce = p.bounce_amp_m * std::sin(arg);
      bounce_v = p.bounce_amp_m * w * std::cos(arg);
    }

    const double v1 = 0.25 * vh[u] + 0.97 * vv[u] + 0.9 * bounce_v;
    const double v2 = 0.97 * vh[u] + 0.25 * vv[u] + 0.9 * bounce_v;
    out.v1[i] = clamp(v1, -v_max_mps, v_max_mps);
    out.v2[i] = clamp(v2, -v_max_mps, v_max_mps);

    const double b1 = g.d_iris_m + base_wander[u] + bounce;
    const double b2 = 0.985 * g.d_iris_m + base_wander[u] + 0.85 * bounce;
    double d1 = b1 + cross1[u] * (g.d_ret_m - b1);
    double d2 = b2 + cross2[u] * (g.d_ret_m - b2);
    d1 += lid[u] * (g.d_lid_m - d1);  // the lid occludes everything
    d2 += lid[u] * (g.d_lid_m - d2);
    out.d1[i] = d1;
    out.d2[i] = d2;
  }
  return out;
}

MatrixXd gen_imu(const ActivityProfile& p, double duration_s, double rate_hz,
                 std::uint64_t seed) {
  if (!(duration_s > 0.0) || !(rate_hz > 0.0)) {
    throw InvalidConfig("IMU duration and rate must be positive");
  }
  const auto n = static_cast<long>(std::llround(duration_s * rate_hz));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);

  const double tilt = p.tilt_deg * kPi / 180.0;
  const double base_x = -kGravity * std::sin(tilt);
  const double base_y = -kGravity * std::cos(tilt);

  const double ph[8] = {phase(rng), phase(rng), phase(rng), phase(rng),
                        phase(rng), phase(rng), phase(rng), phase(rng)};
  const double f_am = 0.08;

  MatrixXd imu(n, 6);
  for (long i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    double ax = base_x, ay = base_y, az = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
    if (p.acc_amp_mps2 > 0.0 && p.acc_freq_hz > 0.0) {
      const double w = 2.0 * kPi * p.acc_freq_hz;
      double env = 1.0;
      if (p.acc_am) env = 0.35 + 0.65 * 0.5 * (1.0 - std::cos(2.0 * kPi * f_am * t + ph[7]));
      ay += env * p.acc_amp_mps2 * (std::sin(w * t + ph[0]) + 0.35 * std::sin(2.0 * w * t + ph[1]));
      ax += env * 0.45 * p.acc_amp_mps2 * std::sin(w * t + ph[2]);
      az += env * 0.50 * p.acc_amp_mps2 * std::sin(0.5 * w * t + ph[3]);
      gx += env * p.gyro_amp_rps * std::sin(w * t + ph[4]);
      gy += env * 0.6 * p.gyro_amp_rps * std::sin(0.5 * w * t + ph[5]);
      gz += env * 0.5 * p.gyro_amp_rps * std::sin(w * t + ph[6]);
    }
    if (p.buzz_amp_mps2 > 0.0 && p.buzz_freq_hz > 0.0) {
      const double wb = 2.0 * kPi * p.buzz_freq_hz;
      ax += p.buzz_amp_mps2 * std::sin(wb * t + ph[1] + 1.0);
      ay += p.buzz_amp_mps2 * std::sin(wb * t + ph[2] + 2.0);
      az += 0.8 * p.buzz_amp_mps2 * std::sin(wb * t + ph[3] + 3.0);
    }
    imu(i, 0) = ax + p.acc_jitter_mps2 * gauss(rng);
    imu(i, 1) = ay + p.acc_jitter_mps2 * gauss(rng);
    imu(i, 2) = az + p.acc_jitter_mps2 * gauss(rng);
    imu(i, 3) = gx + p.gyro_jitter_rps * gauss(rng);
    imu(i, 4) = gy + p.gyro_jitter_rps * gauss(rng);
    imu(i, 5) = gz + p.gyro_jitter_rps * gauss(rng);
  }
  return imu;
}

namespace {

// Per-participant "personality": seeded multipliers coupled to `shift` that
// move profile parameters consistently across all activities, so the shift
// survives per-participant standardization as real pattern heterogeneity.
struct Personality {
  double rate = 1.0, amp = 1.0, blink = 1.0, freq = 1.0, energy = 1.0, drift = 1.0;
  double burst = 0.0;  // additive saccade-clustering offset
};

Personality draw_personality(double shift, double het, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pm1(-1.0, 1.0);
  auto mult = [&](double expo) { return std::pow(shift, het * expo * pm1(rng)); };
  Personality p;
  p.rate = mult(1.0);
  p.amp = mult(1.0);
  p.blink = mult(1.0);
  p.freq = mult(0.5);  // gait/pedal cadence shifts are subtler
  p.energy = mult(1.0);
  p.drift = mult(0.7);
  // Wearers far from the nominal profile clump their saccades more. The
  // offset moves every activity by the same amount, so an off-profile
  // wearer's evenly paced activity can occupy the clustering range that
  // nominal wearers reach only in bursty activities (interclass similarity
  // across people), while the within-wearer contrast stays intact.
  p.burst = (shift - 1.0) * het * 0.7;
  return p;
}

ActivityProfile modulate(ActivityProfile p, const Personality& m) {
  p.saccade_rate_hz *= m.rate;
  p.saccade_amp_deg *= m.amp;
  p.blink_rate_hz *= m.blink;
  p.burstiness = std::clamp(p.burstiness + m.burst, 0.0, 1.0);
  p.fixation_drift_mps *= m.drift;
  p.acc_freq_hz *= m.freq;
  p.buzz_freq_hz *= m.freq;
  p.bounce_freq_hz *= m.freq;
  p.acc_amp_mps2 *= m.energy;
  p.gyro_amp_rps *= m.energy;
  p.buzz_amp_mps2 *= m.energy;
  p.bounce_amp_m *= m.energy;
  return p;
}

ActivityProfile transition_profile() {
  ActivityProfile p;
  p.saccade_rate_hz = 0.8;
  p.saccade_amp_deg = 3.0;
  p.burstiness = 0.4;
  p.pupil_cross_frac = 0.3;
  p.blink_rate_hz = 0.18;
  p.fixation_drift_mps = 0.0035;
  p.tilt_deg = 5.0;
  return p;
}

}  // namespace

data::SensorStream gen_participant(const ParticipantSpec& spec,
                                   const std::array<ActivityProfile, kNumActivities>& profiles,
                                   const SynthParams& params, std::uint64_t master_seed) {
  if (spec.id.empty()) throw InvalidConfig("participant id must not be empty");
  if (!(spec.shift >= 0.5 && spec.shift <= 2.0)) {
    throw InvalidConfig("participant shift must lie in [0.5, 2]");
  }
  const data::WindowConfig wc;  // durations must cover at least two windows
  const double min_dur = 2.0 * static_cast<double>(wc.window_samples) / 120.0;
  for (double d : spec.durations_s) {
    if (!(d >= min_dur)) {
      throw InvalidConfig("activity durations must be at least " + std::to_string(min_dur) + " s");
    }
  }

  const std::uint64_t pid = fnv1a64(spec.id);
  std::mt19937_64 rng_order(derive_seed(master_seed, "order", pid));
  std::mt19937_64 rng_person(derive_seed(master_seed, "personality", pid));

  std::array<int, kNumActivities> order{};
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_order);

  const Personality person = draw_personality(spec.shift, spec.heterogeneity, rng_person);

  // Literal per-channel affine jitter (mostly undone by standardization).
  std::uniform_real_distribution<double> pm1(-1.0, 1.0);
  std::array<double, 10> gain{}, offset{};
  for (int c = 0; c < 10; ++c) gain[static_cast<size_t>(c)] = std::pow(spec.shift, 0.4 * pm1(rng_person));
  offset[1] = (spec.shift - 1.0) * 0.3e-3 * pm1(rng_person);  // d1
  offset[3] = (spec.shift - 1.0) * 0.3e-3 * pm1(rng_person);  // d2
  for (int c = 4; c < 7; ++c) offset[static_cast<size_t>(c)] = (spec.shift - 1.0) * 0.15 * pm1(rng_person);
  for (int c = 7; c < 10; ++c) offset[static_cast<size_t>(c)] = (spec.shift - 1.0) * 0.01 * pm1(rng_person);

  std::array<std::vector<double>, 10> ch;  // v1 d1 v2 d2 acc... gyr...
  std::vector<Activity> labels;
  std::uniform_real_distribution<double> gap_dist(spec.gap_min_s, spec.gap_max_s);

  int segment = 0;
  auto append_segment = [&](const ActivityProfile& prof, Activity label, double dur) {
    const LfiTraces eye =
        gen_eye_trajectory(prof, params.geometry, dur, params.lfi_rate_hz, params.v_max_mps,
                           derive_seed(master_seed, "seg-eye", pid ^ mix64(static_cast<std::uint64_t>(segment))));
    const MatrixXd imu =
        gen_imu(prof, dur, params.imu_rate_hz,
                derive_seed(master_seed, "seg-imu", pid ^ mix64(static_cast<std::uint64_t>(segment))));
    const VectorXd* lfi_chans[4] = {&eye.v1, &eye.d1, &eye.v2, &eye.d2};
    for (int c = 0; c < 4; ++c) {
      const VectorXd& v = *lfi_chans[c];
      ch[static_cast<size_t>(c)].insert(ch[static_cast<size_t>(c)].end(), v.data(), v.data() + v.size());
    }
    for (int c = 0; c < 6; ++c) {
      const VectorXd col = imu.col(c);
      ch[static_cast<size_t>(c + 4)].insert(ch[static_cast<size_t>(c + 4)].end(), col.data(),
                                            col.data() + col.size());
    }
    labels.insert(labels.end(), static_cast<size_t>(eye.v1.size()), label);
    ++segment;
  };

  for (int k = 0; k < kNumActivities; ++k) {
    append_segment(modulate(transition_profile(), person), Activity::transition,
                   quantize_segment(gap_dist(rng_order)));
    const int act = order[static_cast<size_t>(k)];
    append_segment(modulate(profiles[static_cast<size_t>(act)], person),
                   static_cast<Activity>(act),
                   quantize_segment(spec.durations_s[static_cast<size_t>(act)]));
  }

  data::SensorStream s;
  s.participant_id = spec.id;
  s.channel_names = data::standard_channel_names();
  for (int c = 0; c < 10; ++c) {
    Eigen::Map<const VectorXd> v(ch[static_cast<size_t>(c)].data(),
                                 static_cast<Index>(ch[static_cast<size_t>(c)].size()));
    s.channels.emplace_back(gain[static_cast<size_t>(c)] * v.array() + offset[static_cast<size_t>(c)]);
    s.channel_rates_hz.push_back(c < 4 ? params.lfi_rate_hz : params.imu_rate_hz);
  }
  s.labels = std::move(labels);
  s.label_rate_hz = params.lfi_rate_hz;

  // Sensor range clip, then measurement noise on the extracted LFI traces.
  for (int c : {0, 2}) {
    s.channels[static_cast<size_t>(c)] =
        s.channels[static_cast<size_t>(c)].cwiseMax(-params.v_max_mps).cwiseMin(params.v_max_mps);
  }
  lfi::add_sensor_noise(s.channels[1], s.channels[0], params.noise,
                        derive_seed(master_seed, "noise-1", pid));
  lfi::add_sensor_noise(s.channels[3], s.channels[2], params.noise,
                        derive_seed(master_seed, "noise-2", pid));
  return s;
}

// ---------------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------------

std::array<ActivityProfile, kNumActivities> profiles_from_config(const Config& cfg) {
  std::array<ActivityProfile, kNumActivities> out;
  for (int a = 0; a < kNumActivities; ++a) {
    const std::string& name = to_string(static_cast<Activity>(a));
    const std::string prefix = "profile." + name + ".";
    if (cfg.keys_with_prefix(prefix).empty()) {
      throw InvalidConfig("missing activity profile: " + name);
    }
    ActivityProfile p;
    p.saccade_rate_hz = cfg.get_double(prefix + "saccade_rate", p.saccade_rate_hz);
    p.saccade_amp_deg = cfg.get_double(prefix + "saccade_amp_deg", p.saccade_amp_deg);
    p.amp_jitter = cfg.get_double(prefix + "amp_jitter", p.amp_jitter);
    p.horizontal_frac = cfg.get_double(prefix + "horizontal_frac", p.horizontal_frac);
    p.burstiness = cfg.get_double(prefix + "burstiness", p.burstiness);
    p.pupil_cross_frac = cfg.get_double(prefix + "pupil_cross_frac", p.pupil_cross_frac);
    p.blink_rate_hz = cfg.get_double(prefix + "blink_rate", p.blink_rate_hz);
    p.blink_duration_s = cfg.get_double(prefix + "blink_duration_s", p.blink_duration_s);
    p.fixation_drift_mps = cfg.get_double(prefix + "fixation_drift", p.fixation_drift_mps);
    p.reading_pattern = cfg.get_bool(prefix + "reading_pattern", p.reading_pattern);
    p.tilt_deg = cfg.get_double(prefix + "tilt_deg", p.tilt_deg);
    p.acc_amp_mps2 = cfg.get_double(prefix + "acc_amp", p.acc_amp_mps2);
    p.acc_freq_hz = cfg.get_double(prefix + "acc_freq", p.acc_freq_hz);
    p.acc_am = cfg.get_bool(prefix + "acc_am", p.acc_am);
    p.gyro_amp_rps = cfg.get_double(prefix + "gyro_amp", p.gyro_amp_rps);
    p.acc_jitter_mps2 = cfg.get_double(prefix + "acc_jitter", p.acc_jitter_mps2);
    p.gyro_jitter_rps = cfg.get_double(prefix + "gyro_jitter", p.gyro_jitter_rps);
    p.buzz_amp_mps2 = cfg.get_double(prefix + "buzz_amp", p.buzz_amp_mps2);
    p.buzz_freq_hz = cfg.get_double(prefix + "buzz_freq", p.buzz_freq_hz);
    p.bounce_amp_m = cfg.get_double(prefix + "bounce_amp_mm", p.bounce_amp_m * 1e3) * 1e-3;
    p.bounce_freq_hz = cfg.get_double(prefix + "bounce_freq", p.bounce_freq_hz);
    out[static_cast<size_t>(a)] = p;
  }
  return out;
}

std::vector<ParticipantSpec> cohort_from_config(const Config& cfg) {
  const std::string list = cfg.require_str("cohort.participants");
  std::vector<ParticipantSpec> specs;
  size_t pos = 0;
  while (pos <= list.size()) {
    size_t comma = list.find(',', pos);
    std::string id = list.substr(pos, comma == std::string::npos ? comma : comma - pos);
    pos = comma == std::string::npos ? list.size() + 1 : comma + 1;
    // Trim around ids so "p01, p02" parses too.
    while (!id.empty() && std::isspace(static_cast<unsigned char>(id.front()))) id.erase(0, 1);
    while (!id.empty() && std::isspace(static_cast<unsigned char>(id.back()))) id.pop_back();
    if (id.empty()) continue;

    ParticipantSpec s;
    s.id = id;
    s.shift = cfg.get_double("participant." + id + ".shift", 1.0);
    s.heterogeneity = cfg.get_double("cohort.heterogeneity", s.heterogeneity);
    s.gap_min_s = cfg.get_double("cohort.gap_min_s", s.gap_min_s);
    s.gap_max_s = cfg.get_double("cohort.gap_max_s", s.gap_max_s);
    for (int a = 0; a < kNumActivities; ++a) {
      s.durations_s[static_cast<size_t>(a)] =
          cfg.get_double("cohort.duration." + to_string(static_cast<Activity>(a)), 300.0);
    }
    specs.push_back(std::move(s));
  }
  if (specs.empty()) throw InvalidConfig("cohort.participants lists no participants");
  return specs;
}

SynthParams synth_params_from_config(const Config& cfg) {
  SynthParams p;
  p.geometry.d_lid_m = cfg.get_double("geometry.d_lid_mm", p.geometry.d_lid_m * 1e3) * 1e-3;
  p.geometry.d_iris_m = cfg.get_double("geometry.d_iris_mm", p.geometry.d_iris_m * 1e3) * 1e-3;
  p.geometry.d_ret_m = cfg.get_double("geometry.d_ret_mm", p.geometry.d_ret_m * 1e3) * 1e-3;
  p.geometry.validate();
  p.noise.sigma_distance_m = cfg.get_double("noise.distance_um", 66.85) * 1e-6;
  p.noise.sigma_velocity_mps = lfi::deg_per_s_to_mps(cfg.get_double("noise.velocity_dps", 2.95));
  p.lfi_rate_hz = cfg.get_double("rate.lfi", p.lfi_rate_hz);
  p.imu_rate_hz = cfg.get_double("rate.imu", p.imu_rate_hz);
  p.v_max_mps = cfg.get_double("sensor.v_max", p.v_max_mps);
  return p;
}

data::WindowConfig window_config_from_config(const Config& cfg) {
  data::WindowConfig wc;
  const double common = cfg.get_double("rate.common", 120.0);
  wc.window_samples = static_cast<Index>(cfg.get_double("window.seconds", 30.0) * common);
  wc.overlap = cfg.get_double("window.overlap", 0.30);
  return wc;
}

}  // namespace har::synth
