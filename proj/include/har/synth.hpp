#pragma once

#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/lfi.hpp"
#include "har/types.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace har::synth {

// ---------------------------------------------------------------------------
// Synthetic recordings of a two-sensor LFI eye tracker (1 kHz) plus a 6-axis
// IMU (860 Hz) across seven desk/mobility activities.
//
// Eye model: fixation drift (OU noise) punctuated by raised-cosine saccade
// pulses whose peak speed follows the amplitude main sequence, blinks that
// pull the measured distance to the lid plateau, and pupil crossings that
// throw it to the retina plateau. Sensor 1 responds mostly to vertical gaze
// motion, sensor 2 mostly to horizontal; reading is horizontal forward-
// forward-...-return scanning. Walking/cycling add glasses-slippage bounce
// to the LFI distance channels and strong periodic IMU oscillation.
// All numeric defaults are declared assumptions, tunable via config.
// ---------------------------------------------------------------------------

struct EyeGeometry {
  double d_lid_m = 21e-3;   // beam lands on the closed lid
  double d_iris_m = 25e-3;  // nominal plateau: iris/sclera
  double d_ret_m = 45e-3;   // beam crosses the pupil to the retina

  void validate() const {
    if (!(d_lid_m < d_iris_m && d_iris_m < d_ret_m)) {
      throw InvalidConfig("eye geometry must satisfy d_lid < d_iris < d_ret");
    }
  }
};

struct ActivityProfile {
  double saccade_rate_hz = 2.0;    // mean saccade launch rate
  double saccade_amp_deg = 5.0;    // mean amplitude (lognormal jitter)
  double amp_jitter = 0.35;
  double horizontal_frac = 0.5;    // probability a saccade is horizontal
  double burstiness = 0.3;         // 0 = regular gaps, 1 = Poisson clumping
  double pupil_cross_frac = 0.35;  // chance a saccade crosses the pupil (per sensor)
  double blink_rate_hz = 0.2;
  double blink_duration_s = 0.15;
  double fixation_drift_mps = 0.0035;  // RMS of inter-saccade velocity noise
  bool reading_pattern = false;
  // IMU
  double tilt_deg = 0.0;      // head pitch; projects gravity onto accx
  double acc_amp_mps2 = 0.0;  // dominant periodic acceleration (walk/cycle/nod)
  double acc_freq_hz = 0.0;
  bool acc_am = false;  // slow amplitude modulation (talking gestures)
  double gyro_amp_rps = 0.0;
  double acc_jitter_mps2 = 0.09;  // broadband noise
  double gyro_jitter_rps = 0.012;
  double buzz_amp_mps2 = 0.0;  // high-frequency vibration (road buzz)
  double buzz_freq_hz = 0.0;
  // LFI slippage bounce
  double bounce_amp_m = 0.0;
  double bounce_freq_hz = 0.0;
};

struct ParticipantSpec {
  std::string id;
  double shift = 1.0;          // personal_scale intensity, 1 = population nominal
  double heterogeneity = 0.6;  // exponent coupling `shift` to profile modulation
  std::array<double, kNumActivities> durations_s{};  // indexed by Activity
  double gap_min_s = 2.0;
  double gap_max_s = 10.0;
};

struct SynthParams {
  EyeGeometry geometry;
  lfi::NoiseParams noise;
  double lfi_rate_hz = 1000.0;
  double imu_rate_hz = 860.0;
  double v_max_mps = lfi::kDefaultMaxVelocityMps;  // sensor velocity range
};

// Four LFI channels for one contiguous segment, all at the LFI rate.
struct LfiTraces {
  VectorXd v1, d1, v2, d2;
};

LfiTraces gen_eye_trajectory(const ActivityProfile& profile, const EyeGeometry& geometry,
                             double duration_s, double rate_hz, double v_max_mps,
                             std::uint64_t seed);

// Columns: accx, accy, accz (m/s^2), gyrx, gyry, gyrz (rad/s).
MatrixXd gen_imu(const ActivityProfile& profile, double duration_s, double rate_hz,
                 std::uint64_t seed);

// Full labeled recording: activities in seeded random order, separated by
// `transition`-labeled quiet gaps; profile parameters and channel gains are
// modulated per participant by `shift` (seeded), then sensor noise is added
// to the LFI channels. Same spec + seed => bitwise-identical stream; the
// per-activity label durations depend only on the spec, never the seed.
data::SensorStream gen_participant(const ParticipantSpec& spec,
                                   const std::array<ActivityProfile, kNumActivities>& profiles,
                                   const SynthParams& params, std::uint64_t master_seed);

// ---------------------------------------------------------------------------
// Config plumbing. The embedded default text and configs/default.cfg are the
// same document (a unit test pins them together).
// ---------------------------------------------------------------------------

extern const char* const kDefaultCohortConfig;

// Throws InvalidConfig naming the activity when a profile section is absent.
std::array<ActivityProfile, kNumActivities> profiles_from_config(const Config& cfg);
std::vector<ParticipantSpec> cohort_from_config(const Config& cfg);
SynthParams synth_params_from_config(const Config& cfg);
data::WindowConfig window_config_from_config(const Config& cfg);

}  // namespace har::synth
