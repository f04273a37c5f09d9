#pragma once

#include "har/types.hpp"

#include <cstdint>
#include <numbers>
#include <string>

namespace har::lfi {

// ---------------------------------------------------------------------------
// FMCW laser-feedback-interferometry model (weak feedback, C < 1).
//
// The sensor emits at wavelength lambda; a triangular current modulation
// sweeps the wavelength through dlambda/dI. Optical power with feedback:
//     P(t) = P0 * (1 + m * cos(phi(t))),   phi(t) = 4*pi*n_ext*L(t)/lambda(t)
// One modulation period = an optical-frequency up-sweep (current falling)
// followed by a down-sweep, so with the paper's frequency algebra
//     f0 = (f_up + f_down)/2,   fd = (f_up - f_down)/2
// a receding target (positive velocity) yields positive fd.
// ---------------------------------------------------------------------------

struct LaserParams {
  double wavelength_m = 850e-9;
  double dlambda_di_m_per_a = 0.4e-6;  // wavelength tuning slope (0.4 nm/mA)
  double incidence_rad = std::numbers::pi / 4.0;  // gamma, in [0, pi/2)
  double p0 = 1.0;                                // unmodulated power
  double modulation_index = 0.1;                  // m, in [0, 1]
  double n_ext = 1.0;                             // external cavity index
};

struct RampConfig {
  double update_rate_hz = 1000.0;  // triangle repetition rate
  double current_swing_a = 8e-3;   // peak-to-peak modulation current
  double adc_rate_hz = 4e6;
  Index spectrum_size = 8192;  // power of two >= samples per ramp half

  Index samples_per_half() const;  // adc_rate / (2 * update_rate)
  // |dI/dt| on either ramp half.
  double current_slope_a_per_s() const { return current_swing_a * 2.0 * update_rate_hz; }
};

struct MotionSample {
  double distance_m = 25e-3;   // L_ext at the period start
  double velocity_mps = 0.0;   // surface velocity; positive = receding
};

struct RampFrequencies {
  double f_up_hz = 0.0;
  double f_down_hz = 0.0;
};

struct BeatFrequencies {
  double f0_hz = 0.0;  // range-proportional beat
  double fd_hz = 0.0;  // Doppler shift, signed
};

inline constexpr double kDefaultMaxVelocityMps = 0.06;
// Scleral surface radius used to map angular eye speed to linear surface
// speed (0.06 m/s ~ 300 deg/s).
inline constexpr double kEyeRadiusM = 11.1e-3;

inline constexpr double deg_per_s_to_mps(double dps) {
  return dps * std::numbers::pi / 180.0 * kEyeRadiusM;
}

// Gaussian sensor noise applied to extracted distance/velocity traces
// (the HAR pipeline consumes extracted quantities, not raw waveforms).
struct NoiseParams {
  double sigma_distance_m = 66.85e-6;
  double sigma_velocity_mps = deg_per_s_to_mps(2.95);
};

void validate(const LaserParams& laser);
void validate(const RampConfig& ramp);
void validate(const MotionSample& motion, double max_abs_velocity_mps = kDefaultMaxVelocityMps);

// Sampled interference power over one modulation period (2 * samples_per_half
// samples). The target recedes at velocity*cos(gamma) along the beam axis.
VectorXd synth_interference(const LaserParams& laser, const RampConfig& ramp,
                            const MotionSample& motion,
                            double max_abs_velocity_mps = kDefaultMaxVelocityMps);

// Dominant beat frequency per ramp half via mean-removed, zero-padded FFT
// magnitude spectra and three-point quadratic peak interpolation.
// Throws NoPeak when the strongest bin is not above `peak_floor` times the
// median magnitude of the searched range.
RampFrequencies extract_ramp_freqs(const Eigen::Ref<const VectorXd>& period,
                                   const RampConfig& ramp, double peak_floor = 5.0);

BeatFrequencies combine_freqs(const RampFrequencies& rf);

double freq_to_distance(double f0_hz, const LaserParams& laser, const RampConfig& ramp);
double freq_to_velocity(double fd_hz, const LaserParams& laser);

// Full synth -> extract -> convert round trip for one motion sample.
MotionSample round_trip(const LaserParams& laser, const RampConfig& ramp,
                        const MotionSample& motion);

// Adds i.i.d. Gaussian noise to extracted distance and velocity channels.
void add_sensor_noise(Eigen::Ref<VectorXd> distance_m, Eigen::Ref<VectorXd> velocity_mps,
                      const NoiseParams& noise, std::uint64_t seed);

// Raw waveform interchange: 16-byte header (magic "LFI1", u32 sample count,
// u32 ADC rate in Hz, u32 reserved) followed by float64 little-endian samples.
void write_waveform(const std::string& path, const Eigen::Ref<const VectorXd>& samples,
                    std::uint32_t adc_rate_hz);
VectorXd read_waveform(const std::string& path, std::uint32_t* adc_rate_hz_out = nullptr);

}  // namespace har::lfi
