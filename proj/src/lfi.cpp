#include "har/lfi.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

namespace har::lfi {

namespace {

bool is_pow2(Index n) { return n > 0 && (n & (n - 1)) == 0; }

// Peak-interpolated dominant frequency of one mean-removed ramp half.
double half_peak_freq(const Eigen::Ref<const VectorXd>& half, const RampConfig& ramp,
                      double peak_floor) {
  const Index n = ramp.spectrum_size;
  std::vector<double> padded(static_cast<size_t>(n), 0.0);
  const double mean = half.mean();
  for (Index i = 0; i < half.size(); ++i) padded[static_cast<size_t>(i)] = half[i] - mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);

  const Index top = n / 2;  // search 1..n/2 (skip DC, stop at Nyquist)
  std::vector<double> mag(static_cast<size_t>(top));
  for (Index k = 1; k <= top; ++k) mag[static_cast<size_t>(k - 1)] = std::abs(spec[static_cast<size_t>(k)]);

  const auto max_it = std::max_element(mag.begin(), mag.end());
  const double peak = *max_it;
  std::vector<double> med = mag;
  const size_t mid = med.size() / 2;
  std::nth_element(med.begin(), med.begin() + static_cast<long>(mid), med.end());
  if (peak <= peak_floor * med[mid]) {
    throw NoPeak("no dominant spectral peak (peak " + std::to_string(peak) + " <= " +
                 std::to_string(peak_floor) + " x median " + std::to_string(med[mid]) + ")");
  }

  Index k = static_cast<Index>(max_it - mag.begin()) + 1;  // spectrum bin index
  if (k < 1) k = 1;
  if (k > top - 1) k = top - 1;
  const double a = std::abs(spec[static_cast<size_t>(k - 1)]);
  const double b = std::abs(spec[static_cast<size_t>(k)]);
  const double c = std::abs(spec[static_cast<size_t>(k + 1)]);
  const double denom = a - 2.0 * b + c;
  const double delta = denom == 0.0 ? 0.0 : 0.5 * (a - c) / denom;
  return (static_cast<double>(k) + delta) * ramp.adc_rate_hz / static_cast<double>(n);
}

}  // namespace

Index RampConfig::samples_per_half() const {
  return static_cast<Index>(std::llround(adc_rate_hz / (2.0 * update_rate_hz)));
}

void validate(const LaserParams& laser) {
  if (!(laser.wavelength_m > 0.0)) throw InvalidConfig("laser wavelength must be positive");
  if (!(laser.incidence_rad >= 0.0) || !(laser.incidence_rad < std::numbers::pi / 2.0)) {
    throw InvalidConfig("incidence angle must lie in [0, pi/2)");
  }
  if (!(laser.modulation_index >= 0.0) || !(laser.modulation_index <= 1.0)) {
    throw InvalidConfig("modulation index must lie in [0, 1]");
  }
  if (!(laser.p0 > 0.0)) throw InvalidConfig("laser p0 must be positive");
  if (!(laser.n_ext > 0.0)) throw InvalidConfig("external index must be positive");
}

void validate(const RampConfig& ramp) {
  if (!(ramp.update_rate_hz > 0.0) || !(ramp.adc_rate_hz > 0.0)) {
    throw InvalidConfig("ramp rates must be positive");
  }
  const double exact = ramp.adc_rate_hz / (2.0 * ramp.update_rate_hz);
  const Index n = ramp.samples_per_half();
  if (std::abs(exact - static_cast<double>(n)) > 1e-9) {
    throw InvalidConfig("adc rate must be an integer multiple of twice the update rate");
  }
  if (n < 64) throw InvalidConfig("fewer than 64 samples per ramp half");
  if (!is_pow2(ramp.spectrum_size) || ramp.spectrum_size < n) {
    throw InvalidConfig("spectrum size must be a power of two >= samples per ramp half");
  }
}

void validate(const MotionSample& motion, double max_abs_velocity_mps) {
  if (!(motion.distance_m > 0.0)) throw InvalidConfig("target distance must be positive");
  if (!(std::abs(motion.velocity_mps) <= max_abs_velocity_mps)) {
    throw InvalidConfig("|velocity| exceeds configured bound");
  }
}

VectorXd synth_interference(const LaserParams& laser, const RampConfig& ramp,
                            const MotionSample& motion, double max_abs_velocity_mps) {
  validate(laser);
  validate(ramp);
  validate(motion, max_abs_velocity_mps);

  const Index half = ramp.samples_per_half();
  const Index n = 2 * half;
  const double dt = 1.0 / ramp.adc_rate_hz;
  const double slope = ramp.current_slope_a_per_s();
  const double half_t = 1.0 / (2.0 * ramp.update_rate_hz);
  const double v_beam = motion.velocity_mps * std::cos(laser.incidence_rad);

  VectorXd out(n);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    // First half: current falls (+swing/2 -> -swing/2) so optical frequency
    // sweeps up; second half mirrors it.
    const double di = (t < half_t) ? ramp.current_swing_a / 2.0 - slope * t
                                   : -ramp.current_swing_a / 2.0 + slope * (t - half_t);
    const double lambda = laser.wavelength_m + laser.dlambda_di_m_per_a * di;
    const double l_ext = motion.distance_m + v_beam * t;
    const double phi = 4.0 * std::numbers::pi * laser.n_ext * l_ext / lambda;
    out[i] = laser.p0 * (1.0 + laser.modulation_index * std::cos(phi));
  }
  return out;
}

RampFrequencies extract_ramp_freqs(const Eigen::Ref<const VectorXd>& period,
                                   const RampConfig& ramp, double peak_floor) {
  validate(ramp);
  const Index half = ramp.samples_per_half();
  if (period.size() != 2 * half) {
    throw ShapeMismatch("period length " + std::to_string(period.size()) +
                        " != 2 * samples per half " + std::to_string(half));
  }
  RampFrequencies rf;
  rf.f_up_hz = half_peak_freq(period.head(half), ramp, peak_floor);
  rf.f_down_hz = half_peak_freq(period.tail(half), ramp, peak_floor);
  return rf;
}

BeatFrequencies combine_freqs(const RampFrequencies& rf) {
  if (!(rf.f_up_hz >= 0.0) || !(rf.f_down_hz >= 0.0)) {
    throw InvalidConfig("ramp frequencies must be non-negative");
  }
  BeatFrequencies bf;
  bf.f0_hz = (rf.f_up_hz + rf.f_down_hz) / 2.0;
  bf.fd_hz = (rf.f_up_hz - rf.f_down_hz) / 2.0;
  return bf;
}

double freq_to_distance(double f0_hz, const LaserParams& laser, const RampConfig& ramp) {
  validate(laser);
  const double sweep = laser.dlambda_di_m_per_a * ramp.current_slope_a_per_s();
  if (sweep == 0.0) throw InvalidConfig("wavelength sweep rate is zero");
  return f0_hz * laser.wavelength_m * laser.wavelength_m / (2.0 * laser.n_ext * sweep);
}

double freq_to_velocity(double fd_hz, const LaserParams& laser) {
  validate(laser);
  const double cg = std::cos(laser.incidence_rad);
  if (cg <= 1e-12) throw DegenerateGeometry("incidence angle too close to pi/2");
  return fd_hz * laser.wavelength_m / (2.0 * laser.n_ext * cg);
}

MotionSample round_trip(const LaserParams& laser, const RampConfig& ramp,
                        const MotionSample& motion) {
  const VectorXd signal = synth_interference(laser, ramp, motion);
  const BeatFrequencies bf = combine_freqs(extract_ramp_freqs(signal, ramp));
  return MotionSample{freq_to_distance(bf.f0_hz, laser, ramp),
                      freq_to_velocity(bf.fd_hz, laser)};
}

void add_sensor_noise(Eigen::Ref<VectorXd> distance_m, Eigen::Ref<VectorXd> velocity_mps,
                      const NoiseParams& noise, std::uint64_t seed) {
  if (!(noise.sigma_distance_m >= 0.0) || !(noise.sigma_velocity_mps >= 0.0)) {
    throw InvalidConfig("noise sigmas must be non-negative");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index i = 0; i < distance_m.size(); ++i) distance_m[i] += noise.sigma_distance_m * gauss(rng);
  for (Index i = 0; i < velocity_mps.size(); ++i) velocity_mps[i] += noise.sigma_velocity_mps * gauss(rng);
}

void write_waveform(const std::string& path, const Eigen::Ref<const VectorXd>& samples,
                    std::uint32_t adc_rate_hz) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open waveform file for writing: " + path);
  const char magic[4] = {'L', 'F', 'I', '1'};
  const std::uint32_t count = static_cast<std::uint32_t>(samples.size());
  const std::uint32_t reserved = 0;
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&adc_rate_hz), 4);
  out.write(reinterpret_cast<const char*>(&reserved), 4);
  out.write(reinterpret_cast<const char*>(samples.data()),
            static_cast<std::streamsize>(sizeof(double)) * samples.size());
  if (!out) throw Error("short write to waveform file: " + path);
}

VectorXd read_waveform(const std::string& path, std::uint32_t* adc_rate_hz_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open waveform file: " + path);
  char magic[4] = {};
  std::uint32_t count = 0, rate = 0, reserved = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  in.read(reinterpret_cast<char*>(&rate), 4);
  in.read(reinterpret_cast<char*>(&reserved), 4);
  if (!in || std::string_view(magic, 4) != "LFI1") {
    throw IntegrityError("bad waveform header in " + path);
  }
  VectorXd samples(static_cast<Index>(count));
  in.read(reinterpret_cast<char*>(samples.data()),
          static_cast<std::streamsize>(sizeof(double)) * samples.size());
  if (!in) throw IntegrityError("truncated waveform file: " + path);
  if (adc_rate_hz_out) *adc_rate_hz_out = rate;
  return samples;
}

}  // namespace har::lfi
