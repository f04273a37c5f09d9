#pragma once

#include "har/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace har::data {

// ---------------------------------------------------------------------------
// Streams: per-channel sample vectors, possibly at different native rates,
// plus a per-sample label track at the finest rate.
// ---------------------------------------------------------------------------

struct SensorStream {
  std::string participant_id;
  std::vector<std::string> channel_names;
  std::vector<double> channel_rates_hz;
  std::vector<VectorXd> channels;
  std::vector<Activity> labels;
  double label_rate_hz = 0.0;

  Index num_channels() const { return static_cast<Index>(channels.size()); }
  // True when every channel (and the label track) shares one rate and length.
  bool is_uniform() const;
  void validate() const;  // shape/rate consistency; throws ShapeMismatch
};

// Decimates every channel to `target_rate_hz` by averaging contiguous
// source-sample bins aligned to target timestamps; labels map by nearest
// source sample. Output channels are truncated to a common length.
// Throws RateMismatch if the target exceeds any source rate.
SensorStream resample(const SensorStream& stream, double target_rate_hz);

struct ChannelStats {
  VectorXd mean;
  VectorXd stddev;  // population (1/N) standard deviation
};

ChannelStats channel_stats(const SensorStream& stream);

// Per-channel zero-mean/unit-variance over the whole stream (population
// variance). Zero-variance channels become all zeros.
void standardize(SensorStream& stream);
// Same transform with externally supplied statistics (strict mode: held-out
// participants are scaled with training-cohort statistics).
void standardize_with(SensorStream& stream, const ChannelStats& stats);

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

struct LabeledWindow {
  MatrixXf data;  // T x S, channels in stream order
  Activity label = Activity::transition;
  std::string participant_id;
  Index source_offset = 0;  // first sample index within the source stream
};

struct WindowConfig {
  Index window_samples = 3600;  // 30 s at 120 Hz
  double overlap = 0.30;

  Index stride() const {
    return static_cast<Index>(static_cast<double>(window_samples) * (1.0 - overlap));
  }
};

// Slices a uniform stream into overlapping windows. Window label = modal
// per-sample label, ties resolved toward the label occurring earliest inside
// the window; windows whose modal label is `transition` are dropped.
// Streams shorter than one window yield zero windows.
std::vector<LabeledWindow> make_windows(const SensorStream& uniform, const WindowConfig& wc);

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

struct HarDataset {
  std::vector<LabeledWindow> windows;
  std::vector<std::string> participants;  // first-appearance order
  std::vector<std::string> channel_names;
  double rate_hz = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  std::vector<Index> class_counts(const std::vector<Index>& subset) const;
  std::vector<Index> indices_of_participant(const std::string& id) const;
};

// Upsampling balance over the subset: index duplicates of under-represented
// classes (drawn uniformly with replacement, seeded) are appended until every
// class present reaches the max pre-balance count. Originals keep their order.
// Throws EmptyClass when `require_all_classes` and a vocabulary class is
// absent from the subset.
std::vector<Index> balance_indices(const std::vector<LabeledWindow>& windows,
                                   const std::vector<Index>& subset, std::uint64_t seed,
                                   bool require_all_classes = false);

// Whole-dataset balance (windows are copied); spec'd convenience form.
HarDataset balance(const HarDataset& ds, std::uint64_t seed);

struct Fold {
  std::string participant;   // held out
  std::vector<Index> train;  // unbalanced; balance per fold at train time
  std::vector<Index> test;
};

// One fold per participant, ordered by first appearance. Train/test index
// sets partition the dataset.
std::vector<Fold> lopocv_splits(const HarDataset& ds);

// ---------------------------------------------------------------------------
// Interchange: CSV per participant + cohort manifest
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& standard_channel_names() {
  static const std::vector<std::string> names = {"v1",   "d1",   "v2",   "d2",   "accx",
                                                 "accy", "accz", "gyrx", "gyry", "gyrz"};
  return names;
}

// Header `t,v1,d1,v2,d2,accx,accy,accz,gyrx,gyry,gyrz,label`; t has six
// decimal places; stream must be uniform with the standard channels.
void write_participant_csv(const std::string& path, const SensorStream& uniform);
SensorStream read_participant_csv(const std::string& path, const std::string& participant_id,
                                  double rate_hz);

std::uint64_t fnv1a64_file(const std::string& path);

struct ManifestEntry {
  std::string id;
  std::string file;  // relative to the manifest directory
  std::uint64_t checksum = 0;
  Index rows = 0;
  Index raw_windows = 0;
};

struct Manifest {
  std::vector<ManifestEntry> participants;
  double common_rate_hz = 120.0;
  double lfi_rate_hz = 1000.0;
  double imu_rate_hz = 860.0;
  std::uint64_t seed = 0;
  std::string config_hash;
  Index window_samples = 3600;
  double window_overlap = 0.30;
  Index raw_windows_total = 0;       // N before balancing
  Index balanced_windows_total = 0;  // N if the whole cohort were balanced
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);
// Recomputes file checksums relative to the manifest's directory; throws
// IntegrityError on any mismatch or missing file.
void verify_manifest_files(const std::string& manifest_path, const Manifest& m);

// Loads every participant CSV named by a manifest into one dataset,
// standardizes per participant (default semantics) and windows the streams.
HarDataset load_dataset(const std::string& manifest_path, const WindowConfig& wc,
                        bool verify_checksums = true);
// Raw uniform streams without standardization/windowing (strict-mode callers
// re-standardize per fold).
std::vector<SensorStream> load_streams(const std::string& manifest_path,
                                       bool verify_checksums = true);

}  // namespace har::data
