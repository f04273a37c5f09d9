#include "har/dataset.hpp"

#include <algorithm>
#include <array>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "har/config.hpp"

namespace har::data {

namespace fs = std::filesystem;

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return std::string(buf);
}

std::uint64_t parse_hex64(const std::string& s) {
  return std::strtoull(s.c_str(), nullptr, 16);
}

}  // namespace

bool SensorStream::is_uniform() const {
  if (channels.empty()) return false;
  const double rate = channel_rates_hz[0];
  const Index len = channels[0].size();
  for (size_t i = 0; i < channels.size(); ++i) {
    if (channel_rates_hz[i] != rate || channels[i].size() != len) return false;
  }
  return label_rate_hz == rate && static_cast<Index>(labels.size()) == len;
}

void SensorStream::validate() const {
  if (channels.size() != channel_rates_hz.size() || channels.size() != channel_names.size()) {
    throw ShapeMismatch("stream channel bookkeeping is inconsistent");
  }
  if (channels.empty()) throw ShapeMismatch("stream has no channels");
  for (double r : channel_rates_hz) {
    if (!(r > 0.0)) throw ShapeMismatch("channel rate must be positive");
  }
  if (!(label_rate_hz > 0.0) || labels.empty()) {
    throw ShapeMismatch("stream has no label track");
  }
}

SensorStream resample(const SensorStream& stream, double target_rate_hz) {
  stream.validate();
  if (!(target_rate_hz > 0.0)) throw InvalidConfig("target rate must be positive");
  for (double r : stream.channel_rates_hz) {
    if (target_rate_hz > r) {
      throw RateMismatch("target rate " + std::to_string(target_rate_hz) +
                         " Hz exceeds source rate " + std::to_string(r) + " Hz");
    }
  }
  if (target_rate_hz > stream.label_rate_hz) {
    throw RateMismatch("target rate exceeds label rate");
  }

  SensorStream out;
  out.participant_id = stream.participant_id;
  out.channel_names = stream.channel_names;

  // Output length limited by the slowest-filling channel.
  Index out_len = -1;
  for (size_t c = 0; c < stream.channels.size(); ++c) {
    const auto len = static_cast<Index>(static_cast<double>(stream.channels[c].size()) *
                                        target_rate_hz / stream.channel_rates_hz[c]);
    out_len = out_len < 0 ? len : std::min(out_len, len);
  }

  for (size_t c = 0; c < stream.channels.size(); ++c) {
    const VectorXd& src = stream.channels[c];
    // Rates are integer-valued in this pipeline; keep the bin arithmetic exact.
    const auto r = static_cast<std::int64_t>(std::llround(stream.channel_rates_hz[c] * 1000.0));
    const auto t = static_cast<std::int64_t>(std::llround(target_rate_hz * 1000.0));
    VectorXd dst(out_len);
    for (Index k = 0; k < out_len; ++k) {
      const auto begin = ceil_div(static_cast<std::int64_t>(k) * r, t);
      auto end = ceil_div((static_cast<std::int64_t>(k) + 1) * r, t);
      end = std::min<std::int64_t>(end, src.size());
      dst[k] = src.segment(begin, end - begin).mean();
    }
    out.channels.push_back(std::move(dst));
    out.channel_rates_hz.push_back(target_rate_hz);
  }

  const auto lr = static_cast<std::int64_t>(std::llround(stream.label_rate_hz * 1000.0));
  const auto t = static_cast<std::int64_t>(std::llround(target_rate_hz * 1000.0));
  out.labels.resize(static_cast<size_t>(out_len));
  for (Index k = 0; k < out_len; ++k) {
    // Nearest source label to the bin center.
    auto j = (2 * static_cast<std::int64_t>(k) + 1) * lr / (2 * t);
    j = std::min<std::int64_t>(j, static_cast<std::int64_t>(stream.labels.size()) - 1);
    out.labels[static_cast<size_t>(k)] = stream.labels[static_cast<size_t>(j)];
  }
  out.label_rate_hz = target_rate_hz;
  return out;
}

ChannelStats channel_stats(const SensorStream& stream) {
  stream.validate();
  const auto n_ch = static_cast<Index>(stream.channels.size());
  ChannelStats st{VectorXd(n_ch), VectorXd(n_ch)};
  for (Index c = 0; c < n_ch; ++c) {
    const VectorXd& x = stream.channels[static_cast<size_t>(c)];
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
    st.mean[c] = mean;
    st.stddev[c] = std::sqrt(var);
  }
  return st;
}

void standardize_with(SensorStream& stream, const ChannelStats& stats) {
  stream.validate();
  if (stats.mean.size() != stream.num_channels()) {
    throw ShapeMismatch("statistics do not match channel count");
  }
  for (Index c = 0; c < stream.num_channels(); ++c) {
    VectorXd& x = stream.channels[static_cast<size_t>(c)];
    if (stats.stddev[c] > 0.0) {
      x = (x.array() - stats.mean[c]) / stats.stddev[c];
    } else {
      x.setZero();
    }
  }
}

void standardize(SensorStream& stream) { standardize_with(stream, channel_stats(stream)); }

std::vector<LabeledWindow> make_windows(const SensorStream& uniform, const WindowConfig& wc) {
  uniform.validate();
  if (!uniform.is_uniform()) throw ShapeMismatch("windowing requires a uniform-rate stream");
  if (wc.window_samples <= 0) throw InvalidConfig("window length must be positive");
  if (!(wc.overlap >= 0.0) || !(wc.overlap < 1.0)) {
    throw InvalidConfig("window overlap must lie in [0, 1)");
  }
  const Index stride = wc.stride();
  if (stride <= 0) throw InvalidConfig("window stride underflows to zero");

  const Index len = uniform.channels[0].size();
  const Index n_ch = uniform.num_channels();
  std::vector<LabeledWindow> out;
  if (len < wc.window_samples) return out;

  constexpr size_t kLabels = 8;  // 7 activities + transition
  for (Index start = 0; start + wc.window_samples <= len; start += stride) {
    std::array<Index, kLabels> count{};
    std::array<Index, kLabels> first{};
    first.fill(-1);
    for (Index i = 0; i < wc.window_samples; ++i) {
      const auto lab = static_cast<size_t>(uniform.labels[static_cast<size_t>(start + i)]);
      if (first[lab] < 0) first[lab] = i;
      ++count[lab];
    }
    size_t best = 0;
    for (size_t l = 1; l < kLabels; ++l) {
      if (count[l] > count[best] || (count[l] == count[best] && first[l] >= 0 &&
                                     (first[best] < 0 || first[l] < first[best]))) {
        best = l;
      }
    }
    if (static_cast<Activity>(best) == Activity::transition) continue;

    LabeledWindow w;
    w.data.resize(wc.window_samples, n_ch);
    for (Index c = 0; c < n_ch; ++c) {
      w.data.col(c) =
          uniform.channels[static_cast<size_t>(c)].segment(start, wc.window_samples).cast<float>();
    }
    w.label = static_cast<Activity>(best);
    w.participant_id = uniform.participant_id;
    w.source_offset = start;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Index> HarDataset::class_counts(const std::vector<Index>& subset) const {
  std::vector<Index> counts(kNumActivities, 0);
  for (Index i : subset) ++counts[static_cast<size_t>(windows[static_cast<size_t>(i)].label)];
  return counts;
}

std::vector<Index> HarDataset::indices_of_participant(const std::string& id) const {
  std::vector<Index> out;
  for (size_t i = 0; i < windows.size(); ++i) {
    if (windows[i].participant_id == id) out.push_back(static_cast<Index>(i));
  }
  return out;
}

std::vector<Index> balance_indices(const std::vector<LabeledWindow>& windows,
                                   const std::vector<Index>& subset, std::uint64_t seed,
                                   bool require_all_classes) {
  std::vector<std::vector<Index>> by_class(kNumActivities);
  for (Index i : subset) {
    by_class[static_cast<size_t>(windows[static_cast<size_t>(i)].label)].push_back(i);
  }
  Index max_count = 0;
  for (int c = 0; c < kNumActivities; ++c) {
    if (require_all_classes && by_class[static_cast<size_t>(c)].empty()) {
      throw EmptyClass("class '" + to_string(static_cast<Activity>(c)) +
                       "' has no windows to balance from");
    }
    max_count = std::max(max_count, static_cast<Index>(by_class[static_cast<size_t>(c)].size()));
  }

  std::vector<Index> out = subset;  // originals preserved, duplicates appended
  std::mt19937_64 rng(seed);
  for (int c = 0; c < kNumActivities; ++c) {
    const auto& pool = by_class[static_cast<size_t>(c)];
    if (pool.empty()) continue;
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (Index need = max_count - static_cast<Index>(pool.size()); need > 0; --need) {
      out.push_back(pool[pick(rng)]);
    }
  }
  return out;
}

HarDataset balance(const HarDataset& ds, std::uint64_t seed) {
  std::vector<Index> all(ds.windows.size());
  for (size_t i = 0; i < ds.windows.size(); ++i) all[i] = static_cast<Index>(i);
  const std::vector<Index> idx = balance_indices(ds.windows, all, seed);
  HarDataset out = ds;
  out.windows.clear();
  out.windows.reserve(idx.size());
  for (Index i : idx) out.windows.push_back(ds.windows[static_cast<size_t>(i)]);
  return out;
}

std::vector<Fold> lopocv_splits(const HarDataset& ds) {
  std::vector<Fold> folds;
  for (const std::string& pid : ds.participants) {
    Fold f;
    f.participant = pid;
    for (size_t i = 0; i < ds.windows.size(); ++i) {
      (ds.windows[i].participant_id == pid ? f.test : f.train).push_back(static_cast<Index>(i));
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

// ---------------------------------------------------------------------------
// CSV + manifest I/O
// ---------------------------------------------------------------------------

void write_participant_csv(const std::string& path, const SensorStream& uniform) {
  uniform.validate();
  if (!uniform.is_uniform()) throw ShapeMismatch("CSV requires a uniform-rate stream");
  if (uniform.channel_names != standard_channel_names()) {
    throw ShapeMismatch("CSV requires the standard channel set");
  }
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open CSV for writing: " + path);
  std::fputs("t,v1,d1,v2,d2,accx,accy,accz,gyrx,gyry,gyrz,label\n", f);
  const Index len = uniform.channels[0].size();
  const double rate = uniform.channel_rates_hz[0];
  char buf[64];
  for (Index i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(i) / rate);
    std::fputs(buf, f);
    for (const VectorXd& ch : uniform.channels) {
      std::snprintf(buf, sizeof(buf), ",%.9g", ch[i]);
      std::fputs(buf, f);
    }
    std::fputc(',', f);
    std::fputs(to_string(uniform.labels[static_cast<size_t>(i)]).c_str(), f);
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error("short write to CSV: " + path);
}

SensorStream read_participant_csv(const std::string& path, const std::string& participant_id,
                                  double rate_hz) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "t,v1,d1,v2,d2,accx,accy,accz,gyrx,gyry,gyrz,label") {
    throw IntegrityError("unexpected CSV header in " + path);
  }

  const size_t n_ch = standard_channel_names().size();
  std::vector<std::vector<double>> cols(n_ch);
  std::vector<Activity> labels;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const char* p = line.c_str();
    char* end = nullptr;
    std::strtod(p, &end);  // t column; value implied by row index
    if (end == p) throw IntegrityError(path + ":" + std::to_string(lineno) + ": bad t value");
    p = end;
    for (size_t c = 0; c < n_ch; ++c) {
      if (*p != ',') throw IntegrityError(path + ":" + std::to_string(lineno) + ": short row");
      ++p;
      const double v = std::strtod(p, &end);
      if (end == p) throw IntegrityError(path + ":" + std::to_string(lineno) + ": bad value");
      cols[c].push_back(v);
      p = end;
    }
    if (*p != ',') throw IntegrityError(path + ":" + std::to_string(lineno) + ": missing label");
    labels.push_back(activity_from_name(std::string(p + 1)));
  }

  SensorStream s;
  s.participant_id = participant_id;
  s.channel_names = standard_channel_names();
  for (size_t c = 0; c < n_ch; ++c) {
    s.channels.emplace_back(
        Eigen::Map<const VectorXd>(cols[c].data(), static_cast<Index>(cols[c].size())));
    s.channel_rates_hz.push_back(rate_hz);
  }
  s.labels = std::move(labels);
  s.label_rate_hz = rate_hz;
  s.validate();
  return s;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file for checksum: " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(std::string_view(buf, static_cast<size_t>(in.gcount())), h);
  }
  return h;
}

void write_manifest(const std::string& path, const Manifest& m) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open manifest for writing: " + path);
  std::fprintf(f, "# cohort manifest\nmanifest.version = 1\n");
  std::fprintf(f, "cohort.seed = %" PRIu64 "\n", m.seed);
  std::fprintf(f, "cohort.config_hash = %s\n", m.config_hash.c_str());
  std::string order;
  for (const auto& e : m.participants) {
    if (!order.empty()) order += ',';
    order += e.id;
  }
  std::fprintf(f, "cohort.order = %s\n", order.c_str());
  std::fprintf(f, "rate.common = %.6g\nrate.lfi = %.6g\nrate.imu = %.6g\n", m.common_rate_hz,
               m.lfi_rate_hz, m.imu_rate_hz);
  std::fprintf(f, "window.samples = %lld\nwindow.overlap = %.6g\n",
               static_cast<long long>(m.window_samples), m.window_overlap);
  // Both window counts: N before balancing and N if balanced cohort-wide.
  std::fprintf(f, "windows.raw_total = %lld\nwindows.balanced_total = %lld\n",
               static_cast<long long>(m.raw_windows_total),
               static_cast<long long>(m.balanced_windows_total));
  for (const auto& e : m.participants) {
    std::fprintf(f, "participant.%s.file = %s\n", e.id.c_str(), e.file.c_str());
    std::fprintf(f, "participant.%s.checksum = %s\n", e.id.c_str(), hex64(e.checksum).c_str());
    std::fprintf(f, "participant.%s.rows = %lld\n", e.id.c_str(), static_cast<long long>(e.rows));
    std::fprintf(f, "participant.%s.windows_raw = %lld\n", e.id.c_str(),
                 static_cast<long long>(e.raw_windows));
  }
  if (std::fclose(f) != 0) throw Error("short write to manifest: " + path);
}

Manifest read_manifest(const std::string& path) {
  const Config cfg = Config::from_file(path);
  Manifest m;
  m.seed = static_cast<std::uint64_t>(cfg.get_int("cohort.seed", 0));
  m.config_hash = cfg.get_str("cohort.config_hash", "");
  m.common_rate_hz = cfg.get_double("rate.common", 120.0);
  m.lfi_rate_hz = cfg.get_double("rate.lfi", 1000.0);
  m.imu_rate_hz = cfg.get_double("rate.imu", 860.0);
  m.window_samples = cfg.get_int("window.samples", 3600);
  m.window_overlap = cfg.get_double("window.overlap", 0.30);
  m.raw_windows_total = cfg.get_int("windows.raw_total", 0);
  m.balanced_windows_total = cfg.get_int("windows.balanced_total", 0);

  const std::string order = cfg.require_str("cohort.order");
  size_t pos = 0;
  while (pos <= order.size()) {
    size_t comma = order.find(',', pos);
    const std::string id = order.substr(pos, comma == std::string::npos ? comma : comma - pos);
    pos = comma == std::string::npos ? order.size() + 1 : comma + 1;
    if (id.empty()) continue;
    ManifestEntry e;
    e.id = id;
    e.file = cfg.require_str("participant." + id + ".file");
    e.checksum = parse_hex64(cfg.require_str("participant." + id + ".checksum"));
    e.rows = cfg.get_int("participant." + id + ".rows", 0);
    e.raw_windows = cfg.get_int("participant." + id + ".windows_raw", 0);
    m.participants.push_back(std::move(e));
  }
  return m;
}

void verify_manifest_files(const std::string& manifest_path, const Manifest& m) {
  const fs::path dir = fs::path(manifest_path).parent_path();
  for (const auto& e : m.participants) {
    const std::string file = (dir / e.file).string();
    if (!fs::exists(file)) throw IntegrityError("manifest names missing file: " + file);
    const std::uint64_t got = fnv1a64_file(file);
    if (got != e.checksum) {
      throw IntegrityError("checksum mismatch for " + file + ": manifest " + hex64(e.checksum) +
                           ", file " + hex64(got));
    }
  }
}

std::vector<SensorStream> load_streams(const std::string& manifest_path, bool verify_checksums) {
  const Manifest m = read_manifest(manifest_path);
  if (verify_checksums) verify_manifest_files(manifest_path, m);
  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<SensorStream> streams;
  for (const auto& e : m.participants) {
    streams.push_back(read_participant_csv((dir / e.file).string(), e.id, m.common_rate_hz));
  }
  return streams;
}

HarDataset load_dataset(const std::string& manifest_path, const WindowConfig& wc,
                        bool verify_checksums) {
  const Manifest m = read_manifest(manifest_path);
  if (verify_checksums) verify_manifest_files(manifest_path, m);
  const fs::path dir = fs::path(manifest_path).parent_path();

  HarDataset ds;
  ds.channel_names = standard_channel_names();
  ds.rate_hz = m.common_rate_hz;
  ds.seed = m.seed;
  ds.config_hash = m.config_hash;
  for (const auto& e : m.participants) {
    SensorStream s = read_participant_csv((dir / e.file).string(), e.id, m.common_rate_hz);
    standardize(s);
    std::vector<LabeledWindow> w = make_windows(s, wc);
    ds.participants.push_back(e.id);
    for (auto& lw : w) ds.windows.push_back(std::move(lw));
  }
  return ds;
}

}  // namespace har::data
