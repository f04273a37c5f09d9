#include "har/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace har::eval {

namespace {

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void append_metric_columns(std::string& out, const Metrics& m, int n_classes) {
  out += ',' + fmt(m.accuracy) + ',' + fmt(m.macro_f1);
  for (int c = 0; c < n_classes; ++c) {
    out += ',' + (m.empty() ? std::string("") : fmt(m.per_class_f1[c]));
  }
  for (int i = 0; i < n_classes; ++i) {
    for (int j = 0; j < n_classes; ++j) {
      out += ',' + (m.empty() ? std::string("")
                              : fmt(m.confusion(i, j), 0));
    }
  }
  out += '\n';
}

std::vector<int> labels_of(const std::vector<data::LabeledWindow>& windows,
                           const std::vector<Index>& idx) {
  std::vector<int> out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    out[i] = static_cast<int>(windows.at(static_cast<size_t>(idx[i])).label);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << text;
  if (!os) throw Error("short write to " + path);
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

Metrics metrics_from_confusion(const MatrixXd& confusion) {
  if (confusion.rows() < 1 || confusion.rows() != confusion.cols()) {
    throw ShapeMismatch("confusion matrix must be square and non-empty");
  }
  if ((confusion.array() < 0.0).any()) {
    throw InvalidConfig("confusion matrix entries must be non-negative");
  }
  Metrics m;
  m.confusion = confusion;
  const Index n = confusion.rows();
  m.per_class_f1.resize(n);
  const double total = confusion.sum();
  m.accuracy = total > 0.0 ? confusion.trace() / total : 0.0;
  for (Index c = 0; c < n; ++c) {
    const double tp = confusion(c, c);
    const double fn = confusion.row(c).sum() - tp;
    const double fp = confusion.col(c).sum() - tp;
    const double denom = 2.0 * tp + fp + fn;
    m.per_class_f1[c] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
  }
  m.macro_f1 = m.per_class_f1.mean();
  return m;
}

Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                        int n_classes) {
  if (truth.size() != pred.size()) throw ShapeMismatch("truth/prediction size mismatch");
  if (n_classes < 1) throw InvalidConfig("compute_metrics: n_classes must be >= 1");
  MatrixXd confusion = MatrixXd::Zero(n_classes, n_classes);
  for (size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = pred[i];
    if (t < 0 || t >= n_classes || p < 0 || p >= n_classes) {
      throw InvalidConfig("label outside [0, n_classes) in metrics input");
    }
    confusion(t, p) += 1.0;
  }
  return metrics_from_confusion(confusion);
}

// ---------------------------------------------------------------------------
// HarnessConfig
// ---------------------------------------------------------------------------

HarnessConfig harness_config(const Config& cfg) {
  HarnessConfig hc;
  const double common = cfg.get_double("rate.common", 120.0);
  const double seconds = cfg.get_double("window.seconds", 30.0);
  if (common <= 0.0 || seconds <= 0.0) {
    throw InvalidConfig("rate.common and window.seconds must be positive");
  }
  hc.wc.window_samples = static_cast<Index>(std::llround(common * seconds));
  hc.wc.overlap = cfg.get_double("window.overlap", 0.30);
  if (hc.wc.overlap < 0.0 || hc.wc.overlap >= 1.0) {
    throw InvalidConfig("window.overlap must lie in [0, 1)");
  }

  const std::string mode = cfg.get_str("dataset.standardize", "participant");
  if (mode == "strict") {
    hc.strict_standardize = true;
  } else if (mode != "participant") {
    throw InvalidConfig("dataset.standardize must be 'participant' or 'strict', got '" + mode +
                        "'");
  }

  hc.spec.input_length = static_cast<int>(hc.wc.window_samples);
  hc.spec.dropout = cfg.get_double("train.dropout", hc.spec.dropout);

  hc.train.lr = cfg.get_double("train.lr", hc.train.lr);
  hc.train.epochs = static_cast<int>(cfg.get_int("train.epochs", hc.train.epochs));
  hc.train.batch_size = static_cast<int>(cfg.get_int("train.batch", hc.train.batch_size));
  hc.train.weight_decay = cfg.get_double("train.weight_decay", hc.train.weight_decay);
  hc.train.lr_decay = cfg.get_double("train.lr_decay", hc.train.lr_decay);

  hc.transfer.lr = cfg.get_double("transfer.lr", hc.transfer.lr);
  hc.transfer.epochs = static_cast<int>(cfg.get_int("transfer.epochs", hc.transfer.epochs));
  hc.transfer.shots_per_class =
      static_cast<int>(cfg.get_int("transfer.shots", hc.transfer.shots_per_class));
  hc.transfer.batch_size = static_cast<int>(cfg.get_int("transfer.batch", hc.transfer.batch_size));
  hc.transfer.weight_decay = cfg.get_double("transfer.weight_decay", hc.transfer.weight_decay);
  hc.transfer.lr_decay = cfg.get_double("transfer.lr_decay", hc.transfer.lr_decay);

  hc.forest.n_trees = static_cast<int>(cfg.get_int("rfc.trees", hc.forest.n_trees));
  hc.forest.max_depth = static_cast<int>(cfg.get_int("rfc.max_depth", hc.forest.max_depth));
  hc.forest.min_samples_leaf =
      static_cast<int>(cfg.get_int("rfc.min_samples_leaf", hc.forest.min_samples_leaf));
  hc.forest.n_classes = hc.n_classes;

  const std::string prefix = "participant.";
  for (const std::string& key : cfg.keys_with_prefix(prefix)) {
    const std::string suffix = ".shift";
    if (key.size() > prefix.size() + suffix.size() &&
        key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string id = key.substr(prefix.size(), key.size() - prefix.size() - suffix.size());
      hc.participant_shift[id] = cfg.get_double(key, 1.0);
    }
  }
  hc.config_hash = cfg.hash_hex();
  return hc;
}

// ---------------------------------------------------------------------------
// Channel subsets & strict-mode folds
// ---------------------------------------------------------------------------

std::vector<int> subset_columns(const std::string& subset,
                                const std::vector<std::string>& channel_names) {
  auto lookup = [&](const std::vector<std::string>& wanted) {
    std::vector<int> cols;
    for (const std::string& name : wanted) {
      const auto it = std::find(channel_names.begin(), channel_names.end(), name);
      if (it == channel_names.end()) {
        throw InvalidConfig("channel '" + name + "' not present in the dataset");
      }
      cols.push_back(static_cast<int>(it - channel_names.begin()));
    }
    return cols;
  };
  if (subset == "all") {
    std::vector<int> cols(channel_names.size());
    std::iota(cols.begin(), cols.end(), 0);
    return cols;
  }
  if (subset == "lfi") return lookup({"v1", "d1", "v2", "d2"});
  if (subset == "imu") return lookup({"accx", "accy", "accz", "gyrx", "gyry", "gyrz"});
  throw InvalidConfig("unknown channel subset '" + subset + "' (expected all, lfi or imu)");
}

std::vector<data::LabeledWindow> slice_channels(const std::vector<data::LabeledWindow>& in,
                                                const std::vector<int>& cols) {
  if (cols.empty()) throw InvalidConfig("slice_channels: empty column list");
  std::vector<data::LabeledWindow> out(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    const auto& src = in[i];
    for (int c : cols) {
      if (c < 0 || c >= src.data.cols()) throw ShapeMismatch("channel column out of range");
    }
    auto& dst = out[i];
    dst.label = src.label;
    dst.participant_id = src.participant_id;
    dst.source_offset = src.source_offset;
    dst.data.resize(src.data.rows(), static_cast<Eigen::Index>(cols.size()));
    for (size_t k = 0; k < cols.size(); ++k) {
      dst.data.col(static_cast<Eigen::Index>(k)) = src.data.col(cols[k]);
    }
  }
  return out;
}

data::HarDataset strict_fold_dataset(const std::vector<data::SensorStream>& streams,
                                     const std::string& holdout, const data::WindowConfig& wc) {
  if (streams.empty()) throw InvalidConfig("strict_fold_dataset: no streams");
  const Index n_ch = streams.front().num_channels();
  bool found = false;
  for (const auto& s : streams) {
    s.validate();
    if (!s.is_uniform()) throw RateMismatch("strict_fold_dataset: streams must be uniform");
    if (s.num_channels() != n_ch) throw ShapeMismatch("streams disagree on channel count");
    found = found || s.participant_id == holdout;
  }
  if (!found) throw InvalidConfig("strict_fold_dataset: unknown participant '" + holdout + "'");

  // Pooled population statistics over the training cohort only.
  VectorXd sum = VectorXd::Zero(n_ch), sumsq = VectorXd::Zero(n_ch);
  double n = 0.0;
  for (const auto& s : streams) {
    if (s.participant_id == holdout) continue;
    for (Index c = 0; c < n_ch; ++c) {
      sum[c] += s.channels[static_cast<size_t>(c)].sum();
      sumsq[c] += s.channels[static_cast<size_t>(c)].squaredNorm();
    }
    n += static_cast<double>(s.channels.front().size());
  }
  if (n <= 0.0) throw InvalidConfig("strict_fold_dataset: training cohort is empty");
  data::ChannelStats stats;
  stats.mean = sum / n;
  stats.stddev = (sumsq / n - stats.mean.cwiseProduct(stats.mean)).cwiseMax(0.0).cwiseSqrt();

  data::HarDataset ds;
  ds.channel_names = streams.front().channel_names;
  ds.rate_hz = streams.front().channel_rates_hz.empty() ? 0.0 : streams.front().channel_rates_hz[0];
  for (const auto& s : streams) {
    data::SensorStream scaled = s;
    data::standardize_with(scaled, stats);
    auto ws = data::make_windows(scaled, wc);
    for (auto& w : ws) ds.windows.push_back(std::move(w));
    ds.participants.push_back(s.participant_id);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// LOPOCV runs
// ---------------------------------------------------------------------------

namespace {

struct FoldJob {
  std::string participant;
  const std::vector<data::LabeledWindow>* windows = nullptr;
  std::vector<Index> train;
  std::vector<Index> test;
};

void finalize_run(RunResult& rr, int n_classes) {
  MatrixXd pooled = MatrixXd::Zero(n_classes, n_classes);
  std::vector<double> macros;
  for (const auto& fr : rr.folds) {
    pooled += fr.primary().confusion;
    macros.push_back(fr.primary().macro_f1);
  }
  rr.pooled = metrics_from_confusion(pooled);
  const double n = static_cast<double>(macros.size());
  double mean = 0.0;
  for (double v : macros) mean += v;
  mean = n > 0 ? mean / n : 0.0;
  double var = 0.0;
  for (double v : macros) var += (v - mean) * (v - mean);
  rr.mean_macro_f1 = mean;
  rr.std_macro_f1 = n > 0 ? std::sqrt(var / n) : 0.0;
}

}  // namespace

RunResult run_lopocv(const std::string& kind, const data::HarDataset& ds,
                     const HarnessConfig& hc, std::uint64_t seed, const RunOptions& opt) {
  if (kind != "rfc" && kind != "cnn" && kind != "transfer") {
    throw InvalidConfig("unknown task '" + kind + "' (expected rfc, cnn or transfer)");
  }
  const auto t0 = std::chrono::steady_clock::now();

  RunResult rr;
  rr.kind = kind;
  rr.subset = opt.subset_name;
  rr.seed = seed;
  rr.config_hash = hc.config_hash;

  // Assemble per-fold window sets. In strict mode each fold re-standardizes
  // the raw streams with training-cohort statistics; otherwise all folds
  // share the per-participant-standardized windows in `ds`.
  std::vector<FoldJob> jobs;
  std::vector<std::vector<data::LabeledWindow>> storage;  // owns sliced/strict windows
  if (hc.strict_standardize) {
    if (opt.raw_streams == nullptr || opt.raw_streams->empty()) {
      throw InvalidConfig("strict standardization requires the raw streams");
    }
    for (const auto& held : *opt.raw_streams) {
      data::HarDataset fds = strict_fold_dataset(*opt.raw_streams, held.participant_id, hc.wc);
      FoldJob job;
      job.participant = held.participant_id;
      job.test = fds.indices_of_participant(held.participant_id);
      for (Index i = 0; i < static_cast<Index>(fds.windows.size()); ++i) {
        if (fds.windows[static_cast<size_t>(i)].participant_id != held.participant_id) {
          job.train.push_back(i);
        }
      }
      storage.push_back(opt.channel_cols.empty()
                            ? std::move(fds.windows)
                            : slice_channels(fds.windows, opt.channel_cols));
      jobs.push_back(std::move(job));
    }
    for (size_t i = 0; i < jobs.size(); ++i) jobs[i].windows = &storage[i];
  } else {
    const std::vector<data::LabeledWindow>* windows = &ds.windows;
    if (!opt.channel_cols.empty()) {
      storage.push_back(slice_channels(ds.windows, opt.channel_cols));
      windows = &storage.back();
    }
    for (auto& fold : data::lopocv_splits(ds)) {
      jobs.push_back(FoldJob{fold.participant, windows, std::move(fold.train),
                             std::move(fold.test)});
    }
  }
  if (jobs.empty()) throw InvalidConfig("run_lopocv: dataset yields no folds");
  if (opt.base_models != nullptr && opt.base_models->size() != jobs.size()) {
    throw ShapeMismatch("base model count does not match the fold count");
  }

  for (size_t fold_i = 0; fold_i < jobs.size(); ++fold_i) {
    const FoldJob& job = jobs[fold_i];
    const auto& windows = *job.windows;
    if (windows.empty()) throw InvalidConfig("run_lopocv: no windows");
    const std::uint64_t fseed = derive_seed(seed, "fold", fnv1a64(job.participant));

    FoldResult fr;
    fr.participant = job.participant;
    const auto shift_it = hc.participant_shift.find(job.participant);
    if (shift_it != hc.participant_shift.end()) fr.shift = shift_it->second;

    const std::vector<Index> bal =
        data::balance_indices(windows, job.train, derive_seed(fseed, "balance", 0), true);
    fr.n_train = static_cast<Index>(bal.size());
    fr.n_test = static_cast<Index>(job.test.size());

    if (kind == "rfc") {
      rfc::RandomForest forest;
      forest.fit(rfc::feature_matrix(windows, bal), rfc::label_vector(windows, bal), hc.forest,
                 derive_seed(fseed, "forest", 0));
      const auto pred = forest.predict(rfc::feature_matrix(windows, job.test));
      fr.test = compute_metrics(labels_of(windows, job.test), pred, hc.n_classes);
    } else {
      cnn::CnnSpec spec = hc.spec;
      spec.in_channels = static_cast<int>(windows.front().data.cols());
      spec.input_length = static_cast<int>(windows.front().data.rows());
      spec.n_classes = hc.n_classes;
      spec.validate();

      cnn::Model<float> model;
      if (kind == "transfer" && opt.base_models != nullptr) {
        model = opt.base_models->at(fold_i);
      } else {
        model = cnn::Model<float>::init(spec, derive_seed(fseed, "init", 0));
        cnn::TrainConfig tc = hc.train;
        tc.seed = derive_seed(fseed, "train", 0);
        cnn::fit(model, windows, bal, tc);
      }
      fr.test = compute_metrics(labels_of(windows, job.test),
                                cnn::predict(model, windows, job.test), hc.n_classes);

      if (kind == "transfer") {
        const auto split = personalize::select_shots(
            windows, job.test, hc.transfer.shots_per_class, hc.n_classes,
            derive_seed(fseed, "shots", 0));
        fr.n_shots = static_cast<Index>(split.shots.size());
        personalize::TransferConfig tcfg = hc.transfer;
        tcfg.seed = derive_seed(fseed, "transfer", 0);
        const auto adapted = personalize::adapt_fc2(model, windows, split.shots, tcfg);
        fr.base_heldout = compute_metrics(labels_of(windows, split.heldout),
                                          cnn::predict(model, windows, split.heldout),
                                          hc.n_classes);
        fr.adapted_heldout = compute_metrics(labels_of(windows, split.heldout),
                                             cnn::predict(adapted, windows, split.heldout),
                                             hc.n_classes);
      }
      if (opt.keep_models) rr.models.push_back(std::move(model));
    }
    rr.folds.push_back(std::move(fr));
  }

  finalize_run(rr, hc.n_classes);
  rr.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rr;
}

RunResult run_subset(const std::string& subset, const data::HarDataset& ds,
                     const HarnessConfig& hc, std::uint64_t seed, const RunOptions& opt) {
  const std::vector<std::string>& names =
      !ds.channel_names.empty()
          ? ds.channel_names
          : (opt.raw_streams != nullptr && !opt.raw_streams->empty()
                 ? opt.raw_streams->front().channel_names
                 : ds.channel_names);
  RunOptions sub = opt;
  sub.subset_name = subset;
  sub.channel_cols = subset == "all" ? std::vector<int>{} : subset_columns(subset, names);
  return run_lopocv("cnn", ds, hc, seed, sub);
}

std::vector<RunResult> run_ablation(const data::HarDataset& ds, const HarnessConfig& hc,
                                    std::uint64_t seed, const std::vector<std::string>& subsets,
                                    const RunOptions& opt) {
  std::vector<RunResult> out;
  for (const std::string& subset : subsets) {
    out.push_back(run_subset(subset, ds, hc, seed, opt));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string runs_csv(const std::vector<RunResult>& runs, int n_classes) {
  std::string out = "kind,subset,seed,fold,participant,shift,model,n_train,n_test,n_shots,"
                    "accuracy,macro_f1";
  for (int c = 0; c < n_classes; ++c) out += ",f1_" + to_string(static_cast<Activity>(c));
  for (int i = 0; i < n_classes; ++i) {
    for (int j = 0; j < n_classes; ++j) {
      out += ",c" + std::to_string(i) + std::to_string(j);
    }
  }
  out += '\n';

  for (const auto& rr : runs) {
    Index total_train = 0, total_test = 0, total_shots = 0;
    for (size_t i = 0; i < rr.folds.size(); ++i) {
      const auto& fr = rr.folds[i];
      total_train += fr.n_train;
      total_test += fr.n_test;
      total_shots += fr.n_shots;
      const std::string stem = rr.kind + ',' + rr.subset + ',' + std::to_string(rr.seed) + ',' +
                               std::to_string(i) + ',' + fr.participant + ',' + fmt(fr.shift, 2) +
                               ',';
      const std::string tail = ',' + std::to_string(fr.n_train) + ',' +
                               std::to_string(fr.n_test) + ',' + std::to_string(fr.n_shots);
      if (rr.kind == "transfer") {
        out += stem + "base_test" + tail;
        append_metric_columns(out, fr.test, n_classes);
        out += stem + "base_heldout" + tail;
        append_metric_columns(out, fr.base_heldout, n_classes);
        out += stem + "adapted" + tail;
        append_metric_columns(out, fr.adapted_heldout, n_classes);
      } else {
        out += stem + rr.kind + tail;
        append_metric_columns(out, fr.test, n_classes);
      }
    }
    out += rr.kind + ',' + rr.subset + ',' + std::to_string(rr.seed) + ",-1,all,," + "pooled," +
           std::to_string(total_train) + ',' + std::to_string(total_test) + ',' +
           std::to_string(total_shots);
    append_metric_columns(out, rr.pooled, n_classes);
  }
  return out;
}

void write_runs_csv(const std::string& path, const std::vector<RunResult>& runs, int n_classes) {
  write_text_file(path, runs_csv(runs, n_classes));
}

std::string summary_report(const std::vector<RunResult>& runs, const HarnessConfig& hc) {
  std::ostringstream os;
  os << "=== HAR evaluation summary ===\n";
  os << "version " << kVersion << '\n';
  os << "config_hash " << hc.config_hash << '\n';
  if (!runs.empty()) os << "seed " << runs.front().seed << '\n';
  os << "window " << hc.wc.window_samples << " samples, overlap " << fmt(hc.wc.overlap, 2)
     << ", standardize " << (hc.strict_standardize ? "strict" : "participant") << '\n';
  try {
    const auto probe = cnn::Model<float>::init(hc.spec, 1);
    os << "cnn parameters " << probe.param_count() << " (in_channels " << hc.spec.in_channels
       << ", conv " << hc.spec.channels[0] << '/' << hc.spec.channels[1] << '/'
       << hc.spec.channels[2] << '/' << hc.spec.channels[3] << ", fc1 " << hc.spec.fc1 << ")\n";
  } catch (const Error&) {
    os << "cnn parameters n/a (spec invalid for this window size)\n";
  }

  for (const auto& rr : runs) {
    os << "\n--- run " << rr.kind << " [" << rr.subset << "] seed=" << rr.seed
       << " folds=" << rr.folds.size() << " wall=" << fmt(rr.wall_seconds, 1) << "s\n";
    os << "pooled accuracy " << fmt(rr.pooled.accuracy, 4) << ", pooled macro_f1 "
       << fmt(rr.pooled.macro_f1, 4) << '\n';
    os << "fold macro_f1 mean " << fmt(rr.mean_macro_f1, 4) << " std " << fmt(rr.std_macro_f1, 4)
       << '\n';
    os << "per-class f1:";
    for (Eigen::Index c = 0; c < rr.pooled.per_class_f1.size(); ++c) {
      os << ' ' << to_string(static_cast<Activity>(c)) << '=' << fmt(rr.pooled.per_class_f1[c], 4);
    }
    os << '\n';
    if (rr.kind == "transfer") {
      os << "paired base -> adapted macro_f1 on shot-excluded test windows:\n";
      double base_hi = 0.0, adapted_hi = 0.0;
      int n_hi = 0;
      for (const auto& fr : rr.folds) {
        os << "  " << fr.participant << " shift " << fmt(fr.shift, 2) << ": "
           << fmt(fr.base_heldout.macro_f1, 4) << " -> " << fmt(fr.adapted_heldout.macro_f1, 4)
           << " (delta " << fmt(fr.adapted_heldout.macro_f1 - fr.base_heldout.macro_f1, 4)
           << ")\n";
        if (fr.shift >= 1.5) {
          base_hi += fr.base_heldout.macro_f1;
          adapted_hi += fr.adapted_heldout.macro_f1;
          ++n_hi;
        }
      }
      if (n_hi > 0) {
        os << "  shift>=1.5 folds (" << n_hi << "): base mean " << fmt(base_hi / n_hi, 4)
           << " -> adapted mean " << fmt(adapted_hi / n_hi, 4) << '\n';
      }
    } else {
      for (const auto& fr : rr.folds) {
        os << "  " << fr.participant << " shift " << fmt(fr.shift, 2) << ": macro_f1 "
           << fmt(fr.test.macro_f1, 4) << " accuracy " << fmt(fr.test.accuracy, 4) << " (train "
           << fr.n_train << ", test " << fr.n_test << ")\n";
      }
    }
  }
  return os.str();
}

void write_summary_report(const std::string& path, const std::vector<RunResult>& runs,
                          const HarnessConfig& hc) {
  write_text_file(path, summary_report(runs, hc));
}

}  // namespace har::eval
