#pragma once

#include "har/cnn.hpp"
#include "har/config.hpp"
#include "har/dataset.hpp"
#include "har/personalize.hpp"
#include "har/rfc.hpp"
#include "har/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace har::eval {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  MatrixXd confusion;     // rows = truth, cols = prediction
  VectorXd per_class_f1;  // one-vs-rest; 0 whenever the denominator is 0
  double accuracy = 0.0;
  double macro_f1 = 0.0;

  bool empty() const { return confusion.size() == 0; }
};

Metrics metrics_from_confusion(const MatrixXd& confusion);
Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                        int n_classes);

// ---------------------------------------------------------------------------
// Harness configuration (parsed once from the layered Config)
// ---------------------------------------------------------------------------

struct HarnessConfig {
  data::WindowConfig wc;
  bool strict_standardize = false;  // dataset.standardize = strict
  int n_classes = kNumActivities;
  cnn::CnnSpec spec;  // in_channels / input_length follow the data at run time
  cnn::TrainConfig train;
  personalize::TransferConfig transfer;
  rfc::ForestConfig forest;
  std::map<std::string, double> participant_shift;  // reporting / pairing only
  std::string config_hash;
};

HarnessConfig harness_config(const Config& cfg);

// ---------------------------------------------------------------------------
// Leave-one-participant-out runs
// ---------------------------------------------------------------------------

struct FoldResult {
  std::string participant;  // held out
  double shift = 1.0;       // personality shift when the config names one
  Index n_train = 0;        // balanced training windows
  Index n_test = 0;
  Index n_shots = 0;
  Metrics test;             // fold model on the full held-out window set
  Metrics base_heldout;     // transfer: stock model, shot windows excluded
  Metrics adapted_heldout;  // transfer: personalized model, same windows

  // The per-fold headline number: adapted metrics for transfer runs, plain
  // test metrics otherwise.
  const Metrics& primary() const { return adapted_heldout.empty() ? test : adapted_heldout; }
};

struct RunResult {
  std::string kind;    // rfc | cnn | transfer
  std::string subset;  // channel subset name, "all" unless ablating
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<FoldResult> folds;
  Metrics pooled;  // primary confusions summed over folds
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;  // population std over folds
  double wall_seconds = 0.0;
  std::vector<cnn::Model<float>> models;  // per-fold models when kept
};

struct RunOptions {
  bool keep_models = false;  // retain per-fold CNN models (cnn / transfer)
  // Transfer: reuse previously trained fold models instead of retraining
  // (must match the fold order of this run).
  const std::vector<cnn::Model<float>>* base_models = nullptr;
  std::vector<int> channel_cols;   // ablation column subset; empty = all
  std::string subset_name = "all";
  // Strict standardization needs the raw uniform streams to recompute
  // training-cohort statistics per fold.
  const std::vector<data::SensorStream>* raw_streams = nullptr;
};

RunResult run_lopocv(const std::string& kind, const data::HarDataset& ds,
                     const HarnessConfig& hc, std::uint64_t seed, const RunOptions& opt = {});

// Ablation = one cnn run per channel subset, common seed.
RunResult run_subset(const std::string& subset, const data::HarDataset& ds,
                     const HarnessConfig& hc, std::uint64_t seed, const RunOptions& opt = {});
std::vector<RunResult> run_ablation(const data::HarDataset& ds, const HarnessConfig& hc,
                                    std::uint64_t seed, const std::vector<std::string>& subsets,
                                    const RunOptions& opt = {});

// ---------------------------------------------------------------------------
// Channel subsets & strict-mode fold assembly
// ---------------------------------------------------------------------------

// "all" -> every channel; "lfi" -> v1,d1,v2,d2; "imu" -> acc*/gyr*.
std::vector<int> subset_columns(const std::string& subset,
                                const std::vector<std::string>& channel_names);
std::vector<data::LabeledWindow> slice_channels(const std::vector<data::LabeledWindow>& in,
                                                const std::vector<int>& cols);

// Pooled population statistics over every stream except `holdout`, applied to
// all streams, then windowed: the held-out wearer never contributes to the
// normalization statistics.
data::HarDataset strict_fold_dataset(const std::vector<data::SensorStream>& streams,
                                     const std::string& holdout, const data::WindowConfig& wc);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

// One CSV with a shared header; transfer runs contribute three rows per fold
// (model = base_test / base_heldout / adapted) plus one pooled row per run.
std::string runs_csv(const std::vector<RunResult>& runs, int n_classes);
void write_runs_csv(const std::string& path, const std::vector<RunResult>& runs, int n_classes);

// Human-readable summary with a provenance block (version, config hash, seed,
// parameter count) followed by one section per run.
std::string summary_report(const std::vector<RunResult>& runs, const HarnessConfig& hc);
void write_summary_report(const std::string& path, const std::vector<RunResult>& runs,
                          const HarnessConfig& hc);

}  // namespace har::eval
