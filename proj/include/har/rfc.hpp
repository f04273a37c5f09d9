#pragma once

#include "har/dataset.hpp"
#include "har/types.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace har::rfc {

// ---------------------------------------------------------------------------
// Statistical-feature random forest baseline: per-channel mean, population
// variance and L2 norm feed a bagged ensemble of CART/Gini trees with
// floor(sqrt(F)) random feature candidates per split.
// ---------------------------------------------------------------------------

// Features of one window, blocks concatenated: [means | variances | norms],
// each block in channel order; computed in double precision.
VectorXd stat_features(const MatrixXf& window);

// Rows = selected windows (in `subset` order), one stat_features row each.
MatrixXd feature_matrix(const std::vector<data::LabeledWindow>& windows,
                        const std::vector<Index>& subset);
std::vector<int> label_vector(const std::vector<data::LabeledWindow>& windows,
                              const std::vector<Index>& subset);

// Majority vote with ties resolved toward the lowest class index.
int argmax_lowest(const std::vector<int>& votes);

struct ForestConfig {
  int n_trees = 100;
  int n_classes = kNumActivities;
  int max_depth = 0;         // 0 = grow until pure / unsplittable
  int min_samples_leaf = 1;  // smallest child a split may create
};

class RandomForest {
 public:
  // Bootstrap-samples rows per tree; deterministic in (data, config, seed).
  void fit(const MatrixXd& x, const std::vector<int>& y, const ForestConfig& cfg,
           std::uint64_t seed);

  int predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& features) const;
  std::vector<int> predict(const MatrixXd& x) const;

  // Versioned text format; load throws IntegrityError on malformed input.
  void save(const std::string& path) const;
  static RandomForest load(const std::string& path);
  std::string serialize() const;
  static RandomForest deserialize(const std::string& text);

  int n_trees() const { return static_cast<int>(trees_.size()); }
  int n_classes() const { return config_.n_classes; }
  int n_features() const { return n_features_; }

 private:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;  // child node indices within the tree
    int leaf_class = 0;
  };
  using Tree = std::vector<Node>;

  int grow(Tree& tree, const MatrixXd& x, const std::vector<int>& y,
           std::vector<int>& rows, int depth, std::mt19937_64& rng) const;

  std::vector<Tree> trees_;
  ForestConfig config_;
  int n_features_ = 0;
};

}  // namespace har::rfc
