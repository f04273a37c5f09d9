#include "har/rfc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace har::rfc {

VectorXd stat_features(const MatrixXf& window) {
  const Index s = window.cols();
  if (window.rows() == 0 || s == 0) throw ShapeMismatch("stat_features: empty window");
  VectorXd f(3 * s);
  for (Index c = 0; c < s; ++c) {
    const VectorXd col = window.col(c).cast<double>();
    const double mean = col.mean();
    f[c] = mean;
    f[s + c] = (col.array() - mean).square().mean();
    f[2 * s + c] = col.norm();
  }
  return f;
}

MatrixXd feature_matrix(const std::vector<data::LabeledWindow>& windows,
                        const std::vector<Index>& subset) {
  if (subset.empty()) throw ShapeMismatch("feature_matrix: empty subset");
  const Index f = 3 * windows.at(static_cast<size_t>(subset[0])).data.cols();
  MatrixXd x(static_cast<Index>(subset.size()), f);
  for (size_t i = 0; i < subset.size(); ++i) {
    x.row(static_cast<Index>(i)) =
        stat_features(windows.at(static_cast<size_t>(subset[i])).data).transpose();
  }
  return x;
}

std::vector<int> label_vector(const std::vector<data::LabeledWindow>& windows,
                              const std::vector<Index>& subset) {
  std::vector<int> y(subset.size());
  for (size_t i = 0; i < subset.size(); ++i) {
    y[i] = static_cast<int>(windows.at(static_cast<size_t>(subset[i])).label);
  }
  return y;
}

int argmax_lowest(const std::vector<int>& votes) {
  if (votes.empty()) throw InvalidConfig("argmax_lowest: empty vote vector");
  int best = 0;
  for (int c = 1; c < static_cast<int>(votes.size()); ++c) {
    if (votes[static_cast<size_t>(c)] > votes[static_cast<size_t>(best)]) best = c;
  }
  return best;
}

namespace {

double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

}  // namespace

int RandomForest::grow(Tree& tree, const MatrixXd& x, const std::vector<int>& y,
                       std::vector<int>& rows, int depth, std::mt19937_64& rng) const {
  const int n_classes = config_.n_classes;
  std::vector<int> counts(static_cast<size_t>(n_classes), 0);
  for (int r : rows) ++counts[static_cast<size_t>(y[static_cast<size_t>(r)])];
  const int total = static_cast<int>(rows.size());
  const double parent_gini = gini(counts, total);

  auto make_leaf = [&]() {
    Node leaf;
    leaf.leaf_class = argmax_lowest(counts);
    tree.push_back(leaf);
    return static_cast<int>(tree.size()) - 1;
  };

  const bool depth_capped = config_.max_depth > 0 && depth >= config_.max_depth;
  if (total < 2 * config_.min_samples_leaf || parent_gini <= 0.0 || depth_capped) {
    return make_leaf();
  }

  // floor(sqrt(F)) candidate features per node, drawn without replacement
  // via partial Fisher-Yates.
  const int f_total = static_cast<int>(x.cols());
  const int f_try = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(f_total)))));
  std::vector<int> feat(static_cast<size_t>(f_total));
  std::iota(feat.begin(), feat.end(), 0);
  for (int i = 0; i < f_try; ++i) {
    std::uniform_int_distribution<int> pick(i, f_total - 1);
    std::swap(feat[static_cast<size_t>(i)], feat[static_cast<size_t>(pick(rng))]);
  }

  int best_feature = -1;
  double best_threshold = 0.0, best_score = parent_gini - 1e-12;
  std::vector<std::pair<double, int>> vals(rows.size());
  std::vector<int> left_counts(static_cast<size_t>(n_classes));

  for (int fi = 0; fi < f_try; ++fi) {
    const int f = feat[static_cast<size_t>(fi)];
    for (size_t i = 0; i < rows.size(); ++i) {
      vals[i] = {x(rows[i], f), y[static_cast<size_t>(rows[i])]};
    }
    std::sort(vals.begin(), vals.end());
    std::fill(left_counts.begin(), left_counts.end(), 0);
    int n_left = 0;
    for (size_t i = 0; i + 1 < vals.size(); ++i) {
      ++left_counts[static_cast<size_t>(vals[i].second)];
      ++n_left;
      if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
      const int n_right = total - n_left;
      if (n_left < config_.min_samples_leaf || n_right < config_.min_samples_leaf) continue;
      std::vector<int> right_counts(counts);
      for (int c = 0; c < n_classes; ++c) {
        right_counts[static_cast<size_t>(c)] -= left_counts[static_cast<size_t>(c)];
      }
      const double score = (n_left * gini(left_counts, n_left) +
                            n_right * gini(right_counts, n_right)) /
                           total;
      if (score < best_score) {
        best_score = score;
        best_feature = f;
        best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
      }
    }
  }

  if (best_feature < 0) return make_leaf();

  std::vector<int> left_rows, right_rows;
  for (int r : rows) {
    (x(r, best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
  }
  if (left_rows.empty() || right_rows.empty()) return make_leaf();  // numeric guard
  rows.clear();
  rows.shrink_to_fit();

  Node split;
  split.feature = best_feature;
  split.threshold = best_threshold;
  tree.push_back(split);
  const int self = static_cast<int>(tree.size()) - 1;
  const int left = grow(tree, x, y, left_rows, depth + 1, rng);
  const int right = grow(tree, x, y, right_rows, depth + 1, rng);
  tree[static_cast<size_t>(self)].left = left;
  tree[static_cast<size_t>(self)].right = right;
  return self;
}

void RandomForest::fit(const MatrixXd& x, const std::vector<int>& y, const ForestConfig& cfg,
                       std::uint64_t seed) {
  if (x.rows() == 0 || x.cols() == 0) throw ShapeMismatch("fit: empty feature matrix");
  if (static_cast<size_t>(x.rows()) != y.size()) {
    throw ShapeMismatch("fit: feature rows and labels disagree");
  }
  if (cfg.n_trees < 1 || cfg.n_classes < 2 || cfg.min_samples_leaf < 1) {
    throw InvalidConfig("fit: need n_trees >= 1, n_classes >= 2, min_samples_leaf >= 1");
  }
  for (int lbl : y) {
    if (lbl < 0 || lbl >= cfg.n_classes) throw InvalidConfig("fit: label out of range");
  }

  config_ = cfg;
  n_features_ = static_cast<int>(x.cols());
  trees_.assign(static_cast<size_t>(cfg.n_trees), {});

  const int n = static_cast<int>(x.rows());
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<int> rows(static_cast<size_t>(n));
    for (int& r : rows) r = pick(rng);
    grow(trees_[static_cast<size_t>(t)], x, y, rows, 0, rng);
  }
}

int RandomForest::predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& features) const {
  if (trees_.empty()) throw InvalidConfig("predict: forest is not fitted");
  if (static_cast<int>(features.size()) != n_features_) {
    throw ShapeMismatch("predict: feature size mismatch");
  }
  std::vector<int> votes(static_cast<size_t>(config_.n_classes), 0);
  for (const Tree& tree : trees_) {
    int node = 0;
    while (tree[static_cast<size_t>(node)].feature >= 0) {
      const Node& nd = tree[static_cast<size_t>(node)];
      node = features[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    ++votes[static_cast<size_t>(tree[static_cast<size_t>(node)].leaf_class)];
  }
  return argmax_lowest(votes);
}

std::vector<int> RandomForest::predict(const MatrixXd& x) const {
  std::vector<int> out(static_cast<size_t>(x.rows()));
  for (Index i = 0; i < x.rows(); ++i) out[static_cast<size_t>(i)] = predict_one(x.row(i));
  return out;
}

std::string RandomForest::serialize() const {
  std::ostringstream os;
  os << "HARF v1\n";
  os << "trees " << trees_.size() << " classes " << config_.n_classes << " features "
     << n_features_ << "\n";
  char buf[64];
  for (size_t t = 0; t < trees_.size(); ++t) {
    os << "tree " << t << " nodes " << trees_[t].size() << "\n";
    for (const Node& n : trees_[t]) {
      std::snprintf(buf, sizeof buf, "%.17g", n.threshold);
      os << n.feature << ' ' << buf << ' ' << n.left << ' ' << n.right << ' ' << n.leaf_class
         << "\n";
    }
  }
  return os.str();
}

RandomForest RandomForest::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string magic, version;
  if (!(is >> magic >> version) || magic != "HARF" || version != "v1") {
    throw IntegrityError("forest file: bad magic/version");
  }
  std::string kw1, kw2, kw3;
  size_t n_trees = 0;
  RandomForest rf;
  if (!(is >> kw1 >> n_trees >> kw2 >> rf.config_.n_classes >> kw3 >> rf.n_features_) ||
      kw1 != "trees" || kw2 != "classes" || kw3 != "features") {
    throw IntegrityError("forest file: bad header");
  }
  rf.config_.n_trees = static_cast<int>(n_trees);
  rf.trees_.resize(n_trees);
  for (size_t t = 0; t < n_trees; ++t) {
    std::string kw;
    size_t idx = 0, n_nodes = 0;
    if (!(is >> kw >> idx >> kw2 >> n_nodes) || kw != "tree" || kw2 != "nodes" || idx != t) {
      throw IntegrityError("forest file: bad tree header");
    }
    rf.trees_[t].resize(n_nodes);
    for (Node& n : rf.trees_[t]) {
      if (!(is >> n.feature >> n.threshold >> n.left >> n.right >> n.leaf_class)) {
        throw IntegrityError("forest file: truncated node list");
      }
      const auto m = static_cast<int>(n_nodes);
      const bool internal = n.feature >= 0;
      const bool bad_children =
          internal && (n.left < 0 || n.right < 0 || n.left >= m || n.right >= m);
      if (n.feature >= rf.n_features_ || bad_children || n.leaf_class < 0 ||
          n.leaf_class >= rf.config_.n_classes) {
        throw IntegrityError("forest file: node out of range");
      }
    }
  }
  return rf;
}

void RandomForest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IntegrityError("cannot open for writing: " + path);
  out << serialize();
  if (!out.good()) throw IntegrityError("short write: " + path);
}

RandomForest RandomForest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace har::rfc
