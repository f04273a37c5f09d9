#pragma once

#include "har/cnn.hpp"
#include "har/dataset.hpp"
#include "har/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace har::personalize {

// ---------------------------------------------------------------------------
// Few-shot personalization: keep every layer of a trained CNN frozen except
// the output layer, then fine-tune that layer on a handful of labeled
// windows ("shots") from the target wearer. With the feature extractor
// frozen, batchnorm in inference mode and dropout off, backpropagation
// reduces to softmax regression on cached FC1 features, which is what this
// module implements (bit-identical result, far less compute).
// ---------------------------------------------------------------------------

struct TransferConfig {
  int shots_per_class = 3;
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 64;
  double weight_decay = 1e-4;
  double lr_decay = 0.95;
  std::uint64_t seed = 0;
};

struct ShotSplit {
  std::vector<Index> shots;    // adaptation windows, shots_per_class per class
  std::vector<Index> heldout;  // the remaining candidates, original order
};

// Draws shots_per_class windows per class from `candidates` without
// replacement (seeded); throws MissingClassShots naming the class that has
// too few windows. Candidates keep their relative order in `heldout`.
ShotSplit select_shots(const std::vector<data::LabeledWindow>& windows,
                       const std::vector<Index>& candidates, int shots_per_class, int n_classes,
                       std::uint64_t seed);

// FC1 activations (post leaky ReLU, inference mode) for the given windows,
// one column per window in `idx` order.
template <typename Scalar>
typename cnn::Model<Scalar>::MatX frozen_features(const cnn::Model<Scalar>& m,
                                                  const std::vector<data::LabeledWindow>& windows,
                                                  const std::vector<Index>& idx,
                                                  int batch_size = 64) {
  using MatX = typename cnn::Model<Scalar>::MatX;
  MatX feats(m.spec.fc1, static_cast<Eigen::Index>(idx.size()));
  cnn::BatchCache<Scalar> cache;
  for (size_t first = 0; first < idx.size(); first += static_cast<size_t>(batch_size)) {
    const int count =
        static_cast<int>(std::min(idx.size() - first, static_cast<size_t>(batch_size)));
    const auto x = cnn::make_batch<Scalar>(windows, idx, first, count, nullptr);
    cnn::forward(m, x, count, /*train=*/false, 0, &cache);
    feats.middleCols(static_cast<Eigen::Index>(first), count) = cache.h;
  }
  return feats;
}

// Returns a copy of `base` whose fc2 weights were fine-tuned on the shot
// windows (warm start from the base weights, Adam with decoupled weight
// decay, per-epoch lr decay). Every other tensor is bit-identical to `base`.
template <typename Scalar>
cnn::Model<Scalar> adapt_fc2(const cnn::Model<Scalar>& base,
                             const std::vector<data::LabeledWindow>& windows,
                             const std::vector<Index>& shots, const TransferConfig& tc) {
  using MatX = typename cnn::Model<Scalar>::MatX;
  if (shots.empty()) throw InvalidConfig("adapt_fc2: no shot windows");
  if (tc.batch_size < 1 || tc.epochs < 0) throw InvalidConfig("adapt_fc2: bad batch/epochs");

  const MatX feats = frozen_features(base, windows, shots);
  std::vector<int> labels(shots.size());
  for (size_t i = 0; i < shots.size(); ++i) {
    labels[i] = static_cast<int>(windows.at(static_cast<size_t>(shots[i])).label);
  }

  cnn::Model<Scalar> adapted = base;
  MatX mw = MatX::Zero(adapted.w2.rows(), adapted.w2.cols());
  MatX vw = mw, mb = MatX::Zero(adapted.b2.rows(), 1), vb = mb;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;

  std::vector<Index> order(shots.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    const double lr = tc.lr * std::pow(tc.lr_decay, static_cast<double>(epoch));
    std::mt19937_64 rng(derive_seed(tc.seed, "transfer-epoch", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    for (size_t first = 0; first < order.size(); first += static_cast<size_t>(tc.batch_size)) {
      const int count =
          static_cast<int>(std::min(order.size() - first, static_cast<size_t>(tc.batch_size)));
      MatX fb(feats.rows(), count);
      std::vector<int> lb(static_cast<size_t>(count));
      for (int b = 0; b < count; ++b) {
        const auto src = static_cast<size_t>(order[first + static_cast<size_t>(b)]);
        fb.col(b) = feats.col(static_cast<Eigen::Index>(src));
        lb[static_cast<size_t>(b)] = labels[src];
      }

      MatX logits = adapted.w2 * fb;
      logits.colwise() += adapted.b2.col(0);
      MatX dlogits;
      const double loss = cnn::softmax_ce<Scalar>(logits, lb, &dlogits);
      if (!std::isfinite(loss)) throw NonFiniteLoss("transfer loss is not finite");

      const MatX gw = dlogits * fb.transpose();
      const MatX gb = dlogits.rowwise().sum();
      ++t;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
      auto update = [&](MatX& p, MatX& m1, MatX& m2, const MatX& g, bool is_weight) {
        m1 = static_cast<Scalar>(beta1) * m1 + static_cast<Scalar>(1.0 - beta1) * g;
        m2 = static_cast<Scalar>(beta2) * m2 + static_cast<Scalar>(1.0 - beta2) * g.cwiseProduct(g);
        p.array() -= static_cast<Scalar>(lr) * (m1 / static_cast<Scalar>(bc1)).array() /
                     ((m2 / static_cast<Scalar>(bc2)).array().sqrt() + static_cast<Scalar>(eps));
        if (is_weight && tc.weight_decay > 0.0) {
          p.array() -= static_cast<Scalar>(lr * tc.weight_decay) * p.array();
        }
      };
      update(adapted.w2, mw, vw, gw, true);
      MatX b2g = gb;
      update(adapted.b2, mb, vb, b2g, false);
    }
  }
  return adapted;
}

}  // namespace har::personalize
