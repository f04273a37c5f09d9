#pragma once

#include "har/dataset.hpp"
#include "har/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace har::cnn {

// ---------------------------------------------------------------------------
// 1D CNN for windowed activity classification, implemented from scratch on
// Eigen: four conv->batchnorm->leaky-ReLU->maxpool blocks, one hidden FC
// layer with inverted dropout, softmax output. Convolutions are same-padded
// stride-1 and run as im2col + GEMM; pooling is non-overlapping with floor
// division. Templated on scalar so float runs fast and double supports
// finite-difference gradient verification.
// ---------------------------------------------------------------------------

struct CnnSpec {
  int in_channels = 10;
  int input_length = 3600;
  int n_classes = kNumActivities;
  std::array<int, 4> channels = {32, 64, 128, 128};
  int kernel = 5;
  int pool = 5;
  int fc1 = 1024;
  double leaky_slope = 0.01;
  double dropout = 0.5;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;

  // Length entering each block, plus the final pooled length:
  // default 3600 -> 720 -> 144 -> 28 -> 5.
  std::array<int, 5> lengths() const {
    std::array<int, 5> out{};
    out[0] = input_length;
    for (int i = 0; i < 4; ++i) out[static_cast<size_t>(i) + 1] = out[static_cast<size_t>(i)] / pool;
    return out;
  }
  int flatten_size() const { return channels[3] * lengths()[4]; }

  void validate() const {
    if (in_channels < 1 || input_length < 1 || n_classes < 2 || fc1 < 1) {
      throw InvalidConfig("cnn spec: channels/length/classes/fc1 must be positive");
    }
    if (kernel < 1 || kernel % 2 == 0) throw InvalidConfig("cnn spec: kernel must be odd");
    if (pool < 1) throw InvalidConfig("cnn spec: pool must be >= 1");
    for (int c : channels) {
      if (c < 1) throw InvalidConfig("cnn spec: conv channels must be positive");
    }
    if (lengths()[4] < 1) throw InvalidConfig("cnn spec: input too short for four pool stages");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidConfig("cnn spec: dropout must be in [0,1)");
    if (bn_momentum <= 0.0 || bn_momentum > 1.0) {
      throw InvalidConfig("cnn spec: bn_momentum must be in (0,1]");
    }
  }
};

template <typename Scalar>
struct Model {
  using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct ConvBlock {
    MatX w;      // C_out x (C_in * K)
    MatX b;      // C_out x 1
    MatX gamma;  // C_out x 1
    MatX beta;   // C_out x 1
    VecX run_mean, run_var;  // inference statistics (buffers, not parameters)
  };

  CnnSpec spec;
  std::array<ConvBlock, 4> conv;
  MatX w1, b1;  // fc1 x flatten, fc1 x 1
  MatX w2, b2;  // classes x fc1, classes x 1

  // He-normal weights (drawn in double, then cast), zero biases, identity
  // batchnorm, zero/unit running stats.
  static Model init(const CnnSpec& spec, std::uint64_t seed) {
    spec.validate();
    Model m;
    m.spec = spec;
    auto he = [](Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, std::uint64_t s) {
      std::mt19937_64 rng(s);
      std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      MatX w(rows, cols);
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) w(r, c) = static_cast<Scalar>(gauss(rng));
      }
      return w;
    };
    int c_in = spec.in_channels;
    for (int l = 0; l < 4; ++l) {
      auto& blk = m.conv[static_cast<size_t>(l)];
      const int c_out = spec.channels[static_cast<size_t>(l)];
      const int fan_in = c_in * spec.kernel;
      blk.w = he(c_out, fan_in, fan_in, derive_seed(seed, "conv", static_cast<std::uint64_t>(l)));
      blk.b = MatX::Zero(c_out, 1);
      blk.gamma = MatX::Ones(c_out, 1);
      blk.beta = MatX::Zero(c_out, 1);
      blk.run_mean = VecX::Zero(c_out);
      blk.run_var = VecX::Ones(c_out);
      c_in = c_out;
    }
    m.w1 = he(spec.fc1, spec.flatten_size(), spec.flatten_size(), derive_seed(seed, "fc", 1));
    m.b1 = MatX::Zero(spec.fc1, 1);
    m.w2 = he(spec.n_classes, spec.fc1, spec.fc1, derive_seed(seed, "fc", 2));
    m.b2 = MatX::Zero(spec.n_classes, 1);
    return m;
  }

  // Same shapes, every parameter zero; running stats zeroed too (unused).
  Model zeros_like() const {
    Model z = *this;
    for (auto& blk : z.conv) {
      blk.w.setZero();
      blk.b.setZero();
      blk.gamma.setZero();
      blk.beta.setZero();
      blk.run_mean.setZero();
      blk.run_var.setZero();
    }
    z.w1.setZero();
    z.b1.setZero();
    z.w2.setZero();
    z.b2.setZero();
    return z;
  }

  Index param_count() const {
    Index n = 0;
    for (const auto& blk : conv) {
      n += blk.w.size() + blk.b.size() + blk.gamma.size() + blk.beta.size();
    }
    return n + w1.size() + b1.size() + w2.size() + b2.size();
  }
};

// Stable enumeration of trainable tensors; weight_decay applies only where
// `is_weight` is set (conv/fc weight matrices, not biases or batchnorm).
template <typename Scalar>
struct ParamRef {
  const char* name;
  bool is_weight;
  typename Model<Scalar>::MatX* tensor;
};

template <typename Scalar>
std::vector<ParamRef<Scalar>> parameters(Model<Scalar>& m) {
  static constexpr const char* kConvNames[4][4] = {
      {"conv1.w", "conv1.b", "conv1.gamma", "conv1.beta"},
      {"conv2.w", "conv2.b", "conv2.gamma", "conv2.beta"},
      {"conv3.w", "conv3.b", "conv3.gamma", "conv3.beta"},
      {"conv4.w", "conv4.b", "conv4.gamma", "conv4.beta"},
  };
  std::vector<ParamRef<Scalar>> out;
  for (int l = 0; l < 4; ++l) {
    auto& blk = m.conv[static_cast<size_t>(l)];
    out.push_back({kConvNames[l][0], true, &blk.w});
    out.push_back({kConvNames[l][1], false, &blk.b});
    out.push_back({kConvNames[l][2], false, &blk.gamma});
    out.push_back({kConvNames[l][3], false, &blk.beta});
  }
  out.push_back({"fc1.w", true, &m.w1});
  out.push_back({"fc1.b", false, &m.b1});
  out.push_back({"fc2.w", true, &m.w2});
  out.push_back({"fc2.b", false, &m.b2});
  return out;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename Scalar>
struct BatchCache {
  using MatX = typename Model<Scalar>::MatX;
  using VecX = typename Model<Scalar>::VecX;

  int batch = 0;
  MatX x0;                      // block-0 input (kept for the backward pass)
  std::array<MatX, 4> z;        // pre-batchnorm conv activations
  std::array<MatX, 3> pooled;   // block outputs 0..2 (inputs to blocks 1..3)
  std::array<VecX, 4> mean, var, inv_std;  // statistics used by this pass
  std::array<Eigen::MatrixXi, 4> argmax;   // pool source column (per sample)
  MatX flat;  // flatten x batch
  MatX a1;    // fc1 pre-activation
  MatX h;     // fc1 after leaky + dropout (input to fc2)
  MatX mask;  // inverted-dropout multiplier applied to h

  // Per-sample scratch tiles. The DRAM on small machines is the bottleneck,
  // not FLOPs, so forward/backward stream one sample at a time through
  // buffers that stay cache-resident instead of materializing batch-wide
  // intermediates.
  MatX s_col, s_z, s_y, s_xh, s_dy, s_dz, s_dcol, s_dx;
};

namespace detail {

// X: C x (B*L_in) blocks -> C*K x (B*L_in) same-padded patch matrix.
template <typename MIn, typename MOut>
void im2col(const MIn& x, int c, int l, int batch, int kernel, MOut& out) {
  const int pad = kernel / 2;
  out.setZero(static_cast<Eigen::Index>(c) * kernel, x.cols());
  for (int k = 0; k < kernel; ++k) {
    const int shift = k - pad;
    const int j0 = std::max(0, -shift);
    const int j1 = l - std::max(0, shift);
    if (j1 <= j0) continue;
    for (int b = 0; b < batch; ++b) {
      out.block(static_cast<Eigen::Index>(k) * c, static_cast<Eigen::Index>(b) * l + j0, c,
                j1 - j0) = x.block(0, static_cast<Eigen::Index>(b) * l + j0 + shift, c, j1 - j0);
    }
  }
}

// Transpose of im2col: scatter-add patch gradients back onto the input grid.
template <typename MIn, typename MOut>
void col2im(const MIn& dcol, int c, int l, int batch, int kernel, MOut& dx) {
  const int pad = kernel / 2;
  dx.setZero(c, static_cast<Eigen::Index>(batch) * l);
  for (int k = 0; k < kernel; ++k) {
    const int shift = k - pad;
    const int j0 = std::max(0, -shift);
    const int j1 = l - std::max(0, shift);
    if (j1 <= j0) continue;
    for (int b = 0; b < batch; ++b) {
      dx.block(0, static_cast<Eigen::Index>(b) * l + j0 + shift, c, j1 - j0) +=
          dcol.block(static_cast<Eigen::Index>(k) * c, static_cast<Eigen::Index>(b) * l + j0, c,
                     j1 - j0);
    }
  }
}

template <typename M>
M leaky(const M& x, double slope) {
  return x.cwiseMax(x * static_cast<typename M::Scalar>(slope));
}

// y = leaky(gamma * (z - mean) * inv_std + beta) followed by non-overlapping
// max pool over one sample tile; `amax` receives tile-local source columns.
template <typename Scalar, typename ZTile, typename OutTile, typename AmaxTile>
void bn_act_pool_tile(const ZTile& z, const typename Model<Scalar>::VecX& mean,
                      const typename Model<Scalar>::VecX& inv_std,
                      const typename Model<Scalar>::MatX& gamma,
                      const typename Model<Scalar>::MatX& beta, Scalar slope, int pool,
                      typename Model<Scalar>::MatX& s_y, OutTile out, AmaxTile* amax) {
  s_y = (((z.colwise() - mean).array().colwise() * (inv_std.array() * gamma.col(0).array()))
             .colwise() +
         beta.col(0).array())
            .matrix();
  s_y = s_y.cwiseMax(s_y * slope);
  const int c_out = static_cast<int>(s_y.rows());
  const int len_out = static_cast<int>(out.cols());
  for (int j = 0; j < len_out; ++j) {
    const int src0 = j * pool;
    for (int c = 0; c < c_out; ++c) {
      Scalar best = s_y(c, src0);
      int best_col = src0;
      for (int p = 1; p < pool; ++p) {
        if (s_y(c, src0 + p) > best) {
          best = s_y(c, src0 + p);
          best_col = src0 + p;
        }
      }
      out(c, j) = best;
      if (amax) (*amax)(c, j) = best_col;
    }
  }
}

}  // namespace detail

// Forward pass over a batch laid out as C_in x (B * L) with per-sample blocks
// side by side. Training mode uses batch statistics and dropout; the model is
// untouched (fit() folds the cached batch stats into the running estimates).
// When a cache is supplied (training or introspection) the pre-batchnorm
// activations are kept batch-wide for backward(); inference without a cache
// streams each sample end to end so nothing larger than one tile is touched.
template <typename Scalar>
typename Model<Scalar>::MatX forward(const Model<Scalar>& m,
                                     const typename Model<Scalar>::MatX& x0, int batch,
                                     bool train, std::uint64_t dropout_seed = 0,
                                     BatchCache<Scalar>* cache = nullptr) {
  using MatX = typename Model<Scalar>::MatX;
  using VecX = typename Model<Scalar>::VecX;
  const CnnSpec& spec = m.spec;
  const auto lens = spec.lengths();
  if (x0.rows() != spec.in_channels ||
      x0.cols() != static_cast<Eigen::Index>(batch) * lens[0]) {
    throw ShapeMismatch("cnn forward: input shape mismatch");
  }
  const Scalar slope = static_cast<Scalar>(spec.leaky_slope);
  BatchCache<Scalar> local;
  BatchCache<Scalar>& cc = cache ? *cache : local;
  cc.batch = batch;

  const int flat_size = spec.flatten_size();
  const int len4 = lens[4];
  cc.flat.resize(flat_size, batch);

  if (!train && cache == nullptr) {
    // Streaming inference: per sample, all four blocks back to back.
    MatX s_col, s_z, s_y;
    std::array<MatX, 4> out;
    for (int l = 0; l < 4; ++l) {
      out[static_cast<size_t>(l)].resize(spec.channels[static_cast<size_t>(l)],
                                         lens[static_cast<size_t>(l) + 1]);
    }
    for (int b = 0; b < batch; ++b) {
      int c_in = spec.in_channels;
      for (int l = 0; l < 4; ++l) {
        const auto& blk = m.conv[static_cast<size_t>(l)];
        const int len = lens[static_cast<size_t>(l)];
        if (l == 0) {
          detail::im2col(x0.middleCols(static_cast<Eigen::Index>(b) * len, len), c_in, len, 1,
                         spec.kernel, s_col);
        } else {
          detail::im2col(out[static_cast<size_t>(l) - 1], c_in, len, 1, spec.kernel, s_col);
        }
        s_z.noalias() = blk.w * s_col;
        s_z.colwise() += blk.b.col(0);
        const VecX inv_std =
            (blk.run_var.array() + static_cast<Scalar>(spec.bn_eps)).rsqrt();
        detail::bn_act_pool_tile<Scalar>(s_z, blk.run_mean, inv_std, blk.gamma, blk.beta,
                                         slope, spec.pool, s_y,
                                         out[static_cast<size_t>(l)].middleCols(
                                             0, lens[static_cast<size_t>(l) + 1]),
                                         static_cast<Eigen::MatrixXi*>(nullptr));
        c_in = spec.channels[static_cast<size_t>(l)];
      }
      // Flatten column-major: index = position * C + channel.
      for (int j = 0; j < len4; ++j) {
        cc.flat.col(b).segment(static_cast<Eigen::Index>(j) * spec.channels[3],
                               spec.channels[3]) = out[3].col(j);
      }
    }
  } else {
    cc.x0 = x0;
    const MatX* in = &cc.x0;
    int c_in = spec.in_channels;
    for (int l = 0; l < 4; ++l) {
      const auto& blk = m.conv[static_cast<size_t>(l)];
      const int c_out = spec.channels[static_cast<size_t>(l)];
      const int len = lens[static_cast<size_t>(l)];
      const int len_out = lens[static_cast<size_t>(l) + 1];

      MatX& z = cc.z[static_cast<size_t>(l)];
      z.resize(c_out, static_cast<Eigen::Index>(batch) * len);
      Eigen::VectorXd acc_sum = Eigen::VectorXd::Zero(c_out);
      Eigen::VectorXd acc_sq = Eigen::VectorXd::Zero(c_out);
      for (int b = 0; b < batch; ++b) {
        detail::im2col(in->middleCols(static_cast<Eigen::Index>(b) * len, len), c_in, len, 1,
                       spec.kernel, cc.s_col);
        cc.s_z.noalias() = blk.w * cc.s_col;
        cc.s_z.colwise() += blk.b.col(0);
        z.middleCols(static_cast<Eigen::Index>(b) * len, len) = cc.s_z;
        if (train) {
          acc_sum += cc.s_z.template cast<double>().rowwise().sum();
          acc_sq += cc.s_z.template cast<double>().array().square().matrix().rowwise().sum();
        }
      }

      VecX mean, var;
      if (train) {
        const double n = static_cast<double>(batch) * len;
        const Eigen::VectorXd mean_d = acc_sum / n;
        const Eigen::VectorXd var_d =
            (acc_sq / n - mean_d.array().square().matrix()).cwiseMax(0.0);  // biased
        mean = mean_d.cast<Scalar>();
        var = var_d.cast<Scalar>();
      } else {
        mean = blk.run_mean;
        var = blk.run_var;
      }
      VecX inv_std = (var.array() + static_cast<Scalar>(spec.bn_eps)).rsqrt();
      cc.mean[static_cast<size_t>(l)] = mean;
      cc.var[static_cast<size_t>(l)] = var;
      cc.inv_std[static_cast<size_t>(l)] = inv_std;

      Eigen::MatrixXi& amax = cc.argmax[static_cast<size_t>(l)];
      amax.resize(c_out, static_cast<Eigen::Index>(batch) * len_out);
      MatX* outp = l < 3 ? &cc.pooled[static_cast<size_t>(l)] : nullptr;
      if (outp) outp->resize(c_out, static_cast<Eigen::Index>(batch) * len_out);
      for (int b = 0; b < batch; ++b) {
        auto amax_tile = amax.middleCols(static_cast<Eigen::Index>(b) * len_out, len_out);
        if (outp) {
          detail::bn_act_pool_tile<Scalar>(
              z.middleCols(static_cast<Eigen::Index>(b) * len, len), mean, inv_std, blk.gamma,
              blk.beta, slope, spec.pool, cc.s_y,
              outp->middleCols(static_cast<Eigen::Index>(b) * len_out, len_out), &amax_tile);
        } else {
          cc.s_z.resize(c_out, len_out);
          detail::bn_act_pool_tile<Scalar>(
              z.middleCols(static_cast<Eigen::Index>(b) * len, len), mean, inv_std, blk.gamma,
              blk.beta, slope, spec.pool, cc.s_y, cc.s_z.middleCols(0, len_out), &amax_tile);
          for (int j = 0; j < len4; ++j) {
            cc.flat.col(b).segment(static_cast<Eigen::Index>(j) * spec.channels[3],
                                   spec.channels[3]) = cc.s_z.col(j);
          }
        }
      }
      in = outp;
      c_in = c_out;
    }
  }
  MatX& flat = cc.flat;

  cc.a1 = m.w1 * flat;
  cc.a1.colwise() += m.b1.col(0);
  MatX h = detail::leaky(cc.a1, spec.leaky_slope);

  if (train && spec.dropout > 0.0) {
    const double keep = 1.0 - spec.dropout;
    cc.mask.resize(h.rows(), h.cols());
    std::mt19937_64 rng(dropout_seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        cc.mask(r, c) = unif(rng) < keep ? static_cast<Scalar>(1.0 / keep) : Scalar(0);
      }
    }
    h = h.cwiseProduct(cc.mask);
  } else {
    cc.mask.resize(0, 0);
  }
  cc.h = h;

  MatX logits = m.w2 * h;
  logits.colwise() += m.b2.col(0);
  return logits;
}

// Mean softmax cross-entropy; optionally emits dL/dlogits for the batch.
template <typename Scalar>
double softmax_ce(const typename Model<Scalar>::MatX& logits, const std::vector<int>& labels,
                  typename Model<Scalar>::MatX* dlogits) {
  using MatX = typename Model<Scalar>::MatX;
  const auto batch = logits.cols();
  if (static_cast<size_t>(batch) != labels.size() || batch == 0) {
    throw ShapeMismatch("softmax_ce: labels/logits mismatch");
  }
  MatX p = logits;
  double loss = 0.0;
  for (Eigen::Index c = 0; c < batch; ++c) {
    const Scalar mx = p.col(c).maxCoeff();
    p.col(c) = (p.col(c).array() - mx).exp();
    const Scalar sum = p.col(c).sum();
    p.col(c) /= sum;
    const int y = labels[static_cast<size_t>(c)];
    if (y < 0 || y >= logits.rows()) throw InvalidConfig("softmax_ce: label out of range");
    loss -= std::log(std::max(static_cast<double>(p(y, c)), 1e-300));
  }
  loss /= static_cast<double>(batch);
  if (dlogits) {
    *dlogits = p / static_cast<Scalar>(batch);
    for (Eigen::Index c = 0; c < batch; ++c) {
      (*dlogits)(labels[static_cast<size_t>(c)], c) -= static_cast<Scalar>(1.0 / static_cast<double>(batch));
    }
  }
  return loss;
}

// Backward pass for a training-mode forward; accumulates into `grads`
// (call on a zeros_like() model). Input gradients are not produced. Like
// forward(), conv blocks stream per-sample tiles; xhat and the pool-routed
// gradient are recomputed from the cached pre-batchnorm activations (twice
// per block: the batchnorm reductions must complete before dz can form).
template <typename Scalar>
void backward(const Model<Scalar>& m, BatchCache<Scalar>& cc,
              const typename Model<Scalar>::MatX& dlogits, Model<Scalar>& grads) {
  using MatX = typename Model<Scalar>::MatX;
  using VecX = typename Model<Scalar>::VecX;
  const CnnSpec& spec = m.spec;
  const auto lens = spec.lengths();
  const int batch = cc.batch;
  const Scalar slope = static_cast<Scalar>(spec.leaky_slope);

  grads.w2 += dlogits * cc.h.transpose();
  grads.b2.col(0) += dlogits.rowwise().sum();
  MatX dh = m.w2.transpose() * dlogits;

  if (cc.mask.size() > 0) dh = dh.cwiseProduct(cc.mask);
  MatX da1 =
      dh.cwiseProduct((cc.a1.array() > Scalar(0)).select(MatX::Ones(dh.rows(), dh.cols()),
                                                         MatX::Constant(dh.rows(), dh.cols(), slope)));

  grads.w1 += da1 * cc.flat.transpose();
  grads.b1.col(0) += da1.rowwise().sum();
  MatX dflat = m.w1.transpose() * da1;

  // Unflatten to the last pooled grid.
  const int len4 = lens[4];
  MatX dpool(spec.channels[3], static_cast<Eigen::Index>(batch) * len4);
  for (int b = 0; b < batch; ++b) {
    for (int j = 0; j < len4; ++j) {
      dpool.col(static_cast<Eigen::Index>(b) * len4 + j) =
          dflat.col(b).segment(static_cast<Eigen::Index>(j) * spec.channels[3], spec.channels[3]);
    }
  }

  for (int l = 3; l >= 0; --l) {
    const auto& blk = m.conv[static_cast<size_t>(l)];
    auto& gblk = grads.conv[static_cast<size_t>(l)];
    const int len = lens[static_cast<size_t>(l)];
    const int len_out = lens[static_cast<size_t>(l) + 1];
    const int c_out = spec.channels[static_cast<size_t>(l)];
    const int c_in = l == 0 ? spec.in_channels : spec.channels[static_cast<size_t>(l) - 1];
    const MatX& z = cc.z[static_cast<size_t>(l)];
    const MatX& in = l == 0 ? cc.x0 : cc.pooled[static_cast<size_t>(l) - 1];
    const VecX& mean = cc.mean[static_cast<size_t>(l)];
    const VecX& inv_std = cc.inv_std[static_cast<size_t>(l)];
    const Eigen::MatrixXi& amax = cc.argmax[static_cast<size_t>(l)];

    // Pool backward for one sample: route gradients to the argmax positions,
    // then apply the leaky derivative of y = gamma * xhat + beta.
    auto build_tiles = [&](int b) {
      cc.s_xh = ((z.middleCols(static_cast<Eigen::Index>(b) * len, len).colwise() - mean)
                     .array()
                     .colwise() *
                 inv_std.array())
                    .matrix();
      cc.s_dy.setZero(c_out, len);
      for (int j = 0; j < len_out; ++j) {
        const Eigen::Index src = static_cast<Eigen::Index>(b) * len_out + j;
        for (int c = 0; c < c_out; ++c) {
          cc.s_dy(c, amax(c, src)) += dpool(c, src);
        }
      }
      const auto y_pre = (cc.s_xh.array().colwise() * blk.gamma.col(0).array()).colwise() +
                         blk.beta.col(0).array();
      cc.s_dy.array() *=
          (y_pre > Scalar(0)).template cast<Scalar>() * (Scalar(1) - slope) + slope;
    };

    // Batchnorm backward (training statistics) needs batch-wide reductions
    // before the per-sample dz tiles can be formed.
    Eigen::VectorXd acc_dy = Eigen::VectorXd::Zero(c_out);
    Eigen::VectorXd acc_dy_xhat = Eigen::VectorXd::Zero(c_out);
    for (int b = 0; b < batch; ++b) {
      build_tiles(b);
      acc_dy += cc.s_dy.template cast<double>().rowwise().sum();
      acc_dy_xhat +=
          cc.s_dy.cwiseProduct(cc.s_xh).template cast<double>().rowwise().sum();
    }
    const VecX sum_dy = acc_dy.cast<Scalar>();
    const VecX sum_dy_xhat = acc_dy_xhat.cast<Scalar>();
    gblk.gamma.col(0) += sum_dy_xhat;
    gblk.beta.col(0) += sum_dy;

    const auto n = static_cast<Scalar>(static_cast<Eigen::Index>(batch) * len);
    MatX dnext;
    if (l > 0) dnext.resize(c_in, static_cast<Eigen::Index>(batch) * len);
    for (int b = 0; b < batch; ++b) {
      build_tiles(b);
      cc.s_dz = ((cc.s_dy * n).colwise() - sum_dy) -
                (cc.s_xh.array().colwise() * sum_dy_xhat.array()).matrix();
      cc.s_dz = (cc.s_dz.array().colwise() *
                 (blk.gamma.col(0).array() * inv_std.array() / n))
                    .matrix();
      detail::im2col(in.middleCols(static_cast<Eigen::Index>(b) * len, len), c_in, len, 1,
                     spec.kernel, cc.s_col);
      gblk.w.noalias() += cc.s_dz * cc.s_col.transpose();
      gblk.b.col(0) += cc.s_dz.rowwise().sum();
      if (l > 0) {
        cc.s_dcol.noalias() = blk.w.transpose() * cc.s_dz;
        detail::col2im(cc.s_dcol, c_in, len, 1, spec.kernel, cc.s_dx);
        dnext.middleCols(static_cast<Eigen::Index>(b) * len, len) = cc.s_dx;
      }
    }
    // dnext is the gradient at the previous block's pooled output.
    if (l > 0) dpool = std::move(dnext);
  }
}

// ---------------------------------------------------------------------------
// Batching helpers
// ---------------------------------------------------------------------------

// Stacks windows[idx[first..first+count)] as C x (count * T), transposing
// each T x S window to channels-by-length.
template <typename Scalar>
typename Model<Scalar>::MatX make_batch(const std::vector<data::LabeledWindow>& windows,
                                        const std::vector<Index>& idx, size_t first, int count,
                                        std::vector<int>* labels) {
  using MatX = typename Model<Scalar>::MatX;
  if (count <= 0 || first + static_cast<size_t>(count) > idx.size()) {
    throw ShapeMismatch("make_batch: bad slice");
  }
  const auto& w0 = windows.at(static_cast<size_t>(idx[first]));
  const Eigen::Index t = w0.data.rows(), s = w0.data.cols();
  MatX x(s, static_cast<Eigen::Index>(count) * t);
  if (labels) labels->resize(static_cast<size_t>(count));
  for (int b = 0; b < count; ++b) {
    const auto& w = windows.at(static_cast<size_t>(idx[first + static_cast<size_t>(b)]));
    if (w.data.rows() != t || w.data.cols() != s) {
      throw ShapeMismatch("make_batch: inconsistent window shapes");
    }
    x.block(0, static_cast<Eigen::Index>(b) * t, s, t) =
        w.data.transpose().template cast<Scalar>();
    if (labels) (*labels)[static_cast<size_t>(b)] = static_cast<int>(w.label);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Adam with decoupled weight decay (applied to weight matrices only)
// ---------------------------------------------------------------------------

template <typename Scalar>
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weight_decay = 0.0;
  long t = 0;
  Model<Scalar> m, v;

  explicit Adam(const Model<Scalar>& model) : m(model.zeros_like()), v(model.zeros_like()) {}

  void step(Model<Scalar>& model, Model<Scalar>& grads) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto ps = parameters(model);
    auto gs = parameters(grads);
    auto ms = parameters(m);
    auto vs = parameters(v);
    for (size_t i = 0; i < ps.size(); ++i) {
      auto& p = *ps[i].tensor;
      auto& g = *gs[i].tensor;
      auto& mi = *ms[i].tensor;
      auto& vi = *vs[i].tensor;
      mi = static_cast<Scalar>(beta1) * mi + static_cast<Scalar>(1.0 - beta1) * g;
      vi = static_cast<Scalar>(beta2) * vi +
           static_cast<Scalar>(1.0 - beta2) * g.cwiseProduct(g);
      const auto mhat = (mi / static_cast<Scalar>(bc1)).array();
      const auto vhat = (vi / static_cast<Scalar>(bc2)).array();
      p.array() -= static_cast<Scalar>(lr) * mhat / (vhat.sqrt() + static_cast<Scalar>(eps));
      if (ps[i].is_weight && weight_decay > 0.0) {
        p.array() -= static_cast<Scalar>(lr * weight_decay) * p.array();
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 9;
  int batch_size = 64;
  double weight_decay = 1e-4;
  double lr_decay = 0.95;  // multiplicative per epoch
  std::uint64_t seed = 0;
  double stop_at_train_accuracy = -1.0;  // checked per epoch when >= 0
};

struct FitReport {
  int epochs_run = 0;
  double final_loss = 0.0;
  double train_accuracy = -1.0;  // only filled when the stop criterion is on
};

template <typename Scalar>
std::vector<int> predict(const Model<Scalar>& m, const std::vector<data::LabeledWindow>& windows,
                         const std::vector<Index>& idx, int batch_size = 64) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (size_t first = 0; first < idx.size(); first += static_cast<size_t>(batch_size)) {
    const int count = static_cast<int>(std::min(idx.size() - first,
                                                static_cast<size_t>(batch_size)));
    const auto x = make_batch<Scalar>(windows, idx, first, count, nullptr);
    const auto logits = forward(m, x, count, /*train=*/false);
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      Eigen::Index arg = 0;
      logits.col(c).maxCoeff(&arg);
      out.push_back(static_cast<int>(arg));
    }
  }
  return out;
}

template <typename Scalar>
double accuracy(const Model<Scalar>& m, const std::vector<data::LabeledWindow>& windows,
                const std::vector<Index>& idx, int batch_size = 64) {
  const std::vector<int> pred = predict(m, windows, idx, batch_size);
  Index hit = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    hit += pred[i] == static_cast<int>(windows.at(static_cast<size_t>(idx[i])).label);
  }
  return idx.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(idx.size());
}

// Mini-batch Adam training over the given window indices. Deterministic in
// (windows, order, config): per-epoch shuffles and per-batch dropout masks
// derive from config.seed. Throws NonFiniteLoss if the loss leaves R.
template <typename Scalar>
FitReport fit(Model<Scalar>& model, const std::vector<data::LabeledWindow>& windows,
              std::vector<Index> order, const TrainConfig& tc) {
  if (order.empty()) throw InvalidConfig("fit: no training windows");
  if (tc.batch_size < 1 || tc.epochs < 0) throw InvalidConfig("fit: bad batch size/epochs");

  Adam<Scalar> opt(model);
  opt.lr = tc.lr;
  opt.beta1 = 0.9;
  opt.beta2 = 0.999;
  opt.weight_decay = tc.weight_decay;

  FitReport report;
  const Scalar mom = static_cast<Scalar>(model.spec.bn_momentum);
  BatchCache<Scalar> cache;
  Model<Scalar> grads = model.zeros_like();

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    opt.lr = tc.lr * std::pow(tc.lr_decay, static_cast<double>(epoch));
    std::mt19937_64 rng(derive_seed(tc.seed, "epoch", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    int n_batches = 0;
    for (size_t first = 0; first < order.size(); first += static_cast<size_t>(tc.batch_size)) {
      const int count = static_cast<int>(std::min(order.size() - first,
                                                  static_cast<size_t>(tc.batch_size)));
      std::vector<int> labels;
      const auto x = make_batch<Scalar>(windows, order, first, count, &labels);
      const std::uint64_t dropout_seed = derive_seed(
          tc.seed, "dropout",
          (static_cast<std::uint64_t>(epoch) << 32) | static_cast<std::uint64_t>(first));
      const auto logits = forward(model, x, count, /*train=*/true, dropout_seed, &cache);

      typename Model<Scalar>::MatX dlogits;
      const double loss = softmax_ce<Scalar>(logits, labels, &dlogits);
      if (!std::isfinite(loss)) throw NonFiniteLoss("training loss is not finite");
      epoch_loss += loss;
      ++n_batches;

      // Fold the batch statistics into the running estimates.
      for (int l = 0; l < 4; ++l) {
        auto& blk = model.conv[static_cast<size_t>(l)];
        blk.run_mean = (Scalar(1) - mom) * blk.run_mean + mom * cache.mean[static_cast<size_t>(l)];
        blk.run_var = (Scalar(1) - mom) * blk.run_var + mom * cache.var[static_cast<size_t>(l)];
      }

      for (auto& ref : parameters(grads)) ref.tensor->setZero();
      backward(model, cache, dlogits, grads);
      opt.step(model, grads);
    }
    report.epochs_run = epoch + 1;
    report.final_loss = n_batches > 0 ? epoch_loss / n_batches : 0.0;

    if (tc.stop_at_train_accuracy >= 0.0) {
      report.train_accuracy = accuracy(model, windows, order, tc.batch_size);
      if (report.train_accuracy >= tc.stop_at_train_accuracy) break;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Checkpoints: "HARC" magic, version, scalar width, spec, tensors in
// parameter order plus batchnorm running stats. Bit-exact round trip.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw IntegrityError("checkpoint: truncated read");
  }
  return v;
}

template <typename M>
void put_tensor(std::ostream& os, const M& m) {
  put<std::int64_t>(os, m.rows());
  put<std::int64_t>(os, m.cols());
  os.write(reinterpret_cast<const char*>(m.data()),
           static_cast<std::streamsize>(sizeof(typename M::Scalar)) * m.size());
}

template <typename M>
void take_tensor(std::istream& is, M& m) {
  const auto rows = take<std::int64_t>(is);
  const auto cols = take<std::int64_t>(is);
  if (rows != m.rows() || cols != m.cols()) {
    throw IntegrityError("checkpoint: tensor shape mismatch");
  }
  if (!is.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(typename M::Scalar)) * m.size())) {
    throw IntegrityError("checkpoint: truncated tensor");
  }
}

}  // namespace detail

template <typename Scalar>
void save_checkpoint(const std::string& path, const Model<Scalar>& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IntegrityError("cannot open for writing: " + path);
  os.write("HARC", 4);
  detail::put<std::uint32_t>(os, 1);
  detail::put<std::uint32_t>(os, sizeof(Scalar));
  const CnnSpec& s = m.spec;
  for (int v : {s.in_channels, s.input_length, s.n_classes, s.channels[0], s.channels[1],
                s.channels[2], s.channels[3], s.kernel, s.pool, s.fc1}) {
    detail::put<std::int32_t>(os, v);
  }
  for (double v : {s.leaky_slope, s.dropout, s.bn_momentum, s.bn_eps}) {
    detail::put<double>(os, v);
  }
  for (const auto& blk : m.conv) {
    detail::put_tensor(os, blk.w);
    detail::put_tensor(os, blk.b);
    detail::put_tensor(os, blk.gamma);
    detail::put_tensor(os, blk.beta);
  }
  detail::put_tensor(os, m.w1);
  detail::put_tensor(os, m.b1);
  detail::put_tensor(os, m.w2);
  detail::put_tensor(os, m.b2);
  for (const auto& blk : m.conv) {
    detail::put_tensor(os, blk.run_mean);
    detail::put_tensor(os, blk.run_var);
  }
  if (!os.good()) throw IntegrityError("short write: " + path);
}

template <typename Scalar>
Model<Scalar> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IntegrityError("cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string_view(magic, 4) != "HARC") {
    throw IntegrityError("checkpoint: bad magic");
  }
  if (detail::take<std::uint32_t>(is) != 1) throw IntegrityError("checkpoint: bad version");
  if (detail::take<std::uint32_t>(is) != sizeof(Scalar)) {
    throw IntegrityError("checkpoint: scalar width mismatch");
  }
  CnnSpec s;
  s.in_channels = detail::take<std::int32_t>(is);
  s.input_length = detail::take<std::int32_t>(is);
  s.n_classes = detail::take<std::int32_t>(is);
  for (int l = 0; l < 4; ++l) s.channels[static_cast<size_t>(l)] = detail::take<std::int32_t>(is);
  s.kernel = detail::take<std::int32_t>(is);
  s.pool = detail::take<std::int32_t>(is);
  s.fc1 = detail::take<std::int32_t>(is);
  s.leaky_slope = detail::take<double>(is);
  s.dropout = detail::take<double>(is);
  s.bn_momentum = detail::take<double>(is);
  s.bn_eps = detail::take<double>(is);

  Model<Scalar> m = Model<Scalar>::init(s, 0);
  for (const auto& ref : parameters(m)) detail::take_tensor(is, *ref.tensor);
  for (auto& blk : m.conv) {
    detail::take_tensor(is, blk.run_mean);
    detail::take_tensor(is, blk.run_var);
  }
  return m;
}

}  // namespace har::cnn
