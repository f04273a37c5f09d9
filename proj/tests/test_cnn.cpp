#include "har/cnn.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>

using namespace har::cnn;
using har::Activity;
using har::Index;

namespace {

CnnSpec tiny_spec() {
  CnnSpec s;
  s.in_channels = 2;
  s.input_length = 625;  // 625 -> 125 -> 25 -> 5 -> 1
  s.n_classes = 3;
  s.channels = {3, 4, 5, 6};
  s.fc1 = 8;
  return s;
}

template <typename Scalar>
typename Model<Scalar>::MatX random_input(const CnnSpec& spec, int batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  typename Model<Scalar>::MatX x(spec.in_channels,
                                 static_cast<Eigen::Index>(batch) * spec.input_length);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = static_cast<Scalar>(gauss(rng));
  }
  return x;
}

std::vector<har::data::LabeledWindow> random_windows(const CnnSpec& spec, int n,
                                                     std::uint64_t seed, double class_gap) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<har::data::LabeledWindow> ws(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& w = ws[static_cast<size_t>(i)];
    const int cls = i % spec.n_classes;
    w.label = static_cast<Activity>(cls);
    w.data.resize(spec.input_length, spec.in_channels);
    for (Eigen::Index c = 0; c < w.data.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.data.rows(); ++r) {
        w.data(r, c) = gauss(rng) + static_cast<float>(class_gap * cls * (c + 1));
      }
    }
  }
  return ws;
}

std::vector<Index> all_indices(size_t n) {
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

TEST_CASE("spec: pool chain, flatten size and parameter counts") {
  CnnSpec def;
  CHECK(def.lengths() == std::array<int, 5>{3600, 720, 144, 28, 5});
  CHECK(def.flatten_size() == 640);
  const auto m = Model<float>::init(def, 1);
  CHECK(m.param_count() == 799335);
  CHECK(m.conv[0].w.size() + m.conv[0].b.size() == 1632);  // 32*(10*5)+32
  CHECK(m.w2.size() + m.b2.size() == 7175);                // 7*1024+7

  const auto t = Model<float>::init(tiny_spec(), 1);
  CHECK(t.param_count() == 477);

  CnnSpec bad = def;
  bad.kernel = 4;
  CHECK_THROWS_AS(bad.validate(), har::InvalidConfig);
  bad = def;
  bad.input_length = 600;  // 600 -> 120 -> 24 -> 4 -> 0
  CHECK_THROWS_AS(bad.validate(), har::InvalidConfig);
}

TEST_CASE("conv layer matches a naive sliding-window oracle") {
  // Isolate layer 1 by reading the cached pre-batchnorm activations.
  CnnSpec s = tiny_spec();
  auto m = Model<double>::init(s, 3);
  const int batch = 2;
  const auto x = random_input<double>(s, batch, 17);
  BatchCache<double> cache;
  forward(m, x, batch, /*train=*/true, 0, &cache);

  const int pad = s.kernel / 2;
  for (int b = 0; b < batch; ++b) {
    for (int j : {0, 1, 311, 623, 624}) {
      for (int c = 0; c < s.channels[0]; ++c) {
        double acc = m.conv[0].b(c, 0);
        for (int k = 0; k < s.kernel; ++k) {
          const int src = j + k - pad;
          if (src < 0 || src >= s.input_length) continue;
          for (int ci = 0; ci < s.in_channels; ++ci) {
            acc += m.conv[0].w(c, k * s.in_channels + ci) * x(ci, b * s.input_length + src);
          }
        }
        const Eigen::Index col = static_cast<Eigen::Index>(b) * s.input_length + j;
        CHECK(cache.z[0](c, col) == doctest::Approx(acc).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("batchnorm uses biased batch statistics and normalizes exactly") {
  CnnSpec s = tiny_spec();
  auto m = Model<double>::init(s, 5);
  const int batch = 3;
  const auto x = random_input<double>(s, batch, 23);
  BatchCache<double> cache;
  forward(m, x, batch, /*train=*/true, 0, &cache);

  // Batch stats of the normalized activations, recomputed from the cached z.
  const auto n = static_cast<double>(cache.z[0].cols());
  for (int c = 0; c < s.channels[0]; ++c) {
    const auto xhat = (cache.z[0].row(c).array() - cache.mean[0](c)) * cache.inv_std[0](c);
    CHECK(xhat.mean() == doctest::Approx(0.0).epsilon(1e-10));
    const double var = xhat.square().mean();  // biased
    const double expect = cache.var[0](c) / (cache.var[0](c) + s.bn_eps);
    CHECK(var == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(n == batch * 625.0);
}

TEST_CASE("batchnorm eval equals train once running stats hold the batch stats") {
  CnnSpec s = tiny_spec();
  s.dropout = 0.0;
  auto m = Model<float>::init(s, 7);
  const int batch = 4;
  const auto x = random_input<float>(s, batch, 29);

  BatchCache<float> cache;
  const auto logits_train = forward(m, x, batch, /*train=*/true, 0, &cache);
  for (int l = 0; l < 4; ++l) {
    m.conv[static_cast<size_t>(l)].run_mean = cache.mean[static_cast<size_t>(l)];
    m.conv[static_cast<size_t>(l)].run_var = cache.var[static_cast<size_t>(l)];
  }
  const auto logits_eval = forward(m, x, batch, /*train=*/false);
  CHECK((logits_train - logits_eval).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("inverted dropout: mask values are 0 or 1/keep and reproducible") {
  CnnSpec s = tiny_spec();
  s.fc1 = 512;  // enough mask entries for a stable fraction
  auto m = Model<float>::init(s, 9);
  const auto x = random_input<float>(s, 2, 31);
  BatchCache<float> a, b;
  forward(m, x, 2, /*train=*/true, 123, &a);
  forward(m, x, 2, /*train=*/true, 123, &b);
  REQUIRE(a.mask.size() == 1024);
  CHECK((a.mask - b.mask).cwiseAbs().maxCoeff() == 0.0f);
  int zeros = 0, twos = 0;
  for (Eigen::Index c = 0; c < a.mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.mask.rows(); ++r) {
      if (a.mask(r, c) == 0.0f) ++zeros;
      if (a.mask(r, c) == 2.0f) ++twos;
    }
  }
  CHECK(zeros + twos == 1024);
  CHECK(static_cast<double>(zeros) / 1024.0 == doctest::Approx(0.5).epsilon(0.1));

  BatchCache<float> c;
  forward(m, x, 2, /*train=*/true, 124, &c);
  CHECK((a.mask.array() != c.mask.array()).any());
}

TEST_CASE("softmax cross-entropy: hand oracle and saturated gradient") {
  Model<double>::MatX logits(2, 1);
  logits << 0.0, 0.0;
  Model<double>::MatX d;
  const double loss = softmax_ce<double>(logits, {0}, &d);
  CHECK(loss == doctest::Approx(std::log(2.0)));
  CHECK(d(0, 0) == doctest::Approx(-0.5));
  CHECK(d(1, 0) == doctest::Approx(0.5));

  logits << 40.0, -40.0;  // saturated at the true class
  const double sat = softmax_ce<double>(logits, {0}, &d);
  CHECK(sat == doctest::Approx(0.0));
  CHECK(std::abs(d(0, 0)) < 1e-12);

  // Mean over the batch.
  Model<double>::MatX two(2, 2);
  two.setZero();
  CHECK(softmax_ce<double>(two, {0, 1}, nullptr) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(softmax_ce<double>(two, {0}, nullptr), har::ShapeMismatch);
  CHECK_THROWS_AS(softmax_ce<double>(two, {0, 5}, nullptr), har::InvalidConfig);
}

TEST_CASE("analytic gradients match central finite differences") {
  CnnSpec s = tiny_spec();
  auto m = Model<double>::init(s, 11);
  const int batch = 3;
  const auto x = random_input<double>(s, batch, 37);
  const std::vector<int> labels = {0, 2, 1};
  const std::uint64_t drop_seed = 55;  // dropout active: masks must replay

  BatchCache<double> cache;
  const auto logits = forward(m, x, batch, /*train=*/true, drop_seed, &cache);
  Model<double>::MatX dlogits;
  softmax_ce<double>(logits, labels, &dlogits);
  auto grads = m.zeros_like();
  backward(m, cache, dlogits, grads);

  auto loss_at = [&]() {
    const auto lg = forward(m, x, batch, /*train=*/true, drop_seed);
    return softmax_ce<double>(lg, labels, nullptr);
  };

  double worst = 0.0;
  auto ps = parameters(m);
  auto gs = parameters(grads);
  for (size_t i = 0; i < ps.size(); ++i) {
    auto& p = *ps[i].tensor;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.rows(); ++r) {
        const double orig = p(r, c);
        const double h = 1e-6 * std::max(1.0, std::abs(orig));
        p(r, c) = orig + h;
        const double up = loss_at();
        p(r, c) = orig - h;
        const double down = loss_at();
        p(r, c) = orig;
        const double fd = (up - down) / (2.0 * h);
        const double an = (*gs[i].tensor)(r, c);
        const double err = std::abs(fd - an) / std::max({1.0, std::abs(fd), std::abs(an)});
        worst = std::max(worst, err);
      }
    }
  }
  CHECK(worst < 1e-6);  // acceptance requires 1e-4; headroom here
}

TEST_CASE("duplicating a batch leaves loss and gradients unchanged") {
  CnnSpec s = tiny_spec();
  s.dropout = 0.0;
  auto m = Model<double>::init(s, 13);
  const auto x2 = random_input<double>(s, 2, 41);
  Model<double>::MatX x4(x2.rows(), 2 * x2.cols());
  x4 << x2, x2;
  const std::vector<int> l2 = {0, 1}, l4 = {0, 1, 0, 1};

  BatchCache<double> c2, c4;
  const auto lg2 = forward(m, x2, 2, true, 0, &c2);
  const auto lg4 = forward(m, x4, 4, true, 0, &c4);
  Model<double>::MatX d2, d4;
  const double loss2 = softmax_ce<double>(lg2, l2, &d2);
  const double loss4 = softmax_ce<double>(lg4, l4, &d4);
  CHECK(loss2 == doctest::Approx(loss4).epsilon(1e-12));

  auto g2 = m.zeros_like(), g4 = m.zeros_like();
  backward(m, c2, d2, g2);
  backward(m, c4, d4, g4);
  auto p2 = parameters(g2);
  auto p4 = parameters(g4);
  for (size_t i = 0; i < p2.size(); ++i) {
    CHECK((*p2[i].tensor - *p4[i].tensor).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("make_batch transposes windows into channel-major blocks") {
  std::vector<har::data::LabeledWindow> ws(2);
  ws[0].data.resize(3, 2);
  ws[0].data << 1, 4, 2, 5, 3, 6;
  ws[0].label = Activity::read;
  ws[1].data = ws[0].data * 10;
  ws[1].label = Activity::walk;

  std::vector<int> labels;
  const auto x = make_batch<float>(ws, {1, 0}, 0, 2, &labels);
  REQUIRE(x.rows() == 2);
  REQUIRE(x.cols() == 6);
  CHECK(x(0, 0) == 10.0f);  // ws[1] first channel
  CHECK(x(1, 0) == 40.0f);
  CHECK(x(0, 3) == 1.0f);  // ws[0] block starts at column 3
  CHECK(x(1, 5) == 6.0f);
  CHECK(labels == std::vector<int>{static_cast<int>(Activity::walk),
                                   static_cast<int>(Activity::read)});
}

TEST_CASE("fit: lr 0 is a no-op; training is deterministic; overfit to 100%") {
  CnnSpec s = tiny_spec();
  const auto ws = random_windows(s, 9, 61, /*class_gap=*/0.8);
  const auto idx = all_indices(ws.size());

  auto frozen = Model<float>::init(s, 15);
  const auto before = frozen.w1;
  TrainConfig tc0;
  tc0.lr = 0.0;
  tc0.weight_decay = 0.0;
  tc0.epochs = 2;
  tc0.batch_size = 4;
  tc0.seed = 1;
  fit(frozen, ws, idx, tc0);
  CHECK((frozen.w1 - before).cwiseAbs().maxCoeff() == 0.0f);

  TrainConfig tc;
  tc.lr = 5e-3;
  tc.epochs = 60;
  tc.batch_size = 4;
  tc.seed = 2;
  tc.stop_at_train_accuracy = 1.0;
  auto a = Model<float>::init(s, 15);
  auto b = Model<float>::init(s, 15);
  const auto ra = fit(a, ws, idx, tc);
  const auto rb = fit(b, ws, idx, tc);
  CHECK(ra.train_accuracy == 1.0);
  CHECK(ra.epochs_run <= 60);
  CHECK(ra.epochs_run == rb.epochs_run);
  CHECK((a.w2 - b.w2).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(predict(a, ws, idx) == predict(b, ws, idx));
}

TEST_CASE("fit throws NonFiniteLoss when parameters are poisoned") {
  CnnSpec s = tiny_spec();
  const auto ws = random_windows(s, 4, 71, 0.5);
  auto m = Model<float>::init(s, 17);
  m.w2(0, 0) = std::numeric_limits<float>::quiet_NaN();
  TrainConfig tc;
  tc.epochs = 1;
  tc.batch_size = 4;
  CHECK_THROWS_AS(fit(m, ws, all_indices(ws.size()), tc), har::NonFiniteLoss);
}

TEST_CASE("checkpoints round-trip bit-exactly and reject corruption") {
  CnnSpec s = tiny_spec();
  const auto ws = random_windows(s, 6, 81, 0.5);
  auto m = Model<float>::init(s, 19);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  tc.seed = 3;
  fit(m, ws, all_indices(ws.size()), tc);  // nontrivial running stats

  const auto dir = std::filesystem::temp_directory_path() / "har_cnn_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "model.bin").string();
  save_checkpoint(path, m);
  const auto back = load_checkpoint<float>(path);

  const auto x = random_input<float>(s, 2, 91);
  const auto l0 = forward(m, x, 2, false);
  const auto l1 = forward(back, x, 2, false);
  CHECK((l0 - l1).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(back.spec.fc1 == s.fc1);

  CHECK_THROWS_AS(load_checkpoint<double>(path), har::IntegrityError);  // width mismatch
  std::ofstream(path, std::ios::binary) << "HARX";
  CHECK_THROWS_AS(load_checkpoint<float>(path), har::IntegrityError);
  std::filesystem::remove_all(dir);
}
