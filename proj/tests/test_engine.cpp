// Tensor container, tape autodiff and primitive ops against trivial cases
// and the loop oracles.

#include <doctest.h>

#include <cmath>
#include <random>

#include "cosnet/autodiff.hpp"
#include "cosnet/error.hpp"
#include "cosnet/gradcheck.hpp"
#include "cosnet/ops.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace cosnet;
using testutil::bitwise_equal;
using testutil::max_abs_diff;
using testutil::random_tensor;

TEST_CASE("shape normalization pads leading dimensions") {
  CHECK(Shape4::of({5}) == Shape4{1, 1, 1, 5});
  CHECK(Shape4::of({2, 3}) == Shape4{1, 1, 2, 3});
  CHECK(Shape4::of({2, 3, 4, 5}) == Shape4{2, 3, 4, 5});
  CHECK(Shape4::of({2, 3, 4}).numel() == 24);
  CHECK_THROWS_AS(Shape4::of({0, 3}), ShapeError);
}

TEST_CASE("tensor construction validates element count and finiteness") {
  CHECK_THROWS_AS(Tensor::from_values(Shape4{1, 1, 2, 2}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::from_values(Shape4{1, 1, 1, 2}, {1.0, NAN}), NumericError);
  Tensor t = Tensor::from_values(Shape4{1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(t.at(0, 0, 1, 0) == 3.0);
  CHECK_THROWS_AS(t.at(0, 0, 2, 0), ValueError);
  CHECK(Tensor::scalar(7.0).item() == 7.0);
}

// ---- convolution ----

TEST_CASE("conv2d identity kernel returns the input") {
  Tensor x = Tensor::from_values(Shape4{1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor w = Tensor::from_values(Shape4{1, 1, 1, 1}, {1.0});
  CHECK(bitwise_equal(conv2d(x, w), x));
}

TEST_CASE("conv2d all-ones 3x3 with padding sums the neighborhood") {
  Tensor x = Tensor::full(Shape4{1, 1, 3, 3}, 1.0);
  Tensor w = Tensor::full(Shape4{1, 1, 3, 3}, 1.0);
  Tensor y = conv2d(x, w, ConvSpec::padded(1));
  CHECK(y.at(0, 0, 1, 1) == doctest::Approx(9.0));
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 2) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 2, 2) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 1) == doctest::Approx(6.0));
}

TEST_CASE("conv2d grouped dilated matches the loop oracle") {
  std::mt19937_64 rng(42);
  Tensor x = random_tensor(Shape4{1, 4, 9, 9}, rng);
  Tensor w = random_tensor(Shape4{4, 2, 3, 3}, rng);
  Tensor b = random_tensor(Shape4::of({4}), rng);
  ConvSpec spec = ConvSpec::padded(2).with_dilation(2).with_groups(2);
  Tensor got = conv2d(x, w, b, spec);
  std::vector<double> bias(b.values().begin(), b.values().end());
  Tensor want = oracle::conv2d_ref(x, w, bias, 1, 1, 2, 2, 2, 2, 2);
  CHECK(max_abs_diff(got, want) < 1e-9);
}

TEST_CASE("conv2d randomized configurations match the loop oracle") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> d_c(1, 4), d_hw(3, 9), d_k(1, 3), d_s(1, 2), d_d(1, 3),
      d_n(1, 2);
  for (int trial = 0; trial < 25; ++trial) {
    const int cin = d_c(rng), n = d_n(rng);
    const bool depthwise = trial % 3 == 0;
    const int groups = depthwise ? cin : 1;
    const int cout = depthwise ? cin : d_c(rng);
    const int kh = d_k(rng), kw = d_k(rng);
    const int dil_h = d_d(rng), dil_w = d_d(rng);
    const int h = std::max(d_hw(rng), dil_h * (kh - 1) + 1);
    const int w = std::max(d_hw(rng), dil_w * (kw - 1) + 1);
    const int sh = d_s(rng), sw = d_s(rng);
    const int ph = d_k(rng) - 1, pw = d_k(rng) - 1;
    Tensor x = random_tensor(Shape4{n, cin, h, w}, rng);
    Tensor wt = random_tensor(Shape4{cout, cin / groups, kh, kw}, rng);
    Tensor b = random_tensor(Shape4::of({cout}), rng);
    ConvSpec spec{sh, sw, ph, pw, dil_h, dil_w, groups};
    Tensor got = conv2d(x, wt, b, spec);
    std::vector<double> bias(b.values().begin(), b.values().end());
    Tensor want = oracle::conv2d_ref(x, wt, bias, sh, sw, ph, pw, dil_h, dil_w, groups);
    REQUIRE(max_abs_diff(got, want) < 1e-9);
  }
}

TEST_CASE("conv2d rejects bad geometry and shapes") {
  std::mt19937_64 rng(1);
  Tensor x = random_tensor(Shape4{1, 4, 5, 5}, rng);
  Tensor w_bad = random_tensor(Shape4{4, 3, 3, 3}, rng);
  CHECK_THROWS_AS(conv2d(x, w_bad), ShapeError);
  Tensor w_groups = random_tensor(Shape4{3, 2, 3, 3}, rng);
  CHECK_THROWS_AS(conv2d(x, w_groups, ConvSpec{}.with_groups(2)), ShapeError);
  Tensor w_big = random_tensor(Shape4{2, 4, 7, 7}, rng);
  CHECK_THROWS_AS(conv2d(x, w_big), GeometryError);
  Tensor w_ok = random_tensor(Shape4{2, 4, 3, 3}, rng);
  Tensor b_bad = random_tensor(Shape4::of({3}), rng);
  CHECK_THROWS_AS(conv2d(x, w_ok, b_bad), ShapeError);
}

// ---- pooling and resampling ----

TEST_CASE("max_pool2d basics") {
  Tensor c = Tensor::full(Shape4{1, 2, 4, 4}, 3.25);
  CHECK(max_pool2d(c, 2, 2).values()[0] == 3.25);

  Tensor x = Tensor::from_values(Shape4{1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor y = max_pool2d(x, 2, 2);
  CHECK(y.shape() == Shape4{1, 1, 1, 1});
  CHECK(y.item() == 4.0);

  CHECK_THROWS_AS(max_pool2d(x, 3, 1), GeometryError);
}

TEST_CASE("max_pool2d matches the loop oracle") {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor(Shape4{1, 3, 8, 8}, rng);
  CHECK(bitwise_equal(max_pool2d(x, 2, 2), oracle::max_pool2d_ref(x, 2, 2, 2, 2)));
  Tensor x2 = random_tensor(Shape4{2, 2, 7, 9}, rng);
  CHECK(bitwise_equal(max_pool2d(x2, 3, 2, 2, 3), oracle::max_pool2d_ref(x2, 3, 2, 2, 3)));
}

TEST_CASE("bilinear_upsample identity and constants are exact") {
  std::mt19937_64 rng(9);
  Tensor x = random_tensor(Shape4{1, 3, 5, 7}, rng);
  CHECK(bitwise_equal(bilinear_upsample(x, 5, 7), x));
  Tensor c = Tensor::full(Shape4{1, 2, 3, 3}, 0.731);
  Tensor up = bilinear_upsample(c, 9, 13);
  for (double v : up.values()) CHECK(v == 0.731);
}

TEST_CASE("bilinear_upsample 2x2 -> 4x4 golden values") {
  Tensor x = Tensor::from_values(Shape4{1, 1, 2, 2}, {0, 1, 2, 3});
  Tensor y = bilinear_upsample(x, 4, 4);
  // Hand evaluation of align-corners-false: 1-D weights per output index are
  // (1), (3/4,1/4), (1/4,3/4), (1), applied separably.
  const std::vector<double> want = {0.0, 0.25, 0.75, 1.0, 0.5, 0.75, 1.25, 1.5,
                                    1.5, 1.75, 2.25, 2.5, 2.0, 2.25, 2.75, 3.0};
  auto got = y.values();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  // And the oracle agrees.
  CHECK(max_abs_diff(y, oracle::bilinear_ref(x, 4, 4)) < 1e-12);
}

TEST_CASE("bilinear_upsample matches oracle on odd resizes") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor(Shape4{2, 2, 5, 3}, rng);
  CHECK(max_abs_diff(bilinear_upsample(x, 8, 11), oracle::bilinear_ref(x, 8, 11)) < 1e-12);
  CHECK(max_abs_diff(bilinear_upsample(x, 2, 2), oracle::bilinear_ref(x, 2, 2)) < 1e-12);
}

TEST_CASE("adaptive_avg_pool2d matches oracle, including upsizing bins") {
  std::mt19937_64 rng(13);
  Tensor x = random_tensor(Shape4{1, 3, 7, 5}, rng);
  CHECK(max_abs_diff(adaptive_avg_pool2d(x, 3, 3), oracle::adaptive_avg_pool_ref(x, 3, 3)) <
        1e-12);
  CHECK(max_abs_diff(adaptive_avg_pool2d(x, 1, 1), oracle::adaptive_avg_pool_ref(x, 1, 1)) <
        1e-12);
  Tensor tiny = random_tensor(Shape4{1, 2, 2, 2}, rng);
  CHECK(max_abs_diff(adaptive_avg_pool2d(tiny, 6, 6), oracle::adaptive_avg_pool_ref(tiny, 6, 6)) <
        1e-12);
}

// ---- softmax, means, elementwise ----

TEST_CASE("softmax closed forms") {
  Tensor u = Tensor::full(Shape4::of({8}), 0.37);
  Tensor su = softmax(u, 3);
  for (double v : su.values()) CHECK(v == doctest::Approx(0.125).epsilon(1e-12));

  Tensor x = Tensor::vector({0.0, std::log(3.0)});
  Tensor sx = softmax(x, 3);
  CHECK(sx.values()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sx.values()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax is shift invariant and normalized") {
  std::mt19937_64 rng(17);
  Tensor x = random_tensor(Shape4{2, 5, 3, 3}, rng, -4.0, 4.0);
  Tensor y1 = softmax(x, 1);
  Tensor y2 = softmax(add(x, Tensor::full(x.shape(), 17.25)), 1);
  CHECK(max_abs_diff(y1, y2) < 1e-12);
  CHECK(max_abs_diff(y1, oracle::softmax_channels_ref(x)) < 1e-12);

  const Shape4 s = y1.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int h = 0; h < s.h; ++h) {
      for (int w = 0; w < s.w; ++w) {
        double acc = 0.0;
        for (int c = 0; c < s.c; ++c) {
          CHECK(y1.at(n, c, h, w) > 0.0);
          acc += y1.at(n, c, h, w);
        }
        CHECK(std::abs(acc - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("channel and spatial means") {
  std::mt19937_64 rng(19);
  Tensor single = random_tensor(Shape4{1, 1, 4, 4}, rng);
  CHECK(bitwise_equal(channel_mean(single), single));

  Tensor two = concat(std::vector<Tensor>{Tensor::full(Shape4{1, 1, 3, 3}, 1.0),
                                          Tensor::full(Shape4{1, 1, 3, 3}, 3.0)},
                      1);
  Tensor mean_two = channel_mean(two);
  for (double v : mean_two.values()) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));

  Tensor q = Tensor::from_values(Shape4{1, 1, 2, 2}, {1, 2, 3, 4});
  CHECK(spatial_mean(q).item() == doctest::Approx(2.5).epsilon(1e-12));

  Tensor flat = Tensor::full(Shape4{1, 2, 5, 7}, -0.375);
  Tensor sm = spatial_mean(flat);
  CHECK(sm.at(0, 0, 0, 0) == doctest::Approx(-0.375).epsilon(1e-12));
  CHECK(sm.at(0, 1, 0, 0) == doctest::Approx(-0.375).epsilon(1e-12));

  Tensor x = random_tensor(Shape4{2, 4, 5, 5}, rng);
  CHECK(max_abs_diff(channel_mean(x), oracle::channel_mean_ref(x)) < 1e-12);
  CHECK(max_abs_diff(spatial_mean(x), oracle::spatial_mean_ref(x)) < 1e-12);
}

TEST_CASE("concat layouts and errors") {
  std::mt19937_64 rng(23);
  Tensor a = random_tensor(Shape4{1, 2, 4, 4}, rng);
  Tensor b = random_tensor(Shape4{1, 2, 4, 4}, rng);
  Tensor y = concat(std::vector<Tensor>{a, b}, 1);
  CHECK(y.shape() == Shape4{1, 4, 4, 4});
  CHECK(y.at(0, 0, 2, 2) == a.at(0, 0, 2, 2));
  CHECK(y.at(0, 3, 1, 0) == b.at(0, 1, 1, 0));

  Tensor c = random_tensor(Shape4{1, 2, 3, 4}, rng);
  CHECK_THROWS_AS(concat(std::vector<Tensor>{a, c}, 1), ShapeError);

  // Off-channel axes follow the same outer/axis/inner decomposition.
  Tensor rows = concat(std::vector<Tensor>{a, c}, 2);
  CHECK(rows.shape() == Shape4{1, 2, 7, 4});
  CHECK(rows.at(0, 1, 2, 3) == a.at(0, 1, 2, 3));
  CHECK(rows.at(0, 1, 5, 3) == c.at(0, 1, 1, 3));
}

TEST_CASE("broadcast arithmetic restricted to the two supported patterns") {
  std::mt19937_64 rng(29);
  Tensor x = random_tensor(Shape4{2, 3, 4, 4}, rng);

  // Centering identity: per-pixel channel sums of x - channel_mean(x) vanish.
  Tensor centered = sub(x, channel_mean(x));
  const Shape4 s = centered.shape();
  for (int n = 0; n < s.n; ++n) {
    for (int h = 0; h < s.h; ++h) {
      for (int w = 0; w < s.w; ++w) {
        double acc = 0.0;
        for (int c = 0; c < s.c; ++c) acc += centered.at(n, c, h, w);
        CHECK(std::abs(acc) < 1e-12);
      }
    }
  }

  // Per-channel scaling via [N,C,1,1].
  Tensor g = random_tensor(Shape4{2, 3, 1, 1}, rng);
  Tensor scaled = mul(x, g);
  CHECK(scaled.at(1, 2, 3, 3) ==
        doctest::Approx(x.at(1, 2, 3, 3) * g.at(1, 2, 0, 0)).epsilon(1e-12));

  // General broadcasting is rejected.
  Tensor bad = random_tensor(Shape4{2, 3, 1, 4}, rng);
  CHECK_THROWS_AS(add(x, bad), ShapeError);
  Tensor bad2 = random_tensor(Shape4{1, 3, 4, 4}, rng);
  CHECK_THROWS_AS(add(x, bad2), ShapeError);
}

TEST_CASE("group_norm of a constant input returns beta") {
  std::mt19937_64 rng(31);
  Tensor x = Tensor::full(Shape4{2, 4, 3, 3}, 0.8173);
  Tensor gamma = random_tensor(Shape4::of({4}), rng, 0.5, 2.0);
  Tensor beta = random_tensor(Shape4::of({4}), rng);
  Tensor y = group_norm(x, 2, gamma, beta);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 4; ++c) {
      for (int h = 0; h < 3; ++h) {
        for (int w = 0; w < 3; ++w) {
          CHECK(std::abs(y.at(n, c, h, w) - beta.values()[size_t(c)]) < 1e-12);
        }
      }
    }
  }
  CHECK_THROWS_AS(group_norm(x, 3, gamma, beta), ShapeError);
}

TEST_CASE("cross_entropy closed forms and oracle") {
  // Huge margin on the correct class drives the loss to zero.
  {
    Tensor logits = Tensor::zeros(Shape4{1, 3, 2, 2});
    LabelMap labels(1, 2, 2, 1);
    std::span<double> v = logits.values_mut();
    for (int i = 0; i < 4; ++i) v[size_t(4 + i)] = 20.0;  // class 1 plane
    CHECK(cross_entropy(logits, labels).item() < 1e-8);
  }
  // Uniform logits cost ln K.
  {
    Tensor logits = Tensor::full(Shape4{1, 5, 3, 3}, 0.3);
    LabelMap labels(1, 3, 3, 2);
    CHECK(cross_entropy(logits, labels).item() ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  // Random case against the scalar oracle, with ignored pixels.
  {
    std::mt19937_64 rng(37);
    Tensor logits = random_tensor(Shape4{2, 4, 3, 3}, rng, -3.0, 3.0);
    LabelMap labels(2, 3, 3);
    std::uniform_int_distribution<int> cls(0, 3);
    for (auto& l : labels.v) l = int32_t(cls(rng));
    labels.v[3] = -1;
    labels.v[10] = -1;
    CHECK(cross_entropy(logits, labels, -1).item() ==
          doctest::Approx(oracle::cross_entropy_ref(logits, labels, -1)).epsilon(1e-12));
  }
  // Degenerate cases.
  {
    Tensor logits = Tensor::zeros(Shape4{1, 2, 1, 2});
    LabelMap all_ignored(1, 1, 2, -1);
    CHECK(cross_entropy(logits, all_ignored, -1).item() == 0.0);
    LabelMap bad(1, 1, 2, 5);
    CHECK_THROWS_AS(cross_entropy(logits, bad, -1), ValueError);
  }
}

// ---- autodiff ----

TEST_CASE("backward through the identity and simple composites") {
  Tape tape;
  Tensor x = Tensor::scalar(3.0);
  tape.watch(x);
  tape.backward(x);  // dy/dx of y = x
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("backward of sum(x*x) is 2x") {
  std::mt19937_64 rng(41);
  Tensor x = random_tensor(Shape4{1, 2, 3, 3}, rng);
  Tape tape;
  tape.watch(x);
  Tensor y = sum(mul(x, x));
  tape.backward(y);
  auto g = x.grad();
  auto v = x.values();
  for (size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(2 * v[i]).epsilon(1e-12));
}

TEST_CASE("gradients accumulate over shared inputs; off-path leaves get zeros") {
  std::mt19937_64 rng(43);
  Tensor x = random_tensor(Shape4::of({4}), rng);
  Tensor z = random_tensor(Shape4::of({4}), rng);
  Tape tape;
  tape.watch(x);
  tape.watch(z);
  Tensor y = sum(add(x, x));
  tape.backward(y);
  for (double g : x.grad()) CHECK(g == 2.0);
  REQUIRE(z.has_grad());
  for (double g : z.grad()) CHECK(g == 0.0);
}

TEST_CASE("tape contract violations") {
  Tensor x = Tensor::scalar(1.0);
  Tensor v = Tensor::vector({1, 2, 3});
  Tape tape;
  tape.watch(v);
  CHECK_THROWS_AS(tape.backward(v), ValueError);  // non-scalar root
  CHECK_THROWS_AS(tape.backward(x), ValueError);  // not attached

  Tape other;
  Tensor a = Tensor::scalar(2.0);
  tape.watch(x);
  other.watch(a);
  CHECK_THROWS_AS(add(x, a), ValueError);  // mixes two live tapes
}

TEST_CASE("clone detaches from the tape and drops gradients") {
  Tensor x = Tensor::vector({1.0, 2.0});
  Tape tape;
  tape.watch(x);
  tape.backward(sum(mul(x, x)));
  REQUIRE(x.has_grad());

  Tensor copy = x.clone();
  CHECK(!copy.has_grad());
  CHECK(!copy.requires_grad());
  copy.values_mut()[0] = 99.0;  // clones own their storage
  CHECK(x.values()[0] == 1.0);

  Tape other;
  other.watch(copy);  // clone is free to join a different tape
  other.backward(sum(copy));
  CHECK(copy.grad()[0] == 1.0);
}

TEST_CASE("tensor can join a new tape once the old one is destroyed") {
  Tensor x = Tensor::scalar(2.0);
  {
    Tape tape;
    tape.watch(x);
    Tensor y = mul(x, x);
    tape.backward(y);
    CHECK(x.grad()[0] == doctest::Approx(4.0));
  }
  Tape second;
  second.watch(x);
  Tensor y = sum(scale(x, 5.0));
  second.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(5.0));
}

TEST_CASE("grad_check: linear function is exact to near machine precision") {
  std::mt19937_64 rng(47);
  Tensor x = random_tensor(Shape4{1, 2, 3, 3}, rng);
  // A linear map has no truncation error, so a wide step keeps the central
  // difference clear of cancellation noise.
  auto report =
      grad_check([](std::span<Tensor> in) { return sum(scale(in[0], 3.0)); }, {x}, 1e-3);
  CHECK(report.max_rel_error < 1e-10);
}

TEST_CASE("grad_check: conv + activation composite") {
  std::mt19937_64 rng(53);
  Tensor x = random_tensor(Shape4{1, 2, 5, 5}, rng);
  Tensor w = random_tensor(Shape4{3, 2, 3, 3}, rng);
  Tensor b = random_tensor(Shape4::of({3}), rng);
  auto report = grad_check(
      [](std::span<Tensor> in) {
        return sum(gelu(conv2d(in[0], in[1], in[2], ConvSpec::padded(1))));
      },
      {x, w, b});
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("gradient suite passes at its pinned tolerances") {
  for (const auto& entry : run_gradient_suite(12345)) {
    INFO(entry.name << ": " << entry.report.max_rel_error << " " << entry.report.worst);
    CHECK(entry.ok());
  }
}

TEST_CASE("operations are deterministic across repeated evaluation") {
  std::mt19937_64 rng(59);
  Tensor x = random_tensor(Shape4{1, 3, 6, 6}, rng);
  Tensor w = random_tensor(Shape4{4, 3, 3, 3}, rng);
  Tensor y1 = conv2d(x, w, ConvSpec::padded(1));
  Tensor y2 = conv2d(x, w, ConvSpec::padded(1));
  CHECK(bitwise_equal(y1, y2));
  CHECK(bitwise_equal(gelu(y1), gelu(y2)));
}

TEST_CASE("non-finite results are rejected, not propagated") {
  Tensor big = Tensor::full(Shape4{1, 1, 2, 2}, 1e308);
  CHECK_THROWS_AS(mul(big, big), NumericError);
}
