#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "thcrl/dshf.hpp"

using namespace thcrl;
using test::grad_check;
using test::rand_tensor;
using Tensor = TensorT<double>;

namespace {

// Scalar-loop evaluation of the channel attention gate, independent of the
// tensor ops: mean over L, two dense layers with relu then sigmoid, applied
// back onto the input.
std::vector<double> can_oracle(const CanT<double>& can, const Tensor& q) {
  int64_t B = q.shape()[0], C = q.shape()[1], L = q.shape()[2];
  int64_t H = can.fc1.out_dim();
  const auto& w1 = can.fc1.w.value();
  const auto& b1 = can.fc1.b.value();
  const auto& w2 = can.fc2.w.value();
  const auto& b2 = can.fc2.b.value();
  std::vector<double> out(q.value().size());
  for (int64_t b = 0; b < B; ++b) {
    std::vector<double> pooled(size_t(C), 0.0);
    for (int64_t c = 0; c < C; ++c) {
      for (int64_t l = 0; l < L; ++l) pooled[size_t(c)] += q.value()[size_t((b * C + c) * L + l)];
      pooled[size_t(c)] /= double(L);
    }
    std::vector<double> hidden(size_t(H), 0.0);
    for (int64_t h = 0; h < H; ++h) {
      double acc = b1[size_t(h)];
      for (int64_t c = 0; c < C; ++c) acc += pooled[size_t(c)] * w1[size_t(c * H + h)];
      hidden[size_t(h)] = acc > 0 ? acc : 0;
    }
    for (int64_t c = 0; c < C; ++c) {
      double acc = b2[size_t(c)];
      for (int64_t h = 0; h < H; ++h) acc += hidden[size_t(h)] * w2[size_t(h * C + c)];
      double gate = can.sigmoid_gate ? 1.0 / (1.0 + std::exp(-acc)) : acc;
      for (int64_t l = 0; l < L; ++l)
        out[size_t((b * C + c) * L + l)] = q.value()[size_t((b * C + c) * L + l)] * gate;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("channel attention: zero input stays zero") {
  Rng rng(1);
  CanT<double> can(4, true, rng);
  Tensor q({2, 4, 6});
  auto out = can.forward(q);
  for (double v : out.value()) CHECK(v == 0.0);
}

TEST_CASE("channel attention: saturated gate passes the input through") {
  Rng rng(2);
  CanT<double> can(3, true, rng);
  std::fill(can.fc2.b.value().begin(), can.fc2.b.value().end(), 60.0);
  auto q = rand_tensor({2, 3, 5}, rng);
  auto out = can.forward(q);
  for (size_t i = 0; i < out.value().size(); ++i)
    CHECK(out.value()[i] == doctest::Approx(q.value()[i]).epsilon(1e-12));
}

TEST_CASE("channel attention gate entries stay in (0,1)") {
  Rng rng(3);
  CanT<double> can(6, true, rng);
  auto q = rand_tensor({3, 6, 8}, rng, -2, 2);
  auto pooled = mean_axis(q, 2);
  auto gate = sigmoid(can.fc2.forward(relu(can.fc1.forward(pooled))));
  for (double v : gate.value()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("channel attention matches the scalar-loop oracle") {
  Rng rng(4);
  for (bool sig : {true, false}) {
    CanT<double> can(5, sig, rng);
    auto q = rand_tensor({3, 5, 7}, rng, -1.5, 1.5);
    auto out = can.forward(q);
    auto expect = can_oracle(can, q);
    for (size_t i = 0; i < expect.size(); ++i)
      CHECK(out.value()[i] == doctest::Approx(expect[i]).epsilon(1e-10));
  }
}

TEST_CASE("rcblock: zeroed main branch leaves only the shortcut") {
  Rng rng(5);
  RcBlockT<double> block(3, 4, true, rng);
  for (auto* conv : {&block.conv_a, &block.conv_b}) {
    std::fill(conv->w.value().begin(), conv->w.value().end(), 0.0);
    std::fill(conv->b.value().begin(), conv->b.value().end(), 0.0);
  }
  auto o = rand_tensor({2, 3, 8}, rng);
  auto out = block.forward(o);
  auto shortcut_only = block.shortcut.forward(o);
  CHECK(out.value() == shortcut_only.value());
}

TEST_CASE("rcblock preserves length") {
  Rng rng(6);
  RcBlockT<double> block(2, 4, true, rng);
  for (int64_t len : {8, 32, 512}) {
    auto o = rand_tensor({1, 2, len}, rng);
    auto out = block.forward(o);
    CHECK(out.shape() == Shape{1, 4, len});
  }
}

TEST_CASE("rcblock gradient vs finite differences") {
  Rng rng(7);
  RcBlockT<double> block(2, 4, true, rng);
  auto o = rand_tensor({1, 2, 8}, rng);
  std::vector<Tensor> leaves = {o};
  NamedParams<double> named;
  block.collect("rc", named);
  for (auto& [name, t] : named) leaves.push_back(t);
  double err = grad_check(leaves, [&] {
    auto y = block.forward(o);
    return sum_all(hadamard(y, y));
  });
  CHECK(err < 1e-4);
}

TEST_CASE("view attention semantics") {
  Rng rng(8);
  auto z1 = rand_tensor({3, 4}, rng);
  auto z2 = rand_tensor({3, 4}, rng);
  auto stacked = stack_rows<double>({z1, z2});  // [3,2,4]

  Tensor ones({2}, {1, 1}, true);
  auto same = scale_channels_vec(stacked, ones);
  CHECK(same.value() == stacked.value());

  Tensor mask({2}, {1, 0});
  auto masked = scale_channels_vec(stacked, mask);
  for (int64_t b = 0; b < 3; ++b)
    for (int64_t j = 0; j < 4; ++j) {
      CHECK(masked.value()[size_t((b * 2 + 0) * 4 + j)] == z1.value()[size_t(b * 4 + j)]);
      CHECK(masked.value()[size_t((b * 2 + 1) * 4 + j)] == 0.0);
    }

  // d sum(z * w)/d w_m equals the sum over view m's entries
  Tensor w({2}, {0.7, -0.3}, true);
  double err = grad_check({w}, [&] { return sum_all(scale_channels_vec(stacked, w)); });
  CHECK(err < 1e-4);
}

TEST_CASE("dshf default plan matches the full-scale channel plan") {
  Rng rng(9);
  DshfNetworkT<double> net(3, 512, 4, 32, true, rng);
  bool found = false;
  for (const auto& s : net.plan)
    if (s.name == "bottleneck") {
      CHECK(s.channels == 512);  // 2^4 * 32
      CHECK(s.length == 32);     // 512 / 2^4
      found = true;
    }
  CHECK(found);
  CHECK(net.shape_trace().find("bottleneck: 512x32") != std::string::npos);
}

TEST_CASE("dshf decoder concat channels follow C''_u = 2^(U-u) C0 + 2^(U-u+1) C0") {
  Rng rng(10);
  DshfNetworkT<double> net(2, 4, 1, 2, true, rng);
  // U=1, C0=2: first decoder concat sees C'_1 + C_1 = 2 + 4 = 6
  bool found = false;
  for (const auto& s : net.plan)
    if (s.name == "dec0.concat") {
      CHECK(s.channels == 6);
      found = true;
    }
  CHECK(found);

  auto z1 = rand_tensor({2, 4}, rng);
  auto z2 = rand_tensor({2, 4}, rng);
  std::vector<DshfStageShape> trace;
  DshfNetworkT<double>::ForwardOpts opts;
  opts.trace = &trace;
  auto fused = net.forward({z1, z2}, &opts);
  CHECK(fused.shape() == Shape{2, 8});
  for (const auto& s : trace)
    if (s.name == "dec0.concat") CHECK(s.channels == 6);
}

TEST_CASE("dshf shape laws hold across a config sweep") {
  Rng rng(11);
  for (int64_t u = 1; u <= 3; ++u) {
    for (int64_t c0 : {2, 4}) {
      for (int64_t m : {2, 3}) {
        for (int64_t dpsi : {int64_t(1) << u, 4 * (int64_t(1) << u)}) {
          DshfNetworkT<double> net(m, dpsi, u, c0, true, rng);
          std::vector<Tensor> views;
          for (int64_t v = 0; v < m; ++v) views.push_back(rand_tensor({2, dpsi}, rng));
          std::vector<DshfStageShape> trace;
          DshfNetworkT<double>::ForwardOpts opts;
          opts.trace = &trace;
          auto fused = net.forward(views, &opts);
          CHECK(fused.shape() == Shape{2, m * dpsi});
          // actual stage shapes equal the static plan
          REQUIRE(trace.size() == net.plan.size());
          for (size_t i = 0; i < trace.size(); ++i) {
            CHECK(trace[i].name == net.plan[i].name);
            CHECK(trace[i].channels == net.plan[i].channels);
            CHECK(trace[i].length == net.plan[i].length);
          }
        }
      }
    }
  }
}

TEST_CASE("skip connections are live: zeroing one changes the output") {
  Rng rng(12);
  DshfNetworkT<double> net(2, 16, 2, 2, true, rng);
  auto z1 = rand_tensor({2, 16}, rng);
  auto z2 = rand_tensor({2, 16}, rng);
  auto normal = net.forward({z1, z2});
  DshfNetworkT<double>::ForwardOpts opts;
  opts.zero_skip = 2;  // p^(U)
  auto ablated = net.forward({z1, z2}, &opts);
  CHECK(normal.value() != ablated.value());
}

TEST_CASE("full dshf gradient check at U=2, d_psi=16") {
  Rng rng(13);
  DshfNetworkT<double> net(2, 16, 2, 2, true, rng);
  auto z1 = rand_tensor({2, 16}, rng, -1, 1);
  auto z2 = rand_tensor({2, 16}, rng, -1, 1);
  std::vector<Tensor> leaves = {z1, z2};
  NamedParams<double> named;
  net.collect("dshf", named);
  for (auto& [name, t] : named) leaves.push_back(t);
  double err = grad_check(leaves, [&] {
    auto y = net.forward({z1, z2});
    return sum_all(hadamard(y, y));
  });
  CHECK(err < 1e-4);
}

TEST_CASE("dshf forward is deterministic for a fixed seed") {
  Rng rng_a(14), rng_b(14), rng_x(15);
  DshfNetworkT<double> a(2, 8, 2, 2, true, rng_a);
  DshfNetworkT<double> b(2, 8, 2, 2, true, rng_b);
  auto z1 = rand_tensor({3, 8}, rng_x);
  auto z2 = rand_tensor({3, 8}, rng_x);
  CHECK(a.forward({z1, z2}).value() == b.forward({z1, z2}).value());
}

TEST_CASE("dshf rejects invalid width/depth combinations at construction") {
  Rng rng(16);
  CHECK_THROWS_AS(DshfNetworkT<double>(2, 12, 3, 2, true, rng), ConfigError);
  CHECK_THROWS_AS(DshfNetworkT<double>(2, 8, 0, 2, true, rng), ConfigError);
}

TEST_CASE("concat_fallback") {
  Tensor a({1, 2}, {1, 2});
  Tensor b({1, 2}, {3, 4});
  auto c = concat_fallback<double>({a, b});
  CHECK(c.shape() == Shape{1, 4});
  CHECK(c.value() == std::vector<double>{1, 2, 3, 4});

  Rng rng(17);
  std::vector<Tensor> views;
  for (int m = 0; m < 3; ++m) views.push_back(rand_tensor({4, 5}, rng));
  CHECK(concat_fallback(views).shape() == Shape{4, 15});
}
