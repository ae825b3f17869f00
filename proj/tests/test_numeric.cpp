#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "dsn/error.hpp"
#include "dsn/nn.hpp"
#include "dsn/prng.hpp"

using namespace dsn;

namespace {

Mlp single_layer(const Mat& w, const std::vector<double>& b, Activation act) {
  Mlp net;
  net.layers.push_back(Layer{w, b, act});
  return net;
}

Mat mat2x2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m.at(0, 0) = a;
  m.at(0, 1) = b;
  m.at(1, 0) = c;
  m.at(1, 1) = d;
  return m;
}

}  // namespace

TEST_CASE("pcg32 reference stream") {
  // Reference output for (seed, stream) = (42, 54), matching the published
  // pcg32 demo values.
  Prng rng(42, 54);
  CHECK(rng.next_u32() == 0xa15c02b7u);
  CHECK(rng.next_u32() == 0x7b47f409u);
  CHECK(rng.next_u32() == 0xba1d3330u);
  CHECK(rng.next_u32() == 0x83d2f293u);
  CHECK(rng.next_u32() == 0xbfa4784bu);
  CHECK(rng.next_u32() == 0xcbed606eu);
}

TEST_CASE("pcg32 determinism and stream separation") {
  Prng a(7, 3);
  Prng b(7, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

  Prng c(7, 4);
  Prng d(7, 3);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (c.next_u32() == d.next_u32()) ++same;
  CHECK(same < 4);
}

TEST_CASE("next_u64 packs high word first") {
  Prng a(11, 2);
  Prng b(11, 2);
  std::uint64_t hi = a.next_u32();
  std::uint64_t lo = a.next_u32();
  CHECK(b.next_u64() == ((hi << 32) | lo));
}

TEST_CASE("splitmix64 reference values") {
  CHECK(splitmix64(0) == 0xE220A8397B1DCDAFull);
  CHECK(splitmix64(1) == 0x910A2DEC89025CC1ull);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("substream depends on name, not consumption") {
  Prng root(99, 0);
  Prng fresh(99, 0);
  root.next_u64();
  root.next_u64();
  Prng a = root.substream("train");
  Prng b = fresh.substream("train");
  CHECK(a.next_u64() == b.next_u64());

  Prng c = fresh.substream("eval");
  Prng d = fresh.substream("train");
  CHECK(c.next_u64() != d.next_u64());
}

TEST_CASE("derive is a pure function of key and index") {
  Prng a = Prng::derive(123, 4);
  Prng b = Prng::derive(123, 4);
  CHECK(a.next_u64() == b.next_u64());
  Prng c = Prng::derive(123, 5);
  Prng d = Prng::derive(124, 4);
  CHECK(c.next_u64() != b.next_u64());
  CHECK(d.next_u64() != b.next_u64());
}

TEST_CASE("uniform ranges") {
  Prng rng(5, 0);
  for (int i = 0; i < 10000; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform(-2.0, 3.0);
    CHECK(u >= -2.0);
    CHECK(u < 3.0);
  }
}

TEST_CASE("uniform_int bounds and balance") {
  Prng rng(5, 1);
  std::vector<int> counts(6, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) {
    std::uint32_t v = rng.uniform_int(6);
    REQUIRE(v < 6u);
    ++counts[v];
  }
  // 3 standard errors around n/6 for a pinned seed.
  for (int c : counts) CHECK(std::abs(c - 10000) < 273);
  CHECK_THROWS_AS(rng.uniform_int(0), ContractViolation);
}

TEST_CASE("gaussian moments") {
  Prng rng(5, 2);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sumsq += g * g;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(std::sqrt(var) - 1.0) < 0.01);

  Prng rng2(5, 3);
  double g = rng2.gaussian(10.0, 0.0);
  CHECK(g == 10.0);
}

TEST_CASE("shuffle permutes deterministically") {
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  std::vector<int> w = v;
  Prng a(3, 0);
  Prng b(3, 0);
  shuffle(v, a);
  shuffle(w, b);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
}

TEST_CASE("forward relu hand example") {
  // W = [[1, 1], [1, -1]], b = 0, relu: (1, 2) -> (3, 0).
  Mlp net = single_layer(mat2x2(1, 1, 1, -1), {0.0, 0.0}, Activation::kRelu);
  auto acts = forward(net, {1.0, 2.0});
  REQUIRE(acts.size() == 2);
  CHECK(acts[1][0] == 3.0);
  CHECK(acts[1][1] == 0.0);
}

TEST_CASE("forward identity and zero input") {
  Mlp net = single_layer(mat2x2(1, 1, 1, -1), {0.5, -0.25}, Activation::kIdentity);
  auto acts = forward(net, {1.0, 2.0});
  CHECK(acts[1][0] == 3.5);
  CHECK(acts[1][1] == -1.25);

  Mlp relu_net = single_layer(mat2x2(2, 3, -1, 4), {0.0, 0.0}, Activation::kRelu);
  auto zero = forward(relu_net, {0.0, 0.0});
  CHECK(zero[1][0] == 0.0);
  CHECK(zero[1][1] == 0.0);
}

TEST_CASE("forward rejects wrong input size") {
  Mlp net = single_layer(mat2x2(1, 0, 0, 1), {0.0, 0.0}, Activation::kIdentity);
  CHECK_THROWS_AS(forward(net, {1.0}), ContractViolation);
}

TEST_CASE("backward linear layer closed form") {
  // Single identity layer: dW = g (outer) x, db = g, dinput = W^T g.
  Mat w = mat2x2(2, -1, 0.5, 3);
  Mlp net = single_layer(w, {0.1, -0.2}, Activation::kIdentity);
  std::vector<double> x{1.5, -2.0};
  std::vector<double> g{0.7, -0.3};
  auto acts = forward(net, x);
  auto grads = backward(net, acts, g);

  // Flat order: W row-major then b.
  CHECK(grads.params[0] == 0.7 * 1.5);
  CHECK(grads.params[1] == 0.7 * -2.0);
  CHECK(grads.params[2] == -0.3 * 1.5);
  CHECK(grads.params[3] == -0.3 * -2.0);
  CHECK(grads.params[4] == 0.7);
  CHECK(grads.params[5] == -0.3);
  CHECK(grads.input[0] == doctest::Approx(2 * 0.7 + 0.5 * -0.3).epsilon(1e-15));
  CHECK(grads.input[1] == doctest::Approx(-1 * 0.7 + 3 * -0.3).epsilon(1e-15));
}

TEST_CASE("backward zero upstream gives zero grads") {
  Prng rng(8, 0);
  Mlp net = Mlp::make(3, {4}, 2, rng);
  auto acts = forward(net, {0.3, -0.8, 1.1});
  auto grads = backward(net, acts, {0.0, 0.0});
  for (double v : grads.params) CHECK(v == 0.0);
  for (double v : grads.input) CHECK(v == 0.0);
}

TEST_CASE("backward matches finite differences on a small net") {
  Prng rng(21, 0);
  Mlp net = Mlp::make(3, {5, 4}, 2, rng);
  std::vector<double> x{0.4, -1.2, 0.9};
  std::vector<double> up{0.8, -0.6};

  auto acts = forward(net, x);
  auto grads = backward(net, acts, up);

  auto objective = [&](const std::vector<double>& p) {
    Mlp probe = net;
    probe.set_params(p);
    auto a = forward(probe, x);
    double s = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) s += up[i] * a.back()[i];
    return s;
  };

  std::vector<double> base = net.params();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    std::vector<double> p = base;
    p[i] = base[i] + h;
    double fp = objective(p);
    p[i] = base[i] - h;
    double fm = objective(p);
    double fd = (fp - fm) / (2 * h);
    double denom = std::max({1.0, std::abs(fd), std::abs(grads.params[i])});
    worst = std::max(worst, std::abs(fd - grads.params[i]) / denom);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("softmax basics") {
  auto u = softmax({0.0, 0.0, 0.0});
  CHECK(u[0] == 1.0 / 3.0);
  CHECK(u[1] == 1.0 / 3.0);
  CHECK(u[2] == 1.0 / 3.0);

  auto p = softmax({std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(p[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-14));
  CHECK(p[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("softmax is overflow-safe and shift-invariant") {
  auto p = softmax({1000.0, 0.0});
  CHECK(std::isfinite(p[0]));
  CHECK(std::isfinite(p[1]));
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Integer logits shifted by an integer stay exact, so the max-subtracted
  // values are bitwise identical.
  auto a = softmax({1.0, 3.0, -2.0});
  auto b = softmax({1.0 + 8.0, 3.0 + 8.0, -2.0 + 8.0});
  for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("cross entropy values and clamp") {
  CHECK(cross_entropy({1.0, 0.0}, 0) == 0.0);
  CHECK(cross_entropy({std::exp(-1.0), 0.5}, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(cross_entropy({0.0, 1.0}, 0) == doctest::Approx(-std::log(1e-12)).epsilon(1e-14));
  CHECK_THROWS_AS(cross_entropy({0.5, 0.5}, 2), ContractViolation);
  CHECK_THROWS_AS(cross_entropy({0.5, 0.5}, -1), ContractViolation);
}

TEST_CASE("sgd plain ascent step") {
  std::vector<double> params{1.0, -2.0};
  std::vector<double> grads{0.5, 0.25};
  SgdState st;
  st.learning_rate = 0.1;
  st.momentum = 0.0;
  sgd_step(params, grads, st, Direction::kMaximize);
  CHECK(params[0] == 1.0 + 0.1 * 0.5);
  CHECK(params[1] == -2.0 + 0.1 * 0.25);
}

TEST_CASE("sgd zero gradient is a no-op") {
  std::vector<double> params{0.3, -0.7, 4.0};
  std::vector<double> before = params;
  SgdState st;
  st.learning_rate = 0.5;
  st.momentum = 0.9;
  sgd_step(params, {0.0, 0.0, 0.0}, st, Direction::kMaximize);
  CHECK(params == before);
}

TEST_CASE("sgd momentum compounds") {
  // v1 = g, v2 = mu*g + g: with identical grads the second step moves
  // (1 + mu) times the first.
  std::vector<double> params{0.0};
  std::vector<double> grads{1.0};
  SgdState st;
  st.learning_rate = 0.1;
  st.momentum = 0.9;
  sgd_step(params, grads, st, Direction::kMinimize);
  double d1 = 0.0 - params[0];
  double p1 = params[0];
  sgd_step(params, grads, st, Direction::kMinimize);
  double d2 = p1 - params[0];
  CHECK(d2 == doctest::Approx(1.9 * d1).epsilon(1e-15));
}

TEST_CASE("sgd weight decay only when minimizing") {
  SgdState st;
  st.learning_rate = 0.1;
  st.weight_decay = 0.01;

  std::vector<double> p_min{2.0};
  sgd_step(p_min, {0.0}, st, Direction::kMinimize);
  // Effective gradient 2 * wd * param = 0.04, step -0.004.
  CHECK(p_min[0] == doctest::Approx(2.0 - 0.1 * 0.04).epsilon(1e-15));

  SgdState st2;
  st2.learning_rate = 0.1;
  st2.weight_decay = 0.01;
  std::vector<double> p_max{2.0};
  sgd_step(p_max, {0.0}, st2, Direction::kMaximize);
  CHECK(p_max[0] == 2.0);
}

TEST_CASE("sgd rejects size mismatch") {
  std::vector<double> params{1.0, 2.0};
  SgdState st;
  CHECK_THROWS_AS(sgd_step(params, {1.0}, st, Direction::kMinimize), ContractViolation);
}

TEST_CASE("glorot init bounds and moments") {
  Prng rng(13, 0);
  Mat w(1, 1);
  // fan_in + fan_out = 2 -> bound sqrt(3).
  const double bound = std::sqrt(3.0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    glorot_init(w, rng);
    CHECK(std::abs(w.at(0, 0)) <= bound);
    sum += w.at(0, 0);
  }
  CHECK(std::abs(sum / n) < 0.01);

  Prng r1(13, 1);
  Prng r2(13, 1);
  Mat a(4, 3), b(4, 3);
  glorot_init(a, r1);
  glorot_init(b, r2);
  CHECK(a.data == b.data);
}

TEST_CASE("mlp make shapes and flat params round trip") {
  Prng rng(2, 0);
  Mlp net = Mlp::make(3, {5, 4}, 2, rng);
  CHECK(net.input_dim() == 3);
  CHECK(net.output_dim() == 2);
  CHECK(net.layers.size() == 3);
  CHECK(net.layers[0].act == Activation::kRelu);
  CHECK(net.layers[1].act == Activation::kRelu);
  CHECK(net.layers[2].act == Activation::kIdentity);
  CHECK(net.param_count() == (3 * 5 + 5) + (5 * 4 + 4) + (4 * 2 + 2));

  auto flat = net.params();
  REQUIRE(flat.size() == net.param_count());
  Mlp other = Mlp::make(3, {5, 4}, 2, rng);
  other.set_params(flat);
  CHECK(other.params() == flat);
  CHECK_THROWS_AS(net.set_params(std::vector<double>(3)), ContractViolation);
  CHECK_THROWS_AS(Mlp::make(0, {}, 2, rng), ContractViolation);
}

TEST_CASE("argmax ties break low") {
  CHECK(argmax_index({0.1, 0.9, 0.9}) == 1);
  CHECK(argmax_index({0.5, 0.5}) == 0);
  CHECK(argmax_index({-1.0}) == 0);
  CHECK_THROWS_AS(argmax_index({}), ContractViolation);
}
