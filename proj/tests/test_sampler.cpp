#include <cmath>
#include <vector>

#include <doctest.h>

#include "dsn/error.hpp"
#include "dsn/nn.hpp"
#include "dsn/prng.hpp"
#include "dsn/sampler.hpp"
#include "dsn/synthgen.hpp"

using namespace dsn;

namespace {

Mlp identity_net(int dim) {
  Mlp net;
  Layer layer;
  layer.w = Mat(dim, dim);
  for (int i = 0; i < dim; ++i) layer.w.at(i, i) = 1.0;
  layer.b.assign(dim, 0.0);
  layer.act = Activation::kIdentity;
  net.layers.push_back(layer);
  return net;
}

// Encoder that averages the clip features into one scalar.
Mlp mean_encoder(int dim) {
  Mlp net;
  Layer layer;
  layer.w = Mat(1, dim);
  for (int c = 0; c < dim; ++c) layer.w.at(0, c) = 1.0 / dim;
  layer.b.assign(1, 0.0);
  layer.act = Activation::kIdentity;
  net.layers.push_back(layer);
  return net;
}

std::vector<ClipFeature> constant_clips(const std::vector<double>& values, int dim) {
  std::vector<ClipFeature> clips;
  for (double v : values) clips.emplace_back(dim, v);
  return clips;
}

SyntheticVideo toy_video(const std::vector<std::vector<ClipFeature>>& sections) {
  SyntheticVideo v;
  v.video_id = 0;
  v.label = 0;
  v.sections = sections;
  v.planted.assign(sections.size(), 0);
  return v;
}

}  // namespace

TEST_CASE("make gives uniform initial policy") {
  Prng rng(17, 0);
  ObservationNet net = ObservationNet::make(6, {5}, 4, 3, rng);
  CHECK(net.feature_dim() == 6);
  CHECK(net.embed_dim() == 4);
  CHECK(net.clips_per_section() == 3);
  REQUIRE(net.head.layers.size() == 1);
  for (double w : net.head.layers[0].w.data) CHECK(w == 0.0);

  Prng data_rng(18, 0);
  std::vector<ClipFeature> clips;
  for (int n = 0; n < 3; ++n) {
    ClipFeature clip(6);
    for (auto& x : clip) x = data_rng.gaussian();
    clips.push_back(clip);
  }
  auto p = section_probs(net, clips);
  for (double q : p.probs) CHECK(q == 1.0 / 3.0);
}

TEST_CASE("params round trip covers encoder and head") {
  Prng rng(17, 1);
  ObservationNet net = ObservationNet::make(4, {3}, 2, 3, rng);
  auto flat = net.params();
  REQUIRE(flat.size() == net.param_count());
  CHECK(net.param_count() == net.encoder.param_count() + net.head.param_count());

  std::vector<double> bumped = flat;
  for (auto& v : bumped) v += 0.5;
  net.set_params(bumped);
  CHECK(net.params() == bumped);
  CHECK_THROWS_AS(net.set_params(std::vector<double>(2)), ContractViolation);
}

TEST_CASE("identical clips get near-uniform probs under any tied head") {
  Prng rng(19, 0);
  ObservationNet net;
  net.encoder = Mlp::make(5, {4}, 3, rng);
  // Head whose rows are block permutations of each other: row i applies
  // weights w to block i and v to the others.
  const int n = 3, e = 3;
  Layer head;
  head.w = Mat(n, n * e);
  std::vector<double> wv(e), vv(e);
  for (auto& x : wv) x = rng.uniform(-1.0, 1.0);
  for (auto& x : vv) x = rng.uniform(-1.0, 1.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < e; ++k)
        head.w.at(i, j * e + k) = (i == j) ? wv[k] : vv[k];
  head.b.assign(n, 0.7);
  head.act = Activation::kIdentity;
  net.head.layers.push_back(head);

  ClipFeature clip(5);
  for (auto& x : clip) x = rng.gaussian();
  auto p = section_probs(net, {clip, clip, clip});
  for (double q : p.probs) CHECK(q == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("section_probs is a valid distribution") {
  Prng rng(19, 1);
  ObservationNet net;
  net.encoder = Mlp::make(4, {6}, 3, rng);
  net.head = Mlp::make(9, {}, 3, rng);
  Prng data_rng(19, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ClipFeature> clips;
    for (int i = 0; i < 3; ++i) {
      ClipFeature clip(4);
      for (auto& x : clip) x = data_rng.gaussian(0.0, 3.0);
      clips.push_back(clip);
    }
    auto p = section_probs(net, clips);
    double sum = 0.0;
    for (double q : p.probs) {
      CHECK(q > 0.0);
      sum += q;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("closed-form probs through mean encoder and identity head") {
  // Clips with constant values (0, ln2, ln3): logits equal those means, so
  // probs are (1/6, 2/6, 3/6).
  ObservationNet net;
  net.encoder = mean_encoder(4);
  net.head = identity_net(3);
  auto clips = constant_clips({0.0, std::log(2.0), std::log(3.0)}, 4);
  auto p = section_probs(net, clips);
  CHECK(p.probs[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(p.probs[1] == doctest::Approx(2.0 / 6.0).epsilon(1e-12));
  CHECK(p.probs[2] == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("section_probs rejects wrong shapes") {
  Prng rng(19, 3);
  ObservationNet net = ObservationNet::make(4, {}, 2, 3, rng);
  auto clips = constant_clips({0.0, 1.0}, 4);  // two clips, head wants 3
  CHECK_THROWS_AS(section_probs(net, clips), ContractViolation);
  auto bad_dim = constant_clips({0.0, 1.0, 2.0}, 5);
  CHECK_THROWS_AS(section_probs(net, bad_dim), ContractViolation);
}

TEST_CASE("sample_action degenerate and balanced draws") {
  SectionProbs sure{{1.0, 0.0, 0.0}};
  Prng rng(23, 0);
  for (int i = 0; i < 50; ++i) {
    auto a = sample_action(sure, rng);
    CHECK(a.chosen == 0);
    CHECK(a.one_hot == std::vector<double>{1.0, 0.0, 0.0});
  }

  SectionProbs even{{0.5, 0.5}};
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    if (sample_action(even, rng).chosen == 0) ++first;
  }
  // 3 sigma around n/2.
  CHECK(std::abs(first - n / 2) < 3 * std::sqrt(n * 0.25));
}

TEST_CASE("sample_action replays bit-identically") {
  SectionProbs p{{0.2, 0.5, 0.3}};
  Prng a(23, 1), b(23, 1);
  for (int i = 0; i < 100; ++i) {
    CHECK(sample_action(p, a).chosen == sample_action(p, b).chosen);
  }
}

TEST_CASE("greedy_action picks the argmax, ties break low") {
  CHECK(greedy_action(SectionProbs{{0.2, 0.5, 0.3}}).chosen == 1);
  CHECK(greedy_action(SectionProbs{{0.5, 0.5}}).chosen == 0);

  // Invariant to any strictly monotone transform of the logits.
  Prng rng(23, 2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> z(4);
    for (auto& v : z) v = rng.uniform(-3.0, 3.0);
    std::vector<double> z2(4);
    for (int i = 0; i < 4; ++i) z2[i] = 2.5 * z[i] + 1.75;
    CHECK(greedy_action(SectionProbs{softmax(z)}).chosen ==
          greedy_action(SectionProbs{softmax(z2)}).chosen);
  }
}

TEST_CASE("select_clips shape and greedy determinism") {
  Prng rng(29, 0);
  ObservationNet net;
  net.encoder = Mlp::make(4, {5}, 3, rng);
  net.head = Mlp::make(9, {}, 3, rng);

  DatasetSpec spec;
  spec.num_classes = 3;
  spec.sections = 2;
  spec.clips_per_section = 3;
  spec.feature_dim = 4;
  spec.train_count = 4;
  spec.test_count = 1;
  spec.seed = 11;
  Dataset ds = generate_dataset(spec);
  const SyntheticVideo& video = ds.train[0];

  Prng r1(31, 0), r2(31, 0);
  auto g1 = select_clips(video, net, SelectMode::kGreedy, r1);
  auto g2 = select_clips(video, net, SelectMode::kGreedy, r2);
  REQUIRE(g1.size() == 2);
  for (int m = 0; m < 2; ++m) {
    CHECK(g1[m].action.chosen == g2[m].action.chosen);
    CHECK(g1[m].action.chosen ==
          greedy_action(section_probs(net, video.sections[m])).chosen);
  }

  // Greedy mode consumes no randomness: the rng continues as if untouched.
  Prng consumed(31, 0);
  auto first_without = Prng(31, 0).next_u64();
  (void)select_clips(video, net, SelectMode::kGreedy, consumed);
  CHECK(consumed.next_u64() == first_without);

  Prng s1(31, 1), s2(31, 1);
  auto a1 = select_clips(video, net, SelectMode::kStochastic, s1);
  auto a2 = select_clips(video, net, SelectMode::kStochastic, s2);
  for (int m = 0; m < 2; ++m) CHECK(a1[m].action.chosen == a2[m].action.chosen);
}

TEST_CASE("stochastic select_clips matches section marginals") {
  Prng rng(29, 1);
  ObservationNet net;
  net.encoder = Mlp::make(3, {4}, 2, rng);
  net.head = Mlp::make(6, {}, 3, rng);

  // Single-section video with distinct clips.
  std::vector<ClipFeature> clips;
  Prng data_rng(29, 2);
  for (int i = 0; i < 3; ++i) {
    ClipFeature clip(3);
    for (auto& x : clip) x = data_rng.gaussian(0.0, 2.0);
    clips.push_back(clip);
  }
  SyntheticVideo video = toy_video({clips});
  auto expected = section_probs(net, clips).probs;

  Prng draws(29, 3);
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto sel = select_clips(video, net, SelectMode::kStochastic, draws);
    ++counts[sel[0].action.chosen];
  }
  for (int k = 0; k < 3; ++k) {
    double freq = static_cast<double>(counts[k]) / n;
    double se = std::sqrt(expected[k] * (1.0 - expected[k]) / n);
    CHECK(std::abs(freq - expected[k]) < 3 * se + 1e-9);
  }
}

TEST_CASE("a section's draw ignores the other sections") {
  // Same ticket, same section content: altering section 1's clips must not
  // change section 0's draw.
  Prng rng(29, 4);
  ObservationNet net;
  net.encoder = Mlp::make(3, {4}, 2, rng);
  net.head = Mlp::make(6, {}, 3, rng);

  Prng data_rng(29, 5);
  auto random_section = [&] {
    std::vector<ClipFeature> clips;
    for (int i = 0; i < 3; ++i) {
      ClipFeature clip(3);
      for (auto& x : clip) x = data_rng.gaussian();
      clips.push_back(clip);
    }
    return clips;
  };
  auto shared = random_section();
  SyntheticVideo a = toy_video({shared, random_section()});
  SyntheticVideo b = toy_video({shared, random_section()});

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Prng ra(seed, 9), rb(seed, 9);
    auto sa = select_clips(a, net, SelectMode::kStochastic, ra);
    auto sb = select_clips(b, net, SelectMode::kStochastic, rb);
    CHECK(sa[0].action.chosen == sb[0].action.chosen);
  }
}

TEST_CASE("policy gradient at the head equals one_hot minus probs") {
  Prng rng(37, 0);
  ObservationNet net = ObservationNet::make(4, {}, 2, 3, rng);  // zero head
  auto clips = constant_clips({0.3, -0.9, 1.4}, 4);
  auto p = section_probs(net, clips);
  for (double q : p.probs) CHECK(q == 1.0 / 3.0);

  auto grad = policy_logprob_grad(net, clips, make_action(0, 3));
  // Head bias gradients sit in the last N slots of the flat vector.
  std::size_t nb = grad.size();
  CHECK(grad[nb - 3] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(grad[nb - 2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(grad[nb - 1] == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("policy gradient matches finite differences") {
  Prng rng(37, 1);
  ObservationNet net;
  net.encoder = Mlp::make(3, {3}, 2, rng);
  net.head = Mlp::make(6, {}, 3, rng);
  Prng data_rng(37, 2);
  std::vector<ClipFeature> clips;
  for (int i = 0; i < 3; ++i) {
    ClipFeature clip(3);
    for (auto& x : clip) x = data_rng.gaussian();
    clips.push_back(clip);
  }
  auto action = make_action(1, 3);
  auto grad = policy_logprob_grad(net, clips, action);
  auto base = net.params();
  REQUIRE(grad.size() == base.size());

  auto logprob = [&](const std::vector<double>& params) {
    ObservationNet probe = net;
    probe.set_params(params);
    return std::log(section_probs(probe, clips).probs[action.chosen]);
  };
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto p = base;
    p[i] = base[i] + h;
    double fp = logprob(p);
    p[i] = base[i] - h;
    double fm = logprob(p);
    double fd = (fp - fm) / (2 * h);
    double denom = std::max({1.0, std::abs(fd), std::abs(grad[i])});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("score-function identity: expected grad is zero") {
  Prng rng(37, 3);
  ObservationNet net;
  net.encoder = Mlp::make(3, {3}, 2, rng);
  net.head = Mlp::make(6, {}, 3, rng);
  Prng data_rng(37, 4);
  std::vector<ClipFeature> clips;
  for (int i = 0; i < 3; ++i) {
    ClipFeature clip(3);
    for (auto& x : clip) x = data_rng.gaussian();
    clips.push_back(clip);
  }
  auto probs = section_probs(net, clips).probs;
  std::vector<double> acc(net.param_count(), 0.0);
  for (int a = 0; a < 3; ++a) {
    auto g = policy_logprob_grad(net, clips, make_action(a, 3));
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += probs[a] * g[i];
  }
  for (double v : acc) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("permuting clips permutes probs when head blocks permute") {
  Prng rng(37, 5);
  ObservationNet net;
  const int n = 3, e = 2, d = 3;
  net.encoder = Mlp::make(d, {3}, e, rng);
  net.head = Mlp::make(n * e, {}, n, rng);

  Prng data_rng(37, 6);
  std::vector<ClipFeature> clips;
  for (int i = 0; i < n; ++i) {
    ClipFeature clip(d);
    for (auto& x : clip) x = data_rng.gaussian();
    clips.push_back(clip);
  }
  auto p = section_probs(net, clips).probs;

  // perm maps old index to new index.
  std::vector<int> perm{2, 0, 1};
  std::vector<ClipFeature> permuted(n);
  for (int j = 0; j < n; ++j) permuted[perm[j]] = clips[j];

  ObservationNet net2 = net;
  const Mat& w = net.head.layers[0].w;
  Mat w2(n, n * e);
  std::vector<double> b2(n);
  for (int i = 0; i < n; ++i) {
    b2[perm[i]] = net.head.layers[0].b[i];
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < e; ++k)
        w2.at(perm[i], perm[j] * e + k) = w.at(i, j * e + k);
  }
  net2.head.layers[0].w = w2;
  net2.head.layers[0].b = b2;

  auto q = section_probs(net2, permuted).probs;
  for (int i = 0; i < n; ++i)
    CHECK(q[perm[i]] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("policy_logprob_grad validates the action") {
  Prng rng(37, 7);
  ObservationNet net = ObservationNet::make(3, {}, 2, 3, rng);
  auto clips = constant_clips({0.1, 0.2, 0.3}, 3);
  SelectionAction bad;
  bad.chosen = 1;
  bad.one_hot = {1.0, 1.0, 0.0};
  CHECK_THROWS_AS(policy_logprob_grad(net, clips, bad), ContractViolation);
}
