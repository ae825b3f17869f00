#include "dsn/gradcheck.hpp"

#include <cmath>

#include "dsn/classifier.hpp"
#include "dsn/error.hpp"
#include "dsn/nn.hpp"
#include "dsn/prng.hpp"
#include "dsn/sampler.hpp"
#include "dsn/trainer.hpp"

namespace dsn {

std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& at, double h) {
  require(h > 0.0, "fd_gradient: h must be > 0");
  std::vector<double> grad(at.size());
  std::vector<double> x = at;
  for (std::size_t i = 0; i < at.size(); ++i) {
    x[i] = at[i] + h;
    double up = f(x);
    x[i] = at[i] - h;
    double down = f(x);
    x[i] = at[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_rel_error(const std::vector<double>& analytic,
                     const std::vector<double>& numeric) {
  require(analytic.size() == numeric.size(), "max_rel_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

namespace {

constexpr double kFdTol = 1e-5;
constexpr double kKinkMargin = 1e-3;

std::vector<double> random_vec(int n, Prng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-scale, scale);
  return v;
}

// True when any relu unit's pre-activation sits within `margin` of zero,
// where a finite difference would straddle the kink.
bool near_relu_kink(const Mlp& net, const std::vector<double>& input,
                    double margin) {
  std::vector<double> x = input;
  for (const auto& layer : net.layers) {
    std::vector<double> z(layer.w.rows);
    for (int r = 0; r < layer.w.rows; ++r) {
      double acc = layer.b[r];
      for (int c = 0; c < layer.w.cols; ++c) acc += layer.w.at(r, c) * x[c];
      z[r] = acc;
    }
    if (layer.act == Activation::kRelu) {
      for (double v : z) {
        if (std::abs(v) < margin) return true;
      }
    }
    for (auto& v : z) {
      if (layer.act == Activation::kRelu) v = std::max(0.0, v);
    }
    x = std::move(z);
  }
  return false;
}

struct FdAccum {
  double worst = 0.0;
  void feed(const std::vector<double>& analytic, const std::vector<double>& numeric) {
    worst = std::max(worst, max_rel_error(analytic, numeric));
  }
};

CheckResult finish(std::string name, double value, double tol) {
  CheckResult r;
  r.name = std::move(name);
  r.value = value;
  r.tolerance = tol;
  r.pass = value <= tol;
  return r;
}

void check_mlp_backward(Prng& rng, int instances, bool corrupt,
                        std::vector<CheckResult>& out) {
  FdAccum params_acc, input_acc;
  for (int i = 0; i < instances; ++i) {
    int in = 2 + static_cast<int>(rng.uniform_int(3));
    int hid = 2 + static_cast<int>(rng.uniform_int(3));
    int outd = 1 + static_cast<int>(rng.uniform_int(3));
    Mlp net = Mlp::make(in, {hid}, outd, rng);
    std::vector<double> input;
    int attempts = 0;
    do {
      input = random_vec(in, rng);
      require(++attempts < 1000, "check_mlp_backward: cannot avoid relu kink");
    } while (near_relu_kink(net, input, kKinkMargin));
    std::vector<double> upstream = random_vec(outd, rng);

    Gradients g = backward(net, forward(net, input), upstream);
    if (corrupt && i == 0) g.params[0] += 1e-3;

    Mlp probe = net;
    auto f_params = [&](const std::vector<double>& p) {
      probe.set_params(p);
      auto y = forward(probe, input).back();
      double dot = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) dot += upstream[k] * y[k];
      return dot;
    };
    params_acc.feed(g.params, fd_gradient(f_params, net.params()));

    auto f_input = [&](const std::vector<double>& x) {
      auto y = forward(net, x).back();
      double dot = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) dot += upstream[k] * y[k];
      return dot;
    };
    input_acc.feed(g.input, fd_gradient(f_input, input));
  }
  out.push_back(finish("mlp-backward-fd", params_acc.worst, kFdTol));
  out.push_back(finish("mlp-input-grad-fd", input_acc.worst, kFdTol));
}

void check_classifier_grad(Prng& rng, int instances, bool corrupt,
                           std::vector<CheckResult>& out) {
  FdAccum acc;
  for (int i = 0; i < instances; ++i) {
    int d = 2 + static_cast<int>(rng.uniform_int(3));
    int j = 2 + static_cast<int>(rng.uniform_int(3));
    int m = 1 + static_cast<int>(rng.uniform_int(3));
    double lambda = (i % 2 == 0) ? 0.0 : 1e-3;
    ClipClassifier clf = ClipClassifier::make(d, {3}, j, rng);
    std::vector<ClipFeature> clips;
    for (int k = 0; k < m; ++k) {
      ClipFeature clip;
      int attempts = 0;
      do {
        clip = random_vec(d, rng);
        require(++attempts < 1000, "check_classifier_grad: cannot avoid relu kink");
      } while (near_relu_kink(clf.net, clip, kKinkMargin));
      clips.push_back(std::move(clip));
    }
    int label = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(j)));

    std::vector<double> params = clf.net.params();
    std::vector<double> analytic = classification_grad(clf, clips, label);
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      analytic[k] += 2.0 * lambda * params[k];
    }
    if (corrupt && i == 0) analytic[0] += 1e-3;

    ClipClassifier probe = clf;
    auto f = [&](const std::vector<double>& p) {
      probe.net.set_params(p);
      return classification_loss(video_prediction(probe, clips), label, lambda, probe);
    };
    acc.feed(analytic, fd_gradient(f, params));
  }
  out.push_back(finish("classifier-loss-fd", acc.worst, kFdTol));
}

void check_policy_grad(Prng& rng, int instances, bool corrupt,
                       std::vector<CheckResult>& out) {
  FdAccum acc;
  for (int i = 0; i < instances; ++i) {
    int d = 2 + static_cast<int>(rng.uniform_int(3));
    int e = 2;
    int n = 2 + static_cast<int>(rng.uniform_int(3));
    ObservationNet net;
    net.encoder = Mlp::make(d, {3}, e, rng);
    net.head = Mlp::make(n * e, {}, n, rng);
    std::vector<ClipFeature> clips;
    for (int k = 0; k < n; ++k) {
      ClipFeature clip;
      int attempts = 0;
      do {
        clip = random_vec(d, rng);
        require(++attempts < 1000, "check_policy_grad: cannot avoid relu kink");
      } while (near_relu_kink(net.encoder, clip, kKinkMargin));
      clips.push_back(std::move(clip));
    }
    int chosen = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(n)));
    SelectionAction action = make_action(chosen, n);

    std::vector<double> analytic = policy_logprob_grad(net, clips, action);
    if (corrupt && i == 0) analytic[0] += 1e-3;

    ObservationNet probe = net;
    auto f = [&](const std::vector<double>& p) {
      probe.set_params(p);
      return std::log(section_probs(probe, clips).probs[chosen]);
    };
    acc.feed(analytic, fd_gradient(f, net.params()));
  }
  out.push_back(finish("policy-logprob-fd", acc.worst, kFdTol));
}

}  // namespace

std::vector<CheckResult> run_gradient_checks(std::uint64_t seed, int instances,
                                             bool corrupt) {
  require(instances > 0, "run_gradient_checks: instances must be > 0");
  std::vector<CheckResult> out;
  Prng mlp_rng = Prng(seed).substream("gradcheck/mlp");
  check_mlp_backward(mlp_rng, instances, corrupt, out);
  Prng clf_rng = Prng(seed).substream("gradcheck/classifier");
  check_classifier_grad(clf_rng, instances, corrupt, out);
  Prng pol_rng = Prng(seed).substream("gradcheck/policy");
  check_policy_grad(pol_rng, instances, corrupt, out);
  return out;
}

std::vector<CheckResult> run_estimator_checks(std::uint64_t seed, int instances,
                                              int draws) {
  require(instances > 0 && draws > 1, "run_estimator_checks: bad sizes");
  Prng rng = Prng(seed).substream("estcheck");
  RewardConfig reward_cfg;

  double baseline_worst = 0.0;
  double grad_worst = 0.0;
  double reward_worst = 0.0;

  for (int i = 0; i < instances; ++i) {
    int d = 2;
    int e = 2;
    int n = 2 + i % 3;  // N in {2, 3, 4}
    int j = 2;
    ObservationNet net;
    net.encoder = Mlp::make(d, {}, e, rng);
    net.head = Mlp::make(n * e, {}, n, rng);
    ClipClassifier clf = ClipClassifier::make(d, {}, j, rng);
    std::vector<ClipFeature> clips;
    for (int k = 0; k < n; ++k) clips.push_back(random_vec(d, rng));
    int label = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(j)));

    SectionProbs probs = section_probs(net, clips);
    int greedy = greedy_action(probs).chosen;

    std::vector<double> rewards(n);
    std::vector<std::vector<double>> glp(n);
    for (int a = 0; a < n; ++a) {
      rewards[a] = reward(clip_scores(clf, clips[a]), label, reward_cfg);
      glp[a] = policy_logprob_grad(net, clips, make_action(a, n));
    }
    double r_b = rewards[greedy];

    std::size_t dim = net.param_count();

    // exact enumeration of the baseline term: R(B) sum_a p_a grad log pi(a)
    for (std::size_t c = 0; c < dim; ++c) {
      double term = 0.0;
      for (int a = 0; a < n; ++a) term += probs.probs[a] * glp[a][c];
      baseline_worst = std::max(baseline_worst, std::abs(r_b * term));
    }

    // enumerated with-baseline gradient and expected reward
    std::vector<double> enum_grad(dim, 0.0);
    double enum_reward = 0.0;
    for (int a = 0; a < n; ++a) {
      double w = probs.probs[a] * (rewards[a] - r_b);
      for (std::size_t c = 0; c < dim; ++c) enum_grad[c] += w * glp[a][c];
      enum_reward += probs.probs[a] * rewards[a];
    }

    // Monte Carlo
    Prng mc = rng.substream("mc-" + std::to_string(i));
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    double r_sum = 0.0, r_sumsq = 0.0;
    for (int t = 0; t < draws; ++t) {
      int a = sample_action(probs, mc).chosen;
      double adv = rewards[a] - r_b;
      for (std::size_t c = 0; c < dim; ++c) {
        double v = adv * glp[a][c];
        sum[c] += v;
        sumsq[c] += v * v;
      }
      r_sum += rewards[a];
      r_sumsq += rewards[a] * rewards[a];
    }
    auto ratio = [&](double s, double sq, double target) {
      double mean = s / draws;
      double var = std::max(0.0, (sq - s * s / draws) / (draws - 1));
      double se = std::sqrt(var / draws);
      return std::abs(mean - target) / (3.0 * se + 1e-12);
    };
    for (std::size_t c = 0; c < dim; ++c) {
      grad_worst = std::max(grad_worst, ratio(sum[c], sumsq[c], enum_grad[c]));
    }
    reward_worst = std::max(reward_worst, ratio(r_sum, r_sumsq, enum_reward));
  }

  std::vector<CheckResult> out;
  CheckResult base;
  base.name = "baseline-term-enumeration-zero";
  base.value = baseline_worst;
  base.tolerance = 1e-10;
  base.pass = base.value <= base.tolerance;
  out.push_back(base);

  CheckResult grad;
  grad.name = "mc-gradient-vs-enumeration";
  grad.value = grad_worst;
  grad.tolerance = 1.0;  // scaled so 1.0 = the 3-standard-error boundary
  grad.pass = grad.value <= grad.tolerance;
  out.push_back(grad);

  CheckResult rew;
  rew.name = "mc-reward-vs-enumeration";
  rew.value = reward_worst;
  rew.tolerance = 1.0;
  rew.pass = rew.value <= rew.tolerance;
  out.push_back(rew);
  return out;
}

}  // namespace dsn
