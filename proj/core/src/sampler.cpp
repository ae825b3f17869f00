#include "dsn/sampler.hpp"

#include <algorithm>

#include "dsn/error.hpp"

namespace dsn {

std::vector<double> ObservationNet::params() const {
  std::vector<double> flat = encoder.params();
  std::vector<double> h = head.params();
  flat.insert(flat.end(), h.begin(), h.end());
  return flat;
}

void ObservationNet::set_params(const std::vector<double>& flat) {
  require(flat.size() == param_count(), "ObservationNet::set_params: size mismatch");
  std::vector<double> e(flat.begin(),
                        flat.begin() + static_cast<std::ptrdiff_t>(encoder.param_count()));
  std::vector<double> h(flat.begin() + static_cast<std::ptrdiff_t>(encoder.param_count()),
                        flat.end());
  encoder.set_params(e);
  head.set_params(h);
}

ObservationNet ObservationNet::make(int feature_dim,
                                    const std::vector<int>& encoder_hidden,
                                    int embed_dim, int clips_per_section,
                                    Prng& rng) {
  require(clips_per_section >= 1, "ObservationNet::make: need at least one clip");
  ObservationNet net;
  net.encoder = Mlp::make(feature_dim, encoder_hidden, embed_dim, rng);
  Layer head_layer;
  head_layer.w = Mat(clips_per_section, clips_per_section * embed_dim);
  head_layer.b.assign(clips_per_section, 0.0);
  head_layer.act = Activation::kIdentity;
  net.head.layers.push_back(std::move(head_layer));
  return net;
}

SelectionAction make_action(int chosen, int n) {
  require(chosen >= 0 && chosen < n, "make_action: index out of range");
  SelectionAction a;
  a.one_hot.assign(n, 0.0);
  a.one_hot[chosen] = 1.0;
  a.chosen = chosen;
  return a;
}

namespace {

void check_clips(const ObservationNet& net, const std::vector<ClipFeature>& clips) {
  require(static_cast<int>(clips.size()) == net.clips_per_section(),
          "section_probs: wrong clip count");
  for (const auto& clip : clips) {
    require(static_cast<int>(clip.size()) == net.feature_dim(),
            "section_probs: wrong clip dimension");
  }
}

std::vector<double> head_input(const ObservationNet& net,
                               const std::vector<ClipFeature>& clips,
                               std::vector<Activations>* encoder_acts) {
  std::vector<double> concat;
  concat.reserve(clips.size() * static_cast<std::size_t>(net.embed_dim()));
  for (const auto& clip : clips) {
    Activations acts = forward(net.encoder, clip);
    concat.insert(concat.end(), acts.back().begin(), acts.back().end());
    if (encoder_acts) encoder_acts->push_back(std::move(acts));
  }
  return concat;
}

}  // namespace

SectionProbs section_probs(const ObservationNet& net,
                           const std::vector<ClipFeature>& clips) {
  check_clips(net, clips);
  std::vector<double> concat = head_input(net, clips, nullptr);
  Activations head_acts = forward(net.head, concat);
  return SectionProbs{softmax(head_acts.back())};
}

SelectionAction sample_action(const SectionProbs& p, Prng& rng) {
  require(!p.probs.empty(), "sample_action: empty distribution");
  int n = static_cast<int>(p.probs.size());
  double u = rng.uniform();
  double cum = 0.0;
  for (int i = 0; i < n; ++i) {
    cum += p.probs[i];
    if (u < cum) return make_action(i, n);
  }
  return make_action(n - 1, n);  // guard against rounding in the partial sums
}

SelectionAction greedy_action(const SectionProbs& p) {
  require(!p.probs.empty(), "greedy_action: empty distribution");
  return make_action(argmax_index(p.probs), static_cast<int>(p.probs.size()));
}

std::vector<SectionSelection> select_clips(const SyntheticVideo& video,
                                           const ObservationNet& net,
                                           SelectMode mode, Prng& rng) {
  std::vector<SectionSelection> out;
  out.reserve(video.sections.size());
  std::uint64_t ticket = (mode == SelectMode::kStochastic) ? rng.next_u64() : 0;
  for (std::size_t m = 0; m < video.sections.size(); ++m) {
    SectionSelection sel;
    sel.probs = section_probs(net, video.sections[m]);
    if (mode == SelectMode::kStochastic) {
      Prng child = Prng::derive(ticket, m);
      sel.action = sample_action(sel.probs, child);
    } else {
      sel.action = greedy_action(sel.probs);
    }
    out.push_back(std::move(sel));
  }
  return out;
}

std::vector<double> policy_logprob_grad(const ObservationNet& net,
                                        const std::vector<ClipFeature>& clips,
                                        const SelectionAction& action) {
  check_clips(net, clips);
  int n = net.clips_per_section();
  require(static_cast<int>(action.one_hot.size()) == n,
          "policy_logprob_grad: action length mismatch");
  require(action.chosen >= 0 && action.chosen < n,
          "policy_logprob_grad: chosen index out of range");
  for (int i = 0; i < n; ++i) {
    require(action.one_hot[i] == (i == action.chosen ? 1.0 : 0.0),
            "policy_logprob_grad: action is not one-hot");
  }

  std::vector<Activations> encoder_acts;
  encoder_acts.reserve(clips.size());
  std::vector<double> concat = head_input(net, clips, &encoder_acts);
  Activations head_acts = forward(net.head, concat);
  std::vector<double> probs = softmax(head_acts.back());

  // d log p_chosen / d logits = one_hot - probs
  std::vector<double> dlogits(n);
  for (int i = 0; i < n; ++i) dlogits[i] = action.one_hot[i] - probs[i];

  Gradients head_grads = backward(net.head, head_acts, dlogits);

  std::vector<double> flat(net.encoder.param_count(), 0.0);
  int e = net.embed_dim();
  for (int k = 0; k < n; ++k) {
    std::vector<double> upstream(head_grads.input.begin() + static_cast<std::ptrdiff_t>(k) * e,
                                 head_grads.input.begin() + static_cast<std::ptrdiff_t>(k + 1) * e);
    Gradients g = backward(net.encoder, encoder_acts[k], upstream);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += g.params[i];
  }
  flat.insert(flat.end(), head_grads.params.begin(), head_grads.params.end());
  return flat;
}

}  // namespace dsn
