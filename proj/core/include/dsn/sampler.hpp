#pragma once

#include <vector>

#include "dsn/nn.hpp"
#include "dsn/prng.hpp"
#include "dsn/synthgen.hpp"

namespace dsn {

// Per-section selection model: a small encoder applied with shared weights
// to each of the N clips, and a single linear head over the concatenated
// embeddings producing one logit per clip. Theta = encoder + head params.
struct ObservationNet {
  Mlp encoder;  // D -> E
  Mlp head;     // N*E -> N, single identity layer

  int feature_dim() const { return encoder.input_dim(); }
  int embed_dim() const { return encoder.output_dim(); }
  int clips_per_section() const { return head.output_dim(); }

  std::size_t param_count() const {
    return encoder.param_count() + head.param_count();
  }
  std::vector<double> params() const;  // encoder params, then head params
  void set_params(const std::vector<double>& flat);

  // Glorot encoder, zero head: the initial policy is exactly uniform, which
  // keeps early policy-gradient steps small and avoids premature collapse.
  static ObservationNet make(int feature_dim,
                             const std::vector<int>& encoder_hidden,
                             int embed_dim, int clips_per_section, Prng& rng);
};

struct SectionProbs {
  std::vector<double> probs;  // length N, positive, sums to 1
};

struct SelectionAction {
  std::vector<double> one_hot;  // length N, exactly one entry = 1
  int chosen = 0;
};

SelectionAction make_action(int chosen, int n);

// Encode each clip, concatenate embeddings in clip order, apply the head,
// softmax.
SectionProbs section_probs(const ObservationNet& net,
                           const std::vector<ClipFeature>& clips);

// Categorical draw by inverse CDF over indices 0..N-1 in order.
SelectionAction sample_action(const SectionProbs& p, Prng& rng);

// Argmax; ties break toward the lowest index.
SelectionAction greedy_action(const SectionProbs& p);

enum class SelectMode { kStochastic, kGreedy };

struct SectionSelection {
  SectionProbs probs;
  SelectionAction action;
};

// One clip per section, sections processed independently. In stochastic
// mode each section draws from its own child stream keyed by (one ticket
// from rng, section index), so a section's draw does not depend on how
// other sections are processed.
std::vector<SectionSelection> select_clips(const SyntheticVideo& video,
                                           const ObservationNet& net,
                                           SelectMode mode, Prng& rng);

// Gradient of log pi(action | clips, Theta) w.r.t. all Theta params, in
// params() order. At the head logits this is one_hot - probs; encoder
// gradients sum over the N tied applications.
std::vector<double> policy_logprob_grad(const ObservationNet& net,
                                        const std::vector<ClipFeature>& clips,
                                        const SelectionAction& action);

}  // namespace dsn
