#pragma once

#include <vector>

#include "dsn/nn.hpp"
#include "dsn/prng.hpp"
#include "dsn/synthgen.hpp"

namespace dsn {

// Per-clip classifier. Phi = net params.
struct ClipClassifier {
  Mlp net;  // D -> J

  int feature_dim() const { return net.input_dim(); }
  int num_classes() const { return net.output_dim(); }

  static ClipClassifier make(int feature_dim, const std::vector<int>& hidden,
                             int num_classes, Prng& rng);
};

// Softmax over the net's logits.
std::vector<double> clip_scores(const ClipClassifier& clf, const ClipFeature& clip);

struct VideoPrediction {
  std::vector<std::vector<double>> clip_probs;  // one distribution per clip
  std::vector<double> fused;                    // arithmetic mean of clip_probs
  int predicted = 0;                            // argmax, ties -> lowest class
};

// Average fusion over the selected clips.
VideoPrediction video_prediction(const ClipClassifier& clf,
                                 const std::vector<ClipFeature>& selected);

// cross_entropy(fused, label) + lambda * ||Phi||^2.
double classification_loss(const VideoPrediction& pred, int label,
                           double lambda, const ClipClassifier& clf);

// Gradient of the cross-entropy term w.r.t. Phi (flat canonical order).
// The lambda * ||Phi||^2 term is realized by SgdState.weight_decay, which
// adds 2 * lambda * Phi during minimize steps.
std::vector<double> classification_grad(const ClipClassifier& clf,
                                        const std::vector<ClipFeature>& selected,
                                        int label);

// One minimize-direction sgd_step on the fused cross-entropy objective.
// Returns the loss before the step, including the decay term
// (lambda = state.weight_decay).
double train_classifier_step(ClipClassifier& clf,
                             const std::vector<ClipFeature>& selected,
                             int label, SgdState& state);

}  // namespace dsn
