#include "dsn/classifier.hpp"

#include "dsn/error.hpp"

namespace dsn {

ClipClassifier ClipClassifier::make(int feature_dim,
                                    const std::vector<int>& hidden,
                                    int num_classes, Prng& rng) {
  require(num_classes >= 2, "ClipClassifier::make: need at least two classes");
  return ClipClassifier{Mlp::make(feature_dim, hidden, num_classes, rng)};
}

std::vector<double> clip_scores(const ClipClassifier& clf, const ClipFeature& clip) {
  return softmax(forward(clf.net, clip).back());
}

VideoPrediction video_prediction(const ClipClassifier& clf,
                                 const std::vector<ClipFeature>& selected) {
  require(!selected.empty(), "video_prediction: no clips selected");
  VideoPrediction pred;
  int j = clf.num_classes();
  pred.fused.assign(j, 0.0);
  for (const auto& clip : selected) {
    std::vector<double> probs = clip_scores(clf, clip);
    for (int c = 0; c < j; ++c) pred.fused[c] += probs[c];
    pred.clip_probs.push_back(std::move(probs));
  }
  double inv = 1.0 / static_cast<double>(selected.size());
  for (auto& p : pred.fused) p *= inv;
  pred.predicted = argmax_index(pred.fused);
  return pred;
}

double classification_loss(const VideoPrediction& pred, int label,
                           double lambda, const ClipClassifier& clf) {
  require(lambda >= 0.0, "classification_loss: lambda must be >= 0");
  double loss = cross_entropy(pred.fused, label);
  if (lambda > 0.0) {
    double sq = 0.0;
    for (double p : clf.net.params()) sq += p * p;
    loss += lambda * sq;
  }
  return loss;
}

std::vector<double> classification_grad(const ClipClassifier& clf,
                                        const std::vector<ClipFeature>& selected,
                                        int label) {
  require(!selected.empty(), "classification_grad: no clips selected");
  require(label >= 0 && label < clf.num_classes(),
          "classification_grad: label out of range");

  int j = clf.num_classes();
  std::size_t m = selected.size();

  std::vector<Activations> acts;
  std::vector<std::vector<double>> probs;
  acts.reserve(m);
  probs.reserve(m);
  double fused_label = 0.0;
  for (const auto& clip : selected) {
    acts.push_back(forward(clf.net, clip));
    probs.push_back(softmax(acts.back().back()));
    fused_label += probs.back()[label];
  }
  fused_label /= static_cast<double>(m);

  // d(-log max(fused[label], eps)) / d fused[label]; zero in the clamp region.
  double g_label = (fused_label > kLogEps) ? -1.0 / fused_label : 0.0;
  double c = g_label / static_cast<double>(m);

  std::vector<double> flat(clf.net.param_count(), 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& p = probs[k];
    std::vector<double> dlogits(j);
    for (int i = 0; i < j; ++i) {
      double delta = (i == label) ? 1.0 : 0.0;
      dlogits[i] = c * p[label] * (delta - p[i]);
    }
    Gradients g = backward(clf.net, acts[k], dlogits);
    for (std::size_t i = 0; i < flat.size(); ++i) flat[i] += g.params[i];
  }
  return flat;
}

double train_classifier_step(ClipClassifier& clf,
                             const std::vector<ClipFeature>& selected,
                             int label, SgdState& state) {
  VideoPrediction pred = video_prediction(clf, selected);
  double loss = classification_loss(pred, label, state.weight_decay, clf);
  std::vector<double> grads = classification_grad(clf, selected, label);
  std::vector<double> params = clf.net.params();
  sgd_step(params, grads, state, Direction::kMinimize);
  clf.net.set_params(params);
  return loss;
}

}  // namespace dsn
