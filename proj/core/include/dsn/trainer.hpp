#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsn/classifier.hpp"
#include "dsn/sampler.hpp"
#include "dsn/synthgen.hpp"

namespace dsn {

struct RewardConfig {
  double gamma = 0.2;  // penalty for a misclassified selection
};

// If the clip's distribution ranks the true label first: the true-label
// probability (in (0, 1]); otherwise -gamma.
double reward(const std::vector<double>& clip_probs, int label,
              const RewardConfig& cfg);

struct RewardRecord {
  double reward_sampled = 0.0;   // R(A^m)
  double reward_baseline = 0.0;  // R(B^m), greedy action
  double advantage = 0.0;        // R(A^m) - R(B^m)
};

enum class RewardSource { kClip, kFused };

// Defaults are the tuned recipe for the default DatasetSpec. The classifier
// rate is deliberately small: once alternating starts, a fast classifier
// memorizes whichever training clips the policy happens to pick and the
// planted clips lose their reward edge before the policy finds them. The
// long warm start makes the early rewards informative, and the decay at
// epoch 40 pins the policy near its peak instead of letting it wander.
struct TrainConfig {
  int epochs = 100;
  int pretrain_epochs = 100;
  double policy_lr = 0.01;  // plain ascent rate for Theta
  double classifier_lr = 0.0005;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  RewardConfig reward;
  RewardSource reward_source = RewardSource::kClip;
  bool fix_classifier = false;
  std::vector<int> lr_decay_epochs{40};  // divide both rates by 10 entering these 1-based epochs
  std::uint64_t seed = 0;
};

// One REINFORCE-with-baseline update on Theta for one video. Per section,
// independently: compute probs, draw a stochastic action A, take the greedy
// action B, reward both through the frozen classifier, and accumulate
// (R_A - R_B) * grad log pi(A). One plain ascent step (rate cfg.policy_lr)
// is applied to Theta; the classifier is untouched. With
// reward_source = kFused the rewards come from the fused video prediction
// of all sampled (resp. greedy) clips and every section shares the same
// advantage.
std::vector<RewardRecord> policy_gradient_step(const SyntheticVideo& video,
                                               ObservationNet& obs,
                                               const ClipClassifier& clf,
                                               const TrainConfig& cfg,
                                               Prng& rng);

struct EpochStats {
  int epoch = 0;  // 1-based
  double classifier_loss = 0.0;
  double mean_advantage = 0.0;
  double hit_rate = 0.0;  // greedy selection vs planted truth on the eval split
  double wall_ms = 0.0;
};

using EpochCallback =
    std::function<void(const EpochStats&, const ObservationNet&, const ClipClassifier&)>;

// Alternating training: per epoch, per shuffled training video,
// (a) unless cfg.fix_classifier, update Phi on stochastically selected clips,
// (b) run policy_gradient_step on Theta. hit_rate is measured on
// dataset.test with greedy selection after each epoch.
std::vector<EpochStats> train_dsn(const Dataset& dataset, ObservationNet& obs,
                                  ClipClassifier& clf, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch = nullptr);

// Supervised warm start: cfg.pretrain_epochs epochs over the training split,
// one uniformly random clip per section, average-fused. Theta is not used.
std::vector<EpochStats> pretrain_classifier(const Dataset& dataset,
                                            ClipClassifier& clf,
                                            const TrainConfig& cfg);

// Fraction of sections with a planted clip where greedy selection picks it.
double selection_hit_rate(const std::vector<SyntheticVideo>& videos,
                          const ObservationNet& obs);

// Fraction of planted clips the classifier ranks correctly (clip-level Top-1).
double planted_clip_top1(const std::vector<SyntheticVideo>& videos,
                         const ClipClassifier& clf);

// CSV: epoch,classifier_loss,mean_advantage,hit_rate,wall_ms
void write_train_log_csv(const std::string& path,
                         const std::vector<EpochStats>& log);

}  // namespace dsn
