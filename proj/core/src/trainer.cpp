#include "dsn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "dsn/error.hpp"
#include "dsn/io_util.hpp"

namespace dsn {

double reward(const std::vector<double>& clip_probs, int label,
              const RewardConfig& cfg) {
  require(cfg.gamma > 0.0, "reward: gamma must be > 0");
  require(label >= 0 && label < static_cast<int>(clip_probs.size()),
          "reward: label out of range");
  if (argmax_index(clip_probs) == label) return clip_probs[label];
  return -cfg.gamma;
}

namespace {

void check_video(const SyntheticVideo& video, const ObservationNet& obs,
                 const ClipClassifier& clf) {
  require(video.num_sections() >= 1, "video has no sections");
  require(video.clips_per_section() == obs.clips_per_section(),
          "video clip count does not match observation net");
  require(!video.sections.empty() &&
              static_cast<int>(video.sections[0][0].size()) == clf.feature_dim(),
          "video feature dim does not match classifier");
}

void ascend(ObservationNet& obs, const std::vector<double>& grads, double lr) {
  SgdState ascent;
  ascent.learning_rate = lr;
  std::vector<double> params = obs.params();
  sgd_step(params, grads, ascent, Direction::kMaximize);
  obs.set_params(params);
}

}  // namespace

std::vector<RewardRecord> policy_gradient_step(const SyntheticVideo& video,
                                               ObservationNet& obs,
                                               const ClipClassifier& clf,
                                               const TrainConfig& cfg,
                                               Prng& rng) {
  require(cfg.policy_lr > 0.0, "policy_gradient_step: policy_lr must be > 0");
  check_video(video, obs, clf);

  int m_count = video.num_sections();
  std::uint64_t ticket = rng.next_u64();

  std::vector<SectionProbs> probs(m_count);
  std::vector<SelectionAction> sampled(m_count);
  std::vector<SelectionAction> greedy(m_count);
  for (int m = 0; m < m_count; ++m) {
    probs[m] = section_probs(obs, video.sections[m]);
    Prng child = Prng::derive(ticket, static_cast<std::uint64_t>(m));
    sampled[m] = sample_action(probs[m], child);
    greedy[m] = greedy_action(probs[m]);
  }

  std::vector<RewardRecord> records(m_count);
  if (cfg.reward_source == RewardSource::kClip) {
    for (int m = 0; m < m_count; ++m) {
      const auto& clips = video.sections[m];
      records[m].reward_sampled =
          reward(clip_scores(clf, clips[sampled[m].chosen]), video.label, cfg.reward);
      records[m].reward_baseline =
          reward(clip_scores(clf, clips[greedy[m].chosen]), video.label, cfg.reward);
      records[m].advantage = records[m].reward_sampled - records[m].reward_baseline;
    }
  } else {
    std::vector<ClipFeature> a_clips, b_clips;
    for (int m = 0; m < m_count; ++m) {
      a_clips.push_back(video.sections[m][sampled[m].chosen]);
      b_clips.push_back(video.sections[m][greedy[m].chosen]);
    }
    double r_a = reward(video_prediction(clf, a_clips).fused, video.label, cfg.reward);
    double r_b = reward(video_prediction(clf, b_clips).fused, video.label, cfg.reward);
    for (auto& rec : records) {
      rec.reward_sampled = r_a;
      rec.reward_baseline = r_b;
      rec.advantage = r_a - r_b;
    }
  }

  std::vector<double> total(obs.param_count(), 0.0);
  bool any = false;
  for (int m = 0; m < m_count; ++m) {
    if (records[m].advantage == 0.0) continue;
    any = true;
    std::vector<double> g =
        policy_logprob_grad(obs, video.sections[m], sampled[m]);
    for (std::size_t i = 0; i < total.size(); ++i) {
      total[i] += records[m].advantage * g[i];
    }
  }
  if (any) ascend(obs, total, cfg.policy_lr);
  return records;
}

namespace {

double decayed(double base, const std::vector<int>& decay_epochs, int epoch) {
  double rate = base;
  for (int at : decay_epochs) {
    if (epoch >= at) rate /= 10.0;
  }
  return rate;
}

}  // namespace

std::vector<EpochStats> train_dsn(const Dataset& dataset, ObservationNet& obs,
                                  ClipClassifier& clf, const TrainConfig& cfg,
                                  const EpochCallback& on_epoch) {
  require(cfg.epochs >= 0, "train_dsn: epochs must be >= 0");
  require(!dataset.train.empty(), "train_dsn: empty training split");
  check_video(dataset.train.front(), obs, clf);
  require(clf.num_classes() == dataset.spec.num_classes,
          "train_dsn: classifier class count does not match dataset");

  Prng rng = Prng(cfg.seed).substream("train");
  SgdState clf_state;
  clf_state.momentum = cfg.momentum;
  clf_state.weight_decay = cfg.weight_decay;

  std::vector<int> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> log;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    clf_state.learning_rate = decayed(cfg.classifier_lr, cfg.lr_decay_epochs, epoch);
    TrainConfig step_cfg = cfg;
    step_cfg.policy_lr = decayed(cfg.policy_lr, cfg.lr_decay_epochs, epoch);

    shuffle(order, rng);
    double loss_sum = 0.0;
    double adv_sum = 0.0;
    std::size_t adv_count = 0;
    for (int idx : order) {
      const SyntheticVideo& video = dataset.train[idx];

      auto selection = select_clips(video, obs, SelectMode::kStochastic, rng);
      std::vector<ClipFeature> chosen;
      chosen.reserve(selection.size());
      for (std::size_t m = 0; m < selection.size(); ++m) {
        chosen.push_back(video.sections[m][selection[m].action.chosen]);
      }
      if (cfg.fix_classifier) {
        VideoPrediction pred = video_prediction(clf, chosen);
        loss_sum += classification_loss(pred, video.label, cfg.weight_decay, clf);
      } else {
        loss_sum += train_classifier_step(clf, chosen, video.label, clf_state);
      }

      auto records = policy_gradient_step(video, obs, clf, step_cfg, rng);
      for (const auto& rec : records) {
        adv_sum += rec.advantage;
        ++adv_count;
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.classifier_loss = loss_sum / static_cast<double>(dataset.train.size());
    stats.mean_advantage = adv_count ? adv_sum / static_cast<double>(adv_count) : 0.0;
    stats.hit_rate = selection_hit_rate(dataset.test, obs);
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    log.push_back(stats);
    if (on_epoch) on_epoch(stats, obs, clf);
  }
  return log;
}

std::vector<EpochStats> pretrain_classifier(const Dataset& dataset,
                                            ClipClassifier& clf,
                                            const TrainConfig& cfg) {
  require(cfg.pretrain_epochs >= 0, "pretrain_classifier: epochs must be >= 0");
  require(!dataset.train.empty(), "pretrain_classifier: empty training split");

  Prng rng = Prng(cfg.seed).substream("pretrain");
  SgdState state;
  state.momentum = cfg.momentum;
  state.weight_decay = cfg.weight_decay;

  std::vector<int> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochStats> log;
  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    state.learning_rate = decayed(cfg.classifier_lr, cfg.lr_decay_epochs, epoch);
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (int idx : order) {
      const SyntheticVideo& video = dataset.train[idx];
      std::vector<ClipFeature> chosen;
      chosen.reserve(video.sections.size());
      for (const auto& clips : video.sections) {
        chosen.push_back(clips[rng.uniform_int(static_cast<std::uint32_t>(clips.size()))]);
      }
      loss_sum += train_classifier_step(clf, chosen, video.label, state);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.classifier_loss = loss_sum / static_cast<double>(dataset.train.size());
    stats.hit_rate = 0.0;
    stats.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    log.push_back(stats);
  }
  return log;
}

double selection_hit_rate(const std::vector<SyntheticVideo>& videos,
                          const ObservationNet& obs) {
  std::size_t planted_sections = 0;
  std::size_t hits = 0;
  for (const auto& video : videos) {
    for (std::size_t m = 0; m < video.sections.size(); ++m) {
      if (video.planted[m] < 0) continue;
      ++planted_sections;
      SelectionAction a = greedy_action(section_probs(obs, video.sections[m]));
      if (a.chosen == video.planted[m]) ++hits;
    }
  }
  require(planted_sections > 0, "selection_hit_rate: no planted sections");
  return static_cast<double>(hits) / static_cast<double>(planted_sections);
}

double planted_clip_top1(const std::vector<SyntheticVideo>& videos,
                         const ClipClassifier& clf) {
  std::size_t planted = 0;
  std::size_t correct = 0;
  for (const auto& video : videos) {
    for (std::size_t m = 0; m < video.sections.size(); ++m) {
      if (video.planted[m] < 0) continue;
      ++planted;
      auto probs = clip_scores(clf, video.sections[m][video.planted[m]]);
      if (argmax_index(probs) == video.label) ++correct;
    }
  }
  require(planted > 0, "planted_clip_top1: no planted clips");
  return static_cast<double>(correct) / static_cast<double>(planted);
}

void write_train_log_csv(const std::string& path,
                         const std::vector<EpochStats>& log) {
  std::ostringstream out;
  out << "epoch,classifier_loss,mean_advantage,hit_rate,wall_ms\n";
  for (const auto& s : log) {
    out << s.epoch << ',' << format_double(s.classifier_loss) << ','
        << format_double(s.mean_advantage) << ',' << format_double(s.hit_rate)
        << ',' << format_double(s.wall_ms) << '\n';
  }
  atomic_write_file(path, out.str());
}

}  // namespace dsn
