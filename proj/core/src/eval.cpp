#include "dsn/eval.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "dsn/error.hpp"
#include "dsn/io_util.hpp"

namespace dsn {

std::string_view policy_name(EvalPolicy policy) {
  switch (policy) {
    case EvalPolicy::kDsn: return "dsn";
    case EvalPolicy::kRandom: return "random";
    case EvalPolicy::kUniform: return "uniform";
    case EvalPolicy::kMaxResponse: return "max_response";
    case EvalPolicy::kDense: return "dense";
    case EvalPolicy::kOracle: return "oracle";
  }
  return "unknown";
}

std::optional<EvalPolicy> parse_policy(std::string_view name) {
  for (EvalPolicy p : {EvalPolicy::kDsn, EvalPolicy::kRandom, EvalPolicy::kUniform,
                       EvalPolicy::kMaxResponse, EvalPolicy::kDense,
                       EvalPolicy::kOracle}) {
    if (policy_name(p) == name) return p;
  }
  return std::nullopt;
}

long long mac_count(const Mlp& net) {
  long long macs = 0;
  for (const auto& layer : net.layers) {
    macs += static_cast<long long>(layer.w.rows) * layer.w.cols;
  }
  return macs;
}

CostModel CostModel::from(const ObservationNet* obs, const ClipClassifier& clf) {
  CostModel model;
  if (obs) {
    model.encoder_macs = mac_count(obs->encoder);
    model.head_macs = mac_count(obs->head);
  }
  model.classifier_macs = mac_count(clf.net);
  return model;
}

long long cost_of(EvalPolicy policy, const CostModel& model, int sections,
                  int clips_per_section, int m_test) {
  require(model.classifier_macs > 0, "cost_of: classifier cost missing");
  long long m = sections;
  long long n = clips_per_section;
  long long sel = m_test;
  switch (policy) {
    case EvalPolicy::kDsn:
      require(model.encoder_macs > 0, "cost_of: observation cost missing");
      return m * n * model.encoder_macs + m * model.head_macs +
             sel * model.classifier_macs;
    case EvalPolicy::kMaxResponse:
      require(model.encoder_macs > 0, "cost_of: observation cost missing");
      return m * n * model.encoder_macs + sel * model.classifier_macs;
    case EvalPolicy::kRandom:
    case EvalPolicy::kUniform:
      return sel * model.classifier_macs;
    case EvalPolicy::kDense:
    case EvalPolicy::kOracle:
      return m * n * model.classifier_macs;
  }
  throw ContractViolation("cost_of: unknown policy");
}

std::vector<int> spread_sections(int sections, int m_test) {
  if (m_test <= 0 || m_test > sections) {
    throw ConfigError("m_test " + std::to_string(m_test) +
                      " must be in [1, " + std::to_string(sections) + "]");
  }
  std::vector<int> picked(m_test);
  for (int i = 0; i < m_test; ++i) {
    picked[i] = static_cast<int>((2 * i + 1) * sections / (2 * m_test));
  }
  return picked;
}

namespace {

std::vector<double> fuse_scores(const ClipClassifier& clf,
                                const std::vector<ClipFeature>& chosen,
                                bool fuse_logits) {
  if (!fuse_logits) return video_prediction(clf, chosen).fused;
  require(!chosen.empty(), "fuse_scores: no clips selected");
  std::vector<double> fused(clf.num_classes(), 0.0);
  for (const auto& clip : chosen) {
    auto logits = forward(clf.net, clip).back();
    for (std::size_t c = 0; c < fused.size(); ++c) fused[c] += logits[c];
  }
  for (auto& v : fused) v /= static_cast<double>(chosen.size());
  return fused;
}

// 0-based rank of `label` when classes sort by (score desc, index asc).
int score_rank(const std::vector<double>& scores, int label) {
  int rank = 0;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    if (c == label) continue;
    if (scores[c] > scores[label] || (scores[c] == scores[label] && c < label)) {
      ++rank;
    }
  }
  return rank;
}

int max_response_pick(const ClipClassifier& response,
                      const std::vector<ClipFeature>& clips) {
  std::vector<double> best(clips.size());
  for (std::size_t n = 0; n < clips.size(); ++n) {
    auto probs = clip_scores(response, clips[n]);
    best[n] = *std::max_element(probs.begin(), probs.end());
  }
  return argmax_index(best);
}

}  // namespace

MetricsReport eval_policy(const std::vector<SyntheticVideo>& split,
                          EvalPolicy policy, const ObservationNet* obs,
                          const ClipClassifier& clf,
                          const ClipClassifier* response,
                          const EvalOptions& opts, Prng& rng) {
  require(!split.empty(), "eval_policy: empty split");
  int sections = split.front().num_sections();
  int n = split.front().clips_per_section();
  int j = clf.num_classes();
  int m_test = opts.m_test > 0 ? opts.m_test : sections;
  if (m_test > sections) {
    throw ConfigError("m_test " + std::to_string(m_test) +
                      " must be in [1, " + std::to_string(sections) + "]");
  }

  if (policy == EvalPolicy::kDsn && obs == nullptr) {
    throw ConfigError("dsn policy requires a trained observation net");
  }
  if (policy == EvalPolicy::kMaxResponse && response == nullptr) {
    throw ConfigError("max_response policy requires a trained response net");
  }

  bool selective = policy == EvalPolicy::kDsn || policy == EvalPolicy::kRandom ||
                   policy == EvalPolicy::kUniform ||
                   policy == EvalPolicy::kMaxResponse;
  std::vector<int> picked =
      selective || (policy == EvalPolicy::kOracle && opts.oracle_fused)
          ? spread_sections(sections, m_test)
          : std::vector<int>{};

  std::uint64_t ticket = rng.next_u64();

  MetricsReport report;
  report.policy = std::string(policy_name(policy));
  report.m_test = m_test;
  report.n = n;
  report.clips_used = selective ? m_test : sections * n;
  report.cost_macs = cost_of(policy, CostModel::from(obs, clf), sections, n, m_test);

  bool clip_level_oracle = policy == EvalPolicy::kOracle && !opts.oracle_fused;
  bool score_top5 = j >= 10;

  std::size_t top1_hits = 0;
  std::size_t top5_hits = 0;
  for (const auto& video : split) {
    PerVideoOutcome out;
    out.video_id = video.video_id;
    out.label = video.label;

    if (clip_level_oracle) {
      for (const auto& clips : video.sections) {
        for (const auto& clip : clips) {
          auto probs = clip_scores(clf, clip);
          if (argmax_index(probs) == video.label) out.correct = true;
          if (score_top5 && score_rank(probs, video.label) < 5) out.top5_hit = true;
        }
      }
      out.predicted = out.correct ? video.label : -1;
    } else {
      std::vector<ClipFeature> chosen_clips;
      if (policy == EvalPolicy::kDense) {
        for (const auto& clips : video.sections) {
          chosen_clips.insert(chosen_clips.end(), clips.begin(), clips.end());
        }
      } else {
        Prng child = Prng::derive(ticket, static_cast<std::uint64_t>(video.video_id));
        for (int m : picked) {
          const auto& clips = video.sections[m];
          int pick = 0;
          switch (policy) {
            case EvalPolicy::kDsn:
              pick = greedy_action(section_probs(*obs, clips)).chosen;
              break;
            case EvalPolicy::kRandom:
              pick = static_cast<int>(
                  child.uniform_int(static_cast<std::uint32_t>(clips.size())));
              break;
            case EvalPolicy::kUniform:
              pick = static_cast<int>(clips.size()) / 2;
              break;
            case EvalPolicy::kMaxResponse:
              pick = max_response_pick(*response, clips);
              break;
            case EvalPolicy::kOracle: {
              std::vector<double> label_score(clips.size());
              for (std::size_t c = 0; c < clips.size(); ++c) {
                label_score[c] = clip_scores(clf, clips[c])[video.label];
              }
              pick = argmax_index(label_score);
              break;
            }
            default:
              throw ContractViolation("eval_policy: unexpected policy");
          }
          out.chosen.push_back(pick);
          chosen_clips.push_back(clips[pick]);
        }
      }
      out.fused = fuse_scores(clf, chosen_clips, opts.fuse_logits);
      out.predicted = argmax_index(out.fused);
      out.correct = out.predicted == video.label;
      if (score_top5) out.top5_hit = score_rank(out.fused, video.label) < 5;
    }

    if (out.correct) ++top1_hits;
    if (out.top5_hit) ++top5_hits;
    report.outcomes.push_back(std::move(out));
  }

  double count = static_cast<double>(split.size());
  report.top1 = static_cast<double>(top1_hits) / count;
  report.top5_valid = score_top5;
  report.top5 = score_top5 ? static_cast<double>(top5_hits) / count : 0.0;
  report.map_valid = !clip_level_oracle;
  if (report.map_valid) {
    report.map = compute_map(report.outcomes, j, &report.excluded_classes);
  }
  return report;
}

ClipClassifier train_max_response(const Dataset& dataset,
                                  const std::vector<int>& encoder_hidden,
                                  int embed_dim, const TrainConfig& cfg) {
  require(!dataset.train.empty(), "train_max_response: empty training split");
  std::vector<int> hidden = encoder_hidden;
  hidden.push_back(embed_dim);

  Prng init = Prng(cfg.seed).substream("response-init");
  ClipClassifier response = ClipClassifier::make(
      dataset.spec.feature_dim, hidden, dataset.spec.num_classes, init);

  Prng rng = Prng(cfg.seed).substream("response");
  SgdState state;
  state.learning_rate = cfg.classifier_lr;
  state.momentum = cfg.momentum;
  state.weight_decay = cfg.weight_decay;

  std::vector<int> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.pretrain_epochs; ++epoch) {
    shuffle(order, rng);
    for (int idx : order) {
      const SyntheticVideo& video = dataset.train[idx];
      std::vector<ClipFeature> chosen;
      chosen.reserve(video.sections.size());
      for (const auto& clips : video.sections) {
        chosen.push_back(clips[rng.uniform_int(static_cast<std::uint32_t>(clips.size()))]);
      }
      train_classifier_step(response, chosen, video.label, state);
    }
  }
  return response;
}

double compute_map(const std::vector<PerVideoOutcome>& outcomes,
                   int num_classes, std::vector<int>* excluded_classes) {
  require(!outcomes.empty(), "compute_map: no outcomes");
  for (const auto& out : outcomes) {
    require(static_cast<int>(out.fused.size()) == num_classes,
            "compute_map: outcome without fused scores");
  }

  std::vector<int> order(outcomes.size());
  std::iota(order.begin(), order.end(), 0);

  double ap_sum = 0.0;
  int included = 0;
  for (int c = 0; c < num_classes; ++c) {
    int positives = 0;
    for (const auto& out : outcomes) positives += out.label == c;
    if (positives == 0) {
      if (excluded_classes) excluded_classes->push_back(c);
      continue;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (outcomes[a].fused[c] != outcomes[b].fused[c]) {
        return outcomes[a].fused[c] > outcomes[b].fused[c];
      }
      return outcomes[a].video_id < outcomes[b].video_id;
    });
    double ap = 0.0;
    int seen = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (outcomes[order[rank]].label == c) {
        ++seen;
        ap += static_cast<double>(seen) / static_cast<double>(rank + 1);
      }
    }
    ap_sum += ap / positives;
    ++included;
  }
  require(included > 0, "compute_map: every class has zero positives");
  return ap_sum / included;
}

std::vector<MetricsReport> sweep_M(const std::vector<SyntheticVideo>& split,
                                   const ObservationNet* obs,
                                   const ClipClassifier& clf,
                                   const ClipClassifier* response,
                                   const std::vector<int>& m_range,
                                   const std::vector<EvalPolicy>& policies,
                                   const EvalOptions& base, const Prng& rng) {
  std::vector<MetricsReport> table;
  for (EvalPolicy policy : policies) {
    for (int m : m_range) {
      EvalOptions opts = base;
      opts.m_test = m;
      std::string stream = std::string(policy_name(policy)) + "@" + std::to_string(m);
      Prng combo = rng.substream(stream);
      table.push_back(eval_policy(split, policy, obs, clf, response, opts, combo));
    }
  }
  return table;
}

void dump_selections(const std::vector<SyntheticVideo>& split,
                     const ObservationNet& obs, const std::string& path) {
  std::ostringstream out;
  out << "video_id,section,clip,prob,chosen,planted\n";
  for (const auto& video : split) {
    for (std::size_t m = 0; m < video.sections.size(); ++m) {
      SectionProbs probs = section_probs(obs, video.sections[m]);
      SelectionAction action = greedy_action(probs);
      for (std::size_t n = 0; n < video.sections[m].size(); ++n) {
        out << video.video_id << ',' << m << ',' << n << ','
            << format_double(probs.probs[n]) << ','
            << (action.chosen == static_cast<int>(n) ? 1 : 0) << ','
            << (video.planted[m] == static_cast<int>(n) ? 1 : 0) << '\n';
      }
    }
  }
  atomic_write_file(path, out.str());
}

}  // namespace dsn
