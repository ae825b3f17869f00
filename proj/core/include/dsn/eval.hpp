#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsn/classifier.hpp"
#include "dsn/sampler.hpp"
#include "dsn/synthgen.hpp"
#include "dsn/trainer.hpp"

namespace dsn {

enum class EvalPolicy { kDsn, kRandom, kUniform, kMaxResponse, kDense, kOracle };

std::string_view policy_name(EvalPolicy policy);
std::optional<EvalPolicy> parse_policy(std::string_view name);

// Per-clip multiply-accumulate counts, derived from the actual layer shapes.
struct CostModel {
  long long encoder_macs = 0;
  long long head_macs = 0;
  long long classifier_macs = 0;

  static CostModel from(const ObservationNet* obs, const ClipClassifier& clf);
};

long long mac_count(const Mlp& net);

// MACs per video. Selective policies classify m_test clips; dsn additionally
// pays the observation pass over every section, max_response pays the
// encoder-sized response net over every clip. dense and oracle classify all
// M x N clips.
long long cost_of(EvalPolicy policy, const CostModel& model, int sections,
                  int clips_per_section, int m_test);

// Which sections a selective policy evaluates when m_test < M: indices
// floor((i + 0.5) * M / m_test), evenly spread. m_test = M yields 0..M-1.
std::vector<int> spread_sections(int sections, int m_test);

struct EvalOptions {
  int m_test = 0;            // 0 means all sections
  bool fuse_logits = false;  // rank by mean logits instead of mean probabilities
  bool oracle_fused = false; // oracle variant: per-section best true-label clip, fused
};

struct PerVideoOutcome {
  int video_id = 0;
  int label = 0;
  int predicted = -1;
  bool correct = false;
  bool top5_hit = false;
  std::vector<double> fused;   // fused scores; empty for the clip-level oracle
  std::vector<int> chosen;     // chosen clip per evaluated section; empty for dense/oracle
};

struct MetricsReport {
  std::string policy;
  int m_test = 0;
  int n = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  bool top5_valid = false;  // reported only when J >= 10 and scores exist
  double map = 0.0;
  bool map_valid = false;  // false for the clip-level oracle
  long long cost_macs = 0;
  int clips_used = 0;
  std::vector<int> excluded_classes;  // classes with zero positives in the split
  std::vector<PerVideoOutcome> outcomes;
};

// Evaluate one policy over a split. obs is required for dsn (and for the
// cost accounting of dsn/max_response); response is required for
// max_response. rng feeds only the random policy, through a per-video child
// stream keyed by video_id, so results do not depend on visitation order.
MetricsReport eval_policy(const std::vector<SyntheticVideo>& split,
                          EvalPolicy policy, const ObservationNet* obs,
                          const ClipClassifier& clf,
                          const ClipClassifier* response,
                          const EvalOptions& opts, Prng& rng);

// Independent lightweight classifier with the observation encoder's
// capacity, trained on uniformly sampled clips; used by max_response only.
ClipClassifier train_max_response(const Dataset& dataset,
                                  const std::vector<int>& encoder_hidden,
                                  int embed_dim, const TrainConfig& cfg);

// Mean over classes (with >= 1 positive) of average precision of the
// class-score ranking. Ties rank by video_id ascending.
double compute_map(const std::vector<PerVideoOutcome>& outcomes,
                   int num_classes, std::vector<int>* excluded_classes);

// Every policy at every M_test in m_range; |m_range| x |policies| reports.
std::vector<MetricsReport> sweep_M(const std::vector<SyntheticVideo>& split,
                                   const ObservationNet* obs,
                                   const ClipClassifier& clf,
                                   const ClipClassifier* response,
                                   const std::vector<int>& m_range,
                                   const std::vector<EvalPolicy>& policies,
                                   const EvalOptions& base, const Prng& rng);

// CSV: video_id,section,clip,prob,chosen,planted with greedy selections.
void dump_selections(const std::vector<SyntheticVideo>& split,
                     const ObservationNet& obs, const std::string& path);

}  // namespace dsn
