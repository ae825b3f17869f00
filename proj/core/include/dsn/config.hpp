#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dsn/eval.hpp"
#include "dsn/synthgen.hpp"
#include "dsn/trainer.hpp"

namespace dsn {

// Flat key = value experiment description. One key per line, '#' comments.
// Unknown and duplicate keys are rejected; every parse error names the
// offending key and line.
struct ExperimentConfig {
  std::uint64_t seed = 0;  // copied into data.seed and train.seed
  DatasetSpec data;
  TrainConfig train;

  std::vector<int> encoder_hidden{12};
  int embed_dim = 8;
  std::vector<int> classifier_hidden{128};

  std::vector<int> m_test{2};
  std::vector<EvalPolicy> policies{EvalPolicy::kDsn,     EvalPolicy::kRandom,
                                   EvalPolicy::kUniform, EvalPolicy::kMaxResponse,
                                   EvalPolicy::kDense,   EvalPolicy::kOracle};
  bool fuse_logits = false;
  bool oracle_fused = false;

  std::string dataset_path;
  std::string out_dir;
  std::string checkpoint_path;  // empty: <out_dir>/model.ckpt
  int checkpoint_every = 0;     // 0: final checkpoint only

  std::set<std::string> present;  // keys that appeared in the file

  bool has(const std::string& key) const { return present.count(key) > 0; }
  // ConfigError naming the first missing key.
  void require_keys(const std::vector<std::string>& keys) const;
};

ExperimentConfig parse_config_text(std::string_view text,
                                   const std::string& source_name);
ExperimentConfig parse_config_file(const std::string& path);

}  // namespace dsn
