#include "dsn/config.hpp"

#include <charconv>
#include <sstream>

#include "dsn/error.hpp"
#include "dsn/io_util.hpp"

namespace dsn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  while (true) {
    std::size_t comma = s.find(',');
    if (comma == std::string_view::npos) {
      std::string_view part = trim(s);
      if (!part.empty()) parts.push_back(part);
      return parts;
    }
    std::string_view part = trim(s.substr(0, comma));
    if (!part.empty()) parts.push_back(part);
    s.remove_prefix(comma + 1);
  }
}

class LineContext {
 public:
  LineContext(const std::string& source, int line, std::string_view key)
      : source_(source), line_(line), key_(key) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(source_ + ":" + std::to_string(line_) + ": key '" +
                      std::string(key_) + "': " + what);
  }

  long long to_int(std::string_view v, long long lo, long long hi) const {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      fail("expected an integer, got '" + std::string(v) + "'");
    }
    if (out < lo || out > hi) {
      fail("value " + std::string(v) + " out of range [" + std::to_string(lo) +
           ", " + std::to_string(hi) + "]");
    }
    return out;
  }

  std::uint64_t to_u64(std::string_view v) const {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      fail("expected an unsigned integer, got '" + std::string(v) + "'");
    }
    return out;
  }

  double to_double(std::string_view v) const {
    std::string buf(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(buf, &used);
    } catch (const std::exception&) {
      fail("expected a number, got '" + buf + "'");
    }
    if (used != buf.size()) fail("expected a number, got '" + buf + "'");
    return out;
  }

  bool to_bool(std::string_view v) const {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true or false, got '" + std::string(v) + "'");
  }

  std::vector<int> to_int_list(std::string_view v, long long lo, long long hi,
                               bool allow_empty) const {
    std::vector<int> out;
    for (std::string_view part : split_commas(v)) {
      out.push_back(static_cast<int>(to_int(part, lo, hi)));
    }
    if (out.empty() && !allow_empty) fail("list must not be empty");
    return out;
  }

 private:
  const std::string& source_;
  int line_;
  std::string_view key_;
};

}  // namespace

void ExperimentConfig::require_keys(const std::vector<std::string>& keys) const {
  for (const auto& key : keys) {
    if (!has(key)) throw ConfigError("missing required key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(std::string_view text,
                                   const std::string& source_name) {
  ExperimentConfig cfg;
  std::istringstream lines{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(lines, raw)) {
    ++lineno;
    std::string_view line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source_name + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    std::string key{trim(line.substr(0, eq))};
    std::string_view value = trim(line.substr(eq + 1));
    LineContext at(source_name, lineno, key);
    if (key.empty()) at.fail("empty key");
    if (!cfg.present.insert(key).second) at.fail("duplicate key");

    if (key == "seed") {
      cfg.seed = at.to_u64(value);
    } else if (key == "num_classes") {
      cfg.data.num_classes = static_cast<int>(at.to_int(value, 2, 1 << 16));
    } else if (key == "sections") {
      cfg.data.sections = static_cast<int>(at.to_int(value, 1, 1 << 16));
    } else if (key == "clips_per_section") {
      cfg.data.clips_per_section = static_cast<int>(at.to_int(value, 1, 1 << 16));
    } else if (key == "feature_dim") {
      cfg.data.feature_dim = static_cast<int>(at.to_int(value, 1, 1 << 16));
    } else if (key == "signal_strength") {
      cfg.data.signal_strength = at.to_double(value);
      if (cfg.data.signal_strength < 0.0) at.fail("must be >= 0");
    } else if (key == "noise_sigma") {
      cfg.data.noise_sigma = at.to_double(value);
      if (cfg.data.noise_sigma <= 0.0) at.fail("must be > 0");
    } else if (key == "background_prob") {
      cfg.data.background_prob = at.to_double(value);
      if (cfg.data.background_prob < 0.0 || cfg.data.background_prob >= 1.0) {
        at.fail("must be in [0, 1)");
      }
    } else if (key == "confuser_prob") {
      cfg.data.confuser_prob = at.to_double(value);
      if (cfg.data.confuser_prob < 0.0 || cfg.data.confuser_prob >= 1.0) {
        at.fail("must be in [0, 1)");
      }
    } else if (key == "train_count") {
      cfg.data.train_count = static_cast<int>(at.to_int(value, 1, 1 << 24));
    } else if (key == "test_count") {
      cfg.data.test_count = static_cast<int>(at.to_int(value, 1, 1 << 24));
    } else if (key == "pretrain_epochs") {
      cfg.train.pretrain_epochs = static_cast<int>(at.to_int(value, 0, 1 << 20));
    } else if (key == "epochs") {
      cfg.train.epochs = static_cast<int>(at.to_int(value, 0, 1 << 20));
    } else if (key == "classifier_lr") {
      cfg.train.classifier_lr = at.to_double(value);
      if (cfg.train.classifier_lr <= 0.0) at.fail("must be > 0");
    } else if (key == "policy_lr") {
      cfg.train.policy_lr = at.to_double(value);
      if (cfg.train.policy_lr <= 0.0) at.fail("must be > 0");
    } else if (key == "momentum") {
      cfg.train.momentum = at.to_double(value);
      if (cfg.train.momentum < 0.0 || cfg.train.momentum >= 1.0) {
        at.fail("must be in [0, 1)");
      }
    } else if (key == "weight_decay") {
      cfg.train.weight_decay = at.to_double(value);
      if (cfg.train.weight_decay < 0.0) at.fail("must be >= 0");
    } else if (key == "gamma") {
      cfg.train.reward.gamma = at.to_double(value);
      if (cfg.train.reward.gamma <= 0.0) at.fail("must be > 0");
    } else if (key == "reward_source") {
      if (value == "clip") {
        cfg.train.reward_source = RewardSource::kClip;
      } else if (value == "fused") {
        cfg.train.reward_source = RewardSource::kFused;
      } else {
        at.fail("expected clip or fused, got '" + std::string(value) + "'");
      }
    } else if (key == "fix_classifier") {
      cfg.train.fix_classifier = at.to_bool(value);
    } else if (key == "lr_decay_epochs") {
      cfg.train.lr_decay_epochs = at.to_int_list(value, 1, 1 << 20, true);
    } else if (key == "encoder_hidden") {
      cfg.encoder_hidden = at.to_int_list(value, 1, 1 << 16, true);
    } else if (key == "embed_dim") {
      cfg.embed_dim = static_cast<int>(at.to_int(value, 1, 1 << 16));
    } else if (key == "classifier_hidden") {
      cfg.classifier_hidden = at.to_int_list(value, 1, 1 << 16, true);
    } else if (key == "m_test") {
      cfg.m_test = at.to_int_list(value, 1, 1 << 16, false);
    } else if (key == "policies") {
      cfg.policies.clear();
      for (std::string_view name : split_commas(value)) {
        auto policy = parse_policy(name);
        if (!policy) at.fail("unknown policy '" + std::string(name) + "'");
        cfg.policies.push_back(*policy);
      }
      if (cfg.policies.empty()) at.fail("list must not be empty");
    } else if (key == "fusion") {
      if (value == "probs") {
        cfg.fuse_logits = false;
      } else if (value == "logits") {
        cfg.fuse_logits = true;
      } else {
        at.fail("expected probs or logits, got '" + std::string(value) + "'");
      }
    } else if (key == "oracle_fused") {
      cfg.oracle_fused = at.to_bool(value);
    } else if (key == "dataset_path") {
      if (value.empty()) at.fail("empty path");
      cfg.dataset_path = std::string(value);
    } else if (key == "out_dir") {
      if (value.empty()) at.fail("empty path");
      cfg.out_dir = std::string(value);
    } else if (key == "checkpoint_path") {
      if (value.empty()) at.fail("empty path");
      cfg.checkpoint_path = std::string(value);
    } else if (key == "checkpoint_every") {
      cfg.checkpoint_every = static_cast<int>(at.to_int(value, 0, 1 << 20));
    } else {
      at.fail("unknown key");
    }
  }
  cfg.data.seed = cfg.seed;
  cfg.train.seed = cfg.seed;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  return parse_config_text(read_file_bytes(path), path);
}

}  // namespace dsn
