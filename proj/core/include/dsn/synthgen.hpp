#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dsn/prng.hpp"

namespace dsn {

// One clip, abstracted to a fixed-length feature vector.
using ClipFeature = std::vector<double>;

// M sections x N candidate clips, a class label, and per-section ground
// truth: planted[m] is the index of the discriminative clip, or -1 for a
// background section that carries no class evidence.
struct SyntheticVideo {
  int video_id = 0;
  int label = 0;
  std::vector<std::vector<ClipFeature>> sections;  // [M][N][D]
  std::vector<int> planted;                        // [M], -1 when background

  int num_sections() const { return static_cast<int>(sections.size()); }
  int clips_per_section() const {
    return sections.empty() ? 0 : static_cast<int>(sections[0].size());
  }
};

struct DatasetSpec {
  int num_classes = 10;       // J
  int sections = 2;           // M
  int clips_per_section = 3;  // N
  int feature_dim = 16;       // D
  double signal_strength = 2.0;
  double noise_sigma = 1.0;
  double background_prob = 0.0;  // P(section has no planted clip)
  double confuser_prob = 0.2;    // P(non-planted clip carries a wrong-class signature)
  int train_count = 1000;
  int test_count = 400;
  std::uint64_t seed = 0;
};

// Throws ConfigError when a field is out of range.
void validate(const DatasetSpec& spec);

struct Dataset {
  DatasetSpec spec;
  std::vector<std::vector<double>> signatures;  // J unit vectors of length D
  std::vector<SyntheticVideo> train;
  std::vector<SyntheticVideo> test;
};

// Deterministic given the rng state. Video ids are globally unique: train
// ids are [0, train_count), test ids continue from train_count.
Dataset generate_dataset(const DatasetSpec& spec, Prng& rng);

// Convenience: draws from Prng(spec.seed).substream("data").
Dataset generate_dataset(const DatasetSpec& spec);

// Fixed little-endian binary format, magic "DSNDATA1". Round-trips are
// bit-exact. Malformed input raises FormatError with a byte offset.
void write_dataset(const Dataset& dataset, const std::string& path);
Dataset read_dataset(const std::string& path);

// Serialized image of the dataset (what write_dataset puts on disk).
std::string serialize_dataset(const Dataset& dataset);

}  // namespace dsn
