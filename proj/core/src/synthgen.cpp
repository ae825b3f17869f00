#include "dsn/synthgen.hpp"

#include <cmath>

#include "dsn/error.hpp"
#include "dsn/io_util.hpp"

namespace dsn {

namespace {

constexpr char kMagic[] = "DSNDATA1";
constexpr std::uint32_t kVersion = 1;

std::vector<double> unit_vector(int dim, Prng& rng) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

ClipFeature noise_clip(const DatasetSpec& spec, Prng& rng) {
  ClipFeature clip(spec.feature_dim);
  for (auto& x : clip) x = rng.gaussian(0.0, spec.noise_sigma);
  return clip;
}

ClipFeature signal_clip(const DatasetSpec& spec,
                        const std::vector<double>& signature, Prng& rng) {
  ClipFeature clip(spec.feature_dim);
  for (int d = 0; d < spec.feature_dim; ++d) {
    clip[d] = spec.signal_strength * signature[d] +
              rng.gaussian(0.0, spec.noise_sigma);
  }
  return clip;
}

SyntheticVideo make_video(const DatasetSpec& spec,
                          const std::vector<std::vector<double>>& signatures,
                          int video_id, Prng& rng) {
  SyntheticVideo video;
  video.video_id = video_id;
  video.label = static_cast<int>(
      rng.uniform_int(static_cast<std::uint32_t>(spec.num_classes)));
  video.sections.resize(spec.sections);
  video.planted.assign(spec.sections, -1);
  for (int m = 0; m < spec.sections; ++m) {
    bool background = rng.uniform() < spec.background_prob;
    if (!background) {
      video.planted[m] = static_cast<int>(
          rng.uniform_int(static_cast<std::uint32_t>(spec.clips_per_section)));
    }
    auto& clips = video.sections[m];
    clips.reserve(spec.clips_per_section);
    for (int n = 0; n < spec.clips_per_section; ++n) {
      if (n == video.planted[m]) {
        clips.push_back(signal_clip(spec, signatures[video.label], rng));
      } else if (rng.uniform() < spec.confuser_prob) {
        // wrong-class signature, uniformly over the other classes
        std::uint32_t pick = rng.uniform_int(
            static_cast<std::uint32_t>(spec.num_classes - 1));
        int wrong = static_cast<int>(pick);
        if (wrong >= video.label) ++wrong;
        clips.push_back(signal_clip(spec, signatures[wrong], rng));
      } else {
        clips.push_back(noise_clip(spec, rng));
      }
    }
  }
  return video;
}

}  // namespace

void validate(const DatasetSpec& spec) {
  auto check = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  check(spec.num_classes >= 2, "num_classes must be >= 2");
  check(spec.sections >= 1, "sections must be >= 1");
  check(spec.clips_per_section >= 1, "clips_per_section must be >= 1");
  check(spec.feature_dim >= 1, "feature_dim must be >= 1");
  check(spec.signal_strength >= 0.0, "signal_strength must be >= 0");
  check(spec.noise_sigma > 0.0, "noise_sigma must be > 0");
  check(spec.background_prob >= 0.0 && spec.background_prob < 1.0,
        "background_prob must be in [0, 1)");
  check(spec.confuser_prob >= 0.0 && spec.confuser_prob < 1.0,
        "confuser_prob must be in [0, 1)");
  check(spec.train_count > 0, "train_count must be positive");
  check(spec.test_count > 0, "test_count must be positive");
}

Dataset generate_dataset(const DatasetSpec& spec, Prng& rng) {
  validate(spec);
  Dataset ds;
  ds.spec = spec;
  ds.signatures.reserve(spec.num_classes);
  for (int j = 0; j < spec.num_classes; ++j) {
    ds.signatures.push_back(unit_vector(spec.feature_dim, rng));
  }
  ds.train.reserve(spec.train_count);
  for (int i = 0; i < spec.train_count; ++i) {
    ds.train.push_back(make_video(spec, ds.signatures, i, rng));
  }
  ds.test.reserve(spec.test_count);
  for (int i = 0; i < spec.test_count; ++i) {
    ds.test.push_back(make_video(spec, ds.signatures, spec.train_count + i, rng));
  }
  return ds;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  Prng rng = Prng(spec.seed).substream("data");
  return generate_dataset(spec, rng);
}

namespace {

void put_video(ByteWriter& w, const SyntheticVideo& video) {
  w.u32(static_cast<std::uint32_t>(video.video_id));
  w.u32(static_cast<std::uint32_t>(video.label));
  for (int p : video.planted) w.i32(p);
  for (const auto& clips : video.sections) {
    for (const auto& clip : clips) {
      for (double x : clip) w.f64(x);
    }
  }
}

SyntheticVideo get_video(ByteReader& r, const DatasetSpec& spec) {
  SyntheticVideo video;
  video.video_id = static_cast<int>(r.u32());
  std::size_t label_at = r.offset();
  video.label = static_cast<int>(r.u32());
  if (video.label < 0 || video.label >= spec.num_classes) {
    throw FormatError("video label out of range", label_at);
  }
  video.planted.resize(spec.sections);
  for (int m = 0; m < spec.sections; ++m) {
    std::size_t at = r.offset();
    int p = r.i32();
    if (p < -1 || p >= spec.clips_per_section) {
      throw FormatError("planted index out of range", at);
    }
    video.planted[m] = p;
  }
  video.sections.assign(
      spec.sections,
      std::vector<ClipFeature>(spec.clips_per_section,
                               ClipFeature(spec.feature_dim)));
  for (auto& clips : video.sections) {
    for (auto& clip : clips) {
      for (auto& x : clip) x = r.f64();
    }
  }
  return video;
}

}  // namespace

std::string serialize_dataset(const Dataset& dataset) {
  const DatasetSpec& spec = dataset.spec;
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(spec.num_classes));
  w.u32(static_cast<std::uint32_t>(spec.sections));
  w.u32(static_cast<std::uint32_t>(spec.clips_per_section));
  w.u32(static_cast<std::uint32_t>(spec.feature_dim));
  w.f64(spec.signal_strength);
  w.f64(spec.noise_sigma);
  w.f64(spec.background_prob);
  w.f64(spec.confuser_prob);
  w.u32(static_cast<std::uint32_t>(spec.train_count));
  w.u32(static_cast<std::uint32_t>(spec.test_count));
  w.u64(spec.seed);
  for (const auto& sig : dataset.signatures) {
    for (double x : sig) w.f64(x);
  }
  for (const auto& video : dataset.train) put_video(w, video);
  for (const auto& video : dataset.test) put_video(w, video);
  return w.bytes();
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  atomic_write_file(path, serialize_dataset(dataset));
}

Dataset read_dataset(const std::string& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes);
  r.expect_magic(kMagic, "dataset");
  std::size_t version_at = r.offset();
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version),
                      version_at);
  }
  Dataset ds;
  DatasetSpec& spec = ds.spec;
  std::size_t spec_at = r.offset();
  spec.num_classes = static_cast<int>(r.u32());
  spec.sections = static_cast<int>(r.u32());
  spec.clips_per_section = static_cast<int>(r.u32());
  spec.feature_dim = static_cast<int>(r.u32());
  spec.signal_strength = r.f64();
  spec.noise_sigma = r.f64();
  spec.background_prob = r.f64();
  spec.confuser_prob = r.f64();
  spec.train_count = static_cast<int>(r.u32());
  spec.test_count = static_cast<int>(r.u32());
  spec.seed = r.u64();
  try {
    validate(spec);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid header: ") + e.what(), spec_at);
  }
  ds.signatures.assign(spec.num_classes,
                       std::vector<double>(spec.feature_dim));
  for (auto& sig : ds.signatures) {
    for (auto& x : sig) x = r.f64();
  }
  ds.train.reserve(spec.train_count);
  for (int i = 0; i < spec.train_count; ++i) {
    ds.train.push_back(get_video(r, spec));
  }
  ds.test.reserve(spec.test_count);
  for (int i = 0; i < spec.test_count; ++i) {
    ds.test.push_back(get_video(r, spec));
  }
  if (!r.at_end()) r.fail("trailing bytes after dataset payload");
  return ds;
}

}  // namespace dsn
