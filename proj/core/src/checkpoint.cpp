#include "dsn/checkpoint.hpp"

#include <map>

#include "dsn/error.hpp"
#include "dsn/io_util.hpp"

namespace dsn {

namespace {

constexpr char kMagic[] = "DSNCKPT1";
constexpr std::uint32_t kVersion = 1;

void put_net(ByteWriter& w, std::string_view name, const Mlp& net) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    w.u32(static_cast<std::uint32_t>(layer.w.rows));
    w.u32(static_cast<std::uint32_t>(layer.w.cols));
    w.u8(layer.act == Activation::kRelu ? 1 : 0);
    for (double v : layer.w.data) w.f64(v);
    for (double v : layer.b) w.f64(v);
  }
}

Mlp get_net(ByteReader& r) {
  std::size_t at = r.offset();
  std::uint32_t layer_count = r.u32();
  if (layer_count == 0 || layer_count > 64) {
    throw FormatError("implausible layer count", at);
  }
  Mlp net;
  int prev_rows = -1;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    std::size_t layer_at = r.offset();
    int rows = static_cast<int>(r.u32());
    int cols = static_cast<int>(r.u32());
    if (rows <= 0 || cols <= 0) {
      throw FormatError("non-positive layer shape", layer_at);
    }
    if (prev_rows >= 0 && cols != prev_rows) {
      throw FormatError("layer shapes do not chain", layer_at);
    }
    prev_rows = rows;
    std::uint8_t act = r.u8();
    if (act > 1) throw FormatError("unknown activation code", layer_at);
    Layer layer;
    layer.w = Mat(rows, cols);
    layer.act = act == 1 ? Activation::kRelu : Activation::kIdentity;
    for (auto& v : layer.w.data) v = r.f64();
    layer.b.resize(rows);
    for (auto& v : layer.b) v = r.f64();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

std::string serialize_checkpoint(const ModelBundle& bundle) {
  ByteWriter w;
  w.raw(kMagic, 8);
  w.u32(kVersion);
  w.u32(bundle.response ? 4 : 3);
  put_net(w, "obs.encoder", bundle.obs.encoder);
  put_net(w, "obs.head", bundle.obs.head);
  put_net(w, "classifier", bundle.clf.net);
  if (bundle.response) put_net(w, "response", bundle.response->net);
  return w.bytes();
}

void write_checkpoint(const ModelBundle& bundle, const std::string& path) {
  atomic_write_file(path, serialize_checkpoint(bundle));
}

ModelBundle read_checkpoint(const std::string& path) {
  std::string bytes = read_file_bytes(path);
  ByteReader r(bytes);
  r.expect_magic(kMagic, "checkpoint");
  std::size_t version_at = r.offset();
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version),
                      version_at);
  }
  std::size_t count_at = r.offset();
  std::uint32_t count = r.u32();
  if (count < 3 || count > 4) {
    throw FormatError("checkpoint must hold 3 or 4 nets", count_at);
  }

  std::map<std::string, Mlp> nets;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::size_t at = r.offset();
    std::string name = r.str();
    if (nets.count(name)) throw FormatError("duplicate net name " + name, at);
    nets.emplace(name, get_net(r));
  }
  if (!r.at_end()) r.fail("trailing bytes after checkpoint payload");

  for (const char* needed : {"obs.encoder", "obs.head", "classifier"}) {
    if (!nets.count(needed)) {
      throw FormatError(std::string("missing net ") + needed, r.offset());
    }
  }
  for (const auto& [name, net] : nets) {
    if (name != "obs.encoder" && name != "obs.head" && name != "classifier" &&
        name != "response") {
      throw FormatError("unknown net name " + name, r.offset());
    }
    (void)net;
  }

  ModelBundle bundle;
  bundle.obs.encoder = std::move(nets.at("obs.encoder"));
  bundle.obs.head = std::move(nets.at("obs.head"));
  bundle.clf.net = std::move(nets.at("classifier"));
  if (nets.count("response")) {
    bundle.response = ClipClassifier{std::move(nets.at("response"))};
  }

  int n = bundle.obs.head.output_dim();
  int e = bundle.obs.encoder.output_dim();
  if (bundle.obs.head.input_dim() != n * e) {
    throw FormatError("observation head input does not match N * embed dim",
                      r.offset());
  }
  if (bundle.obs.encoder.input_dim() != bundle.clf.net.input_dim()) {
    throw FormatError("encoder and classifier disagree on feature dim",
                      r.offset());
  }
  return bundle;
}

}  // namespace dsn
