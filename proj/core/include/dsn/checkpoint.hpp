#pragma once

#include <optional>
#include <string>

#include "dsn/classifier.hpp"
#include "dsn/sampler.hpp"

namespace dsn {

// Everything one training run produces: the selection model, the
// classifier, and (when trained) the independent response net backing the
// max_response baseline.
struct ModelBundle {
  ObservationNet obs;
  ClipClassifier clf;
  std::optional<ClipClassifier> response;
};

// Fixed little-endian binary, magic "DSNCKPT1": named nets, each a list of
// (rows, cols, activation, weights, bias) layers. Round-trips bit-exactly.
std::string serialize_checkpoint(const ModelBundle& bundle);
void write_checkpoint(const ModelBundle& bundle, const std::string& path);
ModelBundle read_checkpoint(const std::string& path);

}  // namespace dsn
