#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rgl/tensor.hpp"

namespace rgl {

// Parameter checkpoint: little-endian binary with a version header, a plain
// text header (config and vocab lines), then (name, shape, row-major f64)
// records.
struct CheckpointData {
  std::string header_text;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace rgl
