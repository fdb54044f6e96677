#pragma once

#include <string>

#include "labelnet/train.hpp"

namespace labelnet {

// Versioned little-endian binary blob: config text, vocabulary, label set
// with descriptions, then named parameter arrays with shape headers.
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace labelnet
