#pragma once

#include <string>
#include <utility>

#include "encdec/model.hpp"

namespace encdec {

// Versioned binary container: magic, format version, config block, then one
// named record (name, rows, cols, row-major little-endian f64 payload) per
// non-empty parameter block. Round trips are bit-exact. See README for the
// byte-level layout.
void checkpoint_save(const ModelParams& p, const ModelConfig& cfg,
                     const std::string& path);

std::pair<ModelParams, ModelConfig> checkpoint_load(const std::string& path);

}  // namespace encdec
