#pragma once

#include <string>

#include "vistanet/model.hpp"

namespace vistanet {

// Versioned binary container: magic, format version, JSON manifest (specs,
// training metadata, array table), then raw little-endian float64 data.
// load(save(m)) is bit-exact on parameters and metadata.
void save_checkpoint(const Model& model, const std::string& path);

// Rebuilds the model described by the manifest.
Model load_checkpoint(const std::string& path);

// Loads parameters into an existing model; array names and shapes must match
// the model exactly (CheckpointShapeError otherwise).
void load_checkpoint_into(Model& model, const std::string& path);

}  // namespace vistanet
