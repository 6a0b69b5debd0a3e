#pragma once

#include <cstdint>
#include <string>

#include "vistanet/types.hpp"

namespace vistanet {

// Deterministic synthetic frame: a textured tissue-like background, and for
// bleeding frames 1-3 disjoint reddish elliptical blobs. The mask is the
// union of blob supports; gt_boxes tightly bound each blob. size must be a
// multiple of 8 and at least 16.
AnnotatedFrame generate_synthetic_frame(uint64_t seed, bool bleeding, int size);

// Writes count frames (bleeding half rounded up) in the standard dataset
// layout plus layout.cfg and labels.csv. Refuses to touch an existing
// non-empty directory unless force is set; reruns with identical arguments
// produce byte-identical files.
void write_synthetic_dataset(const std::string& out_dir, int count, uint64_t seed,
                             int size, bool force);

}  // namespace vistanet
