#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vistanet/types.hpp"

namespace vistanet {

// Maps dataset roles to subdirectories under the dataset root. Serialized as
// a flat key=value file so layouts are diffable.
struct DatasetLayout {
    std::string images_bleeding = "bleeding/images";
    std::string masks_bleeding = "bleeding/masks";
    std::string boxes_bleeding = "bleeding/boxes";
    std::string images_nonbleeding = "non_bleeding/images";

    static DatasetLayout from_file(const std::string& path);
    void to_file(const std::string& path) const;
};

// Parses YOLO annotation lines "class cx cy w h" (all four normalized to
// [0,1]) into pixel boxes for an image of the given size. Boxes are clamped
// to the image bounds. Malformed tokens or out-of-range coordinates raise an
// error carrying the 1-based line number.
std::vector<std::pair<int, BoundingBox>> parse_yolo_boxes(const std::string& text,
                                                          double width, double height);

std::string format_yolo_boxes(const std::vector<std::pair<int, BoundingBox>>& boxes,
                              double width, double height);

// Loads a dataset from disk. Every bleeding image must have a mask with the
// same file stem; masks are binarized at 0.5; images are normalized to [0,1]
// and padded (edge-replicate, bottom/right) so both dims are multiples of
// pad_multiple. Returned frames are sorted by id.
std::vector<AnnotatedFrame> load_dataset(const std::string& root,
                                         const DatasetLayout& layout,
                                         int pad_multiple = 8);

// Stratified, seed-deterministic split. Every class must have at least two
// members; each contributes round(val_fraction * n) frames to val (at least
// one, at most n-1).
DatasetSplit split_dataset(const std::vector<AnnotatedFrame>& frames,
                           double val_fraction, uint64_t seed);

// Binarizes at threshold, finds 8-connected components, drops components
// smaller than min_area pixels and returns tight half-open boxes sorted by
// area descending.
std::vector<BoundingBox> mask_to_boxes(const SegmentationMask& mask, double threshold,
                                       int min_area = 4);

}  // namespace vistanet
