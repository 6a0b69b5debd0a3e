#pragma once

#include <string>

#include "vistanet/types.hpp"

namespace vistanet {

struct SuppressionConfig {
    enum class Method { gaussian, linear, hard };

    Method method = Method::gaussian;
    double sigma = 0.5;              // gaussian decay width
    double overlap_threshold = 0.3;  // N_t for linear/hard
    double score_floor = 0.001;      // detections decayed below this are dropped

    void validate() const;
};

std::string to_string(SuppressionConfig::Method m);
SuppressionConfig::Method method_from_string(const std::string& s);

// Intersection over union of two boxes; 0 when disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

// Soft non-maximum suppression. Repeatedly emits the highest-scoring
// remaining detection M (ties: larger area, then input order) and decays the
// rest by IoU against M:
//   gaussian: s *= exp(-iou^2 / sigma)
//   linear:   s *= (1 - iou)   when iou >= N_t
//   hard:     s  = 0           when iou >= N_t
// Detections falling below score_floor are dropped. Classes are processed
// independently; the merged output is sorted by final score descending. Box
// coordinates are never altered.
DetectionSet soft_nms(const DetectionSet& dets, const SuppressionConfig& cfg);

// Classic NMS: soft_nms with the hard method (zeroed detections dropped).
DetectionSet hard_nms(const DetectionSet& dets, double overlap_threshold);

// Detection interchange files: one line per box, "class score cx cy w h"
// with YOLO-normalized geometry.
DetectionSet parse_detections(const std::string& text, double width, double height);
std::string format_detections(const DetectionSet& dets, double width, double height);

}  // namespace vistanet
