#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vistanet/types.hpp"

namespace vistanet {

// Classification scores with bleeding as the positive class, plus
// macro-averaged variants over both classes.
struct ClassificationReport {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
};

ClassificationReport classification_metrics(const std::vector<ClassLabel>& preds,
                                            const std::vector<ClassLabel>& truths);

struct GtBox {
    int class_id = 0;
    BoundingBox box;
};

// One image's candidate detections and ground truth.
struct ImageEval {
    std::string image_id;
    DetectionSet dets;
    std::vector<GtBox> gts;
};

struct DetMatch {
    int det_index = -1;
    std::optional<int> gt_index;  // empty = false positive
    double iou = 0.0;
};

// Greedy matching by descending score: each detection takes the unmatched GT
// of highest IoU if that IoU clears the threshold; each GT matches at most
// once. Records are returned in processing order.
std::vector<DetMatch> match_detections(const DetectionSet& dets,
                                       const std::vector<BoundingBox>& gts,
                                       double iou_thr);

enum class ApInterpolation { all_points, coco101 };

// Class-pooled average precision at one IoU threshold: detections from all
// images are pooled on one PR curve (matching stays class-aware) and
// integrated under the precision envelope.
double average_precision(const std::vector<ImageEval>& corpus, double iou_thr,
                         ApInterpolation interp = ApInterpolation::all_points);

// Mean over GT classes of per-class AP at one threshold.
double map_at(const std::vector<ImageEval>& corpus, double iou_thr,
              ApInterpolation interp = ApInterpolation::all_points);

// Mean of map_at over thresholds 0.50, 0.55, ..., 0.95.
double map_range(const std::vector<ImageEval>& corpus,
                 ApInterpolation interp = ApInterpolation::all_points);

// Mean IoU over matched pairs at threshold 0.5; 0 when nothing matches.
double average_iou(const std::vector<ImageEval>& corpus);

struct DetectionReport {
    double ap = 0.0;         // pooled AP at IoU 0.5
    double map50 = 0.0;      // class-mean AP at IoU 0.5
    double map50_95 = 0.0;   // class-mean AP averaged over 0.50..0.95
    double avg_iou = 0.0;
};

DetectionReport detection_metrics(const std::vector<ImageEval>& corpus,
                                  ApInterpolation interp = ApInterpolation::all_points);

// Fixed-key JSON serializations (full double precision).
std::string classification_json(const ClassificationReport& r);
std::string detection_json(const DetectionReport& r);
// 4-decimal rounding for human-facing display.
std::string classification_display(const ClassificationReport& r);
std::string detection_display(const DetectionReport& r);

}  // namespace vistanet
