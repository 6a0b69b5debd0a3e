#include "vistanet/types.hpp"

#include <cmath>

namespace vistanet {

void ImageFrame::validate() const {
    check(pixels.rank() == 3 && pixels.dim(0) == 3, "ImageFrame: pixels must be {3,H,W}");
    check(height() >= 8 && width() >= 8, "ImageFrame: dims must be at least 8x8");
    for (int64_t i = 0; i < pixels.size(); ++i)
        check(pixels[i] >= 0.0 && pixels[i] <= 1.0, "ImageFrame: value outside [0,1]");
}

void SegmentationMask::validate() const {
    check(values.rank() == 2, "SegmentationMask: values must be {H,W}");
    for (int64_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (kind == Kind::ground_truth)
            check(v == 0.0 || v == 1.0, "SegmentationMask: ground truth must be binary");
        else
            check(v >= 0.0 && v <= 1.0, "SegmentationMask: predicted value outside [0,1]");
    }
}

void BoundingBox::validate(double image_w, double image_h) const {
    check(x_min >= 0.0 && x_min < x_max && x_max <= image_w &&
              y_min >= 0.0 && y_min < y_max && y_max <= image_h,
          "BoundingBox: invalid extent");
}

void Detection::validate() const {
    check(std::isfinite(score) && score >= 0.0 && score <= 1.0,
          "Detection: score outside [0,1]");
    check(box.x_min < box.x_max && box.y_min < box.y_max, "Detection: empty box");
}

void AnnotatedFrame::validate() const {
    image.validate();
    if (label == ClassLabel::bleeding) {
        check(mask.has_value(), "AnnotatedFrame: bleeding frame requires a mask");
        check(mask->sum() > 0.0, "AnnotatedFrame: bleeding frame mask is all-zero");
    } else {
        if (mask.has_value())
            check(mask->sum() == 0.0,
                  "AnnotatedFrame: non-bleeding frame mask must be all-zero");
        check(gt_boxes.empty(), "AnnotatedFrame: non-bleeding frame must have no boxes");
    }
    if (mask.has_value()) {
        check(mask->height() == image.height() && mask->width() == image.width(),
              "AnnotatedFrame: mask dims must match image");
    }
    for (const auto& b : gt_boxes) b.validate(image.width(), image.height());
}

void ProbVector::validate() const {
    check(p[0] >= 0.0 && p[1] >= 0.0, "ProbVector: negative entry");
    check(std::abs(p[0] + p[1] - 1.0) <= 1e-6, "ProbVector: entries must sum to 1");
}

}  // namespace vistanet
