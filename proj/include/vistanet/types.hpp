#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vistanet/tensor.hpp"

namespace vistanet {

enum class ClassLabel : int { non_bleeding = 0, bleeding = 1 };

inline int class_index(ClassLabel l) { return static_cast<int>(l); }

// RGB frame with values in [0,1], stored planar {3,H,W}.
struct ImageFrame {
    Tensor pixels;  // {3,H,W}
    std::string id;

    int height() const { return pixels.dim(1); }
    int width() const { return pixels.dim(2); }

    void validate() const;
};

struct SegmentationMask {
    enum class Kind { ground_truth, predicted };

    Tensor values;  // {H,W}
    Kind kind = Kind::ground_truth;

    int height() const { return values.dim(0); }
    int width() const { return values.dim(1); }
    double sum() const {
        double s = 0.0;
        for (int64_t i = 0; i < values.size(); ++i) s += values[i];
        return s;
    }

    void validate() const;
};

// Half-open pixel box: [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }

    bool operator==(const BoundingBox&) const = default;

    void validate(double image_w, double image_h) const;
};

struct Detection {
    BoundingBox box;
    double score = 0.0;
    int class_id = 0;

    void validate() const;
};

using DetectionSet = std::vector<Detection>;

struct AnnotatedFrame {
    ImageFrame image;
    ClassLabel label = ClassLabel::non_bleeding;
    std::optional<SegmentationMask> mask;
    std::vector<BoundingBox> gt_boxes;

    // bleeding => mask present and non-zero; non_bleeding => mask (if any)
    // all-zero and no boxes.
    void validate() const;
};

struct DatasetSplit {
    std::vector<AnnotatedFrame> train;
    std::vector<AnnotatedFrame> val;
    uint64_t seed = 0;
};

// Two-class probability vector; index 0 = non_bleeding, 1 = bleeding.
struct ProbVector {
    std::array<double, 2> p{0.5, 0.5};

    double operator[](int i) const { return p[static_cast<size_t>(i)]; }
    double& operator[](int i) { return p[static_cast<size_t>(i)]; }
    double bleeding() const { return p[1]; }

    void validate() const;
};

}  // namespace vistanet
