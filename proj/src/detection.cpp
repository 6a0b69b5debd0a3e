#include "vistanet/detection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace vistanet {

void SuppressionConfig::validate() const {
    check(sigma > 0.0, "SuppressionConfig: sigma must be positive");
    check(overlap_threshold > 0.0 && overlap_threshold < 1.0,
          "SuppressionConfig: overlap_threshold must be in (0,1)");
    check(score_floor >= 0.0 && score_floor < 1.0,
          "SuppressionConfig: score_floor must be in [0,1)");
}

std::string to_string(SuppressionConfig::Method m) {
    switch (m) {
        case SuppressionConfig::Method::gaussian: return "gaussian";
        case SuppressionConfig::Method::linear: return "linear";
        case SuppressionConfig::Method::hard: return "hard";
    }
    throw Error("unknown suppression method");
}

SuppressionConfig::Method method_from_string(const std::string& s) {
    if (s == "gaussian") return SuppressionConfig::Method::gaussian;
    if (s == "linear") return SuppressionConfig::Method::linear;
    if (s == "hard") return SuppressionConfig::Method::hard;
    throw Error("unknown suppression method: " + s);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

struct Work {
    Detection det;
    size_t input_index;
};

// selection order: score desc, then larger area, then input order
bool select_before(const Work& a, const Work& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.det.box.area() != b.det.box.area()) return a.det.box.area() > b.det.box.area();
    return a.input_index < b.input_index;
}

}  // namespace

DetectionSet soft_nms(const DetectionSet& dets, const SuppressionConfig& cfg) {
    cfg.validate();
    for (const auto& d : dets) d.validate();

    std::map<int, std::vector<Work>> by_class;
    for (size_t i = 0; i < dets.size(); ++i)
        by_class[dets[i].class_id].push_back({dets[i], i});

    DetectionSet out;
    for (auto& [cls, remaining] : by_class) {
        while (!remaining.empty()) {
            auto best = std::min_element(
                remaining.begin(), remaining.end(),
                [](const Work& a, const Work& b) { return select_before(a, b); });
            const Detection m = best->det;
            remaining.erase(best);
            out.push_back(m);

            for (auto& w : remaining) {
                const double ov = iou(m.box, w.det.box);
                switch (cfg.method) {
                    case SuppressionConfig::Method::gaussian:
                        w.det.score *= std::exp(-(ov * ov) / cfg.sigma);
                        break;
                    case SuppressionConfig::Method::linear:
                        if (ov >= cfg.overlap_threshold) w.det.score *= (1.0 - ov);
                        break;
                    case SuppressionConfig::Method::hard:
                        if (ov >= cfg.overlap_threshold) w.det.score = 0.0;
                        break;
                }
            }
            std::erase_if(remaining,
                          [&](const Work& w) { return w.det.score < cfg.score_floor; });
        }
    }

    // content-determined order so the result is independent of input
    // permutation: score desc, class asc, area desc, then coordinates
    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.class_id != b.class_id) return a.class_id < b.class_id;
        if (a.box.area() != b.box.area()) return a.box.area() > b.box.area();
        if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
        if (a.box.y_min != b.box.y_min) return a.box.y_min < b.box.y_min;
        if (a.box.x_max != b.box.x_max) return a.box.x_max < b.box.x_max;
        return a.box.y_max < b.box.y_max;
    });
    return out;
}

DetectionSet hard_nms(const DetectionSet& dets, double overlap_threshold) {
    SuppressionConfig cfg;
    cfg.method = SuppressionConfig::Method::hard;
    cfg.overlap_threshold = overlap_threshold;
    check(cfg.score_floor > 0.0, "hard_nms: score floor must be positive");
    return soft_nms(dets, cfg);
}

DetectionSet parse_detections(const std::string& text, double width, double height) {
    DetectionSet out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = line;
        if (t.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(t);
        double cls, score, cx, cy, w, h;
        if (!(ls >> cls >> score >> cx >> cy >> w >> h))
            throw Error("line " + std::to_string(lineno) +
                        ": expected 'class score cx cy w h'");
        const std::string where = "line " + std::to_string(lineno);
        std::string extra;
        if (ls >> extra) throw Error(where + ": trailing token '" + extra + "'");
        check(cls >= 0 && cls == std::floor(cls), where + ": class must be a nonnegative integer");
        check(score >= 0.0 && score <= 1.0, where + ": score out of range [0,1]");
        for (double v : {cx, cy, w, h})
            check(v >= 0.0 && v <= 1.0, where + ": coordinate out of range [0,1]");
        BoundingBox box{std::clamp((cx - w / 2) * width, 0.0, width),
                        std::clamp((cy - h / 2) * height, 0.0, height),
                        std::clamp((cx + w / 2) * width, 0.0, width),
                        std::clamp((cy + h / 2) * height, 0.0, height)};
        check(box.x_min < box.x_max && box.y_min < box.y_max, where + ": degenerate box");
        out.push_back(Detection{box, score, static_cast<int>(cls)});
    }
    return out;
}

std::string format_detections(const DetectionSet& dets, double width, double height) {
    std::string out;
    char buf[200];
    for (const auto& d : dets) {
        const auto& b = d.box;
        const double cx = (b.x_min + b.x_max) / 2 / width;
        const double cy = (b.y_min + b.y_max) / 2 / height;
        const double w = (b.x_max - b.x_min) / width;
        const double h = (b.y_max - b.y_min) / height;
        std::snprintf(buf, sizeof(buf), "%d %.9f %.9f %.9f %.9f %.9f\n", d.class_id,
                      d.score, cx, cy, w, h);
        out += buf;
    }
    return out;
}

}  // namespace vistanet
