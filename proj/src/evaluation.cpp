#include "vistanet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "vistanet/detection.hpp"

namespace vistanet {

namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void validate_corpus(const std::vector<ImageEval>& corpus) {
    std::set<std::string> ids;
    for (const auto& img : corpus)
        check(ids.insert(img.image_id).second,
              "duplicate image id in corpus: " + img.image_id);
}

int64_t total_gt(const std::vector<ImageEval>& corpus) {
    int64_t n = 0;
    for (const auto& img : corpus) n += static_cast<int64_t>(img.gts.size());
    return n;
}

std::set<int> gt_classes(const std::vector<ImageEval>& corpus) {
    std::set<int> cls;
    for (const auto& img : corpus)
        for (const auto& g : img.gts) cls.insert(g.class_id);
    return cls;
}

struct ScoredOutcome {
    double score;
    bool tp;
};

// Pooled TP/FP records in deterministic collection order: images in corpus
// order, classes ascending within an image, detections in match processing
// order. The final ranking is a stable sort by score.
std::vector<ScoredOutcome> pooled_outcomes(const std::vector<ImageEval>& corpus,
                                           double iou_thr) {
    std::vector<ScoredOutcome> records;
    for (const auto& img : corpus) {
        std::set<int> classes;
        for (const auto& d : img.dets) classes.insert(d.class_id);
        for (int cls : classes) {
            DetectionSet dets_c;
            for (const auto& d : img.dets)
                if (d.class_id == cls) dets_c.push_back(d);
            std::vector<BoundingBox> gts_c;
            for (const auto& g : img.gts)
                if (g.class_id == cls) gts_c.push_back(g.box);
            for (const auto& m : match_detections(dets_c, gts_c, iou_thr))
                records.push_back({dets_c[static_cast<size_t>(m.det_index)].score,
                                   m.gt_index.has_value()});
        }
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const ScoredOutcome& a, const ScoredOutcome& b) {
                         return a.score > b.score;
                     });
    return records;
}

double integrate_ap(const std::vector<ScoredOutcome>& records, int64_t n_gt,
                    ApInterpolation interp) {
    if (records.empty()) return 0.0;
    std::vector<double> recall, precision;
    double tp = 0, fp = 0;
    for (const auto& r : records) {
        (r.tp ? tp : fp) += 1.0;
        recall.push_back(tp / static_cast<double>(n_gt));
        precision.push_back(tp / (tp + fp));
    }
    // precision envelope: max precision at recall >= r
    std::vector<double> env(precision);
    for (size_t i = env.size() - 1; i > 0; --i) env[i - 1] = std::max(env[i - 1], env[i]);

    if (interp == ApInterpolation::all_points) {
        double ap = 0.0, prev = 0.0;
        for (size_t i = 0; i < recall.size(); ++i) {
            ap += (recall[i] - prev) * env[i];
            prev = recall[i];
        }
        return ap;
    }
    // coco101: mean envelope precision over recall grid 0.00, 0.01, ..., 1.00
    double acc = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        auto it = std::lower_bound(recall.begin(), recall.end(), r);
        if (it != recall.end())
            acc += env[static_cast<size_t>(it - recall.begin())];
    }
    return acc / 101.0;
}

std::vector<ImageEval> restrict_class(const std::vector<ImageEval>& corpus, int cls) {
    std::vector<ImageEval> out;
    for (const auto& img : corpus) {
        ImageEval e;
        e.image_id = img.image_id;
        for (const auto& d : img.dets)
            if (d.class_id == cls) e.dets.push_back(d);
        for (const auto& g : img.gts)
            if (g.class_id == cls) e.gts.push_back(g);
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

ClassificationReport classification_metrics(const std::vector<ClassLabel>& preds,
                                            const std::vector<ClassLabel>& truths) {
    check(preds.size() == truths.size(),
          "classification_metrics: prediction/truth length mismatch");
    check(!preds.empty(), "classification_metrics: empty input");

    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] == ClassLabel::bleeding;
        const bool t = truths[i] == ClassLabel::bleeding;
        if (p && t) ++tp;
        else if (p && !t) ++fp;
        else if (!p && t) ++fn;
        else ++tn;
    }

    ClassificationReport r;
    r.accuracy = (tp + tn) / static_cast<double>(preds.size());
    r.precision = safe_div(tp, tp + fp);
    r.recall = safe_div(tp, tp + fn);
    r.f1 = f1_of(r.precision, r.recall);

    // macro: treat each class as positive in turn and average
    const double prec_neg = safe_div(tn, tn + fn);
    const double rec_neg = safe_div(tn, tn + fp);
    r.precision_macro = (r.precision + prec_neg) / 2.0;
    r.recall_macro = (r.recall + rec_neg) / 2.0;
    r.f1_macro = (r.f1 + f1_of(prec_neg, rec_neg)) / 2.0;
    return r;
}

std::vector<DetMatch> match_detections(const DetectionSet& dets,
                                       const std::vector<BoundingBox>& gts,
                                       double iou_thr) {
    check(iou_thr > 0.0 && iou_thr < 1.0, "match_detections: iou_thr must be in (0,1)");

    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<bool> gt_used(gts.size(), false);
    std::vector<DetMatch> out;
    for (size_t idx : order) {
        DetMatch m;
        m.det_index = static_cast<int>(idx);
        double best = -1.0;
        int best_gt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (gt_used[g]) continue;
            const double ov = iou(dets[idx].box, gts[g]);
            if (ov > best) {
                best = ov;
                best_gt = static_cast<int>(g);
            }
        }
        if (best_gt >= 0 && best >= iou_thr) {
            gt_used[static_cast<size_t>(best_gt)] = true;
            m.gt_index = best_gt;
            m.iou = best;
        }
        out.push_back(m);
    }
    return out;
}

double average_precision(const std::vector<ImageEval>& corpus, double iou_thr,
                         ApInterpolation interp) {
    validate_corpus(corpus);
    const int64_t n_gt = total_gt(corpus);
    check(n_gt > 0, "average_precision: corpus has no ground-truth boxes");
    return integrate_ap(pooled_outcomes(corpus, iou_thr), n_gt, interp);
}

double map_at(const std::vector<ImageEval>& corpus, double iou_thr,
              ApInterpolation interp) {
    validate_corpus(corpus);
    check(total_gt(corpus) > 0, "map_at: corpus has no ground-truth boxes");
    const auto classes = gt_classes(corpus);
    double acc = 0.0;
    for (int cls : classes) {
        const auto sub = restrict_class(corpus, cls);
        acc += integrate_ap(pooled_outcomes(sub, iou_thr), total_gt(sub), interp);
    }
    return acc / static_cast<double>(classes.size());
}

double map_range(const std::vector<ImageEval>& corpus, ApInterpolation interp) {
    double acc = 0.0;
    for (int k = 0; k < 10; ++k) acc += map_at(corpus, (50 + 5 * k) / 100.0, interp);
    return acc / 10.0;
}

double average_iou(const std::vector<ImageEval>& corpus) {
    validate_corpus(corpus);
    check(total_gt(corpus) > 0, "average_iou: corpus has no ground-truth boxes");
    double acc = 0.0;
    int64_t n = 0;
    for (const auto& img : corpus) {
        std::set<int> classes;
        for (const auto& d : img.dets) classes.insert(d.class_id);
        for (int cls : classes) {
            DetectionSet dets_c;
            for (const auto& d : img.dets)
                if (d.class_id == cls) dets_c.push_back(d);
            std::vector<BoundingBox> gts_c;
            for (const auto& g : img.gts)
                if (g.class_id == cls) gts_c.push_back(g.box);
            for (const auto& m : match_detections(dets_c, gts_c, 0.5)) {
                if (m.gt_index.has_value()) {
                    acc += m.iou;
                    ++n;
                }
            }
        }
    }
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

DetectionReport detection_metrics(const std::vector<ImageEval>& corpus,
                                  ApInterpolation interp) {
    DetectionReport r;
    r.ap = average_precision(corpus, 0.5, interp);
    r.map50 = map_at(corpus, 0.5, interp);
    r.map50_95 = map_range(corpus, interp);
    r.avg_iou = average_iou(corpus);
    return r;
}

std::string classification_json(const ClassificationReport& r) {
    nlohmann::json j{{"accuracy", r.accuracy},       {"precision", r.precision},
                     {"recall", r.recall},           {"f1", r.f1},
                     {"precision_macro", r.precision_macro},
                     {"recall_macro", r.recall_macro},
                     {"f1_macro", r.f1_macro}};
    return j.dump(2) + "\n";
}

std::string detection_json(const DetectionReport& r) {
    nlohmann::json j{{"ap", r.ap},
                     {"map50", r.map50},
                     {"map50_95", r.map50_95},
                     {"avg_iou", r.avg_iou}};
    return j.dump(2) + "\n";
}

namespace {
std::string fmt4(const char* k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s: %.4f\n", k, v);
    return buf;
}
}  // namespace

std::string classification_display(const ClassificationReport& r) {
    return fmt4("accuracy", r.accuracy) + fmt4("precision", r.precision) +
           fmt4("recall", r.recall) + fmt4("f1", r.f1) +
           fmt4("precision_macro", r.precision_macro) +
           fmt4("recall_macro", r.recall_macro) + fmt4("f1_macro", r.f1_macro);
}

std::string detection_display(const DetectionReport& r) {
    return fmt4("ap", r.ap) + fmt4("map50", r.map50) + fmt4("map50_95", r.map50_95) +
           fmt4("avg_iou", r.avg_iou);
}

}  // namespace vistanet
