#pragma once

// Independent reference implementations used as oracles. Each follows the
// stated scheme literally with plain loops and stays structurally separate
// from the library code it checks.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "vistanet/detection.hpp"
#include "vistanet/evaluation.hpp"
#include "vistanet/types.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// block-mean downsampling: nested-loop scalar mean per block

inline vistanet::Tensor block_mean(const vistanet::Tensor& m, int out_h, int out_w) {
    const int bh = m.dim(0) / out_h;
    const int bw = m.dim(1) / out_w;
    vistanet::Tensor out({out_h, out_w});
    for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
            double acc = 0.0;
            for (int r = 0; r < bh; ++r)
                for (int c = 0; c < bw; ++c) acc += m.at(i * bh + r, j * bw + c);
            out.at(i, j) = acc * (1.0 / (static_cast<double>(bh) * bw));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// IoU and soft-NMS, step by step

inline double iou(const vistanet::BoundingBox& a, const vistanet::BoundingBox& b) {
    const double w = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
    const double h = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
    const double inter = w * h;
    const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) +
                       (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline vistanet::DetectionSet soft_nms(const vistanet::DetectionSet& input,
                                       const vistanet::SuppressionConfig& cfg) {
    using vistanet::Detection;

    struct Item {
        Detection det;
        size_t order;
        bool alive = true;
    };

    // distinct class ids, processed one at a time
    std::set<int> classes;
    for (const auto& d : input) classes.insert(d.class_id);

    vistanet::DetectionSet emitted;
    for (int cls : classes) {
        std::vector<Item> items;
        for (size_t i = 0; i < input.size(); ++i)
            if (input[i].class_id == cls) items.push_back({input[i], i, true});

        while (true) {
            // highest score; ties: larger area, then earlier input position
            int best = -1;
            for (size_t i = 0; i < items.size(); ++i) {
                if (!items[i].alive) continue;
                if (best < 0) {
                    best = static_cast<int>(i);
                    continue;
                }
                const Item& a = items[i];
                const Item& b = items[static_cast<size_t>(best)];
                const double area_a = (a.det.box.x_max - a.det.box.x_min) *
                                      (a.det.box.y_max - a.det.box.y_min);
                const double area_b = (b.det.box.x_max - b.det.box.x_min) *
                                      (b.det.box.y_max - b.det.box.y_min);
                if (a.det.score > b.det.score ||
                    (a.det.score == b.det.score && area_a > area_b) ||
                    (a.det.score == b.det.score && area_a == area_b && a.order < b.order))
                    best = static_cast<int>(i);
            }
            if (best < 0) break;

            Item& m = items[static_cast<size_t>(best)];
            m.alive = false;
            emitted.push_back(m.det);

            for (auto& it : items) {
                if (!it.alive) continue;
                const double ov = oracles::iou(m.det.box, it.det.box);
                if (cfg.method == vistanet::SuppressionConfig::Method::gaussian)
                    it.det.score *= std::exp(-(ov * ov) / cfg.sigma);
                else if (cfg.method == vistanet::SuppressionConfig::Method::linear) {
                    if (ov >= cfg.overlap_threshold) it.det.score *= (1.0 - ov);
                } else {
                    if (ov >= cfg.overlap_threshold) it.det.score = 0.0;
                }
                if (it.det.score < cfg.score_floor) it.alive = false;
            }
        }
    }

    std::sort(emitted.begin(), emitted.end(), [](const Detection& a, const Detection& b) {
        const double area_a = (a.box.x_max - a.box.x_min) * (a.box.y_max - a.box.y_min);
        const double area_b = (b.box.x_max - b.box.x_min) * (b.box.y_max - b.box.y_min);
        if (a.score != b.score) return a.score > b.score;
        if (a.class_id != b.class_id) return a.class_id < b.class_id;
        if (area_a != area_b) return area_a > area_b;
        if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
        if (a.box.y_min != b.box.y_min) return a.box.y_min < b.box.y_min;
        if (a.box.x_max != b.box.x_max) return a.box.x_max < b.box.x_max;
        return a.box.y_max < b.box.y_max;
    });
    return emitted;
}

// ---------------------------------------------------------------------------
// greedy matching and AP by explicit enumeration

struct MatchRec {
    size_t det;
    int gt;  // -1 = unmatched
    double iou;
};

inline std::vector<MatchRec> greedy_match(const vistanet::DetectionSet& dets,
                                          const std::vector<vistanet::BoundingBox>& gts,
                                          double thr) {
    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> used(gts.size(), false);
    std::vector<MatchRec> out;
    for (size_t d : order) {
        double best = -1.0;
        int best_g = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[g]) continue;
            const double ov = oracles::iou(dets[d].box, gts[g]);
            if (ov > best) {
                best = ov;
                best_g = static_cast<int>(g);
            }
        }
        if (best_g >= 0 && best >= thr) {
            used[static_cast<size_t>(best_g)] = true;
            out.push_back({d, best_g, best});
        } else {
            out.push_back({d, -1, 0.0});
        }
    }
    return out;
}

// pooled AP at one threshold over a corpus, class-aware, all-points rule
inline double pooled_ap(const std::vector<vistanet::ImageEval>& corpus, double thr,
                        bool coco101 = false) {
    struct Rec {
        double score;
        bool tp;
    };
    std::vector<Rec> recs;
    int64_t n_gt = 0;
    for (const auto& img : corpus) {
        n_gt += static_cast<int64_t>(img.gts.size());
        std::set<int> classes;
        for (const auto& d : img.dets) classes.insert(d.class_id);
        for (int cls : classes) {
            vistanet::DetectionSet dc;
            std::vector<vistanet::BoundingBox> gc;
            for (const auto& d : img.dets)
                if (d.class_id == cls) dc.push_back(d);
            for (const auto& g : img.gts)
                if (g.class_id == cls) gc.push_back(g.box);
            for (const auto& m : greedy_match(dc, gc, thr))
                recs.push_back({dc[m.det].score, m.gt >= 0});
        }
    }
    if (recs.empty() || n_gt == 0) return 0.0;
    std::stable_sort(recs.begin(), recs.end(),
                     [](const Rec& a, const Rec& b) { return a.score > b.score; });

    std::vector<double> rec, pre;
    double tp = 0, fp = 0;
    for (const auto& r : recs) {
        (r.tp ? tp : fp) += 1.0;
        rec.push_back(tp / static_cast<double>(n_gt));
        pre.push_back(tp / (tp + fp));
    }
    std::vector<double> env(pre);
    for (int i = static_cast<int>(env.size()) - 2; i >= 0; --i)
        env[static_cast<size_t>(i)] =
            std::max(env[static_cast<size_t>(i)], env[static_cast<size_t>(i) + 1]);

    if (!coco101) {
        double ap = 0.0, prev = 0.0;
        for (size_t i = 0; i < rec.size(); ++i) {
            ap += (rec[i] - prev) * env[i];
            prev = rec[i];
        }
        return ap;
    }
    double acc = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = k / 100.0;
        double best = 0.0;
        for (size_t i = 0; i < rec.size(); ++i)
            if (rec[i] >= r) best = std::max(best, env[i]);
        acc += best;
    }
    return acc / 101.0;
}

inline double class_mean_ap(const std::vector<vistanet::ImageEval>& corpus, double thr,
                            bool coco101 = false) {
    std::set<int> classes;
    for (const auto& img : corpus)
        for (const auto& g : img.gts) classes.insert(g.class_id);
    double acc = 0.0;
    for (int cls : classes) {
        std::vector<vistanet::ImageEval> sub;
        for (const auto& img : corpus) {
            vistanet::ImageEval e;
            e.image_id = img.image_id;
            for (const auto& d : img.dets)
                if (d.class_id == cls) e.dets.push_back(d);
            for (const auto& g : img.gts)
                if (g.class_id == cls) e.gts.push_back(g);
            sub.push_back(e);
        }
        acc += pooled_ap(sub, thr, coco101);
    }
    return acc / static_cast<double>(classes.size());
}

inline double mean_iou_at_50(const std::vector<vistanet::ImageEval>& corpus) {
    double acc = 0.0;
    int64_t n = 0;
    for (const auto& img : corpus) {
        std::set<int> classes;
        for (const auto& d : img.dets) classes.insert(d.class_id);
        for (int cls : classes) {
            vistanet::DetectionSet dc;
            std::vector<vistanet::BoundingBox> gc;
            for (const auto& d : img.dets)
                if (d.class_id == cls) dc.push_back(d);
            for (const auto& g : img.gts)
                if (g.class_id == cls) gc.push_back(g.box);
            for (const auto& m : greedy_match(dc, gc, 0.5)) {
                if (m.gt >= 0) {
                    acc += m.iou;
                    ++n;
                }
            }
        }
    }
    return n > 0 ? acc / static_cast<double>(n) : 0.0;
}

// ---------------------------------------------------------------------------
// scalar-loop combined loss

inline double combined_loss(const vistanet::ProbVector& std_probs,
                            const std::optional<vistanet::ProbVector>& attn_probs,
                            const vistanet::SegmentationMask& pred,
                            const vistanet::SegmentationMask& target,
                            vistanet::ClassLabel label, double la, double ls) {
    const double eps = 1e-7;
    auto clamp = [&](double p) { return std::min(std::max(p, eps), 1.0 - eps); };
    const int idx = label == vistanet::ClassLabel::bleeding ? 1 : 0;

    double loss = -std::log(clamp(std_probs[idx]));
    if (attn_probs) loss += la * -std::log(clamp((*attn_probs)[idx]));

    double bce = 0.0;
    for (int64_t i = 0; i < pred.values.size(); ++i) {
        const double p = clamp(pred.values[i]);
        const double t = target.values[i];
        bce += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    loss += ls * bce / static_cast<double>(pred.values.size());
    return loss;
}

// ---------------------------------------------------------------------------
// 8-connected components by explicit flood fill over pixel sets

struct Component {
    std::vector<std::pair<int, int>> pixels;  // (row, col)
};

inline std::vector<Component> flood_components(const vistanet::Tensor& mask,
                                               double threshold) {
    const int h = mask.dim(0), w = mask.dim(1);
    std::vector<std::vector<bool>> seen(static_cast<size_t>(h),
                                        std::vector<bool>(static_cast<size_t>(w), false));
    std::vector<Component> comps;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (mask.at(r, c) < threshold || seen[static_cast<size_t>(r)][static_cast<size_t>(c)])
                continue;
            Component comp;
            std::vector<std::pair<int, int>> queue{{r, c}};
            seen[static_cast<size_t>(r)][static_cast<size_t>(c)] = true;
            while (!queue.empty()) {
                auto [pr, pc] = queue.back();
                queue.pop_back();
                comp.pixels.push_back({pr, pc});
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = pr + dr, nc = pc + dc;
                        if ((dr || dc) && nr >= 0 && nr < h && nc >= 0 && nc < w &&
                            mask.at(nr, nc) >= threshold &&
                            !seen[static_cast<size_t>(nr)][static_cast<size_t>(nc)]) {
                            seen[static_cast<size_t>(nr)][static_cast<size_t>(nc)] = true;
                            queue.push_back({nr, nc});
                        }
                    }
            }
            comps.push_back(std::move(comp));
        }
    }
    return comps;
}

inline vistanet::BoundingBox component_box(const Component& comp) {
    int rmin = comp.pixels[0].first, rmax = rmin;
    int cmin = comp.pixels[0].second, cmax = cmin;
    for (auto [r, c] : comp.pixels) {
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
    }
    return {static_cast<double>(cmin), static_cast<double>(rmin),
            static_cast<double>(cmax + 1), static_cast<double>(rmax + 1)};
}

}  // namespace oracles
