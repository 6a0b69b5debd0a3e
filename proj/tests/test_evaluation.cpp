#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "vistanet/detection.hpp"
#include "vistanet/evaluation.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace vistanet;

namespace {

std::vector<ImageEval> random_corpus(Rng& rng, int max_images = 5, int max_gt = 4,
                                     int max_dets = 6, int max_classes = 2) {
    std::vector<ImageEval> corpus;
    const int n_img = static_cast<int>(rng.uniform_int(1, max_images));
    for (int i = 0; i < n_img; ++i) {
        ImageEval img;
        img.image_id = "img" + std::to_string(i);
        const int n_gt = static_cast<int>(rng.uniform_int(0, max_gt));
        for (int g = 0; g < n_gt; ++g)
            img.gts.push_back({static_cast<int>(rng.uniform_int(0, max_classes - 1)),
                               testutil::random_grid_box(rng)});
        const int n_det = static_cast<int>(rng.uniform_int(0, max_dets));
        for (int d = 0; d < n_det; ++d) {
            Detection det;
            // mix fresh boxes with jittered copies of GT so matches happen
            if (!img.gts.empty() && rng.uniform() < 0.6) {
                const auto& g = img.gts[static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int64_t>(img.gts.size()) - 1))];
                det.box = g.box;
                det.box.x_max += rng.uniform(0.0, 1.5);
                det.box.y_min -= rng.uniform(0.0, 1.0);
                if (det.box.y_min < 0) det.box.y_min = 0;
                det.class_id = g.class_id;
            } else {
                det.box = testutil::random_grid_box(rng);
                det.class_id = static_cast<int>(rng.uniform_int(0, max_classes - 1));
            }
            det.score = rng.uniform(0.05, 1.0);
            img.dets.push_back(det);
        }
        corpus.push_back(std::move(img));
    }
    // guarantee at least one GT box overall
    if (std::all_of(corpus.begin(), corpus.end(),
                    [](const ImageEval& im) { return im.gts.empty(); }))
        corpus[0].gts.push_back({0, testutil::random_grid_box(rng)});
    return corpus;
}

}  // namespace

TEST_CASE("classification_metrics: perfect and degenerate cases") {
    using CL = ClassLabel;
    std::vector<CL> mixed{CL::bleeding, CL::non_bleeding, CL::bleeding, CL::non_bleeding};

    auto perfect = classification_metrics(mixed, mixed);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.precision_macro == 1.0);

    std::vector<CL> truths(4, CL::bleeding);
    std::vector<CL> preds(4, CL::non_bleeding);
    auto degenerate = classification_metrics(preds, truths);
    CHECK(degenerate.accuracy == 0.0);
    CHECK(degenerate.precision == 0.0);  // 0/0 convention
    CHECK(degenerate.recall == 0.0);
    CHECK(degenerate.f1 == 0.0);

    CHECK_THROWS_AS(classification_metrics({CL::bleeding}, {}), Error);
    CHECK_THROWS_AS(classification_metrics({}, {}), Error);
}

TEST_CASE("classification_metrics: random instances match a counting oracle") {
    Rng rng(149);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 50));
        std::vector<ClassLabel> preds, truths;
        for (int i = 0; i < n; ++i) {
            preds.push_back(rng.uniform() < 0.5 ? ClassLabel::bleeding
                                                : ClassLabel::non_bleeding);
            truths.push_back(rng.uniform() < 0.5 ? ClassLabel::bleeding
                                                 : ClassLabel::non_bleeding);
        }
        auto r = classification_metrics(preds, truths);

        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (int i = 0; i < n; ++i) {
            const bool p = preds[static_cast<size_t>(i)] == ClassLabel::bleeding;
            const bool t = truths[static_cast<size_t>(i)] == ClassLabel::bleeding;
            tp += p && t;
            fp += p && !t;
            fn += !p && t;
            tn += !p && !t;
        }
        CHECK(r.accuracy == doctest::Approx((tp + tn) / n).epsilon(1e-12));
        const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        CHECK(r.precision == doctest::Approx(prec).epsilon(1e-12));
        CHECK(r.recall == doctest::Approx(rec).epsilon(1e-12));
        const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        CHECK(r.f1 == doctest::Approx(f1).epsilon(1e-12));

        // confusion-matrix identity: accuracy from per-class recalls
        const double pos = tp + fn, neg = tn + fp;
        const double rec_neg = 2.0 * r.recall_macro - r.recall;
        if (pos > 0 && neg > 0)
            CHECK(r.accuracy ==
                  doctest::Approx((r.recall * pos + rec_neg * neg) / (pos + neg)).epsilon(1e-12));
    }
}

TEST_CASE("match_detections: greedy single-use semantics") {
    std::vector<BoundingBox> gts{{0, 0, 10, 10}};

    SUBCASE("exact match at threshold 0.5") {
        DetectionSet dets{{{0, 0, 10, 10}, 0.9, 0}};
        auto matches = match_detections(dets, gts, 0.5);
        REQUIRE(matches.size() == 1);
        CHECK(matches[0].gt_index == 0);
        CHECK(matches[0].iou == 1.0);
    }

    SUBCASE("two detections on one ground truth") {
        DetectionSet dets{{{0, 0, 10, 10}, 0.6, 0}, {{0, 0, 10, 10}, 0.9, 0}};
        auto matches = match_detections(dets, gts, 0.5);
        REQUIRE(matches.size() == 2);
        CHECK(matches[0].det_index == 1);  // higher score first
        CHECK(matches[0].gt_index == 0);
        CHECK(!matches[1].gt_index.has_value());
    }

    SUBCASE("random instances equal the stepwise oracle") {
        Rng rng(151);
        for (int trial = 0; trial < 200; ++trial) {
            DetectionSet dets;
            std::vector<BoundingBox> boxes;
            const int n_det = static_cast<int>(rng.uniform_int(0, 6));
            const int n_gt = static_cast<int>(rng.uniform_int(0, 4));
            for (int i = 0; i < n_det; ++i)
                dets.push_back({testutil::random_grid_box(rng), rng.uniform(0.0, 1.0), 0});
            for (int i = 0; i < n_gt; ++i) boxes.push_back(testutil::random_grid_box(rng));

            auto got = match_detections(dets, boxes, 0.5);
            auto want = oracles::greedy_match(dets, boxes, 0.5);
            REQUIRE(got.size() == want.size());
            for (size_t i = 0; i < got.size(); ++i) {
                CHECK(static_cast<size_t>(got[i].det_index) == want[i].det);
                CHECK((got[i].gt_index.has_value() ? *got[i].gt_index : -1) == want[i].gt);
            }
        }
    }

    SUBCASE("threshold bounds enforced") {
        CHECK_THROWS_AS(match_detections({}, gts, 0.0), Error);
        CHECK_THROWS_AS(match_detections({}, gts, 1.0), Error);
    }
}

TEST_CASE("average_precision: closed-form cases") {
    SUBCASE("perfect detector") {
        std::vector<ImageEval> corpus(2);
        for (int i = 0; i < 2; ++i) {
            corpus[static_cast<size_t>(i)].image_id = "i" + std::to_string(i);
            BoundingBox b{1.0 * i, 2.0, 5.0 + i, 8.0};
            corpus[static_cast<size_t>(i)].gts.push_back({0, b});
            corpus[static_cast<size_t>(i)].dets.push_back({b, 1.0, 0});
        }
        CHECK(average_precision(corpus, 0.5) == doctest::Approx(1.0));
        CHECK(map_at(corpus, 0.5) == doctest::Approx(1.0));
        CHECK(map_range(corpus) == doctest::Approx(1.0));
        CHECK(average_iou(corpus) == doctest::Approx(1.0));
    }

    SUBCASE("no detections at all") {
        std::vector<ImageEval> corpus(1);
        corpus[0].image_id = "i";
        corpus[0].gts.push_back({0, {0, 0, 4, 4}});
        CHECK(average_precision(corpus, 0.5) == 0.0);
        CHECK(average_iou(corpus) == 0.0);
    }

    SUBCASE("three detections over two ground truths: AP = 5/6") {
        std::vector<ImageEval> corpus(1);
        corpus[0].image_id = "i";
        corpus[0].gts.push_back({0, {0, 0, 10, 10}});
        corpus[0].gts.push_back({0, {20, 20, 30, 30}});
        corpus[0].dets.push_back({{0, 0, 10, 10}, 0.9, 0});     // TP
        corpus[0].dets.push_back({{50, 50, 60, 60}, 0.8, 0});   // FP
        corpus[0].dets.push_back({{20, 20, 30, 30}, 0.7, 0});   // TP
        CHECK(std::abs(average_precision(corpus, 0.5) - 5.0 / 6.0) <= 1e-9);
        CHECK(std::abs(oracles::pooled_ap(corpus, 0.5) - 5.0 / 6.0) <= 1e-9);
    }

    SUBCASE("zero ground truth is a hard error") {
        std::vector<ImageEval> corpus(1);
        corpus[0].image_id = "i";
        corpus[0].dets.push_back({{0, 0, 4, 4}, 0.9, 0});
        CHECK_THROWS_AS(average_precision(corpus, 0.5), Error);
        CHECK_THROWS_AS(map_range(corpus), Error);
    }

    SUBCASE("duplicate image ids are rejected") {
        std::vector<ImageEval> corpus(2);
        corpus[0].image_id = corpus[1].image_id = "same";
        corpus[0].gts.push_back({0, {0, 0, 4, 4}});
        CHECK_THROWS_WITH_AS(average_precision(corpus, 0.5),
                             doctest::Contains("duplicate"), Error);
    }
}

TEST_CASE("map_range: threshold counting with uniform IoU 0.6") {
    // det shifted right by 0.25 against a unit GT box: IoU = 0.75/1.25 = 0.6
    std::vector<ImageEval> corpus(3);
    for (int i = 0; i < 3; ++i) {
        auto& img = corpus[static_cast<size_t>(i)];
        img.image_id = "i" + std::to_string(i);
        const double off = 2.0 * i;
        img.gts.push_back({0, {off, 0, off + 1, 1}});
        img.dets.push_back({{off + 0.25, 0, off + 1.25, 1}, 0.9, 0});
    }
    // passes at 0.50 / 0.55 / 0.60, fails above: mean = 3/10
    CHECK(map_range(corpus) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(map_at(corpus, 0.60) == doctest::Approx(1.0));
    CHECK(map_at(corpus, 0.65) == 0.0);
}

TEST_CASE("detection metrics agree with enumeration oracles on random corpora") {
    Rng rng(157);
    for (int trial = 0; trial < 120; ++trial) {
        auto corpus = random_corpus(rng);

        const double thr = 0.5;
        CHECK(std::abs(average_precision(corpus, thr) - oracles::pooled_ap(corpus, thr)) <= 1e-9);
        CHECK(std::abs(map_at(corpus, thr) - oracles::class_mean_ap(corpus, thr)) <= 1e-9);
        CHECK(std::abs(average_iou(corpus) - oracles::mean_iou_at_50(corpus)) <= 1e-9);

        double range_sum = 0.0;
        for (int k = 0; k < 10; ++k)
            range_sum += oracles::class_mean_ap(corpus, (50 + 5 * k) / 100.0);
        CHECK(std::abs(map_range(corpus) - range_sum / 10.0) <= 1e-9);

        // coco101 interpolation variant agrees with its oracle too
        CHECK(std::abs(average_precision(corpus, thr, ApInterpolation::coco101) -
                       oracles::pooled_ap(corpus, thr, true)) <= 1e-9);

        // monotone: stricter thresholds never raise AP
        auto report = detection_metrics(corpus);
        CHECK(report.map50 >= report.map50_95 - 1e-12);
        for (double v : {report.ap, report.map50, report.map50_95, report.avg_iou}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
    Rng rng(163);
    for (int trial = 0; trial < 40; ++trial) {
        auto corpus = random_corpus(rng);
        double prev = 1e9;
        for (int k = 0; k < 10; ++k) {
            const double ap = map_at(corpus, (50 + 5 * k) / 100.0);
            CHECK(ap <= prev + 1e-12);
            prev = ap;
        }
    }
}

TEST_CASE("metric reports serialize with fixed keys and full precision") {
    ClassificationReport cr;
    cr.accuracy = 1.0 / 3.0;
    cr.precision = 0.25;
    cr.recall = 2.0 / 3.0;
    cr.f1 = 0.36363636363636365;
    cr.precision_macro = 0.5;
    cr.recall_macro = 0.5;
    cr.f1_macro = 0.5;

    auto j = nlohmann::json::parse(classification_json(cr));
    CHECK(j.at("accuracy").get<double>() == cr.accuracy);  // full precision
    CHECK(j.at("f1").get<double>() == cr.f1);
    CHECK(j.contains("precision"));
    CHECK(j.contains("recall"));
    CHECK(j.contains("precision_macro"));
    CHECK(j.contains("recall_macro"));
    CHECK(j.contains("f1_macro"));

    DetectionReport dr;
    dr.ap = 1.0 / 7.0;
    dr.map50 = 0.726;
    dr.map50_95 = 0.483;
    dr.avg_iou = 0.6405;
    auto dj = nlohmann::json::parse(detection_json(dr));
    CHECK(dj.at("ap").get<double>() == dr.ap);
    CHECK(dj.at("map50").get<double>() == 0.726);
    CHECK(dj.at("map50_95").get<double>() == 0.483);
    CHECK(dj.at("avg_iou").get<double>() == 0.6405);

    // display strings round to 4 decimals
    CHECK(classification_display(cr).find("accuracy: 0.3333") != std::string::npos);
    CHECK(detection_display(dr).find("ap: 0.1429") != std::string::npos);
}
