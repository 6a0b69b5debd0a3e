#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "vistanet/checkpoint.hpp"
#include "vistanet/dataset.hpp"
#include "vistanet/detection.hpp"
#include "vistanet/ensemble.hpp"
#include "vistanet/evaluation.hpp"
#include "vistanet/image_io.hpp"
#include "vistanet/runconfig.hpp"
#include "vistanet/segmentation.hpp"
#include "vistanet/synth.hpp"
#include "vistanet/training.hpp"

namespace fs = std::filesystem;
using namespace vistanet;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    check(static_cast<bool>(in), "cannot open file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(static_cast<bool>(out), "cannot write file: " + path.string());
    out << text;
    check(static_cast<bool>(out), "write failed: " + path.string());
}

std::vector<fs::path> sorted_with_ext(const fs::path& dir,
                                      const std::set<std::string>& exts) {
    check(fs::exists(dir), "directory does not exist: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::string ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (exts.count(ext)) out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Collects per-item failures from a parallel loop so exceptions never cross
// the OpenMP region boundary.
struct ErrorCollector {
    std::vector<std::string> messages;

    void run(int64_t n, const std::function<void(int64_t)>& body) {
        messages.assign(static_cast<size_t>(n), "");
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < n; ++i) {
            try {
                body(i);
            } catch (const std::exception& e) {
                messages[static_cast<size_t>(i)] = e.what();
            }
        }
        for (const auto& m : messages)
            if (!m.empty()) throw Error(m);
    }
};

RawImage frame_to_raw(const Tensor& pixels) {
    RawImage img;
    img.height = pixels.dim(1);
    img.width = pixels.dim(2);
    img.channels = 3;
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    const int64_t plane = static_cast<int64_t>(img.height) * img.width;
    for (int64_t p = 0; p < plane; ++p)
        for (int c = 0; c < 3; ++c)
            img.pixels[static_cast<size_t>(p) * 3 + static_cast<size_t>(c)] =
                static_cast<uint8_t>(std::lround(
                    std::clamp(pixels[c * plane + p], 0.0, 1.0) * 255.0));
    return img;
}

// --------------------------------------------------------------------------
// train

int cmd_train(const std::string& config_path, const std::optional<uint64_t>& seed_override,
              const std::optional<bool>& deterministic_override) {
    RunConfig cfg = RunConfig::from_file(config_path);
    if (seed_override) cfg.seed = *seed_override;
    if (deterministic_override) cfg.deterministic = *deterministic_override;
    cfg.validate();

    DatasetLayout layout;
    const fs::path layout_path = fs::path(cfg.data_root) / "layout.cfg";
    if (fs::exists(layout_path)) layout = DatasetLayout::from_file(layout_path.string());

    TrainConfig tc = cfg.train_config();
    int max_stages = 0;
    for (const auto& b : tc.backbones) max_stages = std::max(max_stages, b.stage_count);

    auto frames = load_dataset(cfg.data_root, layout, 1 << max_stages);
    auto split = split_dataset(frames, cfg.val_fraction, cfg.seed);
    std::cout << "loaded " << frames.size() << " frames (" << split.train.size()
              << " train / " << split.val.size() << " val)\n";

    fs::create_directories(cfg.out_dir);
    spit(fs::path(cfg.out_dir) / "resolved_config.cfg", cfg.to_text());

    // append one line per epoch as training progresses
    std::ofstream log(fs::path(cfg.out_dir) / "train_log.csv",
                      std::ios::binary | std::ios::trunc);
    check(static_cast<bool>(log), "cannot write train_log.csv");
    log << "epoch,mean_loss,val_accuracy\n" << std::flush;

    TrainResult result = train(split, tc, [&](const EpochLog& e) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", e.epoch, e.mean_loss,
                      e.val_accuracy);
        log << buf << std::flush;
        std::cout << "epoch " << e.epoch << ": mean_loss=" << e.mean_loss
                  << " val_accuracy=" << e.val_accuracy << "\n";
    });
    log.close();

    for (size_t m = 0; m < result.models.size(); ++m) {
        const std::string name = "model_" + std::to_string(m) + ".ckpt";
        save_checkpoint(result.models[m], (fs::path(cfg.out_dir) / name).string());
    }
    std::cout << "wrote " << result.models.size() << " checkpoints to " << cfg.out_dir
              << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// predict

int cmd_predict(const std::string& checkpoints_csv, const std::string& images_dir,
                const std::string& out_dir, double alpha) {
    std::vector<Model> models;
    std::stringstream ss(checkpoints_csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) models.push_back(load_checkpoint(tok));
    check(!models.empty(), "predict: need at least one checkpoint");

    int max_stages = 0;
    for (const auto& m : models) max_stages = std::max(max_stages, m.backbone().stage_count);
    const int multiple = 1 << max_stages;

    auto files = sorted_with_ext(images_dir, {".png", ".jpg", ".jpeg"});
    fs::create_directories(fs::path(out_dir) / "masks");
    fs::create_directories(fs::path(out_dir) / "overlays");

    struct Row {
        std::string id;
        int label;
        double p_bleeding;
        RawImage mask_png;
        RawImage overlay_png;
    };
    std::vector<Row> rows(files.size());

    ErrorCollector errors;
    errors.run(static_cast<int64_t>(files.size()), [&](int64_t i) {
        const fs::path& path = files[static_cast<size_t>(i)];
        RawImage raw = read_image(path.string());
        const int orig_h = raw.height, orig_w = raw.width;

        ImageFrame frame;
        frame.id = path.stem().string();
        frame.pixels = Tensor({3, orig_h, orig_w});
        const int64_t plane = static_cast<int64_t>(orig_h) * orig_w;
        for (int64_t p = 0; p < plane; ++p)
            for (int c = 0; c < 3; ++c)
                frame.pixels[c * plane + p] = raw.pixels[static_cast<size_t>(p) * 3 +
                                                         static_cast<size_t>(c)] / 255.0;

        // pad bottom/right to the stage-divisible size the encoders require
        const int ph = ((orig_h + multiple - 1) / multiple) * multiple;
        const int pw = ((orig_w + multiple - 1) / multiple) * multiple;
        ImageFrame padded;
        padded.id = frame.id;
        padded.pixels = Tensor({3, ph, pw});
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < ph; ++r)
                for (int col = 0; col < pw; ++col)
                    padded.pixels.at(c, r, col) =
                        frame.pixels.at(c, std::min(r, orig_h - 1), std::min(col, orig_w - 1));

        auto [label, probs] = predict(padded, models);

        // interpretability mask: mean of member decoder outputs
        Tensor mean_mask({ph, pw});
        for (const auto& model : models) {
            auto stacks = encode({padded}, model);
            SegmentationMask m = decode(stacks[0], model);
            for (int64_t k = 0; k < mean_mask.size(); ++k) mean_mask[k] += m.values[k];
        }
        for (int64_t k = 0; k < mean_mask.size(); ++k)
            mean_mask[k] /= static_cast<double>(models.size());

        // crop back to the original raster
        SegmentationMask cropped{Tensor({orig_h, orig_w}), SegmentationMask::Kind::predicted};
        for (int r = 0; r < orig_h; ++r)
            for (int col = 0; col < orig_w; ++col)
                cropped.values.at(r, col) = mean_mask.at(r, col);

        Row& row = rows[static_cast<size_t>(i)];
        row.id = frame.id;
        row.label = class_index(label);
        row.p_bleeding = probs.bleeding();

        row.mask_png.width = orig_w;
        row.mask_png.height = orig_h;
        row.mask_png.channels = 1;
        row.mask_png.pixels.resize(static_cast<size_t>(plane));
        for (int64_t k = 0; k < plane; ++k)
            row.mask_png.pixels[static_cast<size_t>(k)] =
                static_cast<uint8_t>(std::lround(cropped.values[k] * 255.0));

        row.overlay_png = frame_to_raw(overlay(frame, cropped, alpha).pixels);
    });

    std::string csv = "id,label,p_bleeding\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.9f\n", row.id.c_str(), row.label,
                      row.p_bleeding);
        csv += buf;
        write_png((fs::path(out_dir) / "masks" / (row.id + ".png")).string(), row.mask_png);
        write_png((fs::path(out_dir) / "overlays" / (row.id + ".png")).string(),
                  row.overlay_png);
    }
    spit(fs::path(out_dir) / "predictions.csv", csv);
    std::cout << "predicted " << rows.size() << " images\n";
    return 0;
}

// --------------------------------------------------------------------------
// softnms

int cmd_softnms(const std::string& in_dir, const std::string& out_dir,
                const SuppressionConfig& cfg) {
    auto files = sorted_with_ext(in_dir, {".txt"});
    fs::create_directories(out_dir);

    std::vector<std::string> outputs(files.size());
    std::vector<int64_t> in_counts(files.size(), 0), out_counts(files.size(), 0);

    ErrorCollector errors;
    errors.run(static_cast<int64_t>(files.size()), [&](int64_t i) {
        const fs::path& path = files[static_cast<size_t>(i)];
        DetectionSet dets;
        try {
            dets = parse_detections(slurp(path), 1.0, 1.0);
        } catch (const Error& e) {
            throw Error(path.string() + ": " + e.what());
        }
        DetectionSet kept = soft_nms(dets, cfg);
        in_counts[static_cast<size_t>(i)] = static_cast<int64_t>(dets.size());
        out_counts[static_cast<size_t>(i)] = static_cast<int64_t>(kept.size());
        outputs[static_cast<size_t>(i)] = format_detections(kept, 1.0, 1.0);
    });

    int64_t total_in = 0, total_out = 0;
    for (size_t i = 0; i < files.size(); ++i) {
        spit(fs::path(out_dir) / files[i].filename(), outputs[i]);
        total_in += in_counts[i];
        total_out += out_counts[i];
    }
    std::cout << "input=" << total_in << " output=" << total_out << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// eval

std::map<std::string, ClassLabel> read_label_csv(const std::string& path) {
    std::istringstream in(slurp(path));
    std::map<std::string, ClassLabel> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("id,", 0) == 0)) continue;
        std::stringstream ls(line);
        std::string id, label_str;
        check(static_cast<bool>(std::getline(ls, id, ',')) &&
                  static_cast<bool>(std::getline(ls, label_str, ',')),
              path + ":" + std::to_string(lineno) + ": expected 'id,label[,...]'");
        const std::string t = label_str;
        check(t == "0" || t == "1",
              path + ":" + std::to_string(lineno) + ": label must be 0 or 1");
        check(!out.count(id), path + ": duplicate id " + id);
        out[id] = t == "1" ? ClassLabel::bleeding : ClassLabel::non_bleeding;
    }
    return out;
}

template <typename A, typename B>
void check_ids_align(const std::map<std::string, A>& pred,
                     const std::map<std::string, B>& gt) {
    std::vector<std::string> offenders;
    for (const auto& [id, v] : pred)
        if (!gt.count(id)) offenders.push_back(id + " (prediction only)");
    for (const auto& [id, v] : gt)
        if (!pred.count(id)) offenders.push_back(id + " (ground truth only)");
    if (offenders.empty()) return;
    std::sort(offenders.begin(), offenders.end());
    std::string msg = "prediction/ground-truth id mismatch; first offenders:";
    for (size_t i = 0; i < offenders.size() && i < 5; ++i) msg += " " + offenders[i];
    throw Error(msg);
}

int cmd_eval_classify(const std::string& pred_csv, const std::string& gt_csv,
                      const std::string& out_json) {
    auto pred = read_label_csv(pred_csv);
    auto gt = read_label_csv(gt_csv);
    check_ids_align(pred, gt);

    std::vector<ClassLabel> preds, truths;
    for (const auto& [id, label] : gt) {
        preds.push_back(pred.at(id));
        truths.push_back(label);
    }
    ClassificationReport report = classification_metrics(preds, truths);
    if (!out_json.empty()) spit(out_json, classification_json(report));
    std::cout << classification_display(report);
    return 0;
}

int cmd_eval_detect(const std::string& pred_dir, const std::string& gt_dir,
                    const std::string& out_json, ApInterpolation interp) {
    std::map<std::string, fs::path> pred_files, gt_files;
    for (const auto& p : sorted_with_ext(pred_dir, {".txt"}))
        pred_files[p.stem().string()] = p;
    for (const auto& p : sorted_with_ext(gt_dir, {".txt"}))
        gt_files[p.stem().string()] = p;
    check_ids_align(pred_files, gt_files);

    std::vector<ImageEval> corpus;
    for (const auto& [id, gt_path] : gt_files) {
        ImageEval img;
        img.image_id = id;
        try {
            img.dets = parse_detections(slurp(pred_files.at(id)), 1.0, 1.0);
        } catch (const Error& e) {
            throw Error(pred_files.at(id).string() + ": " + e.what());
        }
        try {
            for (const auto& [cls, box] : parse_yolo_boxes(slurp(gt_path), 1.0, 1.0))
                img.gts.push_back({cls, box});
        } catch (const Error& e) {
            throw Error(gt_path.string() + ": " + e.what());
        }
        corpus.push_back(std::move(img));
    }

    DetectionReport report = detection_metrics(corpus, interp);
    if (!out_json.empty()) spit(out_json, detection_json(report));
    std::cout << detection_display(report);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* env = std::getenv("VISTANET_NUM_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }

    CLI::App app{"bleeding-frame classification, segmentation and detection toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    int synth_count = 0;
    std::string synth_out;
    uint64_t synth_seed = 42;
    int synth_size = 64;
    bool synth_force = false;
    synth->add_option("--count", synth_count, "number of frames")
        ->required()
        ->check(CLI::Range(2, 1000000));
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--seed", synth_seed, "master seed")->capture_default_str();
    synth->add_option("--size", synth_size, "frame side length")->capture_default_str();
    synth->add_flag("--force", synth_force, "overwrite existing output");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the ensemble from a config");
    std::string train_config;
    uint64_t train_seed = 42;
    bool train_deterministic = true;
    train_cmd->add_option("--config", train_config, "run config path")->required();
    auto* seed_opt = train_cmd->add_option("--seed", train_seed, "override config seed");
    auto* det_opt = train_cmd->add_flag("--deterministic,!--no-deterministic",
                                        train_deterministic,
                                        "deterministic math mode (default on)");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "classify images and emit masks");
    std::string pr_ckpts, pr_images, pr_out;
    double pr_alpha = 0.5;
    predict_cmd->add_option("--checkpoints", pr_ckpts, "comma-separated checkpoints")
        ->required();
    predict_cmd->add_option("--images", pr_images, "input image directory")->required();
    predict_cmd->add_option("--out", pr_out, "output directory")->required();
    predict_cmd->add_option("--alpha", pr_alpha, "overlay opacity")->capture_default_str();

    // softnms
    auto* nms_cmd = app.add_subcommand("softnms", "suppress detection files");
    std::string nms_in, nms_out, nms_method = "gaussian";
    double nms_sigma = 0.5, nms_nt = 0.3, nms_floor = 0.001;
    nms_cmd->add_option("--in", nms_in, "input detection directory")->required();
    nms_cmd->add_option("--out", nms_out, "output directory")->required();
    nms_cmd->add_option("--method", nms_method, "gaussian|linear|hard")->capture_default_str();
    nms_cmd->add_option("--sigma", nms_sigma, "gaussian sigma")->capture_default_str();
    nms_cmd->add_option("--nt", nms_nt, "overlap threshold")->capture_default_str();
    nms_cmd->add_option("--floor", nms_floor, "score floor")->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "compute metrics");
    std::string ev_mode, ev_pred, ev_gt, ev_out, ev_interp = "all_points";
    eval_cmd->add_option("--mode", ev_mode, "classify|detect")
        ->required()
        ->check(CLI::IsMember({"classify", "detect"}));
    eval_cmd->add_option("--pred", ev_pred, "predictions (csv or dir)")->required();
    eval_cmd->add_option("--gt", ev_gt, "ground truth (csv or dir)")->required();
    eval_cmd->add_option("--out", ev_out, "metrics json path");
    eval_cmd->add_option("--interp", ev_interp, "all_points|coco101")->capture_default_str()
        ->check(CLI::IsMember({"all_points", "coco101"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            write_synthetic_dataset(synth_out, synth_count, synth_seed, synth_size,
                                    synth_force);
            std::cout << "wrote " << synth_count << " frames to " << synth_out << "\n";
            return 0;
        }
        if (*train_cmd) {
            std::optional<uint64_t> seed_override;
            if (seed_opt->count() > 0) seed_override = train_seed;
            std::optional<bool> det_override;
            if (det_opt->count() > 0) det_override = train_deterministic;
            return cmd_train(train_config, seed_override, det_override);
        }
        if (*predict_cmd) return cmd_predict(pr_ckpts, pr_images, pr_out, pr_alpha);
        if (*nms_cmd) {
            SuppressionConfig cfg;
            cfg.method = method_from_string(nms_method);
            cfg.sigma = nms_sigma;
            cfg.overlap_threshold = nms_nt;
            cfg.score_floor = nms_floor;
            return cmd_softnms(nms_in, nms_out, cfg);
        }
        if (*eval_cmd) {
            if (ev_mode == "classify") return cmd_eval_classify(ev_pred, ev_gt, ev_out);
            return cmd_eval_detect(ev_pred, ev_gt, ev_out,
                                   ev_interp == "coco101" ? ApInterpolation::coco101
                                                          : ApInterpolation::all_points);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
