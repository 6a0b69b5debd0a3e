#include "vistanet/runconfig.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "vistanet/kvconfig.hpp"

namespace vistanet {

namespace {

double to_double(const std::string& v, const std::string& key) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        check(pos == v.size(), "config: bad numeric value for " + key + ": " + v);
        return d;
    } catch (const std::exception&) {
        throw Error("config: bad numeric value for " + key + ": " + v);
    }
}

int64_t to_int(const std::string& v, const std::string& key) {
    int64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    check(ec == std::errc() && p == v.data() + v.size(),
          "config: bad integer value for " + key + ": " + v);
    return out;
}

bool to_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw Error("config: bad boolean value for " + key + ": " + v);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    RunConfig cfg;
    for (const auto& [k, v] : read_kv_file(path)) {
        if (k == "seed") cfg.seed = static_cast<uint64_t>(to_int(v, k));
        else if (k == "data_root") cfg.data_root = v;
        else if (k == "out_dir") cfg.out_dir = v;
        else if (k == "val_fraction") cfg.val_fraction = to_double(v, k);
        else if (k == "epochs") cfg.epochs = static_cast<int>(to_int(v, k));
        else if (k == "batch_size") cfg.batch_size = static_cast<int>(to_int(v, k));
        else if (k == "learning_rate") cfg.learning_rate = to_double(v, k);
        else if (k == "lambda_attn") cfg.lambda_attn = to_double(v, k);
        else if (k == "lambda_seg") cfg.lambda_seg = to_double(v, k);
        else if (k == "backbones") cfg.backbones = v;
        else if (k == "width_mult") cfg.width_mult = to_double(v, k);
        else if (k == "stage_count") cfg.stage_count = static_cast<int>(to_int(v, k));
        else if (k == "activation") cfg.activation = v;
        else if (k == "deterministic") cfg.deterministic = to_bool(v, k);
        else if (k == "nms_method") cfg.nms_method = v;
        else if (k == "nms_sigma") cfg.nms_sigma = to_double(v, k);
        else if (k == "nms_overlap_threshold") cfg.nms_overlap_threshold = to_double(v, k);
        else if (k == "nms_score_floor") cfg.nms_score_floor = to_double(v, k);
        else throw Error("config: unknown key '" + k + "' in " + path);
    }
    return cfg;
}

void RunConfig::validate() const {
    check(!data_root.empty(), "config: data_root is required");
    check(std::filesystem::exists(data_root),
          "config: data_root does not exist: " + data_root);
    check(!out_dir.empty(), "config: out_dir is required");
    check(val_fraction > 0.0 && val_fraction < 1.0,
          "config: val_fraction must be in (0,1)");
    train_config().validate();
    suppression().validate();
}

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.learning_rate = learning_rate;
    tc.seed = seed;
    tc.loss_weights = {lambda_attn, lambda_seg};
    tc.deterministic = deterministic;
    tc.backbones.clear();

    std::stringstream ss(backbones);
    std::string name;
    while (std::getline(ss, name, ',')) {
        name = trim_ws(name);
        if (name.empty()) continue;
        BackboneSpec b;
        b.arch = arch_from_string(name);
        b.width_mult = width_mult;
        b.stage_count = stage_count > 0 ? stage_count
                        : b.arch == Arch::tiny_test ? 3
                                                    : 4;
        b.activation = activation_from_string(activation);
        b.validate();
        tc.backbones.push_back(b);
    }
    check(!tc.backbones.empty(), "config: backbones list is empty");
    return tc;
}

SuppressionConfig RunConfig::suppression() const {
    SuppressionConfig sc;
    sc.method = method_from_string(nms_method);
    sc.sigma = nms_sigma;
    sc.overlap_threshold = nms_overlap_threshold;
    sc.score_floor = nms_score_floor;
    return sc;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    out << "seed=" << seed << "\n"
        << "data_root=" << data_root << "\n"
        << "out_dir=" << out_dir << "\n"
        << "val_fraction=" << num(val_fraction) << "\n"
        << "epochs=" << epochs << "\n"
        << "batch_size=" << batch_size << "\n"
        << "learning_rate=" << num(learning_rate) << "\n"
        << "lambda_attn=" << num(lambda_attn) << "\n"
        << "lambda_seg=" << num(lambda_seg) << "\n"
        << "backbones=" << backbones << "\n"
        << "width_mult=" << num(width_mult) << "\n"
        << "stage_count=" << stage_count << "\n"
        << "activation=" << activation << "\n"
        << "deterministic=" << (deterministic ? "true" : "false") << "\n"
        << "nms_method=" << nms_method << "\n"
        << "nms_sigma=" << num(nms_sigma) << "\n"
        << "nms_overlap_threshold=" << num(nms_overlap_threshold) << "\n"
        << "nms_score_floor=" << num(nms_score_floor) << "\n";
    return out.str();
}

}  // namespace vistanet
