#include "vistanet/model.hpp"

#include <algorithm>
#include <cmath>

namespace vistanet {

std::string to_string(Arch a) {
    switch (a) {
        case Arch::residual18_style: return "residual18_style";
        case Arch::plainconv16_style: return "plainconv16_style";
        case Arch::tiny_test: return "tiny_test";
    }
    throw Error("unknown arch");
}

Arch arch_from_string(std::string_view s) {
    if (s == "residual18_style") return Arch::residual18_style;
    if (s == "plainconv16_style") return Arch::plainconv16_style;
    if (s == "tiny_test") return Arch::tiny_test;
    throw Error("unknown backbone architecture: " + std::string(s));
}

std::string to_string(Activation a) {
    return a == Activation::relu ? "relu" : "softplus";
}

Activation activation_from_string(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "softplus") return Activation::softplus;
    throw Error("unknown activation: " + std::string(s));
}

void BackboneSpec::validate() const {
    check(width_mult > 0.0, "BackboneSpec: width_mult must be positive");
    check(stage_count >= 3 && stage_count <= 6,
          "BackboneSpec: stage_count must be in [3,6]");
    if (arch == Arch::tiny_test)
        check(stage_count == 3, "BackboneSpec: tiny_test requires stage_count = 3");
}

std::vector<int> BackboneSpec::stage_channels() const {
    validate();
    std::vector<int> base;
    switch (arch) {
        case Arch::tiny_test:
            base = {8, 16, 32};
            break;
        case Arch::residual18_style:
        case Arch::plainconv16_style:
            for (int s = 1; s <= stage_count; ++s)
                base.push_back(std::min(64 << (s - 1), 512));
            break;
    }
    std::vector<int> out;
    for (int c : base)
        out.push_back(std::max(1, static_cast<int>(std::lround(c * width_mult))));
    return out;
}

std::vector<int> DecoderSpec::resolved_skips(const BackboneSpec& b) const {
    const int s_n = b.stage_count;
    std::vector<int> skips = skip_stages;
    if (skips.empty())
        for (int s = 1; s < s_n; ++s) skips.push_back(s);
    for (int s : skips)
        check(s >= 1 && s < s_n, "DecoderSpec: skip stage out of range");
    return skips;
}

std::vector<int> DecoderSpec::resolved_channels(const BackboneSpec& b) const {
    const int s_n = b.stage_count;
    if (!up_channels.empty()) {
        check(static_cast<int>(up_channels.size()) == s_n,
              "DecoderSpec: up_channels must have one entry per stage");
        for (int c : up_channels) check(c > 0, "DecoderSpec: channels must be positive");
        return up_channels;
    }
    // mirror the encoder: up-stage i lands at the resolution of encoder
    // stage S-i and keeps its width; the full-resolution stage reuses the
    // first stage's width
    const auto enc = b.stage_channels();
    std::vector<int> out;
    for (int i = 1; i < s_n; ++i) out.push_back(enc[static_cast<size_t>(s_n - i - 1)]);
    out.push_back(enc[0]);
    return out;
}

void FeatureMapStack::validate() const {
    check(stages.size() >= 3, "FeatureMapStack: need at least 3 stages");
    for (size_t s = 0; s < stages.size(); ++s) {
        check(stages[s].rank() == 3, "FeatureMapStack: stage must be {C,H,W}");
        if (s > 0) {
            check(stages[s].dim(1) * 2 == stages[s - 1].dim(1) &&
                      stages[s].dim(2) * 2 == stages[s - 1].dim(2),
                  "FeatureMapStack: spatial dims must halve per stage");
        }
    }
}

Model::Model(BackboneSpec backbone, DecoderSpec decoder)
    : backbone_(backbone), decoder_(decoder) {
    backbone_.validate();
    const auto ch = backbone_.stage_channels();
    const int s_n = backbone_.stage_count;

    switch (backbone_.arch) {
        case Arch::tiny_test: {
            int prev = 3;
            for (int s = 1; s <= s_n; ++s) {
                const int c = ch[static_cast<size_t>(s - 1)];
                register_param("enc.s" + std::to_string(s) + ".conv.w", {c, prev, 3, 3});
                register_param("enc.s" + std::to_string(s) + ".conv.b", {c});
                prev = c;
            }
            break;
        }
        case Arch::plainconv16_style: {
            int prev = 3;
            for (int s = 1; s <= s_n; ++s) {
                const int c = ch[static_cast<size_t>(s - 1)];
                const std::string p = "enc.s" + std::to_string(s);
                register_param(p + ".a.w", {c, prev, 3, 3});
                register_param(p + ".a.b", {c});
                register_param(p + ".b.w", {c, c, 3, 3});
                register_param(p + ".b.b", {c});
                prev = c;
            }
            break;
        }
        case Arch::residual18_style: {
            register_param("enc.stem.w", {ch[0], 3, 3, 3});
            register_param("enc.stem.b", {ch[0]});
            int prev = ch[0];
            for (int s = 1; s <= s_n; ++s) {
                const int c = ch[static_cast<size_t>(s - 1)];
                const std::string p = "enc.s" + std::to_string(s);
                register_param(p + ".down.w", {c, prev, 3, 3});
                register_param(p + ".down.b", {c});
                register_param(p + ".rb.c1.w", {c, c, 3, 3});
                register_param(p + ".rb.c1.b", {c});
                register_param(p + ".rb.c2.w", {c, c, 3, 3});
                register_param(p + ".rb.c2.b", {c});
                prev = c;
            }
            break;
        }
    }

    register_param("head.w", {2, ch[static_cast<size_t>(s_n - 1)]});
    register_param("head.b", {2});

    const auto skips = decoder_.resolved_skips(backbone_);
    const auto up = decoder_.resolved_channels(backbone_);
    int prev = ch[static_cast<size_t>(s_n - 1)];
    for (int i = 1; i <= s_n; ++i) {
        const int target_stage = s_n - i;  // 0 = full resolution
        int in_ch = prev;
        if (target_stage >= 1 &&
            std::find(skips.begin(), skips.end(), target_stage) != skips.end())
            in_ch += ch[static_cast<size_t>(target_stage - 1)];
        const int out_ch = up[static_cast<size_t>(i - 1)];
        register_param("dec.u" + std::to_string(i) + ".w", {out_ch, in_ch, 3, 3});
        register_param("dec.u" + std::to_string(i) + ".b", {out_ch});
        prev = out_ch;
    }
    register_param("dec.out.w", {1, prev, 1, 1});
    register_param("dec.out.b", {1});
}

void Model::register_param(const std::string& name, std::vector<int> shape) {
    check(!index_.count(name), "duplicate parameter name: " + name);
    index_[name] = params_.size();
    params_.push_back({name, autodiff::leaf(Tensor(std::move(shape)), true)});
}

const autodiff::Var& Model::param(std::string_view name) const {
    auto it = index_.find(name);
    check(it != index_.end(), "unknown parameter: " + std::string(name));
    return params_[it->second].var;
}

void Model::init(Rng rng) {
    for (auto& p : params_) {
        Tensor& t = p.var->value;
        if (p.name.ends_with(".b")) {
            t.fill(0.0);
            continue;
        }
        // He-style init: std = sqrt(2 / fan_in)
        const double fan_in = static_cast<double>(t.size()) / t.dim(0);
        const double std_dev = std::sqrt(2.0 / fan_in);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal() * std_dev;
    }
}

Model Model::clone() const {
    Model out(backbone_, decoder_);
    for (size_t i = 0; i < params_.size(); ++i)
        out.params_[i].var->value = params_[i].var->value;
    out.trained_seed = trained_seed;
    out.trained_epochs = trained_epochs;
    return out;
}

int64_t Model::param_count() const {
    int64_t n = 0;
    for (const auto& p : params_) n += p.var->value.size();
    return n;
}

uint64_t Model::param_digest() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& p : params_) {
        h = fnv1a64(p.name.data(), p.name.size(), h);
        const Tensor& t = p.var->value;
        h = fnv1a64(t.data(), static_cast<size_t>(t.size()) * sizeof(double), h);
    }
    return h;
}

void Model::zero_grad() {
    for (auto& p : params_) {
        p.var->grad_ready = false;
        p.var->grad = Tensor();
    }
}

}  // namespace vistanet
