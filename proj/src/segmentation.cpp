#include "vistanet/segmentation.hpp"

#include <algorithm>
#include <atomic>

namespace vistanet {

namespace {

std::atomic<uint64_t> g_calls{0};

autodiff::Var activate(Activation a, const autodiff::Var& x) {
    return a == Activation::relu ? autodiff::relu(x) : autodiff::softplus(x);
}

}  // namespace

uint64_t decoder_invocations() { return g_calls.load(); }
void reset_decoder_invocations() { g_calls.store(0); }

autodiff::Var decode_graph(const Model& model, const std::vector<autodiff::Var>& stages) {
    using namespace autodiff;
    ++g_calls;
    const BackboneSpec& spec = model.backbone();
    const int s_n = spec.stage_count;
    check(static_cast<int>(stages.size()) == s_n,
          "decode: stage count does not match the decoder");

    const auto skips = model.decoder_spec().resolved_skips(spec);
    Var x = stages[static_cast<size_t>(s_n - 1)];
    for (int i = 1; i <= s_n; ++i) {
        x = upsample2x(x);
        const int target_stage = s_n - i;
        if (target_stage >= 1 &&
            std::find(skips.begin(), skips.end(), target_stage) != skips.end())
            x = concat_channels(x, stages[static_cast<size_t>(target_stage - 1)]);
        const std::string p = "dec.u" + std::to_string(i);
        x = activate(spec.activation,
                     conv2d(x, model.param(p + ".w"), model.param(p + ".b"), 1, 1));
    }
    Var out = sigmoid(conv2d(x, model.param("dec.out.w"), model.param("dec.out.b"), 1, 0));
    return reshape(out, {out->value.dim(1), out->value.dim(2)});
}

SegmentationMask decode(const FeatureMapStack& stack, const Model& model) {
    std::vector<autodiff::Var> stages;
    for (const auto& s : stack.stages) stages.push_back(autodiff::constant(s));
    auto out = decode_graph(model, stages);
    return SegmentationMask{out->value, SegmentationMask::Kind::predicted};
}

SegmentationMask seg_target(const AnnotatedFrame& frame) {
    if (frame.label == ClassLabel::bleeding) {
        check(frame.mask.has_value(), "seg_target: bleeding frame without a mask");
        return *frame.mask;
    }
    Tensor zeros({frame.image.height(), frame.image.width()});
    return SegmentationMask{std::move(zeros), SegmentationMask::Kind::ground_truth};
}

ImageFrame overlay(const ImageFrame& image, const SegmentationMask& mask, double alpha) {
    check(alpha >= 0.0 && alpha <= 1.0, "overlay: alpha must be in [0,1]");
    check(mask.height() == image.height() && mask.width() == image.width(),
          "overlay: mask dims must match image");
    static constexpr double kHighlight[3] = {1.0, 0.0, 0.0};

    ImageFrame out;
    out.id = image.id;
    out.pixels = Tensor(image.pixels.shape());
    const int64_t plane = static_cast<int64_t>(image.height()) * image.width();
    for (int c = 0; c < 3; ++c) {
        for (int64_t i = 0; i < plane; ++i) {
            const double m = mask.values[i];
            const double v = (1.0 - alpha * m) * image.pixels[c * plane + i] +
                             alpha * m * kHighlight[c];
            out.pixels[c * plane + i] = std::clamp(v, 0.0, 1.0);
        }
    }
    return out;
}

}  // namespace vistanet
