#include "vistanet/attention.hpp"

#include <atomic>

#include "vistanet/ensemble.hpp"
#include "vistanet/kernels.hpp"

namespace vistanet {

namespace {
std::atomic<uint64_t> g_calls{0};
}

uint64_t attention_invocations() { return g_calls.load(); }
void reset_attention_invocations() { g_calls.store(0); }

Tensor downsample_mask(const SegmentationMask& mask, int h, int w) {
    ++g_calls;
    check(h > 0 && w > 0, "downsample_mask: target dims must be positive");
    check(mask.height() % h == 0 && mask.width() % w == 0,
          "downsample_mask: mask dims must be integer multiples of the target");
    return kernels::block_mean(mask.values, h, w);
}

Tensor apply_attention(const Tensor& features, const Tensor& lowres_mask,
                       ClassLabel label) {
    ++g_calls;
    check(features.rank() == 3, "apply_attention: features must be {C,h,w}");
    if (label == ClassLabel::non_bleeding) return features;
    check(lowres_mask.rank() == 2 && features.dim(1) == lowres_mask.dim(0) &&
              features.dim(2) == lowres_mask.dim(1),
          "apply_attention: mask shape mismatch");
    Tensor out(features.shape());
    const int64_t plane = static_cast<int64_t>(features.dim(1)) * features.dim(2);
    for (int c = 0; c < features.dim(0); ++c)
        for (int64_t i = 0; i < plane; ++i)
            out[c * plane + i] = features[c * plane + i] * lowres_mask[i];
    return out;
}

autodiff::Var apply_attention_graph(const autodiff::Var& features,
                                    const Tensor& lowres_mask, ClassLabel label) {
    ++g_calls;
    if (label == ClassLabel::non_bleeding) return features;
    check(features->value.rank() == 3 && lowres_mask.rank() == 2 &&
              features->value.dim(1) == lowres_mask.dim(0) &&
              features->value.dim(2) == lowres_mask.dim(1),
          "apply_attention: mask shape mismatch");
    return autodiff::mul_mask(features, lowres_mask);
}

ProbVector attention_classify(const Tensor& weighted, const Model& model) {
    ++g_calls;
    return classify_head(weighted, model);
}

}  // namespace vistanet
