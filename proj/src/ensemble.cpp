#include "vistanet/ensemble.hpp"

namespace vistanet {

namespace {

autodiff::Var activate(Activation a, const autodiff::Var& x) {
    return a == Activation::relu ? autodiff::relu(x) : autodiff::softplus(x);
}

}  // namespace

std::vector<autodiff::Var> encode_graph(const Model& model, const Tensor& image) {
    using namespace autodiff;
    const BackboneSpec& spec = model.backbone();
    check(image.rank() == 3 && image.dim(0) == 3, "encode: image must be {3,H,W}");
    const int div = 1 << spec.stage_count;
    check(image.dim(1) % div == 0 && image.dim(2) % div == 0,
          "encode: image dims must be divisible by 2^stage_count");

    const Activation act = spec.activation;
    std::vector<Var> stages;
    Var x = constant(image);

    switch (spec.arch) {
        case Arch::tiny_test:
            for (int s = 1; s <= spec.stage_count; ++s) {
                const std::string p = "enc.s" + std::to_string(s);
                x = activate(act, conv2d(x, model.param(p + ".conv.w"),
                                         model.param(p + ".conv.b"), 2, 1));
                stages.push_back(x);
            }
            break;
        case Arch::plainconv16_style:
            for (int s = 1; s <= spec.stage_count; ++s) {
                const std::string p = "enc.s" + std::to_string(s);
                x = activate(act, conv2d(x, model.param(p + ".a.w"),
                                         model.param(p + ".a.b"), 1, 1));
                x = activate(act, conv2d(x, model.param(p + ".b.w"),
                                         model.param(p + ".b.b"), 2, 1));
                stages.push_back(x);
            }
            break;
        case Arch::residual18_style:
            x = activate(act, conv2d(x, model.param("enc.stem.w"),
                                     model.param("enc.stem.b"), 1, 1));
            for (int s = 1; s <= spec.stage_count; ++s) {
                const std::string p = "enc.s" + std::to_string(s);
                Var d = activate(act, conv2d(x, model.param(p + ".down.w"),
                                             model.param(p + ".down.b"), 2, 1));
                Var h = activate(act, conv2d(d, model.param(p + ".rb.c1.w"),
                                             model.param(p + ".rb.c1.b"), 1, 1));
                h = conv2d(h, model.param(p + ".rb.c2.w"), model.param(p + ".rb.c2.b"), 1, 1);
                x = activate(act, add(d, h));
                stages.push_back(x);
            }
            break;
    }
    return stages;
}

autodiff::Var head_probs_graph(const Model& model, const autodiff::Var& final_stage) {
    using namespace autodiff;
    return softmax(affine(global_avg_pool(final_stage), model.param("head.w"),
                          model.param("head.b")));
}

std::vector<FeatureMapStack> encode(const std::vector<ImageFrame>& batch,
                                    const Model& model) {
    std::vector<FeatureMapStack> out;
    for (size_t i = 0; i < batch.size(); ++i) {
        check(batch[i].height() == batch[0].height() &&
                  batch[i].width() == batch[0].width(),
              "encode: all images in a batch must share dimensions");
        auto stages = encode_graph(model, batch[i].pixels);
        FeatureMapStack stack;
        for (auto& s : stages) stack.stages.push_back(s->value);
        stack.validate();
        out.push_back(std::move(stack));
    }
    return out;
}

ProbVector classify_head(const Tensor& final_stage, const Model& model) {
    auto probs = head_probs_graph(model, autodiff::constant(final_stage));
    ProbVector out;
    out[0] = probs->value[0];
    out[1] = probs->value[1];
    out.validate();
    return out;
}

ProbVector ensemble_average(const std::vector<ProbVector>& members) {
    check(!members.empty(), "ensemble_average: need at least one member");
    double s0 = 0.0, s1 = 0.0;
    for (const auto& m : members) {
        s0 += m[0];
        s1 += m[1];
    }
    ProbVector out;
    out[0] = s0 / static_cast<double>(members.size());
    out[1] = s1 / static_cast<double>(members.size());
    return out;
}

ClassLabel decide(const ProbVector& probs) {
    // false negatives are the costly mistake; ties go to bleeding
    return probs[1] >= probs[0] ? ClassLabel::bleeding : ClassLabel::non_bleeding;
}

std::pair<ClassLabel, ProbVector> predict(const ImageFrame& image,
                                          const std::vector<Model>& models) {
    check(!models.empty(), "predict: need at least one model");
    std::vector<ProbVector> member_probs;
    for (const auto& model : models) {
        auto stages = encode_graph(model, image.pixels);
        auto probs = head_probs_graph(model, stages.back());
        ProbVector p;
        p[0] = probs->value[0];
        p[1] = probs->value[1];
        member_probs.push_back(p);
    }
    ProbVector avg = ensemble_average(member_probs);
    return {decide(avg), avg};
}

}  // namespace vistanet
