#include "vistanet/training.hpp"

#include <cmath>
#include <numeric>

#include "vistanet/attention.hpp"
#include "vistanet/ensemble.hpp"
#include "vistanet/kernels.hpp"
#include "vistanet/segmentation.hpp"

namespace vistanet {

namespace {

double cross_entropy(const ProbVector& probs, ClassLabel label) {
    for (int i = 0; i < 2; ++i)
        check(std::isfinite(probs[i]), "combined_loss: non-finite probability");
    const double p = std::clamp(probs[class_index(label)], autodiff::kProbEps,
                                1.0 - autodiff::kProbEps);
    return -std::log(p);
}

// Adaptive moment estimation with bias correction; state per parameter.
class Adam {
public:
    Adam(const std::vector<NamedParam>& params, double lr) : lr_(lr) {
        for (const auto& p : params) {
            m_.emplace_back(p.var->value.shape());
            v_.emplace_back(p.var->value.shape());
        }
    }

    void step(std::vector<NamedParam>& params, double grad_scale) {
        ++t_;
        const double bc1 = 1.0 - std::pow(kBeta1, t_);
        const double bc2 = 1.0 - std::pow(kBeta2, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            auto& var = *params[i].var;
            if (!var.grad_ready) continue;
            Tensor& m = m_[i];
            Tensor& v = v_[i];
            Tensor& w = var.value;
            for (int64_t j = 0; j < w.size(); ++j) {
                const double g = var.grad[j] * grad_scale;
                m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g;
                v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g * g;
                w[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + kEps);
            }
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    double lr_;
    int t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace

void LossWeights::validate() const {
    check(std::isfinite(lambda_attn) && lambda_attn >= 0.0 &&
              std::isfinite(lambda_seg) && lambda_seg >= 0.0,
          "LossWeights: weights must be finite and nonnegative");
}

void TrainConfig::validate() const {
    check(epochs >= 1, "TrainConfig: epochs must be at least 1");
    check(batch_size >= 1, "TrainConfig: batch_size must be at least 1");
    check(learning_rate > 0.0 && std::isfinite(learning_rate),
          "TrainConfig: learning_rate must be positive");
    check(!backbones.empty(), "TrainConfig: need at least one backbone");
    for (const auto& b : backbones) b.validate();
    loss_weights.validate();
}

double combined_loss(const ProbVector& std_probs,
                     const std::optional<ProbVector>& attn_probs,
                     const SegmentationMask& pred_mask, const AnnotatedFrame& frame,
                     const LossWeights& w) {
    w.validate();
    double loss = cross_entropy(std_probs, frame.label);
    if (attn_probs.has_value())
        loss += w.lambda_attn * cross_entropy(*attn_probs, frame.label);

    const SegmentationMask target = seg_target(frame);
    check(pred_mask.values.same_shape(target.values),
          "combined_loss: predicted mask dims do not match the frame");
    const int64_t n = pred_mask.values.size();
    double bce = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double raw = pred_mask.values[i];
        check(std::isfinite(raw), "combined_loss: non-finite mask value");
        const double p = std::clamp(raw, autodiff::kProbEps, 1.0 - autodiff::kProbEps);
        const double t = target.values[i];
        bce += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    loss += w.lambda_seg * (bce / static_cast<double>(n));
    check(std::isfinite(loss) && loss >= 0.0, "combined_loss: loss must be finite");
    return loss;
}

TrainResult train(const DatasetSplit& split, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
    config.validate();
    const auto& frames = split.train;
    check(!frames.empty(), "train: empty training set");
    bool has_bleeding = false, has_non = false;
    for (const auto& f : frames)
        (f.label == ClassLabel::bleeding ? has_bleeding : has_non) = true;
    check(has_bleeding && has_non, "train: training set must contain both classes");

    set_seed(config.seed);

    TrainResult result;
    std::vector<Adam> optimizers;
    for (size_t m = 0; m < config.backbones.size(); ++m) {
        Model model(config.backbones[m], config.decoder);
        model.init(named_stream("init/member" + std::to_string(m)));
        model.trained_seed = config.seed;
        optimizers.emplace_back(model.params(), config.learning_rate);
        result.models.push_back(std::move(model));
    }

    const double lambda_attn = config.loss_weights.lambda_attn;
    const double lambda_seg = config.loss_weights.lambda_seg;
    const size_t n_train = frames.size();

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<size_t> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = named_stream("shuffle/epoch" + std::to_string(epoch));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (size_t m = 0; m < result.models.size(); ++m) {
            Model& model = result.models[m];
            for (size_t start = 0; start < n_train; start += static_cast<size_t>(config.batch_size)) {
                const size_t end = std::min(n_train, start + static_cast<size_t>(config.batch_size));
                model.zero_grad();
                for (size_t k = start; k < end; ++k) {
                    const AnnotatedFrame& f = frames[order[k]];
                    auto stages = encode_graph(model, f.image.pixels);
                    auto p_std = head_probs_graph(model, stages.back());

                    Tensor lowres;
                    if (f.label == ClassLabel::bleeding) {
                        check(f.mask.has_value(), "train: bleeding frame without mask");
                        lowres = downsample_mask(*f.mask, stages.back()->value.dim(1),
                                                 stages.back()->value.dim(2));
                    }
                    auto weighted = apply_attention_graph(stages.back(), lowres, f.label);
                    auto p_attn = head_probs_graph(model, weighted);

                    auto pred = decode_graph(model, stages);
                    const Tensor target = seg_target(f).values;

                    using namespace autodiff;
                    const int label_idx = class_index(f.label);
                    Var loss = add(
                        add(nll_from_probs(p_std, label_idx),
                            scale(nll_from_probs(p_attn, label_idx), lambda_attn)),
                        scale(bce_mean(pred, target, config.deterministic), lambda_seg));
                    backward(loss);
                    loss_sum += loss->value[0];
                }
                optimizers[m].step(model.params(), 1.0 / static_cast<double>(end - start));
            }
        }

        double val_accuracy = 0.0;
        if (!split.val.empty()) {
            size_t correct = 0;
            for (const auto& f : split.val) {
                auto [label, probs] = predict(f.image, result.models);
                if (label == f.label) ++correct;
            }
            val_accuracy = static_cast<double>(correct) / static_cast<double>(split.val.size());
        }

        const double mean_loss =
            loss_sum / (static_cast<double>(result.models.size()) * static_cast<double>(n_train));
        result.log.push_back({epoch, mean_loss, val_accuracy});
        if (on_epoch) on_epoch(result.log.back());
    }

    for (auto& model : result.models) model.trained_epochs = config.epochs;
    return result;
}

}  // namespace vistanet
