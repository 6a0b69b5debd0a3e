#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vistanet/autodiff.hpp"
#include "vistanet/rng.hpp"
#include "vistanet/types.hpp"

namespace vistanet {

// Two production architecture families plus a small fixture for tests.
enum class Arch { residual18_style, plainconv16_style, tiny_test };
enum class Activation { relu, softplus };

std::string to_string(Arch a);
Arch arch_from_string(std::string_view s);
std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct BackboneSpec {
    Arch arch = Arch::tiny_test;
    double width_mult = 1.0;
    int stage_count = 3;  // S; stage s halves spatial dims to H/2^s
    Activation activation = Activation::relu;

    void validate() const;
    // Channels per stage, s = 1..S.
    std::vector<int> stage_channels() const;
};

struct DecoderSpec {
    // Encoder stages wired as skip connections; empty means all of 1..S-1.
    std::vector<int> skip_stages;
    // Output channels of each up-stage; empty means mirror the encoder.
    std::vector<int> up_channels;

    std::vector<int> resolved_skips(const BackboneSpec& b) const;
    std::vector<int> resolved_channels(const BackboneSpec& b) const;
};

// Ordered multi-resolution encoder output; stage s has dims (H/2^s, W/2^s).
struct FeatureMapStack {
    std::vector<Tensor> stages;

    void validate() const;
};

struct NamedParam {
    std::string name;
    autodiff::Var var;
};

// One ensemble member: encoder + classification head + segmentation decoder
// parameters. Forward graph construction lives with the owning modules
// (ensemble, attention, segmentation); the model is the parameter store.
class Model {
public:
    Model(BackboneSpec backbone, DecoderSpec decoder);
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    void init(Rng rng);
    Model clone() const;

    const BackboneSpec& backbone() const { return backbone_; }
    const DecoderSpec& decoder_spec() const { return decoder_; }

    const autodiff::Var& param(std::string_view name) const;
    std::vector<NamedParam>& params() { return params_; }
    const std::vector<NamedParam>& params() const { return params_; }

    int64_t param_count() const;
    uint64_t param_digest() const;
    void zero_grad();

    // training provenance carried into checkpoints
    uint64_t trained_seed = 0;
    int trained_epochs = 0;

private:
    void register_param(const std::string& name, std::vector<int> shape);

    BackboneSpec backbone_;
    DecoderSpec decoder_;
    std::vector<NamedParam> params_;
    std::map<std::string, size_t, std::less<>> index_;
};

}  // namespace vistanet
