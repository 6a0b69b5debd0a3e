#include "vistanet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace vistanet {

namespace {

constexpr char kMagic[8] = {'V', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

using nlohmann::json;

struct ParsedCheckpoint {
    json manifest;
    std::vector<double> data;
};

ParsedCheckpoint read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointCorruptError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof(kMagic) + sizeof(uint32_t) + sizeof(uint64_t))
        throw CheckpointCorruptError("corrupt manifest: checkpoint file too short: " + path);
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
        throw CheckpointCorruptError("corrupt manifest: not a vistanet checkpoint: " + path);

    uint32_t version = 0;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
    if (version != kVersion)
        throw CheckpointVersionError("checkpoint version mismatch: file has version " +
                                     std::to_string(version) + ", expected " +
                                     std::to_string(kVersion));

    uint64_t manifest_len = 0;
    std::memcpy(&manifest_len, bytes.data() + sizeof(kMagic) + sizeof(version),
                sizeof(manifest_len));
    const size_t header = sizeof(kMagic) + sizeof(version) + sizeof(manifest_len);
    if (bytes.size() < header + manifest_len)
        throw CheckpointCorruptError("corrupt manifest: truncated manifest: " + path);

    ParsedCheckpoint out;
    try {
        out.manifest = json::parse(bytes.substr(header, manifest_len));
    } catch (const json::exception& e) {
        throw CheckpointCorruptError(std::string("corrupt manifest: ") + e.what());
    }

    const size_t data_bytes = bytes.size() - header - manifest_len;
    if (data_bytes % sizeof(double) != 0)
        throw CheckpointCorruptError("corrupt manifest: ragged data section: " + path);
    out.data.resize(data_bytes / sizeof(double));
    std::memcpy(out.data.data(), bytes.data() + header + manifest_len, data_bytes);
    return out;
}

void fill_params(Model& model, const ParsedCheckpoint& ckpt, const std::string& path) {
    const json& arrays = ckpt.manifest.at("arrays");
    if (arrays.size() != model.params().size())
        throw CheckpointShapeError(
            "parameter shape mismatch: checkpoint has " + std::to_string(arrays.size()) +
            " arrays, model expects " + std::to_string(model.params().size()));

    for (size_t i = 0; i < model.params().size(); ++i) {
        auto& p = model.params()[i];
        const json& a = arrays.at(i);
        if (a.at("name").get<std::string>() != p.name)
            throw CheckpointShapeError("parameter shape mismatch: expected array '" +
                                       p.name + "', found '" +
                                       a.at("name").get<std::string>() + "'");
        const auto shape = a.at("shape").get<std::vector<int>>();
        if (shape != p.var->value.shape())
            throw CheckpointShapeError("parameter shape mismatch for '" + p.name + "'");
        if (a.at("dtype").get<std::string>() != "f64")
            throw CheckpointShapeError("parameter shape mismatch: unsupported dtype for '" +
                                       p.name + "'");
        const auto offset = a.at("offset").get<uint64_t>();
        const auto count = a.at("count").get<uint64_t>();
        if (count != static_cast<uint64_t>(p.var->value.size()) ||
            offset + count > ckpt.data.size())
            throw CheckpointCorruptError("corrupt manifest: truncated data for '" + p.name +
                                         "' in " + path);
        std::copy(ckpt.data.begin() + static_cast<int64_t>(offset),
                  ckpt.data.begin() + static_cast<int64_t>(offset + count),
                  p.var->value.data());
    }

    model.trained_seed = ckpt.manifest.at("meta").value("seed", 0ull);
    model.trained_epochs = ckpt.manifest.at("meta").value("epochs", 0);

    if (ckpt.manifest.at("meta").contains("param_digest")) {
        const std::string want = ckpt.manifest["meta"]["param_digest"];
        if (to_hex(model.param_digest()) != want)
            throw CheckpointCorruptError("corrupt manifest: parameter digest mismatch in " +
                                         path);
    }
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
    json manifest;
    manifest["format"] = "vistanet-checkpoint";
    manifest["version"] = kVersion;
    const BackboneSpec& b = model.backbone();
    manifest["backbone"] = {{"arch", to_string(b.arch)},
                            {"width_mult", b.width_mult},
                            {"stage_count", b.stage_count},
                            {"activation", to_string(b.activation)}};
    manifest["decoder"] = {{"skip_stages", model.decoder_spec().skip_stages},
                           {"up_channels", model.decoder_spec().up_channels}};
    manifest["meta"] = {{"seed", model.trained_seed},
                        {"epochs", model.trained_epochs},
                        {"param_digest", to_hex(model.param_digest())}};

    json arrays = json::array();
    uint64_t offset = 0;
    for (const auto& p : model.params()) {
        arrays.push_back({{"name", p.name},
                          {"shape", p.var->value.shape()},
                          {"dtype", "f64"},
                          {"offset", offset},
                          {"count", p.var->value.size()}});
        offset += static_cast<uint64_t>(p.var->value.size());
    }
    manifest["arrays"] = std::move(arrays);

    const std::string mstr = manifest.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(static_cast<bool>(out), "cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    const uint64_t mlen = mstr.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
    for (const auto& p : model.params()) {
        const Tensor& t = p.var->value;
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    check(static_cast<bool>(out), "write failed: " + path);
}

Model load_checkpoint(const std::string& path) {
    ParsedCheckpoint ckpt = read_file(path);
    BackboneSpec b;
    DecoderSpec d;
    try {
        const json& jb = ckpt.manifest.at("backbone");
        b.arch = arch_from_string(jb.at("arch").get<std::string>());
        b.width_mult = jb.at("width_mult").get<double>();
        b.stage_count = jb.at("stage_count").get<int>();
        b.activation = activation_from_string(jb.at("activation").get<std::string>());
        const json& jd = ckpt.manifest.at("decoder");
        d.skip_stages = jd.at("skip_stages").get<std::vector<int>>();
        d.up_channels = jd.at("up_channels").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw CheckpointCorruptError(std::string("corrupt manifest: ") + e.what());
    }
    Model model(b, d);
    fill_params(model, ckpt, path);
    return model;
}

void load_checkpoint_into(Model& model, const std::string& path) {
    ParsedCheckpoint ckpt = read_file(path);
    fill_params(model, ckpt, path);
}

}  // namespace vistanet
