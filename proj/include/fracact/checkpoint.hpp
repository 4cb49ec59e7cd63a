#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracact/activations.hpp"
#include "fracact/errors.hpp"
#include "fracact/io.hpp"
#include "fracact/nn.hpp"

namespace fracact {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "fracact-mlp";

namespace detail {

inline nlohmann::json activation_to_json(const ActivationSpec& spec) {
    nlohmann::json j;
    j["base"] = to_string(spec.base);
    j["fractional"] = spec.fractional;
    j["falu"] = spec.falu;
    j["order"] = spec.order;
    j["terms"] = spec.terms;
    j["step"] = spec.step;
    j["falu_beta"] = spec.falu_beta;
    j["prelu_slope"] = spec.prelu_slope;
    return j;
}

inline ActivationSpec activation_from_json(const nlohmann::json& j) {
    ActivationSpec spec;
    const std::string base = j.at("base").get<std::string>();
    const std::optional<BaseKind> kind = base_kind_from_string(base);
    if (!kind)
        throw FormatError("checkpoint: unknown base activation '" + base + "'");
    spec.base = *kind;
    spec.fractional = j.at("fractional").get<bool>();
    spec.falu = j.at("falu").get<bool>();
    spec.order = j.at("order").get<double>();
    spec.terms = j.at("terms").get<int>();
    spec.step = j.at("step").get<double>();
    spec.falu_beta = j.at("falu_beta").get<double>();
    spec.prelu_slope = j.at("prelu_slope").get<double>();
    validate_spec(spec);
    return spec;
}

} // namespace detail

/// Serializes shapes, parameters, and the per-parameter registry flags
/// (decay exclusion, clamp boxes). The registry block is what documents
/// which scalars the optimizer must never decay.
inline std::string checkpoint_to_json(MlpModel& model) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kCheckpointVersion;
    nlohmann::json layers = nlohmann::json::array();
    for (const DenseLayer& layer : model.layers) {
        nlohmann::json lj;
        lj["in"] = layer.weights.rows();
        lj["out"] = layer.weights.cols();
        lj["weights"] = layer.weights.data();
        lj["biases"] = layer.biases.data();
        if (layer.activation)
            lj["activation"] = detail::activation_to_json(*layer.activation);
        else
            lj["activation"] = nullptr;
        layers.push_back(std::move(lj));
    }
    j["layers"] = std::move(layers);
    nlohmann::json registry = nlohmann::json::array();
    for (const ParamRef& ref : collect_params(model)) {
        nlohmann::json rj;
        rj["name"] = ref.name;
        rj["size"] = ref.size;
        rj["decay_excluded"] = ref.decay_excluded;
        rj["is_fdo"] = ref.is_fdo;
        if (ref.clamp_box)
            rj["clamp"] = {ref.clamp_box->first, ref.clamp_box->second};
        else
            rj["clamp"] = nullptr;
        registry.push_back(std::move(rj));
    }
    j["registry"] = std::move(registry);
    return j.dump(2) + "\n";
}

inline void save_checkpoint(const std::filesystem::path& path, MlpModel& model) {
    write_text_file_atomic(path, checkpoint_to_json(model));
}

inline MlpModel checkpoint_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: invalid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat)
            throw FormatError("checkpoint: unknown format '" +
                              j.at("format").get<std::string>() + "'");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw FormatError("checkpoint: unsupported version " +
                              std::to_string(j.at("version").get<int>()));
        MlpModel model;
        for (const nlohmann::json& lj : j.at("layers")) {
            DenseLayer layer;
            const std::size_t in = lj.at("in").get<std::size_t>();
            const std::size_t out = lj.at("out").get<std::size_t>();
            layer.weights = Tensor({in, out},
                                   lj.at("weights").get<std::vector<double>>());
            layer.biases = Tensor({out}, lj.at("biases").get<std::vector<double>>());
            if (!lj.at("activation").is_null())
                layer.activation = detail::activation_from_json(lj.at("activation"));
            model.layers.push_back(std::move(layer));
        }
        // The stored registry must agree with the one the loaded model
        // induces; a mismatch means the flags were edited by hand.
        const nlohmann::json& registry = j.at("registry");
        const std::vector<ParamRef> params = collect_params(model);
        if (registry.size() != params.size())
            throw FormatError("checkpoint: registry entry count " +
                              std::to_string(registry.size()) +
                              " does not match model parameters " +
                              std::to_string(params.size()));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const nlohmann::json& rj = registry[i];
            if (rj.at("name").get<std::string>() != params[i].name ||
                rj.at("decay_excluded").get<bool>() != params[i].decay_excluded)
                throw FormatError("checkpoint: registry flags for '" +
                                  params[i].name + "' do not match the model");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: missing or mistyped field: ") +
                          e.what());
    }
}

inline MlpModel load_checkpoint(const std::filesystem::path& path) {
    return checkpoint_from_json(read_text_file(path));
}

} // namespace fracact
