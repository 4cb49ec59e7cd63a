#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/dataset.hpp"
#include "fracact/errors.hpp"
#include "fracact/io.hpp"
#include "fracact/nn.hpp"

namespace fracact {

// ---------------------------------------------------------------------------
// INI-style key/value file with sections
// ---------------------------------------------------------------------------

struct IniValue {
    std::string value;
    std::size_t line = 0; // 1-based, for error attribution
};

/// Parsed config file. Sections and keys keep their source line numbers
/// so every downstream error can name where the bad value came from.
struct IniFile {
    std::map<std::string, std::map<std::string, IniValue>> sections;

    bool has(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        return s != sections.end() && s->second.count(key) > 0;
    }

    const IniValue& at(const std::string& section, const std::string& key) const {
        auto s = sections.find(section);
        if (s == sections.end())
            throw ParseError("missing section [" + section + "]");
        auto k = s->second.find(key);
        if (k == s->second.end())
            throw ParseError("missing key '" + key + "' in section [" + section + "]");
        return k->second;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

} // namespace detail

/// Parses `[section]` / `key = value` text. Full-line comments start with
/// '#' or ';'. Errors name the 1-based line.
inline IniFile parse_ini_text(const std::string& text) {
    IniFile ini;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos
                                                                    : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        line = detail::trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ParseError("line " + std::to_string(line_no) +
                                 ": malformed section header '" + line + "'");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ParseError("line " + std::to_string(line_no) +
                                 ": empty section name");
            ini.sections[section]; // section may legitimately stay empty
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) +
                             ": expected 'key = value', got '" + line + "'");
        if (section.empty())
            throw ParseError("line " + std::to_string(line_no) +
                             ": key before any [section]");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty key");
        auto [it, inserted] =
            ini.sections[section].insert({key, IniValue{value, line_no}});
        if (!inserted)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" +
                             key + "' in section [" + section + "] (first at line " +
                             std::to_string(it->second.line) + ")");
    }
    return ini;
}

inline IniFile parse_ini_file(const std::string& path) {
    return parse_ini_text(read_text_file(path));
}

namespace detail {

inline double ini_double(const IniValue& v, const std::string& key) {
    try {
        return parse_double(v.value, key);
    } catch (const ParseError&) {
        throw ParseError("line " + std::to_string(v.line) + ": key '" + key +
                         "' needs a number, got '" + v.value + "'");
    }
}

inline long long ini_int(const IniValue& v, const std::string& key) {
    const double d = ini_double(v, key);
    const long long i = static_cast<long long>(d);
    if (static_cast<double>(i) != d)
        throw ParseError("line " + std::to_string(v.line) + ": key '" + key +
                         "' needs an integer, got '" + v.value + "'");
    return i;
}

inline bool ini_bool(const IniValue& v, const std::string& key) {
    if (v.value == "true" || v.value == "1" || v.value == "yes") return true;
    if (v.value == "false" || v.value == "0" || v.value == "no") return false;
    throw ParseError("line " + std::to_string(v.line) + ": key '" + key +
                     "' needs true/false, got '" + v.value + "'");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Run specification (model + train + data)
// ---------------------------------------------------------------------------

enum class DataKind { two_moons, csv, idx };

struct ModelConfig {
    std::size_t hidden_layers = 4;
    std::size_t hidden_units = 32;
    std::string activation = "sigmoid"; // base name, or fsig/fgelu/fmish/falu
    int terms = 1;
    std::optional<double> step; // default: step_for_terms rule
    double falu_beta = 1.0;
    double prelu_slope = 0.25;
};

struct DataConfig {
    DataKind kind = DataKind::two_moons;
    // two moons
    std::size_t n = 1000;
    double noise = 0.15;
    // csv
    std::string path;
    std::size_t label_column = 0;
    bool header = false;
    // idx
    std::string images;
    std::string labels;
    std::optional<std::size_t> limit;
    // csv/idx: held-out fraction when no explicit test files exist
    double test_fraction = 0.2;
};

struct RunSpec {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
};

/// Maps a config-file activation name to a layer spec. Fractional names
/// fsig/fgelu/fmish select the GL operator over the matching base with
/// order 0 (the trainable FDO's starting point under zero init).
inline ActivationSpec activation_spec_from_name(const std::string& name, int terms,
                                                std::optional<double> step,
                                                double falu_beta,
                                                double prelu_slope) {
    ActivationSpec spec;
    if (name == "falu") {
        spec = make_falu(0.0, falu_beta);
    } else if (name == "fsig" || name == "fgelu" || name == "fmish") {
        const BaseKind base = name == "fsig"    ? BaseKind::sigmoid
                              : name == "fgelu" ? BaseKind::gelu_tanh
                                                : BaseKind::mish;
        spec = make_fractional(base, 0.0, terms);
        if (step) spec.step = *step;
    } else {
        const std::optional<BaseKind> base = base_kind_from_string(name);
        if (!base)
            throw DomainError("unknown activation '" + name + "'");
        spec = make_base(*base);
        spec.prelu_slope = prelu_slope;
    }
    validate_spec(spec);
    return spec;
}

inline ActivationSpec run_spec_activation(const RunSpec& rs) {
    return activation_spec_from_name(rs.model.activation, rs.model.terms,
                                     rs.model.step, rs.model.falu_beta,
                                     rs.model.prelu_slope);
}

/// Reads a RunSpec out of a parsed INI file; unknown keys are errors so
/// misspelled hyperparameters cannot silently fall back to defaults.
inline RunSpec run_spec_from_ini(const IniFile& ini) {
    RunSpec rs;
    static const std::map<std::string, std::vector<std::string>> known = {
        {"model", {"hidden_layers", "hidden_units", "activation", "terms", "step",
                   "falu_beta", "prelu_slope"}},
        {"train", {"epochs", "batch_size", "learning_rate", "momentum",
                   "weight_decay", "clip_max_norm", "label_smoothing", "seed",
                   "fdo_init", "fdo_lr_scale"}},
        {"data", {"dataset", "n", "noise", "path", "label_column", "header",
                  "images", "labels", "limit", "test_fraction"}},
    };
    for (const auto& [section, keys] : ini.sections) {
        auto it = known.find(section);
        if (it == known.end())
            throw ParseError("unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            bool ok = false;
            for (const std::string& k : it->second) ok = ok || k == key;
            if (!ok)
                throw ParseError("line " + std::to_string(value.line) +
                                 ": unknown key '" + key + "' in section [" +
                                 section + "]");
        }
    }

    const auto get = [&ini](const char* s, const char* k) -> const IniValue* {
        return ini.has(s, k) ? &ini.at(s, k) : nullptr;
    };

    if (const IniValue* v = get("model", "hidden_layers"))
        rs.model.hidden_layers = static_cast<std::size_t>(detail::ini_int(*v, "hidden_layers"));
    if (const IniValue* v = get("model", "hidden_units"))
        rs.model.hidden_units = static_cast<std::size_t>(detail::ini_int(*v, "hidden_units"));
    if (const IniValue* v = get("model", "activation")) rs.model.activation = v->value;
    if (const IniValue* v = get("model", "terms"))
        rs.model.terms = static_cast<int>(detail::ini_int(*v, "terms"));
    if (const IniValue* v = get("model", "step"))
        rs.model.step = detail::ini_double(*v, "step");
    if (const IniValue* v = get("model", "falu_beta"))
        rs.model.falu_beta = detail::ini_double(*v, "falu_beta");
    if (const IniValue* v = get("model", "prelu_slope"))
        rs.model.prelu_slope = detail::ini_double(*v, "prelu_slope");

    if (const IniValue* v = get("train", "epochs"))
        rs.train.epochs = static_cast<int>(detail::ini_int(*v, "epochs"));
    if (const IniValue* v = get("train", "batch_size"))
        rs.train.batch_size = static_cast<int>(detail::ini_int(*v, "batch_size"));
    if (const IniValue* v = get("train", "learning_rate"))
        rs.train.learning_rate = detail::ini_double(*v, "learning_rate");
    if (const IniValue* v = get("train", "momentum"))
        rs.train.momentum = detail::ini_double(*v, "momentum");
    if (const IniValue* v = get("train", "weight_decay"))
        rs.train.weight_decay = detail::ini_double(*v, "weight_decay");
    if (const IniValue* v = get("train", "clip_max_norm"))
        rs.train.clip_max_norm = detail::ini_double(*v, "clip_max_norm");
    if (const IniValue* v = get("train", "label_smoothing"))
        rs.train.label_smoothing = detail::ini_double(*v, "label_smoothing");
    if (const IniValue* v = get("train", "seed"))
        rs.train.seed = static_cast<std::uint64_t>(detail::ini_int(*v, "seed"));
    if (const IniValue* v = get("train", "fdo_lr_scale"))
        rs.train.fdo_lr_scale = detail::ini_double(*v, "fdo_lr_scale");
    if (const IniValue* v = get("train", "fdo_init")) {
        if (v->value == "zero") rs.train.fdo_init = FdoInit::zero;
        else if (v->value == "uniform") rs.train.fdo_init = FdoInit::uniform;
        else
            throw ParseError("line " + std::to_string(v->line) +
                             ": fdo_init must be zero or uniform, got '" +
                             v->value + "'");
    }

    if (const IniValue* v = get("data", "dataset")) {
        if (v->value == "two_moons") rs.data.kind = DataKind::two_moons;
        else if (v->value == "csv") rs.data.kind = DataKind::csv;
        else if (v->value == "idx") rs.data.kind = DataKind::idx;
        else
            throw ParseError("line " + std::to_string(v->line) +
                             ": dataset must be two_moons, csv, or idx, got '" +
                             v->value + "'");
    }
    if (const IniValue* v = get("data", "n"))
        rs.data.n = static_cast<std::size_t>(detail::ini_int(*v, "n"));
    if (const IniValue* v = get("data", "noise"))
        rs.data.noise = detail::ini_double(*v, "noise");
    if (const IniValue* v = get("data", "path")) rs.data.path = v->value;
    if (const IniValue* v = get("data", "label_column"))
        rs.data.label_column = static_cast<std::size_t>(detail::ini_int(*v, "label_column"));
    if (const IniValue* v = get("data", "header"))
        rs.data.header = detail::ini_bool(*v, "header");
    if (const IniValue* v = get("data", "images")) rs.data.images = v->value;
    if (const IniValue* v = get("data", "labels")) rs.data.labels = v->value;
    if (const IniValue* v = get("data", "limit"))
        rs.data.limit = static_cast<std::size_t>(detail::ini_int(*v, "limit"));
    if (const IniValue* v = get("data", "test_fraction"))
        rs.data.test_fraction = detail::ini_double(*v, "test_fraction");

    // Surface bad activation names at parse time, with the line attributed.
    if (const IniValue* v = get("model", "activation")) {
        try {
            (void)run_spec_activation(rs);
        } catch (const DomainError& e) {
            throw ParseError("line " + std::to_string(v->line) + ": " + e.what());
        }
    }
    return rs;
}

inline RunSpec parse_run_spec(const std::string& path) {
    return run_spec_from_ini(parse_ini_file(path));
}

// ---------------------------------------------------------------------------
// Builders shared by cmd_train and the N-sweep
// ---------------------------------------------------------------------------

/// Sub-stream ids so the parameter init draws and the dataset noise draws
/// never alias even though both derive from the single run seed.
inline constexpr std::uint64_t kInitStream = 0x1217;
inline constexpr std::uint64_t kDataStream = 0xda7a;

/// 80/20-style split of an already-loaded dataset by seeded permutation.
inline DataSplit split_dataset(const Dataset& full, double test_fraction,
                               std::uint64_t seed) {
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
        throw DomainError("split_dataset: test_fraction must be in (0, 1)");
    const std::size_t n = full.size();
    std::size_t n_test = static_cast<std::size_t>(
        static_cast<double>(n) * test_fraction);
    n_test = std::min(std::max<std::size_t>(n_test, 1), n - 1);
    Rng rng = Rng(seed).fork(kDataStream);
    const std::vector<std::size_t> order = rng.permutation(n);
    DataSplit split;
    split.train = detail::take_rows(full.features, full.labels, order, 0,
                                    n - n_test, "train");
    split.test = detail::take_rows(full.features, full.labels, order, n - n_test,
                                   n, "test");
    return split;
}

/// Materializes the configured dataset, deterministic from the run seed.
inline DataSplit load_data(const RunSpec& rs) {
    switch (rs.data.kind) {
        case DataKind::two_moons:
            return gen_two_moons(rs.data.n, rs.data.noise,
                                 Rng(rs.train.seed).fork(kDataStream).next_u64());
        case DataKind::csv: {
            Dataset full = load_csv_dataset(rs.data.path, rs.data.label_column,
                                            rs.data.header);
            return split_dataset(full, rs.data.test_fraction, rs.train.seed);
        }
        case DataKind::idx: {
            Dataset full = load_idx_images(rs.data.images, rs.data.labels,
                                           rs.data.limit);
            return split_dataset(full, rs.data.test_fraction, rs.train.seed);
        }
    }
    throw DomainError("load_data: unknown dataset kind");
}

/// Builds the configured MLP for a given input width and class count.
inline MlpModel build_model(const RunSpec& rs, std::size_t in_dim,
                            std::size_t classes) {
    const ActivationSpec act = run_spec_activation(rs);
    const std::vector<std::size_t> hidden(rs.model.hidden_layers,
                                          rs.model.hidden_units);
    Rng rng = Rng(rs.train.seed).fork(kInitStream);
    return make_mlp(in_dim, hidden, classes, act, rng, rs.train.fdo_init);
}

} // namespace fracact
