#pragma once

// Experiment configuration: INI-style key-value text with [section] headers.
// Unknown sections/keys and duplicate keys are rejected with line numbers;
// omitted keys keep the documented defaults.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "modecomb/dataset.hpp"
#include "modecomb/errors.hpp"
#include "modecomb/net.hpp"
#include "modecomb/samplers.hpp"
#include "modecomb/train.hpp"

namespace modecomb {

struct ExperimentParams {
    SamplerSpec::Variant scheme = SamplerSpec::Variant::scalar;
    int grid_size = 25;
    int samples_per_point = 0;  // 0 = per-scheme default (8 stochastic, 1 deterministic)
    std::uint64_t seed = 0;     // sampler / derangement seed
    std::vector<int> multipliers = {1, 2, 4, 8, 16};              // widths subcommand
    std::vector<SamplerSpec::Variant> schemes = {SamplerSpec::Variant::scalar};
    int triangle_resolution = 9;
    int layer = 1;                  // perturb subcommand
    std::vector<int> k_values = {2};
    int bins = 32;                  // edges subcommand

    void validate() const {
        if (grid_size < 2) throw ValidationError("experiment: grid_size must be >= 2");
        if (samples_per_point < 0)
            throw ValidationError("experiment: samples_per_point must be >= 0");
        if (triangle_resolution < 2)
            throw ValidationError("experiment: triangle_resolution must be >= 2");
        if (layer < 1) throw ValidationError("experiment: layer must be >= 1");
        if (bins < 1) throw ValidationError("experiment: bins must be >= 1");
        if (multipliers.empty()) throw ValidationError("experiment: multipliers must be nonempty");
        for (int m : multipliers)
            if (m < 1) throw ValidationError("experiment: multipliers must be >= 1");
        if (schemes.empty()) throw ValidationError("experiment: schemes must be nonempty");
        for (int k : k_values)
            if (k < 2) throw ValidationError("experiment: k_values must be >= 2");
    }
};

struct ExperimentConfig {
    DatasetSpec dataset;
    Architecture arch;
    TrainConfig training;
    ExperimentParams experiment;

    void validate() const {
        dataset.validate();
        arch.validate();
        training.validate();
        experiment.validate();
        if (arch.input_dim != dataset.input_dim || arch.num_classes != dataset.num_classes)
            throw ValidationError("config: arch and dataset dimensions disagree");
    }
};

namespace detail {

inline SamplerSpec::Variant parse_scheme_name(const std::string& name, int line) {
    using V = SamplerSpec::Variant;
    for (V v : {V::scalar, V::uniform_band, V::subcube, V::hyperplane, V::bernoulli, V::stitch,
                V::centered_box, V::extrapolate})
        if (name == sampler_name(v)) return v;
    throw ParseError("config line " + std::to_string(line) + ": unknown scheme '" + name + "'");
}

inline long parse_long(const std::string& value, int line) {
    char* end = nullptr;
    const long parsed = std::strtol(value.c_str(), &end, 10);
    if (end != value.c_str() + value.size() || value.empty())
        throw ParseError("config line " + std::to_string(line) + ": expected integer, got '" +
                         value + "'");
    return parsed;
}

inline double parse_double(const std::string& value, int line) {
    char* end = nullptr;
    const double parsed = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
        throw ParseError("config line " + std::to_string(line) + ": expected number, got '" +
                         value + "'");
    return parsed;
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string current;
    for (char c : value) {
        if (c == ',') {
            items.push_back(current);
            current.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            current.push_back(c);
        }
    }
    items.push_back(current);
    return items;
}

inline std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig config;
    std::string section;
    std::set<std::string> seen_keys;

    int line_number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_number;

        const std::size_t comment = line.find('#');
        if (comment != std::string::npos) line.erase(comment);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("config line " + std::to_string(line_number) +
                                 ": unterminated section header");
            section = line.substr(1, line.size() - 2);
            if (section != "dataset" && section != "arch" && section != "train" &&
                section != "experiment")
                throw ParseError("config line " + std::to_string(line_number) +
                                 ": unknown section '" + section + "'");
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(line_number) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (section.empty())
            throw ParseError("config line " + std::to_string(line_number) +
                             ": key outside any [section]");
        const std::string qualified = section + "." + key;
        if (!seen_keys.insert(qualified).second)
            throw ParseError("config line " + std::to_string(line_number) + ": duplicate key '" +
                             qualified + "'");

        const int ln = line_number;
        if (section == "dataset") {
            if (key == "seed")
                config.dataset.seed = static_cast<std::uint64_t>(detail::parse_long(value, ln));
            else if (key == "num_classes")
                config.dataset.num_classes = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "input_dim")
                config.dataset.input_dim = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "train_size")
                config.dataset.train_size = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "test_size")
                config.dataset.test_size = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "class_separation")
                config.dataset.class_separation = detail::parse_double(value, ln);
            else if (key == "noise_sigma")
                config.dataset.noise_sigma = detail::parse_double(value, ln);
            else
                throw ParseError("config line " + std::to_string(ln) + ": unknown key '" +
                                 qualified + "'");
        } else if (section == "arch") {
            if (key == "depth")
                config.arch.depth = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "base_width")
                config.arch.base_width = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "width_multiplier")
                config.arch.width_multiplier = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "layernorm")
                config.arch.layernorm = detail::parse_long(value, ln) != 0;
            else
                throw ParseError("config line " + std::to_string(ln) + ": unknown key '" +
                                 qualified + "'");
        } else if (section == "train") {
            if (key == "epochs")
                config.training.epochs = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "batch_size")
                config.training.batch_size = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "momentum")
                config.training.momentum = detail::parse_double(value, ln);
            else if (key == "weight_decay")
                config.training.weight_decay = detail::parse_double(value, ln);
            else if (key == "seed")
                config.training.seed = static_cast<std::uint64_t>(detail::parse_long(value, ln));
            else if (key == "schedule") {
                if (value == "step_thirds")
                    config.training.schedule.kind = Schedule::Kind::step_thirds;
                else if (value == "cosine_warmup")
                    config.training.schedule.kind = Schedule::Kind::cosine_warmup;
                else
                    throw ParseError("config line " + std::to_string(ln) + ": unknown schedule '" +
                                     value + "'");
            } else if (key == "initial_lr")
                config.training.schedule.initial_lr = detail::parse_double(value, ln);
            else if (key == "peak_lr")
                config.training.schedule.peak_lr = detail::parse_double(value, ln);
            else if (key == "warmup_epochs")
                config.training.schedule.warmup_epochs =
                    static_cast<int>(detail::parse_long(value, ln));
            else
                throw ParseError("config line " + std::to_string(ln) + ": unknown key '" +
                                 qualified + "'");
        } else {  // experiment
            if (key == "scheme")
                config.experiment.scheme = detail::parse_scheme_name(value, ln);
            else if (key == "grid_size")
                config.experiment.grid_size = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "samples_per_point")
                config.experiment.samples_per_point =
                    static_cast<int>(detail::parse_long(value, ln));
            else if (key == "seed")
                config.experiment.seed = static_cast<std::uint64_t>(detail::parse_long(value, ln));
            else if (key == "multipliers") {
                config.experiment.multipliers.clear();
                for (const std::string& item : detail::split_list(value))
                    config.experiment.multipliers.push_back(
                        static_cast<int>(detail::parse_long(item, ln)));
            } else if (key == "schemes") {
                config.experiment.schemes.clear();
                for (const std::string& item : detail::split_list(value))
                    config.experiment.schemes.push_back(detail::parse_scheme_name(item, ln));
            } else if (key == "triangle_resolution")
                config.experiment.triangle_resolution =
                    static_cast<int>(detail::parse_long(value, ln));
            else if (key == "layer")
                config.experiment.layer = static_cast<int>(detail::parse_long(value, ln));
            else if (key == "k_values") {
                config.experiment.k_values.clear();
                for (const std::string& item : detail::split_list(value))
                    config.experiment.k_values.push_back(
                        static_cast<int>(detail::parse_long(item, ln)));
            } else if (key == "bins")
                config.experiment.bins = static_cast<int>(detail::parse_long(value, ln));
            else
                throw ParseError("config line " + std::to_string(ln) + ": unknown key '" +
                                 qualified + "'");
        }
    }

    // The dataset owns the data dimensions; the architecture follows it.
    config.arch.input_dim = config.dataset.input_dim;
    config.arch.num_classes = config.dataset.num_classes;
    config.validate();
    return config;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse_config(buffer.str());
}

}  // namespace modecomb
