#include "divetrack/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace divetrack {

using ordered_json = nlohmann::ordered_json;

void EngineConfig::validate() const {
    memory.validate();
    losses.weights.validate();
    if (losses.focal_gamma < 0.0) throw ConfigError("losses.focal_gamma", "must be >= 0");
    if (losses.sigma <= 0.0) throw ConfigError("losses.sigma", "must be positive");
    if (losses.kernel_size < 1 || losses.kernel_size % 2 == 0) {
        throw ConfigError("losses.kernel_size", "must be a positive odd integer");
    }
    if (losses.tau_value <= 0.0) throw ConfigError("losses.tau_value", "must be positive");
    sampler.validate();
    propagator.validate();
    if (metrics.boundary_tolerance_frac < 0.0) {
        throw ConfigError("metrics.boundary_tolerance_frac", "must be >= 0");
    }
    if (metrics.table_decimals < 0) throw ConfigError("metrics.table_decimals", "must be >= 0");
}

namespace {

template <typename T>
void read_field(const ordered_json& section, const char* key, T& target,
                const std::string& path) {
    if (!section.contains(key)) return;
    try {
        target = section.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + "." + key, e.what());
    }
}

} // namespace

EngineConfig engine_config_from_string(const std::string& text, const std::string& where) {
    const std::string prefix = where.empty() ? "" : where + ":";
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(prefix + "<root>", std::string("invalid JSON: ") + e.what());
    }

    EngineConfig cfg;
    if (j.contains("memory")) {
        const auto& s = j.at("memory");
        read_field(s, "delta", cfg.memory.delta, prefix + "memory");
        read_field(s, "gamma_iou", cfg.memory.gamma_iou, prefix + "memory");
        read_field(s, "n_long", cfg.memory.n_long, prefix + "memory");
        read_field(s, "n_short", cfg.memory.n_short, prefix + "memory");
    }
    if (j.contains("losses")) {
        const auto& s = j.at("losses");
        read_field(s, "lambda_arl", cfg.losses.weights.lambda_arl, prefix + "losses");
        read_field(s, "lambda_tsl", cfg.losses.weights.lambda_tsl, prefix + "losses");
        read_field(s, "focal_gamma", cfg.losses.focal_gamma, prefix + "losses");
        read_field(s, "sigma", cfg.losses.sigma, prefix + "losses");
        read_field(s, "kernel_size", cfg.losses.kernel_size, prefix + "losses");
        if (s.contains("tau_mode")) {
            std::string mode;
            read_field(s, "tau_mode", mode, prefix + "losses");
            if (mode == "inverse") {
                cfg.losses.tau_mode = TauMode::inverse;
            } else if (mode == "literal") {
                cfg.losses.tau_mode = TauMode::literal;
            } else {
                throw ConfigError(prefix + "losses.tau_mode",
                                  "expected 'inverse' or 'literal', got '" + mode + "'");
            }
        }
        read_field(s, "tau_value", cfg.losses.tau_value, prefix + "losses");
    }
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        if (s.contains("mode")) {
            std::string mode;
            read_field(s, "mode", mode, prefix + "sampler");
            try {
                cfg.sampler.mode = sample_mode_from_string(mode);
            } catch (const ConfigError&) {
                throw ConfigError(prefix + "sampler.mode", "unknown mode '" + mode + "'");
            }
        }
        read_field(s, "frames_per_clip", cfg.sampler.frames_per_clip, prefix + "sampler");
        read_field(s, "image_ratio", cfg.sampler.image_ratio, prefix + "sampler");
        read_field(s, "video_ratio", cfg.sampler.video_ratio, prefix + "sampler");
    }
    if (j.contains("propagator")) {
        const auto& s = j.at("propagator");
        read_field(s, "top_k", cfg.propagator.top_k, prefix + "propagator");
        read_field(s, "vote_sharpness", cfg.propagator.vote_sharpness, prefix + "propagator");
        read_field(s, "active_threshold", cfg.propagator.active_threshold, prefix + "propagator");
        read_field(s, "color_sharpness", cfg.propagator.color_sharpness, prefix + "propagator");
        read_field(s, "color_tolerance", cfg.propagator.color_tolerance, prefix + "propagator");
        read_field(s, "dilate_active", cfg.propagator.dilate_active, prefix + "propagator");
    }
    if (j.contains("metrics")) {
        const auto& s = j.at("metrics");
        read_field(s, "boundary_tolerance_frac", cfg.metrics.boundary_tolerance_frac,
                   prefix + "metrics");
        read_field(s, "table_decimals", cfg.metrics.table_decimals, prefix + "metrics");
    }

    try {
        cfg.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(prefix + "<config>", e.what());
    }
    return cfg;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return engine_config_from_string(buf.str(), path.string());
}

void save_engine_config(const EngineConfig& cfg, const std::filesystem::path& path) {
    ordered_json j;
    j["memory"] = {{"delta", cfg.memory.delta},
                   {"gamma_iou", cfg.memory.gamma_iou},
                   {"n_long", cfg.memory.n_long},
                   {"n_short", cfg.memory.n_short}};
    j["losses"] = {{"lambda_arl", cfg.losses.weights.lambda_arl},
                   {"lambda_tsl", cfg.losses.weights.lambda_tsl},
                   {"focal_gamma", cfg.losses.focal_gamma},
                   {"sigma", cfg.losses.sigma},
                   {"kernel_size", cfg.losses.kernel_size},
                   {"tau_mode", cfg.losses.tau_mode == TauMode::inverse ? "inverse" : "literal"},
                   {"tau_value", cfg.losses.tau_value}};
    j["sampler"] = {{"mode", to_string(cfg.sampler.mode)},
                    {"frames_per_clip", cfg.sampler.frames_per_clip},
                    {"image_ratio", cfg.sampler.image_ratio},
                    {"video_ratio", cfg.sampler.video_ratio}};
    j["propagator"] = {{"top_k", cfg.propagator.top_k},
                       {"vote_sharpness", cfg.propagator.vote_sharpness},
                       {"active_threshold", cfg.propagator.active_threshold},
                       {"color_sharpness", cfg.propagator.color_sharpness},
                       {"color_tolerance", cfg.propagator.color_tolerance},
                       {"dilate_active", cfg.propagator.dilate_active}};
    j["metrics"] = {{"boundary_tolerance_frac", cfg.metrics.boundary_tolerance_frac},
                    {"table_decimals", cfg.metrics.table_decimals}};

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace divetrack
