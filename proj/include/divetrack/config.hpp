#pragma once
// Engine configuration: JSON file with sections for memory, losses, sampler,
// propagator and metric settings. Every hyperparameter has its default here
// and can be overridden field by field; unknown or ill-typed fields raise
// ConfigError with the field path.

#include <filesystem>
#include <string>

#include "divetrack/losses.hpp"
#include "divetrack/memory.hpp"
#include "divetrack/sampler.hpp"
#include "divetrack/tracker.hpp"

namespace divetrack {

struct LossConfig {
    LossWeights weights;       // lambda_arl = 20, lambda_tsl = 0.1
    double focal_gamma = 2.0;
    double sigma = 1.0;        // Gaussian softening
    int kernel_size = 5;
    TauMode tau_mode = TauMode::inverse;
    double tau_value = 100.0;

    double tau() const { return effective_tau(tau_mode, tau_value); }
};

struct MetricConfig {
    double boundary_tolerance_frac = 0.008; // of the image diagonal, ceil
    int table_decimals = 2;
};

struct EngineConfig {
    MemoryConfig memory;       // delta = 5, gamma_iou = 0.95, n_long = 4, n_short = 6
    LossConfig losses;
    SamplerConfig sampler;
    PropagatorParams propagator;
    MetricConfig metrics;

    void validate() const;
};

EngineConfig load_engine_config(const std::filesystem::path& path);
void save_engine_config(const EngineConfig& cfg, const std::filesystem::path& path);

// Parse from a JSON string; `where` prefixes ConfigError field paths.
EngineConfig engine_config_from_string(const std::string& text, const std::string& where = "");

} // namespace divetrack
