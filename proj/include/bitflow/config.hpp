#pragma once

#include "bitflow/bitnet_forward.hpp"
#include "bitflow/particle_dynamics.hpp"
#include "bitflow/quant_core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bitflow {

enum class ExperimentKind { Verify, Train, SweepEps, SweepWidth, GradCheck };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& s);

/// Flat `[section]` / `key = value` experiment configuration. Unknown keys
/// are rejected at parse time; validation names the regularity assumption a
/// bad value violates.
struct ExperimentConfig {
    // [architecture]
    std::vector<std::pair<int, int>> dims = {{4, 16}, {16, 1}};  // (m_l, n_l)
    std::vector<ActivationKind> activations = {ActivationKind::Tanh,
                                               ActivationKind::Identity};

    // [smoothing]
    double epsilon = 0.5;
    std::vector<double> epsilon_list;  // sweep-eps only
    int bits = 2;
    double delta = 0.25;
    ClipVariant clip_variant = ClipVariant::Logistic;

    // [dynamics]
    double eta = 0.05;
    double horizon = 1.0;
    double clamp = 1.0;
    double init_scale = 0.5;
    std::uint64_t seed = 1;
    int stride = 1;

    // [data]
    int samples = 64;
    double support = 1.0;
    std::string target_rule = "teacher";  // teacher | zero | linear | sinsum

    // [experiment]
    ExperimentKind kind = ExperimentKind::Verify;
    std::vector<int> widths = {8, 16, 32};  // sweep-width only
    std::vector<double> times;              // empty -> {0, T/4, T/2, 3T/4, T}

    Architecture architecture() const;
    SmoothingParams smoothing() const;
    RunConfig run_config() const;
    std::vector<double> comparison_times() const;

    void validate() const;
};

/// Parse and validate a config file. Throws ConfigError with line/column on
/// syntax errors and with the violated assumption on validation errors.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text);

/// Deterministic re-serialization: sections and keys in sorted order, all
/// defaults filled, floats at 17 significant digits. The hash input.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of the canonical text, as 16 hex digits. Used as the run id.
std::string config_hash(const ExperimentConfig& cfg);

} // namespace bitflow
