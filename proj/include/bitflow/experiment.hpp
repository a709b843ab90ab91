#pragma once

#include "bitflow/config.hpp"
#include "bitflow/dataset.hpp"
#include "bitflow/results.hpp"

#include <string>
#include <vector>

namespace bitflow {

/// X uniform on [-R, R]^d; Y from the configured target rule, clamped so
/// |Y|_inf <= R. Deterministic in the config seed. The teacher rule uses a
/// fixed depth-2 width-8 tanh network whose weights depend only on the
/// seed, so datasets are shared across sweep cells.
Dataset synthesize_dataset(const ExperimentConfig& cfg);

struct SuiteResult {
    std::string name;
    bool pass = true;
    std::string detail;
};

/// The lemma-verification suites behind the `verify` kind. Each suite
/// appends its measurements to `results`.
std::vector<SuiteResult> run_verify_suites(const ExperimentConfig& cfg,
                                           ResultsWriter& results);

/// Dispatch on cfg.kind, write results.csv / run.jsonl / snapshot files
/// under out_dir. Exit status: 0 success, 1 assertion failure,
/// 3 numerical fatality (config errors throw before this runs).
int run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                   int workers = 1);

} // namespace bitflow
