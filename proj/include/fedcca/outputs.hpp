#pragma once

#include <string>
#include <vector>

#include "fedcca/orchestrator.hpp"

namespace fedcca {

// Writes metrics.csv, selection_counts.csv and summary.json into out_dir.
// All three files are byte-deterministic functions of the result.
void write_outputs(const RunResult& result, const std::string& out_dir);

enum class SweepAxis { alpha, local_epochs, classes_per_client, algorithm, ablation };

SweepAxis sweep_axis_from_name(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepSpec {
    ExperimentConfig base;
    SweepAxis axis = SweepAxis::alpha;
    std::vector<std::string> values;  // parsed per axis
    std::vector<std::uint64_t> seeds;
};

struct SweepRow {
    std::string axis_value;
    std::uint64_t seed = 0;
    double mean_accuracy = 0.0;
    int final_round = 0;
    bool ok = false;
};

// Returns the base config with one axis value applied (and the value's
// canonical string form, used for row sorting and directory names).
ExperimentConfig apply_axis_value(const ExperimentConfig& base, SweepAxis axis,
                                  const std::string& value);
std::string canonical_axis_value(SweepAxis axis, const std::string& value);

// Cross product of values x seeds, each sub-run written to its own
// subdirectory; failures are recorded in the summary instead of aborting.
// Writes sweep_summary.csv and returns rows sorted by (axis_value, seed).
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::string& out_dir,
                                int workers = 1);

}  // namespace fedcca
