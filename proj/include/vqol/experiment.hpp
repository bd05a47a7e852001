#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vqol/circuit.hpp"
#include "vqol/dsl.hpp"
#include "vqol/engine.hpp"
#include "vqol/recorder.hpp"

namespace vqol {

/// Parsed and routed experiment; diagnostics from both stages.
struct Experiment {
    ExperimentSpec spec;
    CircuitGraph graph;
    Diagnostics diagnostics;
    bool ok() const { return !has_errors(diagnostics); }
};

Experiment build_experiment(const ExperimentSpec &spec);
Experiment load_experiment(std::string_view text);
std::string read_text_file(const std::filesystem::path &path);

/// Worker count: VQOL_THREADS if set and positive, else the hardware count.
unsigned worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. The first exception is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn);

/// Coincidence table over the named detectors, in the given order. Labels
/// match a detector's id (or its default label).
CoincidenceTable table_for(const RunRecords &records, const std::vector<std::string> &labels);

/// Index of the sink with the given label; throws if absent.
std::size_t detector_index(const RunRecords &records, const std::string &label);
std::size_t meter_index(const RunRecords &records, const std::string &label);

/// Largest source-to-sink latency, i.e. the steps before every sink has
/// received light.
std::int64_t warmup_steps(const CircuitGraph &graph);

RunRecords run_experiment(const Experiment &exp, std::uint64_t seed,
                          PropagationMode mode = PropagationMode::GridLatency);

/// Apply overrides like {"HWP1.angle", "22.5"} to a copy of `spec`.
ExperimentSpec with_overrides(const ExperimentSpec &spec,
                              const std::vector<std::pair<std::string, std::string>> &overrides);

struct PipelineResult {
    std::vector<std::pair<std::string, double>> values;
    std::string label;  // categorical outcome (bsa), empty otherwise

    double get(std::string_view name) const;
    void set(std::string name, double v) { values.emplace_back(std::move(name), v); }
};

using PipelineParams = std::map<std::string, double>;

const std::vector<std::string> &pipeline_names();
bool is_pipeline(std::string_view name);

/// Number of runs a pipeline analyzes together (chsh 4, qst 3, others 1).
std::size_t pipeline_run_count(std::string_view name);

/// Overrides producing run k of a multi-run pipeline.
std::vector<std::pair<std::string, std::string>> pipeline_run_overrides(std::string_view name, std::size_t k);

/// Analyze already recorded runs. `spec` supplies component settings such
/// as optical density; `params` may override them.
PipelineResult analyze_runs(std::string_view name, std::span<const RunRecords> runs,
                            const ExperimentSpec &spec, const PipelineParams &params = {});

/// Execute every run a pipeline needs and analyze them.
PipelineResult run_pipeline(std::string_view name, const ExperimentSpec &spec, std::uint64_t seed,
                            const PipelineParams &params = {},
                            PropagationMode mode = PropagationMode::GridLatency);

/// Inclusive arithmetic range `start:stop:step`.
std::vector<double> parse_range(std::string_view text);

struct SweepOptions {
    std::string name;         // override target
    std::vector<double> values;
    int repeat = 1;
    std::uint64_t seed = 0;
    std::string pipeline;     // optional
    std::filesystem::path out_dir;
    std::string stem = "run";
    bool write_runs = true;
    PropagationMode mode = PropagationMode::GridLatency;
};

struct SweepRow {
    double value = 0.0;
    int repeat = 0;
    std::uint64_t seed = 0;
    PipelineResult result;
};

/// Runs every (point, repeat) in parallel and writes per-run output plus
/// aggregate.csv (one row per run). Sweep-wide dark subtraction is added for
/// the born pipelines.
std::vector<SweepRow> run_sweep(const ExperimentSpec &spec, const SweepOptions &opts);

std::string aggregate_csv(const std::string &sweep_name, const std::vector<SweepRow> &rows);

}  // namespace vqol
