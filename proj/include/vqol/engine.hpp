#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vqol/circuit.hpp"
#include "vqol/components.hpp"

namespace vqol {

enum class PropagationMode { GridLatency, Instant };

struct RunConfig {
    std::uint64_t seed = 0;
    std::int64_t num_steps = 1000;
    int cell_latency_steps = kCellLatency;
    PropagationMode mode = PropagationMode::GridLatency;
};

/// One recorded time step.
struct StepRecord {
    std::int64_t step_index = 0;
    std::vector<std::int64_t> power_nw;  // per power meter, whole nanowatts
    std::vector<std::uint8_t> clicks;    // per detector, 0 or 1
    friend bool operator==(const StepRecord &, const StepRecord &) = default;
};

struct SinkInfo {
    int node = -1;
    std::string label;
    bool operator==(const SinkInfo &) const = default;
};

/// Compact storage of a whole run: one int64 per power meter per step and a
/// click bitmask per step (bit i is detector i in node order).
struct RunRecords {
    std::int64_t num_steps = 0;
    std::vector<SinkInfo> power_meters;
    std::vector<SinkInfo> detectors;
    std::vector<std::int64_t> power_nw;
    std::vector<std::uint64_t> clicks;

    std::int64_t power_at(std::int64_t step, std::size_t meter) const {
        return power_nw[static_cast<std::size_t>(step) * power_meters.size() + meter];
    }
    bool click_at(std::int64_t step, std::size_t detector) const {
        return (clicks[static_cast<std::size_t>(step)] >> detector) & 1u;
    }
    StepRecord record(std::int64_t step) const;
    std::vector<double> power_series_w(std::size_t meter) const;
    friend bool operator==(const RunRecords &, const RunRecords &) = default;
};

/// Called once per step with the power readings and click mask.
using StepVisitor =
    std::function<void(std::int64_t step, std::span<const std::int64_t> power_nw, std::uint64_t clicks)>;

struct Sample {
    JonesVector field;
    bool present = false;
};

struct CellField {
    Cell cell;
    bool present = false;
    JonesVector field;
};

struct EdgeFrame {
    int edge_id = 0;
    std::vector<CellField> cells;
};

struct FieldFrame {
    std::int64_t step_index = 0;
    std::vector<EdgeFrame> edges;
    friend bool operator==(const FieldFrame &a, const FieldFrame &b);
};

/// Step-by-step executor of a routed circuit.
class Engine {
public:
    Engine(const CircuitGraph &graph, const RunConfig &config);

    /// Evaluate the next step.
    void step();
    std::int64_t next_step() const { return t_; }

    std::span<const std::int64_t> power_nw() const { return pm_values_; }
    std::uint64_t clicks() const { return click_mask_; }
    const std::vector<SinkInfo> &power_meters() const { return power_meters_; }
    const std::vector<SinkInfo> &detectors() const { return detectors_; }
    /// Cumulative clicks per detector so far.
    const std::vector<std::int64_t> &detector_counts() const { return detector_counts_; }
    /// Total squared norm of the fields that reached each sink node in the
    /// last step (zero for sinks without arrivals).
    double sink_energy(int node) const;

    int latency(int edge) const { return edges_[static_cast<std::size_t>(edge)].latency; }
    /// Emission of `edge` `age` steps before the last evaluated step.
    Sample emitted(int edge, int age) const;
    /// Field state at the last evaluated step.
    FieldFrame frame() const;

private:
    struct RtEdge {
        int latency = 0;
        int dst = -1;
        std::vector<Sample> ring;
        Sample current;
        Sample arrival;
    };
    struct RtNode {
        Kind kind{};
        KindClass cls{};
        ComponentParams params;
        JonesMatrix matrix;
        JonesMatrix complement;
        bool random_matrix = false;
        double keep = 1.0;    // NDF transmission amplitude
        double inject = 0.0;  // NDF vacuum coefficient
        JonesVector mean;     // laser coherent amplitude
        double amplitude = 0.0;
        double gamma_sq = 0.0;
        int sink_index = -1;
        std::int64_t offset = 0;
        std::vector<int> inputs;
        std::vector<int> outputs;
    };

    Sample input_of(int edge) const;
    void emit(int edge, const Sample &s);
    void evaluate(int node_id);

    const CircuitGraph *graph_;
    RunConfig config_;
    std::int64_t t_ = 0;
    std::vector<RtEdge> edges_;
    std::vector<RtNode> nodes_;
    std::vector<int> order_;
    std::vector<SinkInfo> power_meters_;
    std::vector<SinkInfo> detectors_;
    std::vector<std::int64_t> pm_values_;
    std::vector<std::int64_t> detector_counts_;
    std::vector<double> sink_energy_;
    std::uint64_t click_mask_ = 0;
};

/// Stream a run through `visitor` without storing records.
void run_streaming(const CircuitGraph &graph, const RunConfig &config, const StepVisitor &visitor);

RunRecords run(const CircuitGraph &graph, const RunConfig &config);

/// Replays the run from step 0; pure in (graph, config, step).
FieldFrame frame_at(const CircuitGraph &graph, const RunConfig &config, std::int64_t step);

}  // namespace vqol
