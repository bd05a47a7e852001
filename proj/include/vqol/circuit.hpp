#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vqol/components.hpp"
#include "vqol/diagnostics.hpp"

namespace vqol {

/// Grid steps of one cell of travel. A TimeDelay of this many steps sets a
/// beam back by one grid space.
inline constexpr int kCellLatency = 10;

/// Travel directions on the table. x grows to the right and y grows
/// downward, so Up is -y.
enum class Direction { Right = 0, Up = 1, Left = 2, Down = 3 };

/// Rotate counterclockwise by `quarter_turns` * 90 degrees.
inline Direction rotate(Direction d, int quarter_turns) {
    return static_cast<Direction>(((static_cast<int>(d) + quarter_turns) % 4 + 4) % 4);
}
int dx_of(Direction d);
int dy_of(Direction d);
char direction_letter(Direction d);

struct GridPlacement {
    ComponentParams params;
    int x = 0;
    int y = 0;
    int orientation = 0;  // degrees, multiple of 90
    std::string id;       // optional user label

    friend bool operator==(const GridPlacement &, const GridPlacement &) = default;
};

struct Cell {
    int x = 0;
    int y = 0;
    friend bool operator==(const Cell &, const Cell &) = default;
};

struct Node {
    int id = 0;
    GridPlacement placement;
    /// Incoming edge per input port; two-beam elements use ports 0 (a) and
    /// 1 (b), single-beam elements port 0, sinks one port per edge.
    std::vector<int> inputs;
    /// Outgoing edge per output port, -1 when the port is not live.
    std::vector<int> outputs;
};

struct Edge {
    int id = 0;
    int src_node = -1;
    int src_port = 0;
    int dst_node = -1;  // -1: leaves the table or is blocked
    int dst_port = -1;
    Direction direction = Direction::Right;
    int cells = 0;        // cells travelled, counting the destination cell
    int extra_delay = 0;  // TimeDelay steps charged on this edge
    int latency_steps = 0;
    /// Cells strictly between the source and destination, plus the last
    /// on-table cell for beams that leave the table.
    std::vector<Cell> cell_path;
};

struct CircuitGraph {
    int width = 32;
    int height = 32;
    int cell_latency = kCellLatency;
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    Diagnostics diagnostics;

    int node_at(int x, int y) const;
    std::vector<int> nodes_of_kind(Kind k) const;
    bool ok() const { return !has_errors(diagnostics); }
};

struct RouteOptions {
    int width = 32;
    int height = 32;
    int cell_latency = kCellLatency;
};

/// Node id order: placements sorted by (y, x).
CircuitGraph route(const std::vector<GridPlacement> &placements, const RouteOptions &opts = {});

/// "D1" when an id label is set, otherwise "Detector(5,1)".
std::string node_label(const Node &n);

struct PathLatency {
    int source_node = -1;
    int latency_steps = 0;
    friend bool operator==(const PathLatency &, const PathLatency &) = default;
};

struct PathReport {
    /// sink node id -> every distinct (source, total latency) it is fed by
    std::map<int, std::vector<PathLatency>> sinks;
    Diagnostics warnings;
};

PathReport path_length_report(const CircuitGraph &g);

}  // namespace vqol
