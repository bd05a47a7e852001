#include "vqol/circuit.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>
#include <tuple>

namespace vqol {

namespace {

std::string at(int x, int y) { return "(" + std::to_string(x) + "," + std::to_string(y) + ")"; }

Direction from_letter(char c) {
    switch (c) {
    case 'L': return Direction::Left;
    case 'R': return Direction::Right;
    case 'U': return Direction::Up;
    default: return Direction::Down;
    }
}

int quarter_turns(const GridPlacement &p) { return ((p.orientation / 90) % 4 + 4) % 4; }

struct Emission {
    int node;
    int port;
    Direction dir;
};

}  // namespace

int dx_of(Direction d) {
    switch (d) {
    case Direction::Right: return 1;
    case Direction::Left: return -1;
    default: return 0;
    }
}

int dy_of(Direction d) {
    switch (d) {
    case Direction::Down: return 1;
    case Direction::Up: return -1;
    default: return 0;
    }
}

char direction_letter(Direction d) {
    switch (d) {
    case Direction::Right: return 'R';
    case Direction::Up: return 'U';
    case Direction::Left: return 'L';
    case Direction::Down: return 'D';
    }
    return 'R';
}

int CircuitGraph::node_at(int x, int y) const {
    for (const auto &n : nodes) {
        if (n.placement.x == x && n.placement.y == y) return n.id;
    }
    return -1;
}

std::vector<int> CircuitGraph::nodes_of_kind(Kind k) const {
    std::vector<int> out;
    for (const auto &n : nodes) {
        if (n.placement.params.kind == k) out.push_back(n.id);
    }
    return out;
}

std::string node_label(const Node &n) {
    if (!n.placement.id.empty()) return n.placement.id;
    return std::string(kind_name(n.placement.params.kind)) + at(n.placement.x, n.placement.y);
}

CircuitGraph route(const std::vector<GridPlacement> &placements, const RouteOptions &opts) {
    CircuitGraph g;
    g.width = opts.width;
    g.height = opts.height;
    g.cell_latency = opts.cell_latency;

    std::vector<GridPlacement> sorted = placements;
    std::stable_sort(sorted.begin(), sorted.end(), [](const GridPlacement &a, const GridPlacement &b) {
        return std::tie(a.y, a.x) < std::tie(b.y, b.x);
    });

    std::vector<int> grid(static_cast<std::size_t>(std::max(0, g.width * g.height)), -1);
    for (const auto &p : sorted) {
        if (p.x < 0 || p.y < 0 || p.x >= g.width || p.y >= g.height) {
            g.diagnostics.push_back({Severity::Error,
                                     std::string(kind_name(p.params.kind)) + " at " + at(p.x, p.y) +
                                         " is outside the " + std::to_string(g.width) + "x" +
                                         std::to_string(g.height) + " table",
                                     -1, -1, p.x, p.y});
            continue;
        }
        if (p.orientation % 90 != 0) {
            g.diagnostics.push_back({Severity::Error, "orientation must be a multiple of 90", -1, -1,
                                     p.x, p.y});
            continue;
        }
        int &slot = grid[static_cast<std::size_t>(p.y * g.width + p.x)];
        if (slot >= 0) {
            g.diagnostics.push_back({Severity::Error, "two components at " + at(p.x, p.y), -1, -1,
                                     p.x, p.y});
            continue;
        }
        Node n;
        n.id = static_cast<int>(g.nodes.size());
        n.placement = p;
        n.placement.orientation = ((p.orientation % 360) + 360) % 360;
        switch (kind_class(p.params.kind)) {
        case KindClass::TwoBeam:
            n.inputs.assign(2, -1);
            n.outputs.assign(2, -1);
            break;
        case KindClass::Source:
            n.outputs.assign(p.params.kind == Kind::EntanglementSource ? 2 : 1, -1);
            break;
        case KindClass::Sink:
            break;
        default:
            n.inputs.assign(1, -1);
            n.outputs.assign(1, -1);
            break;
        }
        slot = n.id;
        g.nodes.push_back(std::move(n));
    }

    std::deque<Emission> queue;
    for (const auto &n : g.nodes) {
        const auto &p = n.placement;
        if (p.params.kind == Kind::EntanglementSource) {
            const std::string_view dirs = directions_name(p.params.directions);
            queue.push_back({n.id, 0, from_letter(dirs[0])});
            queue.push_back({n.id, 1, from_letter(dirs[1])});
        } else if (kind_class(p.params.kind) == KindClass::Source) {
            queue.push_back({n.id, 0, rotate(Direction::Right, quarter_turns(p))});
        }
    }

    auto enqueue_outputs = [&](int node_id, Direction incoming) {
        Node &n = g.nodes[static_cast<std::size_t>(node_id)];
        const KindClass cls = kind_class(n.placement.params.kind);
        if (cls == KindClass::TwoBeam) {
            const int k = quarter_turns(n.placement);
            queue.push_back({node_id, 0, rotate(Direction::Right, k)});
            queue.push_back({node_id, 1, rotate(Direction::Down, k)});
        } else {
            queue.push_back({node_id, 0, incoming});
        }
    };

    while (!queue.empty()) {
        const Emission em = queue.front();
        queue.pop_front();
        Node &src = g.nodes[static_cast<std::size_t>(em.node)];
        if (src.outputs[static_cast<std::size_t>(em.port)] >= 0) continue;

        Edge e;
        e.id = static_cast<int>(g.edges.size());
        e.src_node = em.node;
        e.src_port = em.port;
        e.direction = em.dir;
        if (src.placement.params.kind == Kind::TimeDelay) e.extra_delay = src.placement.params.steps;

        int x = src.placement.x, y = src.placement.y;
        int hit = -1;
        while (true) {
            x += dx_of(em.dir);
            y += dy_of(em.dir);
            if (x < 0 || y < 0 || x >= g.width || y >= g.height) break;
            ++e.cells;
            hit = grid[static_cast<std::size_t>(y * g.width + x)];
            if (hit >= 0) break;
            e.cell_path.push_back({x, y});
        }
        e.latency_steps = e.cells * g.cell_latency + e.extra_delay;
        src.outputs[static_cast<std::size_t>(em.port)] = e.id;

        if (hit >= 0) {
            Node &dst = g.nodes[static_cast<std::size_t>(hit)];
            const auto &dp = dst.placement;
            switch (kind_class(dp.params.kind)) {
            case KindClass::Sink:
                e.dst_node = hit;
                e.dst_port = static_cast<int>(dst.inputs.size());
                dst.inputs.push_back(e.id);
                break;
            case KindClass::Source:
                g.diagnostics.push_back({Severity::Warning,
                                         "beam blocked by " + std::string(kind_name(dp.params.kind)) +
                                             " at " + at(dp.x, dp.y),
                                         -1, -1, dp.x, dp.y});
                break;
            case KindClass::TwoBeam: {
                const int k = quarter_turns(dp);
                int port = -1;
                if (em.dir == rotate(Direction::Right, k)) port = 0;
                if (em.dir == rotate(Direction::Down, k)) port = 1;
                if (port < 0) {
                    g.diagnostics.push_back({Severity::Warning,
                                             "beam strikes a side face of " +
                                                 std::string(kind_name(dp.params.kind)) + " at " +
                                                 at(dp.x, dp.y) + " and terminates",
                                             -1, -1, dp.x, dp.y});
                    break;
                }
                if (dst.inputs[static_cast<std::size_t>(port)] >= 0) {
                    g.diagnostics.push_back({Severity::Error, "port conflict at " + at(dp.x, dp.y),
                                             -1, -1, dp.x, dp.y});
                    break;
                }
                const bool first = dst.inputs[0] < 0 && dst.inputs[1] < 0;
                dst.inputs[static_cast<std::size_t>(port)] = e.id;
                e.dst_node = hit;
                e.dst_port = port;
                if (first) enqueue_outputs(hit, em.dir);
                break;
            }
            default:
                if (dst.inputs[0] >= 0) {
                    g.diagnostics.push_back({Severity::Error, "port conflict at " + at(dp.x, dp.y),
                                             -1, -1, dp.x, dp.y});
                    break;
                }
                dst.inputs[0] = e.id;
                e.dst_node = hit;
                e.dst_port = 0;
                enqueue_outputs(hit, em.dir);
                break;
            }
        }
        g.edges.push_back(std::move(e));
    }
    return g;
}

PathReport path_length_report(const CircuitGraph &g) {
    PathReport report;
    std::map<int, std::set<std::pair<int, int>>> found;  // sink -> {(source, latency)}
    std::vector<char> on_stack(g.nodes.size(), 0);
    std::size_t budget = 1'000'000;

    auto walk = [&](auto &&self, int source, int edge_id, int total) -> void {
        if (budget == 0) return;
        --budget;
        const Edge &e = g.edges[static_cast<std::size_t>(edge_id)];
        const int t = total + e.latency_steps;
        if (e.dst_node < 0) return;
        const Node &n = g.nodes[static_cast<std::size_t>(e.dst_node)];
        const KindClass cls = kind_class(n.placement.params.kind);
        if (cls == KindClass::Sink) {
            found[n.id].insert({source, t});
            return;
        }
        if (cls == KindClass::Source || on_stack[static_cast<std::size_t>(n.id)]) return;
        on_stack[static_cast<std::size_t>(n.id)] = 1;
        for (int out : n.outputs) {
            if (out >= 0) self(self, source, out, t);
        }
        on_stack[static_cast<std::size_t>(n.id)] = 0;
    };

    for (const auto &n : g.nodes) {
        if (kind_class(n.placement.params.kind) != KindClass::Source) continue;
        for (int out : n.outputs) {
            if (out >= 0) walk(walk, n.id, out, 0);
        }
    }

    for (const auto &[sink, set] : found) {
        auto &list = report.sinks[sink];
        for (const auto &[src, lat] : set) list.push_back({src, lat});
    }
    for (const auto &n : g.nodes) {
        if (kind_class(n.placement.params.kind) == KindClass::Sink && !report.sinks.count(n.id))
            report.sinks[n.id] = {};
    }

    auto label = [&](int id) { return node_label(g.nodes[static_cast<std::size_t>(id)]); };

    // Multiple latencies from one source to one sink.
    for (const auto &[sink, list] : report.sinks) {
        for (std::size_t i = 0; i + 1 < list.size(); ++i) {
            if (list[i].source_node == list[i + 1].source_node &&
                list[i].latency_steps != list[i + 1].latency_steps) {
                const Node &sn = g.nodes[static_cast<std::size_t>(sink)];
                report.warnings.push_back(
                    {Severity::Warning,
                     "paths from " + label(list[i].source_node) + " to " + label(sink) +
                         " have unequal latency (" + std::to_string(list[i].latency_steps) + " vs " +
                         std::to_string(list[i + 1].latency_steps) + " steps)",
                     -1, -1, sn.placement.x, sn.placement.y});
            }
        }
    }

    // Sinks fed by a common source at different shortest latencies.
    auto min_latency = [](const std::vector<PathLatency> &list, int source) {
        int best = -1;
        for (const auto &p : list) {
            if (p.source_node == source && (best < 0 || p.latency_steps < best)) best = p.latency_steps;
        }
        return best;
    };
    for (auto i = report.sinks.begin(); i != report.sinks.end(); ++i) {
        for (auto j = std::next(i); j != report.sinks.end(); ++j) {
            std::set<int> sources;
            for (const auto &p : i->second) sources.insert(p.source_node);
            for (int s : sources) {
                const int a = min_latency(i->second, s);
                const int b = min_latency(j->second, s);
                if (b < 0 || a == b) continue;
                const Node &sn = g.nodes[static_cast<std::size_t>(j->first)];
                report.warnings.push_back(
                    {Severity::Warning,
                     "unequal path latency from " + label(s) + ": " + label(i->first) + " at " +
                         std::to_string(a) + " steps, " + label(j->first) + " at " +
                         std::to_string(b) + " steps (difference " + std::to_string(std::abs(a - b)) +
                         ")",
                     -1, -1, sn.placement.x, sn.placement.y});
            }
        }
    }
    return report;
}

}  // namespace vqol
