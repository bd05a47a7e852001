#include "vqol/engine.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <stdexcept>

namespace vqol {

StepRecord RunRecords::record(std::int64_t step) const {
    StepRecord r;
    r.step_index = step;
    for (std::size_t i = 0; i < power_meters.size(); ++i) r.power_nw.push_back(power_at(step, i));
    for (std::size_t i = 0; i < detectors.size(); ++i) r.clicks.push_back(click_at(step, i) ? 1 : 0);
    return r;
}

std::vector<double> RunRecords::power_series_w(std::size_t meter) const {
    std::vector<double> out(static_cast<std::size_t>(num_steps));
    for (std::int64_t t = 0; t < num_steps; ++t)
        out[static_cast<std::size_t>(t)] = static_cast<double>(power_at(t, meter)) * 1e-9;
    return out;
}

bool operator==(const FieldFrame &a, const FieldFrame &b) {
    if (a.step_index != b.step_index || a.edges.size() != b.edges.size()) return false;
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
        const auto &ea = a.edges[i], &eb = b.edges[i];
        if (ea.edge_id != eb.edge_id || ea.cells.size() != eb.cells.size()) return false;
        for (std::size_t k = 0; k < ea.cells.size(); ++k) {
            const auto &ca = ea.cells[k], &cb = eb.cells[k];
            if (!(ca.cell == cb.cell) || ca.present != cb.present || !(ca.field == cb.field))
                return false;
        }
    }
    return true;
}

Engine::Engine(const CircuitGraph &graph, const RunConfig &config) : graph_(&graph), config_(config) {
    if (!graph.ok()) throw std::invalid_argument("circuit has layout errors");
    if (config.num_steps <= 0) throw std::invalid_argument("num_steps must be positive");
    if (config.cell_latency_steps < 1) throw std::invalid_argument("cell latency must be at least 1");

    edges_.resize(graph.edges.size());
    for (const auto &e : graph.edges) {
        RtEdge &r = edges_[static_cast<std::size_t>(e.id)];
        r.latency = e.extra_delay +
                    (config.mode == PropagationMode::GridLatency ? e.cells * config.cell_latency_steps : 0);
        r.dst = e.dst_node;
        if (r.latency > 0) r.ring.assign(static_cast<std::size_t>(r.latency), Sample{});
    }

    nodes_.resize(graph.nodes.size());
    sink_energy_.assign(graph.nodes.size(), 0.0);
    for (const auto &gn : graph.nodes) {
        RtNode &n = nodes_[static_cast<std::size_t>(gn.id)];
        const auto &p = gn.placement.params;
        n.kind = p.kind;
        n.cls = kind_class(p.kind);
        n.params = p;
        n.inputs = gn.inputs;
        n.outputs = gn.outputs;
        switch (n.cls) {
        case KindClass::Lossless:
            n.random_matrix = p.kind == Kind::Dephaser || p.kind == Kind::Depolarizer;
            if (!n.random_matrix) n.matrix = jones_matrix_of(p, KeyedRng(0, 0, 0));
            break;
        case KindClass::Lossy:
            if (p.kind == Kind::NeutralDensityFilter) {
                n.keep = std::pow(10.0, -p.d / 2.0);
                n.inject = 1.0 - n.keep;
            } else if (p.kind == Kind::Polarizer) {
                n.matrix = polarizer_projection(p.angle, p.phi);
                const auto &m = n.matrix.m;
                n.complement = JonesMatrix::from(1.0 - m[0], -m[1], -m[2], 1.0 - m[3]);
            }
            break;
        case KindClass::Source:
            if (p.kind == Kind::Laser)
                n.mean = std::sqrt(laser_alpha_sq(p.power)) * polarization_ket(p.polarization);
            if (p.kind == Kind::LED) n.amplitude = std::sqrt(led_sigma_sq(p.power) + constants::sigma0_sq);
            break;
        case KindClass::Sink:
            if (p.kind == Kind::PowerMeter) {
                n.sink_index = static_cast<int>(power_meters_.size());
                power_meters_.push_back({gn.id, node_label(gn)});
            } else {
                n.sink_index = static_cast<int>(detectors_.size());
                detectors_.push_back({gn.id, node_label(gn)});
                const double g = threshold_from_dcr(p.dcr);
                n.gamma_sq = g * g;
            }
            break;
        default:
            break;
        }
    }
    if (detectors_.size() > 64) throw std::invalid_argument("at most 64 detectors are supported");
    pm_values_.assign(power_meters_.size(), 0);
    detector_counts_.assign(detectors_.size(), 0);

    // Evaluation order: zero-latency edges must be produced before consumed.
    const std::size_t nn = nodes_.size();
    std::vector<int> indeg(nn, 0);
    for (const auto &e : graph.edges) {
        if (e.dst_node >= 0 && edges_[static_cast<std::size_t>(e.id)].latency == 0)
            ++indeg[static_cast<std::size_t>(e.dst_node)];
    }
    std::queue<int> ready;
    for (std::size_t i = 0; i < nn; ++i) {
        if (indeg[i] == 0) ready.push(static_cast<int>(i));
    }
    while (!ready.empty()) {
        const int id = ready.front();
        ready.pop();
        order_.push_back(id);
        for (int out : nodes_[static_cast<std::size_t>(id)].outputs) {
            if (out < 0) continue;
            const RtEdge &e = edges_[static_cast<std::size_t>(out)];
            if (e.latency == 0 && e.dst >= 0 && --indeg[static_cast<std::size_t>(e.dst)] == 0)
                ready.push(e.dst);
        }
    }
    if (order_.size() != nn) throw std::invalid_argument("circuit contains a zero-latency loop");

    // Random keys are taken relative to the earliest possible arrival so that
    // grid and instant propagation draw identical numbers for the same
    // segment.
    constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
    std::vector<std::int64_t> dist(nn, kInf);
    for (std::size_t i = 0; i < nn; ++i) {
        if (nodes_[i].cls == KindClass::Source) dist[i] = 0;
    }
    for (std::size_t iter = 0; iter <= nn; ++iter) {
        bool changed = false;
        for (const auto &e : graph.edges) {
            if (e.dst_node < 0) continue;
            const auto s = static_cast<std::size_t>(e.src_node);
            const auto d = static_cast<std::size_t>(e.dst_node);
            if (dist[s] == kInf || nodes_[d].cls == KindClass::Source) continue;
            const std::int64_t cand = dist[s] + edges_[static_cast<std::size_t>(e.id)].latency;
            if (cand < dist[d]) {
                dist[d] = cand;
                changed = true;
            }
        }
        if (!changed) break;
    }
    for (std::size_t i = 0; i < nn; ++i) nodes_[i].offset = dist[i] == kInf ? 0 : dist[i];
}

double Engine::sink_energy(int node) const { return sink_energy_[static_cast<std::size_t>(node)]; }

Sample Engine::input_of(int edge) const {
    if (edge < 0) return {};
    const RtEdge &e = edges_[static_cast<std::size_t>(edge)];
    return e.latency > 0 ? e.arrival : e.current;
}

void Engine::emit(int edge, const Sample &s) {
    if (edge < 0) return;
    RtEdge &e = edges_[static_cast<std::size_t>(edge)];
    e.current = s;
    if (e.latency > 0) e.ring[static_cast<std::size_t>(t_ % e.latency)] = s;
}

void Engine::evaluate(int node_id) {
    RtNode &n = nodes_[static_cast<std::size_t>(node_id)];
    const auto key_step = static_cast<std::uint64_t>(t_ - n.offset);
    switch (n.cls) {
    case KindClass::Source: {
        const KeyedRng rng(config_.seed, static_cast<std::uint64_t>(node_id), key_step);
        if (n.kind == Kind::Laser) {
            emit(n.outputs[0], {n.mean + kSigma0 * rng.gaussian_pair(0), true});
        } else if (n.kind == Kind::LED) {
            emit(n.outputs[0], {n.amplitude * rng.gaussian_pair(0), true});
        } else {
            const SourceSample s = sample_source(n.params, rng);
            emit(n.outputs[0], {s.a, true});
            emit(n.outputs[1], {s.b, true});
        }
        return;
    }
    case KindClass::Lossless: {
        const Sample in = input_of(n.inputs[0]);
        if (!in.present) {
            emit(n.outputs[0], {});
            return;
        }
        if (n.random_matrix) {
            const KeyedRng rng(config_.seed, static_cast<std::uint64_t>(node_id), key_step);
            emit(n.outputs[0], {jones_matrix_of(n.params, rng) * in.field, true});
        } else {
            emit(n.outputs[0], {n.matrix * in.field, true});
        }
        return;
    }
    case KindClass::Delay:
        emit(n.outputs[0], input_of(n.inputs[0]));
        return;
    case KindClass::Lossy: {
        const Sample in = input_of(n.inputs[0]);
        if (!in.present) {
            emit(n.outputs[0], {});
            return;
        }
        const KeyedRng rng(config_.seed, static_cast<std::uint64_t>(node_id), key_step);
        const JonesVector vac = kSigma0 * rng.gaussian_pair(0);
        JonesVector out;
        if (n.kind == Kind::NeutralDensityFilter) out = n.keep * in.field + n.inject * vac;
        else if (n.kind == Kind::Polarizer) out = n.matrix * in.field + n.complement * vac;
        else out = vac;
        emit(n.outputs[0], {out, true});
        return;
    }
    case KindClass::TwoBeam: {
        Sample a = input_of(n.inputs[0]);
        Sample b = input_of(n.inputs[1]);
        if (!a.present && !b.present) {
            emit(n.outputs[0], {});
            emit(n.outputs[1], {});
            return;
        }
        const KeyedRng rng(config_.seed, static_cast<std::uint64_t>(node_id), key_step);
        if (!a.present) a.field = kSigma0 * rng.gaussian_pair(0);
        if (!b.present) b.field = kSigma0 * rng.gaussian_pair(2);
        const BeamPair out = apply_two_beam(n.params, a.field, b.field);
        emit(n.outputs[0], {out.a, true});
        emit(n.outputs[1], {out.b, true});
        return;
    }
    case KindClass::Sink: {
        double energy = 0.0;
        double best = 0.0;
        bool click = false;
        if (n.inputs.empty()) {
            const KeyedRng rng(config_.seed, static_cast<std::uint64_t>(node_id), key_step);
            const JonesVector vac = kSigma0 * rng.gaussian_pair(0);
            energy = best = vac.norm_sq();
            click = crosses_threshold(n.gamma_sq, vac);
        } else {
            for (int e : n.inputs) {
                const Sample s = input_of(e);
                if (!s.present) continue;
                const double ns = s.field.norm_sq();
                energy += ns;
                best = std::max(best, ns);
                if (crosses_threshold(n.gamma_sq, s.field)) click = true;
            }
        }
        sink_energy_[static_cast<std::size_t>(node_id)] = energy;
        if (n.kind == Kind::PowerMeter) {
            pm_values_[static_cast<std::size_t>(n.sink_index)] =
                quantize_nw(best * constants::photon_energy / constants::delta_t);
        } else if (click) {
            click_mask_ |= std::uint64_t{1} << n.sink_index;
            ++detector_counts_[static_cast<std::size_t>(n.sink_index)];
        }
        return;
    }
    }
}

void Engine::step() {
    for (auto &e : edges_) {
        if (e.latency > 0) e.arrival = e.ring[static_cast<std::size_t>(t_ % e.latency)];
    }
    click_mask_ = 0;
    for (int id : order_) evaluate(id);
    ++t_;
}

Sample Engine::emitted(int edge, int age) const {
    const RtEdge &e = edges_[static_cast<std::size_t>(edge)];
    const std::int64_t last = t_ - 1;
    if (last < 0 || age < 0 || last - age < 0) return {};
    if (e.latency == 0) return age == 0 ? e.current : Sample{};
    if (age >= e.latency) return {};
    return e.ring[static_cast<std::size_t>((last - age) % e.latency)];
}

FieldFrame Engine::frame() const {
    FieldFrame f;
    f.step_index = t_ - 1;
    for (const auto &ge : graph_->edges) {
        EdgeFrame ef;
        ef.edge_id = ge.id;
        const int lat = edges_[static_cast<std::size_t>(ge.id)].latency;
        const int n = std::max(1, ge.cells);
        for (std::size_t k = 0; k < ge.cell_path.size(); ++k) {
            const int age = static_cast<int>((static_cast<std::int64_t>(k) * lat) / n);
            const Sample s = emitted(ge.id, age);
            ef.cells.push_back({ge.cell_path[k], s.present, s.field});
        }
        f.edges.push_back(std::move(ef));
    }
    return f;
}

void run_streaming(const CircuitGraph &graph, const RunConfig &config, const StepVisitor &visitor) {
    Engine engine(graph, config);
    for (std::int64_t t = 0; t < config.num_steps; ++t) {
        engine.step();
        if (visitor) visitor(t, engine.power_nw(), engine.clicks());
    }
}

RunRecords run(const CircuitGraph &graph, const RunConfig &config) {
    Engine engine(graph, config);
    RunRecords rec;
    rec.num_steps = config.num_steps;
    rec.power_meters = engine.power_meters();
    rec.detectors = engine.detectors();
    rec.power_nw.reserve(static_cast<std::size_t>(config.num_steps) * rec.power_meters.size());
    rec.clicks.reserve(static_cast<std::size_t>(config.num_steps));
    for (std::int64_t t = 0; t < config.num_steps; ++t) {
        engine.step();
        const auto pm = engine.power_nw();
        rec.power_nw.insert(rec.power_nw.end(), pm.begin(), pm.end());
        rec.clicks.push_back(engine.clicks());
    }
    return rec;
}

FieldFrame frame_at(const CircuitGraph &graph, const RunConfig &config, std::int64_t step) {
    if (step < 0 || step >= config.num_steps)
        throw std::out_of_range("step " + std::to_string(step) + " outside [0, " +
                                std::to_string(config.num_steps) + ")");
    Engine engine(graph, config);
    for (std::int64_t t = 0; t <= step; ++t) engine.step();
    return engine.frame();
}

}  // namespace vqol
