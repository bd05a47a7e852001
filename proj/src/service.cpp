#include "vqol/service.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vqol/experiment.hpp"

namespace vqol {

using json = nlohmann::json;

namespace {

struct HttpError {
    int status;
    std::string message;
    json extra = json::object();
};

json diagnostic_json(const Diagnostic &d) {
    json j{{"severity", severity_name(d.severity)}, {"message", d.message}};
    j["line"] = d.line >= 0 ? json(d.line) : json(nullptr);
    j["column"] = d.column >= 0 ? json(d.column) : json(nullptr);
    j["x"] = d.x >= 0 ? json(d.x) : json(nullptr);
    j["y"] = d.y >= 0 ? json(d.y) : json(nullptr);
    j["text"] = format_diagnostic(d);
    return j;
}

json diagnostics_json(const Diagnostics &ds) {
    json a = json::array();
    for (const auto &d : ds) a.push_back(diagnostic_json(d));
    return a;
}

json placement_json(const GridPlacement &p) {
    json j{{"kind", kind_name(p.params.kind)}, {"x", p.x}, {"y", p.y}, {"orientation", p.orientation}};
    if (!p.id.empty()) j["id"] = p.id;
    json params = json::object();
    const auto &q = p.params;
    for (auto key : kind_keys(q.kind)) {
        const std::string k(key);
        if (k == "angle") params[k] = q.angle;
        else if (k == "phi") params[k] = q.phi;
        else if (k == "steps") params[k] = q.steps;
        else if (k == "d") params[k] = q.d;
        else if (k == "r") params[k] = q.r;
        else if (k == "basis") params[k] = basis_name(q.basis);
        else if (k == "power") params[k] = q.power;
        else if (k == "polarization") params[k] = polarization_name(q.polarization);
        else if (k == "type") params[k] = ent_type_name(q.ent_type);
        else if (k == "varphi") params[k] = q.varphi;
        else if (k == "directions") params[k] = directions_name(q.directions);
        else if (k == "dcr") params[k] = q.dcr;
    }
    j["params"] = params;
    return j;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json table_json(const CoincidenceTable &t) {
    json a = json::array();
    for (auto m : pattern_order(t.num_detectors())) {
        json dets = json::array();
        for (int i = 0; i < t.num_detectors(); ++i) {
            if ((m >> i) & 1u) dets.push_back(i + 1);
        }
        a.push_back({{"pattern", pattern_name(m, t.num_detectors())}, {"detectors", dets}, {"count", t.count(m)}});
    }
    return a;
}

json labels_json(const std::vector<SinkInfo> &sinks) {
    json a = json::array();
    for (const auto &s : sinks) a.push_back(s.label);
    return a;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < path.size()) {
        while (i < path.size() && path[i] == '/') ++i;
        const std::size_t j = path.find('/', i);
        const std::size_t end = j == std::string_view::npos ? path.size() : j;
        if (end > i) out.emplace_back(path.substr(i, end - i));
        i = end;
    }
    return out;
}

std::int64_t parse_int(const std::string &s, const char *what) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        throw HttpError{400, std::string("invalid ") + what + " '" + s + "'"};
    }
}

json parse_body(std::string_view body) {
    try {
        json j = json::parse(body);
        if (!j.is_object()) throw HttpError{400, "request body must be a JSON object"};
        return j;
    } catch (const json::exception &e) {
        throw HttpError{400, std::string("malformed JSON: ") + e.what()};
    }
}

std::string require_string(const json &j, const char *key) {
    if (!j.contains(key) || !j[key].is_string()) throw HttpError{400, std::string("missing string field '") + key + "'"};
    return j[key].get<std::string>();
}

struct CancelRun {};

}  // namespace

struct RunState {
    std::string id;
    Experiment exp;
    RunConfig cfg;
    std::string mode_name;

    mutable std::mutex mu;
    std::condition_variable cv;
    std::string status = "running";
    std::string error;
    RunRecords records;
    std::int64_t done = 0;

    std::mutex cache_mu;
    std::map<std::int64_t, std::string> frame_cache;
    std::deque<std::int64_t> cache_order;

    std::thread worker;
};

struct Service::Impl {
    ServiceOptions options;
    std::mutex mu;
    std::map<std::string, std::shared_ptr<RunState>> runs;
    std::uint64_t next_id = 1;
    std::atomic<bool> stopping{false};
    httplib::Server server;
    std::thread server_thread;

    std::shared_ptr<RunState> find(const std::string &id) {
        std::lock_guard lock(mu);
        const auto it = runs.find(id);
        if (it == runs.end()) throw HttpError{404, "unknown run '" + id + "'"};
        return it->second;
    }

    void execute(RunState &rs) {
        try {
            Engine engine(rs.exp.graph, rs.cfg);
            {
                std::lock_guard lock(rs.mu);
                rs.records.num_steps = 0;
                rs.records.power_meters = engine.power_meters();
                rs.records.detectors = engine.detectors();
            }
            std::vector<std::int64_t> power;
            std::vector<std::uint64_t> clicks;
            constexpr std::int64_t kFlush = 4096;
            auto flush = [&] {
                std::lock_guard lock(rs.mu);
                rs.records.power_nw.insert(rs.records.power_nw.end(), power.begin(), power.end());
                rs.records.clicks.insert(rs.records.clicks.end(), clicks.begin(), clicks.end());
                rs.records.num_steps += static_cast<std::int64_t>(clicks.size());
                rs.done = rs.records.num_steps;
                power.clear();
                clicks.clear();
            };
            for (std::int64_t t = 0; t < rs.cfg.num_steps; ++t) {
                engine.step();
                const auto pm = engine.power_nw();
                power.insert(power.end(), pm.begin(), pm.end());
                clicks.push_back(engine.clicks());
                if (static_cast<std::int64_t>(clicks.size()) == kFlush) {
                    flush();
                    if (stopping) throw CancelRun{};
                }
            }
            flush();
            std::lock_guard lock(rs.mu);
            rs.status = "done";
        } catch (const CancelRun &) {
            std::lock_guard lock(rs.mu);
            rs.status = "cancelled";
        } catch (const std::exception &e) {
            std::lock_guard lock(rs.mu);
            rs.status = "failed";
            rs.error = e.what();
        }
        rs.cv.notify_all();
    }

    HttpResponse validate(const json &req) {
        const std::string text = require_string(req, "dsl_text");
        const Experiment e = load_experiment(text);
        json out{{"ok", e.ok()}, {"diagnostics", diagnostics_json(e.diagnostics)}};
        json placements = json::array();
        for (const auto &p : e.spec.placements) placements.push_back(placement_json(p));
        out["placements"] = placements;
        out["num_seconds"] = e.spec.num_seconds;
        out["offline_mode"] = e.spec.offline_mode;
        if (e.ok()) {
            out["canonical"] = serialize(e.spec);
            const auto report = path_length_report(e.graph);
            json sinks = json::array();
            for (const auto &[sink, list] : report.sinks) {
                json paths = json::array();
                for (const auto &p : list) {
                    paths.push_back({{"source", node_label(e.graph.nodes[static_cast<std::size_t>(p.source_node)])},
                                     {"latency_steps", p.latency_steps}});
                }
                sinks.push_back({{"sink", node_label(e.graph.nodes[static_cast<std::size_t>(sink)])}, {"paths", paths}});
            }
            out["path_length_report"] = {{"sinks", sinks}, {"warnings", diagnostics_json(report.warnings)}};
        } else {
            out["path_length_report"] = nullptr;
        }
        return {200, out.dump()};
    }

    HttpResponse create_run(const json &req) {
        const std::string text = require_string(req, "dsl_text");
        Experiment e = load_experiment(text);
        if (!e.ok()) throw HttpError{400, "invalid experiment", {{"diagnostics", diagnostics_json(e.diagnostics)}}};
        auto rs = std::make_shared<RunState>();
        rs->cfg.seed = req.value("seed", std::uint64_t{0});
        rs->mode_name = req.value("mode", std::string("grid"));
        if (rs->mode_name == "grid") rs->cfg.mode = PropagationMode::GridLatency;
        else if (rs->mode_name == "instant") rs->cfg.mode = PropagationMode::Instant;
        else throw HttpError{400, "mode must be 'grid' or 'instant'"};
        rs->cfg.num_steps = req.contains("num_steps") ? req["num_steps"].get<std::int64_t>() : e.spec.num_steps();
        if (rs->cfg.num_steps <= 0) throw HttpError{400, "num_steps must be positive"};
        rs->cfg.cell_latency_steps = e.graph.cell_latency;
        rs->exp = std::move(e);
        {
            std::lock_guard lock(mu);
            rs->id = "run-" + std::to_string(next_id++);
            runs[rs->id] = rs;
        }
        rs->worker = std::thread([this, rs] { execute(*rs); });
        return {202, json{{"run_id", rs->id}}.dump()};
    }

    HttpResponse run_status(const std::string &id) {
        auto rs = find(id);
        std::lock_guard lock(rs->mu);
        json out{{"run_id", id},
                 {"status", rs->status},
                 {"steps_done", rs->done},
                 {"num_steps", rs->cfg.num_steps},
                 {"progress", static_cast<double>(rs->done) / static_cast<double>(rs->cfg.num_steps)},
                 {"seed", rs->cfg.seed},
                 {"mode", rs->mode_name}};
        if (!rs->error.empty()) out["error"] = rs->error;
        if (rs->status == "done") {
            const auto table = tabulate(rs->records);
            json totals = json::object();
            for (std::size_t i = 0; i < rs->records.detectors.size(); ++i)
                totals[rs->records.detectors[i].label] = table.detector_total(static_cast<int>(i));
            json means = json::object();
            for (std::size_t i = 0; i < rs->records.power_meters.size(); ++i) {
                double sum = 0.0;
                for (std::int64_t t = 0; t < rs->records.num_steps; ++t)
                    sum += static_cast<double>(rs->records.power_at(t, i));
                means[rs->records.power_meters[i].label] = sum * 1e-9 / static_cast<double>(rs->records.num_steps);
            }
            char hash[20];
            std::snprintf(hash, sizeof hash, "%016llx",
                          static_cast<unsigned long long>(fnv1a64(serialize(rs->exp.spec))));
            out["summary"] = {{"seed", rs->cfg.seed},
                              {"spec_hash", hash},
                              {"num_steps", rs->records.num_steps},
                              {"detectors", labels_json(rs->records.detectors)},
                              {"power_meters", labels_json(rs->records.power_meters)},
                              {"detector_totals", totals},
                              {"power_mean_W", means}};
            out["coincidence_table"] = table_json(table);
        }
        return {200, out.dump()};
    }

    HttpResponse records_page(const std::string &id, const std::map<std::string, std::string> &query) {
        auto rs = find(id);
        std::lock_guard lock(rs->mu);
        const std::int64_t from = query.count("from") ? parse_int(query.at("from"), "from") : 0;
        std::int64_t to = query.count("to") ? parse_int(query.at("to"), "to") : from + 1000;
        if (from < 0 || to < from) throw HttpError{400, "invalid record range"};
        if (to - from > options.max_page) to = from + options.max_page;
        to = std::min(to, rs->done);
        json recs = json::array();
        for (std::int64_t t = from; t < to; ++t) {
            const StepRecord r = rs->records.record(t);
            json pw = json::array();
            for (auto v : r.power_nw) pw.push_back(static_cast<double>(v) * 1e-9);
            recs.push_back({{"step", t}, {"power_nw", r.power_nw}, {"power_W", pw}, {"clicks", r.clicks}});
        }
        json out{{"run_id", id},
                 {"from", from},
                 {"to", std::max(from, to)},
                 {"steps_done", rs->done},
                 {"power_meters", labels_json(rs->records.power_meters)},
                 {"detectors", labels_json(rs->records.detectors)},
                 {"records", recs}};
        return {200, out.dump()};
    }

    HttpResponse frame(const std::string &id, const std::string &step_text) {
        auto rs = find(id);
        const std::int64_t step = parse_int(step_text, "step");
        if (step < 0 || step >= rs->cfg.num_steps)
            throw HttpError{400, "step outside [0, " + std::to_string(rs->cfg.num_steps) + ")"};
        {
            std::lock_guard lock(rs->mu);
            if (step >= rs->done) throw HttpError{409, "step " + std::to_string(step) + " not yet simulated"};
        }
        {
            std::lock_guard lock(rs->cache_mu);
            const auto it = rs->frame_cache.find(step);
            if (it != rs->frame_cache.end()) return {200, it->second};
        }
        const FieldFrame f = frame_at(rs->exp.graph, rs->cfg, step);
        const auto &g = rs->exp.graph;
        json edges = json::array();
        for (const auto &ef : f.edges) {
            const Edge &e = g.edges[static_cast<std::size_t>(ef.edge_id)];
            json cells = json::array();
            for (const auto &c : ef.cells) {
                json cj{{"x", c.cell.x}, {"y", c.cell.y}, {"present", c.present}};
                if (c.present) {
                    cj["h"] = complex_json(c.field.h);
                    cj["v"] = complex_json(c.field.v);
                    cj["power_W"] = beam_power(c.field);
                    try {
                        const BlochPoint b = bloch_coords(c.field);
                        cj["bloch"] = {{"x", b.x}, {"y", b.y}, {"z", b.z}};
                    } catch (const std::domain_error &) {
                        cj["bloch"] = nullptr;
                    }
                }
                cells.push_back(cj);
            }
            edges.push_back({{"edge_id", ef.edge_id},
                             {"source", node_label(g.nodes[static_cast<std::size_t>(e.src_node)])},
                             {"target", e.dst_node >= 0 ? json(node_label(g.nodes[static_cast<std::size_t>(e.dst_node)]))
                                                        : json(nullptr)},
                             {"direction", std::string(1, direction_letter(e.direction))},
                             {"cells", cells}});
        }
        const std::string body = json{{"run_id", id}, {"step", step}, {"edges", edges}}.dump();
        std::lock_guard lock(rs->cache_mu);
        if (!rs->frame_cache.count(step)) {
            rs->frame_cache[step] = body;
            rs->cache_order.push_back(step);
            while (rs->cache_order.size() > options.frame_cache_entries) {
                rs->frame_cache.erase(rs->cache_order.front());
                rs->cache_order.pop_front();
            }
        }
        return {200, body};
    }

    HttpResponse analyze(const json &req) {
        const std::string pipeline = require_string(req, "pipeline");
        if (!is_pipeline(pipeline)) throw HttpError{400, "unknown pipeline '" + pipeline + "'"};
        std::vector<std::string> ids;
        if (req.contains("run_ids") && req["run_ids"].is_array()) {
            for (const auto &v : req["run_ids"]) ids.push_back(v.get<std::string>());
        } else if (req.contains("run_id") && req["run_id"].is_string()) {
            ids.push_back(req["run_id"].get<std::string>());
        } else {
            throw HttpError{400, "missing run_id or run_ids"};
        }
        if (ids.size() != pipeline_run_count(pipeline))
            throw HttpError{400, "pipeline " + pipeline + " takes " + std::to_string(pipeline_run_count(pipeline)) +
                                     " runs"};
        std::vector<std::shared_ptr<RunState>> states;
        std::vector<RunRecords> records;
        for (const auto &id : ids) {
            auto rs = find(id);
            std::lock_guard lock(rs->mu);
            if (rs->status != "done") throw HttpError{409, "run '" + id + "' is " + rs->status};
            records.push_back(rs->records);
            states.push_back(rs);
        }
        PipelineParams params;
        if (req.contains("params")) {
            if (!req["params"].is_object()) throw HttpError{400, "params must be an object"};
            for (const auto &[k, v] : req["params"].items()) {
                if (!v.is_number()) throw HttpError{400, "param '" + k + "' must be a number"};
                params[k] = v.get<double>();
            }
        }
        PipelineResult r;
        try {
            r = analyze_runs(pipeline, records, states.front()->exp.spec, params);
        } catch (const std::exception &e) {
            throw HttpError{422, e.what()};
        }
        json values = json::object();
        for (const auto &[k, v] : r.values) values[k] = std::isfinite(v) ? json(v) : json(nullptr);
        json out{{"pipeline", pipeline}, {"run_ids", ids}, {"values", values}};
        if (!r.label.empty()) out["label"] = r.label;
        return {200, out.dump()};
    }

    HttpResponse dispatch(std::string_view method, std::string_view path,
                          const std::map<std::string, std::string> &query, std::string_view body) {
        try {
            const auto seg = split_path(path);
            if (seg.size() < 2 || seg[0] != "api") throw HttpError{404, "no such endpoint"};
            auto want = [&](std::string_view m) {
                if (method != m) throw HttpError{405, "method not allowed"};
            };
            if (seg.size() == 2 && seg[1] == "health") {
                want("GET");
                return {200, R"({"status":"ok"})"};
            }
            if (seg.size() == 2 && seg[1] == "pipelines") {
                want("GET");
                return {200, json(pipeline_names()).dump()};
            }
            if (seg.size() == 2 && seg[1] == "validate") {
                want("POST");
                return validate(parse_body(body));
            }
            if (seg.size() == 2 && seg[1] == "analyze") {
                want("POST");
                return analyze(parse_body(body));
            }
            if (seg[1] == "runs") {
                if (seg.size() == 2) {
                    want("POST");
                    return create_run(parse_body(body));
                }
                if (seg.size() == 3) {
                    want("GET");
                    return run_status(seg[2]);
                }
                if (seg.size() == 4 && seg[3] == "records") {
                    want("GET");
                    return records_page(seg[2], query);
                }
                if (seg.size() == 5 && seg[3] == "frames") {
                    want("GET");
                    return frame(seg[2], seg[4]);
                }
            }
            throw HttpError{404, "no such endpoint"};
        } catch (const HttpError &e) {
            json j = e.extra;
            j["error"] = e.message;
            return {e.status, j.dump()};
        } catch (const std::exception &e) {
            return {500, json{{"error", e.what()}}.dump()};
        }
    }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->options = options;
    auto handler = [this](const httplib::Request &req, httplib::Response &res) {
        std::map<std::string, std::string> query;
        for (const auto &[k, v] : req.params) query[k] = v;
        const HttpResponse r = impl_->dispatch(req.method, req.path, query, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
}

Service::~Service() {
    stop();
    impl_->stopping = true;
    std::vector<std::shared_ptr<RunState>> all;
    {
        std::lock_guard lock(impl_->mu);
        for (auto &[id, rs] : impl_->runs) all.push_back(rs);
    }
    for (auto &rs : all) {
        if (rs->worker.joinable()) rs->worker.join();
    }
}

HttpResponse Service::handle(std::string_view method, std::string_view target, std::string_view body) {
    const auto q = target.find('?');
    std::map<std::string, std::string> query;
    if (q != std::string_view::npos) {
        std::string_view rest = target.substr(q + 1);
        while (!rest.empty()) {
            const auto amp = rest.find('&');
            const std::string_view kv = rest.substr(0, amp);
            const auto eq = kv.find('=');
            if (eq == std::string_view::npos) query[std::string(kv)] = "";
            else query[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
            if (amp == std::string_view::npos) break;
            rest = rest.substr(amp + 1);
        }
    }
    return impl_->dispatch(method, target.substr(0, q), query, body);
}

bool Service::wait_run(const std::string &id, std::chrono::milliseconds timeout) {
    std::shared_ptr<RunState> rs;
    try {
        rs = impl_->find(id);
    } catch (const HttpError &) {
        return false;
    }
    std::unique_lock lock(rs->mu);
    return rs->cv.wait_for(lock, timeout, [&] { return rs->status != "running"; });
}

bool Service::listen(const std::string &host, int port) { return impl_->server.listen(host, port); }

int Service::listen_background(const std::string &host) {
    const int port = impl_->server.bind_to_any_port(host);
    if (port < 0) return -1;
    impl_->server_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    impl_->server.stop();
    if (impl_->server_thread.joinable()) impl_->server_thread.join();
}

}  // namespace vqol
