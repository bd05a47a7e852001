#include "vqol/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vqol/analysis.hpp"

namespace vqol {

Experiment build_experiment(const ExperimentSpec &spec) {
    Experiment e;
    e.spec = spec;
    e.graph = route(spec.placements);
    e.diagnostics = e.graph.diagnostics;
    if (e.graph.ok()) {
        const auto report = path_length_report(e.graph);
        e.diagnostics.insert(e.diagnostics.end(), report.warnings.begin(), report.warnings.end());
    }
    return e;
}

Experiment load_experiment(std::string_view text) {
    ParseResult pr = parse(text);
    if (!pr.ok()) {
        Experiment e;
        e.spec = std::move(pr.spec);
        e.diagnostics = std::move(pr.diagnostics);
        return e;
    }
    Experiment e = build_experiment(pr.spec);
    e.diagnostics.insert(e.diagnostics.begin(), pr.diagnostics.begin(), pr.diagnostics.end());
    return e;
}

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

unsigned worker_count() {
    if (const char *env = std::getenv("VQOL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mu;
    auto work = [&] {
        while (!failed.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto &t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

std::size_t sink_index(const std::vector<SinkInfo> &sinks, const std::string &label, const char *what) {
    for (std::size_t i = 0; i < sinks.size(); ++i) {
        if (sinks[i].label == label || column_label(sinks[i].label) == label) return i;
    }
    throw std::invalid_argument(std::string("no ") + what + " labelled '" + label + "'");
}

const GridPlacement *find_component(const ExperimentSpec &spec, std::string_view id) {
    for (const auto &p : spec.placements) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

const GridPlacement *find_kind(const ExperimentSpec &spec, Kind k) {
    const GridPlacement *best = nullptr;
    for (const auto &p : spec.placements) {
        if (p.params.kind != k) continue;
        if (!best || std::tie(p.y, p.x) < std::tie(best->y, best->x)) best = &p;
    }
    return best;
}

const GridPlacement &require_component(const ExperimentSpec &spec, std::string_view id, Kind fallback) {
    if (const auto *p = find_component(spec, id)) return *p;
    if (const auto *p = find_kind(spec, fallback)) return *p;
    throw std::invalid_argument("experiment has no " + std::string(id));
}

double param_or(const PipelineParams &params, const std::string &key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

double detector_dcr(const ExperimentSpec &spec, const std::string &id) {
    if (const auto *p = find_component(spec, id)) return p->params.dcr;
    if (const auto *p = find_kind(spec, Kind::Detector)) return p->params.dcr;
    return default_params(Kind::Detector).dcr;
}

std::vector<double> series_after(const RunRecords &r, std::size_t meter, std::int64_t skip) {
    std::vector<double> out;
    for (std::int64_t t = std::min(skip, r.num_steps); t < r.num_steps; ++t)
        out.push_back(static_cast<double>(r.power_at(t, meter)) * 1e-9);
    return out;
}

double mean_of(const std::vector<double> &v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

void require_runs(std::string_view name, std::span<const RunRecords> runs) {
    if (runs.size() != pipeline_run_count(name))
        throw std::invalid_argument("pipeline " + std::string(name) + " needs " +
                                    std::to_string(pipeline_run_count(name)) + " runs, got " +
                                    std::to_string(runs.size()));
}

constexpr double kChshAlice[2] = {0.0, 22.5};
constexpr double kChshBob[2] = {11.25, 78.75};
constexpr char kQstBases[3] = {'X', 'Y', 'Z'};

}  // namespace

CoincidenceTable table_for(const RunRecords &records, const std::vector<std::string> &labels) {
    std::vector<std::size_t> idx;
    for (const auto &l : labels) idx.push_back(detector_index(records, l));
    CoincidenceTable t(static_cast<int>(labels.size()));
    std::uint64_t used = 0;
    for (auto i : idx) used |= std::uint64_t{1} << i;
    // Count raw masks restricted to the selected detectors, then remap.
    std::map<std::uint64_t, std::int64_t> raw;
    for (auto m : records.clicks) ++raw[m & used];
    for (const auto &[m, c] : raw) {
        std::uint64_t out = 0;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if ((m >> idx[k]) & 1u) out |= std::uint64_t{1} << k;
        }
        t.add(out, c);
    }
    return t;
}

std::size_t detector_index(const RunRecords &records, const std::string &label) {
    return sink_index(records.detectors, label, "detector");
}

std::size_t meter_index(const RunRecords &records, const std::string &label) {
    return sink_index(records.power_meters, label, "power meter");
}

std::int64_t warmup_steps(const CircuitGraph &graph) {
    const auto report = path_length_report(graph);
    std::int64_t w = 0;
    for (const auto &[sink, list] : report.sinks) {
        for (const auto &p : list) w = std::max<std::int64_t>(w, p.latency_steps);
    }
    return w;
}

RunRecords run_experiment(const Experiment &exp, std::uint64_t seed, PropagationMode mode) {
    if (!exp.ok()) throw std::invalid_argument("experiment has errors");
    RunConfig cfg;
    cfg.seed = seed;
    cfg.num_steps = exp.spec.num_steps();
    cfg.cell_latency_steps = exp.graph.cell_latency;
    cfg.mode = mode;
    return run(exp.graph, cfg);
}

ExperimentSpec with_overrides(const ExperimentSpec &spec,
                              const std::vector<std::pair<std::string, std::string>> &overrides) {
    ExperimentSpec out = spec;
    for (const auto &[name, value] : overrides) {
        if (auto err = apply_override(out, name, value)) throw std::invalid_argument(*err);
    }
    return out;
}

double PipelineResult::get(std::string_view name) const {
    for (const auto &[k, v] : values) {
        if (k == name) return v;
    }
    throw std::out_of_range("no result named '" + std::string(name) + "'");
}

const std::vector<std::string> &pipeline_names() {
    static const std::vector<std::string> names{
        "malus", "born", "born_pbs", "born_heralded", "qst", "mz", "anticorr", "chsh",
        "homodyne", "efficiency_laser", "efficiency_heralded", "teleport", "bsa", "hom"};
    return names;
}

bool is_pipeline(std::string_view name) {
    const auto &n = pipeline_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

std::size_t pipeline_run_count(std::string_view name) {
    if (name == "chsh") return 4;
    if (name == "qst") return 3;
    return 1;
}

std::vector<std::pair<std::string, std::string>> pipeline_run_overrides(std::string_view name, std::size_t k) {
    if (name == "chsh") {
        return {{"HWP1.angle", format_number(kChshAlice[k / 2])},
                {"HWP2.angle", format_number(kChshBob[k % 2])}};
    }
    if (name == "qst") {
        const auto s = analysis::qst_basis_settings(kQstBases[k]);
        return {{"QWP2.angle", format_number(s.qwp)}, {"HWP2.angle", format_number(s.hwp)}};
    }
    return {};
}

PipelineResult analyze_runs(std::string_view name, std::span<const RunRecords> runs,
                            const ExperimentSpec &spec, const PipelineParams &params) {
    if (!is_pipeline(name)) throw std::invalid_argument("unknown pipeline '" + std::string(name) + "'");
    require_runs(name, runs);
    const RunRecords &r = runs[0];
    const auto steps = static_cast<double>(r.num_steps);
    const double seconds = steps * constants::delta_t;
    PipelineResult out;

    auto warmup = [&] {
        const Experiment e = build_experiment(spec);
        return static_cast<std::int64_t>(param_or(params, "warmup", static_cast<double>(warmup_steps(e.graph))));
    };

    if (name == "malus") {
        const auto p = series_after(r, 0, warmup());
        out.set("power_W", mean_of(p));
    } else if (name == "homodyne" || name == "hom") {
        const auto skip = warmup();
        const auto p1 = series_after(r, meter_index(r, "PM1"), skip);
        const auto p2 = series_after(r, meter_index(r, "PM2"), skip);
        if (name == "hom") {
            out.set("pm1_W", mean_of(p1));
            out.set("pm2_W", mean_of(p2));
        } else {
            const auto e = analysis::homodyne_estimate(p1, p2);
            out.set("p0_hat_W", e.p0_hat);
            out.set("s_W", e.s);
            out.set("mu_W", e.mu);
        }
    } else if (name == "efficiency_laser") {
        const auto &ndf = require_component(spec, "NDF", Kind::NeutralDensityFilter);
        const auto &las = require_component(spec, "LAS", Kind::Laser);
        const double d = param_or(params, "d", ndf.params.d);
        const double alpha_sq = laser_alpha_sq(param_or(params, "power", las.params.power));
        const auto n = table_for(r, {"D1"}).pattern({1});
        const double eta = analysis::efficiency_laser(n, d, alpha_sq, seconds);
        out.set("N", static_cast<double>(n));
        out.set("eta_L", eta);
        out.set("invalid", eta > 1.0 ? 1.0 : 0.0);
    } else if (name == "efficiency_heralded") {
        const auto t = table_for(r, {"D1", "D2"});
        out.set("N1", static_cast<double>(t.pattern({1})));
        out.set("N12", static_cast<double>(t.pattern({1, 2})));
        out.set("eta_E", analysis::efficiency_heralded(t.pattern({1}), t.pattern({1, 2})));
    } else if (name == "born") {
        out.set("N1", static_cast<double>(table_for(r, {"D1"}).pattern({1})));
    } else if (name == "born_pbs") {
        const auto t = table_for(r, {"D1", "D2"});
        const double n1 = static_cast<double>(t.pattern({1}));
        const double n2 = static_cast<double>(t.pattern({2}));
        out.set("N1", n1);
        out.set("N2", n2);
        out.set("N12", static_cast<double>(t.pattern({1, 2})));
        out.set("p1", analysis::born_probability(n1, n2).p);
        const double dark1 = detector_dcr(spec, "D1") * seconds;
        const double dark2 = detector_dcr(spec, "D2") * seconds;
        const auto rate = analysis::born_probability(n1, n2, dark1, dark2);
        out.set("p1_rate", rate.p);
        out.set("p1_rate_clamped", rate.out_of_range ? 1.0 : 0.0);
    } else if (name == "born_heralded") {
        const auto t = table_for(r, {"D1", "D2", "D3"});
        const double n13 = static_cast<double>(t.pattern({1, 3}));
        const double n23 = static_cast<double>(t.pattern({2, 3}));
        out.set("N13", n13);
        out.set("N23", n23);
        out.set("p1", analysis::born_probability(n13, n23).p);
    } else if (name == "qst") {
        double e[3];
        for (int k = 0; k < 3; ++k) {
            const auto t = table_for(runs[static_cast<std::size_t>(k)], {"D1", "D2"});
            e[k] = analysis::pauli_expectation(static_cast<double>(t.pattern({1})),
                                               static_cast<double>(t.pattern({2})));
        }
        const auto q = analysis::qst_reconstruct(e[0], e[1], e[2]);
        const auto &hwp = require_component(spec, "HWP1", Kind::HalfWavePlate);
        const auto &qwp = require_component(spec, "QWP1", Kind::QuarterWavePlate);
        const KeyedRng unused(0, 0, 0);
        const JonesVector psi = jones_matrix_of(qwp.params, unused) *
                                (jones_matrix_of(hwp.params, unused) * JonesVector{1.0, 0.0});
        out.set("x", e[0]);
        out.set("y", e[1]);
        out.set("z", e[2]);
        out.set("fidelity", analysis::fidelity(psi, q.rho));
        out.set("psd", q.psd ? 1.0 : 0.0);
        out.set("min_eigenvalue", q.eigenvalues[0]);
    } else if (name == "mz") {
        const auto t = table_for(r, {"D1", "D2"});
        const double p1 = static_cast<double>(t.pattern({1})) / steps;
        const double p2 = static_cast<double>(t.pattern({2})) / steps;
        const double d1 = detector_dcr(spec, "D1") * constants::delta_t;
        const double d2 = detector_dcr(spec, "D2") * constants::delta_t;
        const auto *hwp = find_kind(spec, Kind::HalfWavePlate);
        const auto *pd = find_kind(spec, Kind::PhaseDelay);
        const double theta = param_or(params, "theta", hwp ? hwp->params.angle : 0.0);
        const double phi = param_or(params, "phi", pd ? pd->params.phi : 0.0);
        out.set("p1", p1);
        out.set("p2", p2);
        out.set("p1_prime", analysis::dark_subtracted(p1, p2, d1, d2));
        out.set("q1", analysis::mz_quantum(phi, theta).p1);
    } else if (name == "anticorr") {
        const auto t = table_for(r, {"D1", "D2", "D3"});
        out.set("N3", static_cast<double>(t.pattern({3})));
        out.set("N13", static_cast<double>(t.pattern({1, 3})));
        out.set("N23", static_cast<double>(t.pattern({2, 3})));
        out.set("N123", static_cast<double>(t.pattern({1, 2, 3})));
        out.set("alpha", analysis::anticorrelation_alpha(t.pattern({3}), t.pattern({1, 3}), t.pattern({2, 3}),
                                                         t.pattern({1, 2, 3})));
    } else if (name == "chsh") {
        std::array<std::array<analysis::ChshCounts, 2>, 2> counts{};
        for (std::size_t k = 0; k < 4; ++k)
            counts[k / 2][k % 2] = analysis::chsh_counts(table_for(runs[k], {"D1", "D2", "D3", "D4"}));
        const auto res = analysis::chsh(counts);
        out.set("C11", res.c[0][0]);
        out.set("C12", res.c[0][1]);
        out.set("C21", res.c[1][0]);
        out.set("C22", res.c[1][1]);
        out.set("S", res.s);
        out.set("coincidence_efficiency",
                analysis::coincidence_efficiency(table_for(runs[0], {"D1", "D2", "D3", "D4"})));
    } else if (name == "teleport") {
        const auto n = analysis::teleport_counts(table_for(r, {"D1", "D2", "D3", "D4"}));
        out.set("NH", static_cast<double>(n[0]));
        out.set("NV", static_cast<double>(n[1]));
        if (n[0] + n[1] > 0) {
            const auto f = analysis::teleport_fidelity(n[0], n[1]);
            out.set("F", f.f);
            out.set("ci_low", f.ci_low);
            out.set("ci_high", f.ci_high);
        } else {
            out.set("F", std::nan(""));
            out.set("ci_low", std::nan(""));
            out.set("ci_high", std::nan(""));
        }
    } else if (name == "bsa") {
        const auto t = table_for(r, {"D1", "D2", "D3", "D4"});
        const auto label = analysis::bsa_classify(t);
        out.label = analysis::bell_label_name(label);
        out.set("label_code", static_cast<double>(static_cast<int>(label)));
        out.set("g_minus", static_cast<double>(t.pattern({1, 4}) + t.pattern({2, 3})));
        out.set("g_plus", static_cast<double>(t.pattern({1, 2}) + t.pattern({3, 4})));
        out.set("g_other", static_cast<double>(t.pattern({1, 3}) + t.pattern({2, 4})));
        out.set("singles",
                static_cast<double>(t.pattern({1}) + t.pattern({2}) + t.pattern({3}) + t.pattern({4})));
    }
    return out;
}

PipelineResult run_pipeline(std::string_view name, const ExperimentSpec &spec, std::uint64_t seed,
                            const PipelineParams &params, PropagationMode mode) {
    if (!is_pipeline(name)) throw std::invalid_argument("unknown pipeline '" + std::string(name) + "'");
    std::vector<RunRecords> runs;
    for (std::size_t k = 0; k < pipeline_run_count(name); ++k) {
        const Experiment e = build_experiment(with_overrides(spec, pipeline_run_overrides(name, k)));
        runs.push_back(run_experiment(e, seed, mode));
    }
    return analyze_runs(name, runs, spec, params);
}

std::vector<double> parse_range(std::string_view text) {
    const std::string s(text);
    const auto a = s.find(':');
    const auto b = a == std::string::npos ? a : s.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos)
        throw std::invalid_argument("range must be start:stop:step, got '" + s + "'");
    double start, stop, step;
    try {
        std::size_t used = 0;
        start = std::stod(s.substr(0, a), &used);
        stop = std::stod(s.substr(a + 1, b - a - 1));
        step = std::stod(s.substr(b + 1));
    } catch (const std::exception &) {
        throw std::invalid_argument("malformed range '" + s + "'");
    }
    if (!(step > 0.0)) throw std::invalid_argument("range step must be positive");
    if (stop < start) throw std::invalid_argument("empty range '" + s + "'");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = start + static_cast<double>(i) * step;
    return out;
}

namespace {

void add_sweep_dark_subtraction(const std::string &pipeline, std::vector<SweepRow> &rows, int repeat) {
    std::string k1, k2;
    if (pipeline == "born_pbs") {
        k1 = "N1";
        k2 = "N2";
    } else if (pipeline == "born_heralded") {
        k1 = "N13";
        k2 = "N23";
    } else {
        return;
    }
    for (int rep = 0; rep < repeat; ++rep) {
        std::vector<SweepRow *> group;
        for (auto &row : rows) {
            if (row.repeat == rep) group.push_back(&row);
        }
        std::vector<double> n1, n2;
        for (auto *row : group) {
            n1.push_back(row->result.get(k1));
            n2.push_back(row->result.get(k2));
        }
        const auto p = analysis::born_sweep(n1, n2, analysis::DarkSubtraction::MinOverSweep);
        for (std::size_t i = 0; i < group.size(); ++i) group[i]->result.set("p1_prime", p[i].p);
    }
}

std::string number_text(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

std::vector<SweepRow> run_sweep(const ExperimentSpec &spec, const SweepOptions &opts) {
    if (opts.values.empty()) throw std::invalid_argument("sweep has no points");
    if (opts.repeat < 1) throw std::invalid_argument("repeat must be at least 1");
    if (!opts.pipeline.empty() && !is_pipeline(opts.pipeline))
        throw std::invalid_argument("unknown pipeline '" + opts.pipeline + "'");
    // Validate the target once up front so a typo fails before any run.
    if (!opts.name.empty()) (void)with_overrides(spec, {{opts.name, format_number(opts.values.front())}});

    const std::size_t reps = static_cast<std::size_t>(opts.repeat);
    std::vector<SweepRow> rows(opts.values.size() * reps);
    const std::size_t runs = opts.pipeline.empty() ? 1 : pipeline_run_count(opts.pipeline);
    if (opts.write_runs) std::filesystem::create_directories(opts.out_dir);

    parallel_for(rows.size(), [&](std::size_t i) {
        const std::size_t point = i / reps;
        const int rep = static_cast<int>(i % reps);
        SweepRow &row = rows[i];
        row.value = opts.values[point];
        row.repeat = rep;
        row.seed = opts.seed + static_cast<std::uint64_t>(rep);
        ExperimentSpec s = spec;
        if (!opts.name.empty()) s = with_overrides(spec, {{opts.name, format_number(row.value)}});

        char dir_name[64];
        if (reps > 1) std::snprintf(dir_name, sizeof dir_name, "point_%03zu/rep_%03d", point, rep);
        else std::snprintf(dir_name, sizeof dir_name, "point_%03zu", point);
        const auto dir = opts.out_dir / dir_name;
        if (opts.write_runs) std::filesystem::create_directories(dir);

        std::vector<RunRecords> records;
        for (std::size_t k = 0; k < runs; ++k) {
            const ExperimentSpec sk =
                opts.pipeline.empty() ? s : with_overrides(s, pipeline_run_overrides(opts.pipeline, k));
            const Experiment e = build_experiment(sk);
            if (!e.ok()) throw std::invalid_argument("sweep point " + number_text(row.value) + " is invalid");
            records.push_back(run_experiment(e, row.seed, opts.mode));
            if (opts.write_runs) {
                const std::string stem = runs > 1 ? opts.stem + "_k" + std::to_string(k) : opts.stem;
                write_csv(records.back(), dir / csv_file_name(stem, row.seed));
                RunMetadata meta{stem, row.seed, fnv1a64(serialize(sk)),
                                 opts.mode == PropagationMode::Instant ? "instant" : "grid"};
                write_summary(records.back(), tabulate(records.back()), meta,
                              dir / (stem + "_" + std::to_string(row.seed) + "_summary.txt"));
            }
        }
        if (!opts.pipeline.empty()) row.result = analyze_runs(opts.pipeline, records, s);
    });

    if (!opts.pipeline.empty()) add_sweep_dark_subtraction(opts.pipeline, rows, opts.repeat);
    if (opts.write_runs) {
        std::ofstream f(opts.out_dir / "aggregate.csv");
        if (!f) throw std::runtime_error("cannot write " + (opts.out_dir / "aggregate.csv").string());
        f << aggregate_csv(opts.name.empty() ? "value" : opts.name, rows);
    }
    return rows;
}

std::string aggregate_csv(const std::string &sweep_name, const std::vector<SweepRow> &rows) {
    std::ostringstream s;
    s << sweep_name << ",repeat,seed";
    const bool labelled = !rows.empty() && !rows.front().result.label.empty();
    if (!rows.empty()) {
        for (const auto &[k, v] : rows.front().result.values) s << ',' << k;
    }
    if (labelled) s << ",label";
    s << '\n';
    for (const auto &row : rows) {
        s << number_text(row.value) << ',' << row.repeat << ',' << row.seed;
        for (const auto &[k, v] : row.result.values) s << ',' << number_text(v);
        if (labelled) s << ',' << row.result.label;
        s << '\n';
    }
    return s.str();
}

}  // namespace vqol
