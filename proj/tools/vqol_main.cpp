#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vqol/analysis.hpp"
#include "vqol/experiment.hpp"
#include "vqol/oracles.hpp"
#include "vqol/service.hpp"

namespace fs = std::filesystem;
using namespace vqol;

namespace {

constexpr int kExitBadSpec = 2;

void print_diagnostics(const Diagnostics &ds, const std::string &path) {
    for (const auto &d : ds) std::cerr << path << ": " << format_diagnostic(d) << "\n";
}

std::vector<std::pair<std::string, std::string>> split_assignments(const std::vector<std::string> &items) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto &s : items) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected name=value, got '" + s + "'");
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    return out;
}

// Loads and validates a spec; prints diagnostics. Returns false on errors.
bool load(const std::string &path, const std::vector<std::string> &sets, Experiment &exp) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception &e) {
        std::cerr << e.what() << "\n";
        return false;
    }
    exp = load_experiment(text);
    if (!exp.ok()) {
        print_diagnostics(exp.diagnostics, path);
        return false;
    }
    if (!sets.empty()) {
        try {
            exp = build_experiment(with_overrides(exp.spec, split_assignments(sets)));
        } catch (const std::exception &e) {
            std::cerr << path << ": " << e.what() << "\n";
            return false;
        }
        if (!exp.ok()) {
            print_diagnostics(exp.diagnostics, path);
            return false;
        }
    }
    print_diagnostics(exp.diagnostics, path);  // warnings only at this point
    return true;
}

PropagationMode parse_mode(const std::string &m) {
    return m == "instant" ? PropagationMode::Instant : PropagationMode::GridLatency;
}

void print_csv_rows(const std::vector<std::string> &header, const std::vector<std::vector<double>> &rows) {
    for (std::size_t i = 0; i < header.size(); ++i) std::cout << (i ? "," : "") << header[i];
    std::cout << "\n";
    for (const auto &r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) std::printf("%s%.10g", i ? "," : "", r[i]);
        std::printf("\n");
    }
    std::fflush(stdout);
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Virtual quantum optics lab simulator"};
    app.require_subcommand(1);

    // run
    auto *run_cmd = app.add_subcommand("run", "run one experiment and write CSV and summary");
    std::string run_spec, run_out = "out", run_mode = "grid";
    std::uint64_t run_seed = 0;
    std::int64_t run_steps = 0;
    double run_seconds = 0.0;
    std::vector<std::string> run_sets;
    bool run_offline = false;
    run_cmd->add_option("spec", run_spec, "experiment file")->required();
    run_cmd->add_option("--seed", run_seed, "random seed");
    auto *steps_opt = run_cmd->add_option("--steps", run_steps, "number of Δt steps")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seconds", run_seconds, "simulated duration")->check(CLI::PositiveNumber)->excludes(steps_opt);
    run_cmd->add_option("--out", run_out, "output directory");
    run_cmd->add_option("--set", run_sets, "override name.param=value")->take_all();
    run_cmd->add_option("--mode", run_mode, "propagation mode")->check(CLI::IsMember({"grid", "instant"}));
    run_cmd->add_flag("--offline", run_offline, "no animation (always the case here)");

    // sweep
    auto *sweep_cmd = app.add_subcommand("sweep", "parameter sweep with repeats and analysis");
    std::string sweep_spec, sweep_def, sweep_out = "sweep", sweep_pipeline, sweep_mode = "grid";
    int sweep_repeat = 1;
    std::uint64_t sweep_seed = 0;
    std::vector<std::string> sweep_sets;
    sweep_cmd->add_option("spec", sweep_spec, "experiment file")->required();
    sweep_cmd->add_option("--sweep", sweep_def, "name=start:stop:step");
    sweep_cmd->add_option("--repeat", sweep_repeat, "repeats per point (seeds seed..seed+R-1)")
        ->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--out", sweep_out, "output directory");
    sweep_cmd->add_option("--analyze", sweep_pipeline, "analysis pipeline");
    sweep_cmd->add_option("--seed", sweep_seed, "base seed");
    sweep_cmd->add_option("--set", sweep_sets, "override name.param=value")->take_all();
    sweep_cmd->add_option("--mode", sweep_mode, "propagation mode")->check(CLI::IsMember({"grid", "instant"}));

    // predict
    auto *predict_cmd = app.add_subcommand("predict", "emit closed-form curves as CSV");
    std::string curve, gamma_range = "0:3:0.01", phi_range = "0:360:5";
    double theta = 0.0, mz_d = 12.0, mz_dcr = 1000.0, laser_power = 4e-3;
    predict_cmd->add_option("curve", curve, "efficiency | mz | hom")
        ->required()
        ->check(CLI::IsMember({"efficiency", "mz", "hom"}));
    predict_cmd->add_option("--gamma", gamma_range, "threshold range (efficiency)");
    predict_cmd->add_option("--theta", theta, "HWP angle in degrees (mz)");
    predict_cmd->add_option("--phi", phi_range, "phase range in degrees (mz, hom)");
    predict_cmd->add_option("--d", mz_d, "optical density (mz)");
    predict_cmd->add_option("--dcr", mz_dcr, "dark count rate per second (mz)");
    predict_cmd->add_option("--power", laser_power, "laser power in W (mz, hom)");

    // validate
    auto *validate_cmd = app.add_subcommand("validate", "check an experiment file");
    std::string validate_spec;
    validate_cmd->add_option("spec", validate_spec, "experiment file")->required();

    // serve
    auto *serve_cmd = app.add_subcommand("serve", "serve the JSON API");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve_cmd->add_option("--port", port, "TCP port");
    serve_cmd->add_option("--host", host, "bind address");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            Experiment exp;
            if (!load(run_spec, run_sets, exp)) return kExitBadSpec;
            if (run_seconds > 0.0) exp.spec.num_seconds = run_seconds;
            RunConfig cfg;
            cfg.seed = run_seed;
            cfg.num_steps = run_steps > 0 ? run_steps : exp.spec.num_steps();
            cfg.cell_latency_steps = exp.graph.cell_latency;
            cfg.mode = parse_mode(run_mode);
            const RunRecords records = run(exp.graph, cfg);
            const std::string stem = fs::path(run_spec).stem().string();
            fs::create_directories(run_out);
            const auto csv = fs::path(run_out) / csv_file_name(stem, run_seed);
            write_csv(records, csv);
            const auto table = tabulate(records);
            const RunMetadata meta{stem, run_seed, fnv1a64(serialize(exp.spec)), run_mode};
            const auto summary = fs::path(run_out) / (stem + "_" + std::to_string(run_seed) + "_summary.txt");
            write_summary(records, table, meta, summary);
            std::cout << summary_text(records, table, meta);
            return 0;
        }

        if (*sweep_cmd) {
            Experiment exp;
            if (!load(sweep_spec, sweep_sets, exp)) return kExitBadSpec;
            if (!sweep_pipeline.empty() && !is_pipeline(sweep_pipeline)) {
                std::cerr << "unknown pipeline '" << sweep_pipeline << "'\n";
                return 1;
            }
            SweepOptions opts;
            if (!sweep_def.empty()) {
                const auto eq = sweep_def.find('=');
                if (eq == std::string::npos || eq == 0) {
                    std::cerr << "--sweep expects name=start:stop:step\n";
                    return 1;
                }
                opts.name = sweep_def.substr(0, eq);
                opts.values = parse_range(sweep_def.substr(eq + 1));
            } else {
                opts.values = {0.0};
            }
            opts.repeat = sweep_repeat;
            opts.seed = sweep_seed;
            opts.pipeline = sweep_pipeline;
            opts.out_dir = sweep_out;
            opts.stem = fs::path(sweep_spec).stem().string();
            opts.mode = parse_mode(sweep_mode);
            const auto rows = run_sweep(exp.spec, opts);
            std::cout << rows.size() << " runs written to " << sweep_out << "\n";
            if (!sweep_pipeline.empty() && !rows.empty()) {
                // per-point means over repeats
                std::cout << (opts.name.empty() ? "value" : opts.name);
                for (const auto &[k, v] : rows.front().result.values) std::cout << ",mean_" << k;
                std::cout << "\n";
                const auto reps = static_cast<std::size_t>(sweep_repeat);
                for (std::size_t p = 0; p * reps < rows.size(); ++p) {
                    std::printf("%.10g", rows[p * reps].value);
                    const auto &names = rows[p * reps].result.values;
                    for (std::size_t m = 0; m < names.size(); ++m) {
                        double sum = 0.0;
                        for (std::size_t r = 0; r < reps; ++r) sum += rows[p * reps + r].result.values[m].second;
                        std::printf(",%.10g", sum / static_cast<double>(reps));
                    }
                    std::printf("\n");
                }
            }
            return 0;
        }

        if (*predict_cmd) {
            std::vector<std::vector<double>> rows;
            if (curve == "efficiency") {
                for (double g : parse_range(gamma_range))
                    rows.push_back({g, oracles::dark_count_prob(g), oracles::nominal_efficiency(g),
                                    oracles::nominal_efficiency_sigma2(g)});
                print_csv_rows({"gamma", "delta", "eta", "eta_sigma2"}, rows);
            } else if (curve == "mz") {
                for (double phi : parse_range(phi_range)) {
                    const auto q = analysis::mz_quantum(phi, theta);
                    const auto p = analysis::mz_probabilities(phi, theta, mz_d, mz_dcr, laser_power);
                    const double delta = mz_dcr * constants::delta_t;
                    rows.push_back({phi, q.p1, q.p2, p.p1, p.p2, analysis::dark_subtracted(p.p1, p.p2, delta, delta)});
                }
                print_csv_rows({"phi_deg", "q1", "q2", "p1", "p2", "p1_prime"}, rows);
            } else {
                for (double phi : parse_range(phi_range)) {
                    const auto h = oracles::hom_powers(deg_to_rad(phi), laser_power);
                    rows.push_back({phi, h.right, h.down});
                }
                print_csv_rows({"phi_deg", "right_W", "down_W"}, rows);
            }
            return 0;
        }

        if (*validate_cmd) {
            Experiment exp;
            if (!load(validate_spec, {}, exp)) return kExitBadSpec;
            const auto report = path_length_report(exp.graph);
            for (const auto &[sink, list] : report.sinks) {
                std::cout << node_label(exp.graph.nodes[static_cast<std::size_t>(sink)]) << ":";
                for (const auto &p : list)
                    std::cout << " " << node_label(exp.graph.nodes[static_cast<std::size_t>(p.source_node)]) << "="
                              << p.latency_steps;
                std::cout << "\n";
            }
            std::cout << "ok\n";
            return 0;
        }

        if (*serve_cmd) {
            Service service;
            std::cout << "listening on http://" << host << ":" << port << "\n" << std::flush;
            if (!service.listen(host, port)) {
                std::cerr << "cannot bind " << host << ":" << port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
