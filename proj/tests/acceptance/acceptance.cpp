// Acceptance suite: one [PASS]/[FAIL] line per primary criterion, details
// indented below it. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vqol/analysis.hpp"
#include "vqol/experiment.hpp"
#include "vqol/oracles.hpp"

using namespace vqol;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> details;

    void check(bool ok, const char *fmt, ...) __attribute__((format(printf, 3, 4)));
    void note(const char *fmt, ...) __attribute__((format(printf, 2, 3)));
};

std::string vformat(const char *fmt, va_list ap) {
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    return buf;
}

void Outcome::check(bool ok, const char *fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    details.push_back(std::string(ok ? "ok   " : "MISS ") + vformat(fmt, ap));
    va_end(ap);
    pass = pass && ok;
}

void Outcome::note(const char *fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    details.push_back("note " + vformat(fmt, ap));
    va_end(ap);
}

ExperimentSpec fixture(const std::string &name) {
    const auto e = load_experiment(read_text_file(std::string(VQOL_SOURCE_DIR) + "/fixtures/" + name + ".vqol"));
    if (!e.ok()) throw std::runtime_error("fixture " + name + " does not load");
    return e.spec;
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

std::string num(double v) { return format_number(v); }

// run_pipeline over seeds 0..k-1 in parallel
std::vector<PipelineResult> over_seeds(const std::string &pipeline, const ExperimentSpec &spec, int k) {
    std::vector<PipelineResult> out(static_cast<std::size_t>(k));
    parallel_for(out.size(), [&](std::size_t i) { out[i] = run_pipeline(pipeline, spec, i); });
    return out;
}

double mean_of(const std::vector<PipelineResult> &rs, const char *key) {
    double s = 0.0;
    for (const auto &r : rs) s += r.get(key);
    return s / static_cast<double>(rs.size());
}

double stderr_of(const std::vector<PipelineResult> &rs, const char *key) {
    const double m = mean_of(rs, key);
    double ss = 0.0;
    for (const auto &r : rs) ss += (r.get(key) - m) * (r.get(key) - m);
    const double n = static_cast<double>(rs.size());
    return std::sqrt(ss / (n - 1.0) / n);
}

std::vector<SweepRow> sweep(const ExperimentSpec &spec, const std::string &name, std::vector<double> values,
                            const std::string &pipeline) {
    SweepOptions o;
    o.name = name;
    o.values = std::move(values);
    o.pipeline = pipeline;
    o.write_runs = false;
    return run_sweep(spec, o);
}

double cos2(double deg) {
    const double c = std::cos(deg_to_rad(deg));
    return c * c;
}

// 1
Outcome dark_count_calibration() {
    Outcome o;
    ExperimentSpec s;
    s.num_seconds = 10.0;
    GridPlacement d;
    d.params = default_params(Kind::Detector);
    d.params.dcr = 1000.0;
    d.x = 4;
    d.y = 4;
    s.placements.push_back(d);
    const auto r = run_experiment(build_experiment(s), 0);
    const double rate = static_cast<double>(tabulate(r).detector_total(0)) / static_cast<double>(r.num_steps);
    o.check(std::abs(rate / 1e-3 - 1.0) <= 0.05, "click rate %.5g over %lld steps (1.0e-3 +/- 5%%)", rate,
            static_cast<long long>(r.num_steps));
    return o;
}

// 2
Outcome threshold_formula() {
    Outcome o;
    const double g = threshold_from_dcr(1000.0, 1e-6);
    o.check(std::abs(g - 1.95) <= 0.005, "gamma(1000/s, 1us) = %.6f (1.95 +/- 0.005)", g);
    return o;
}

// 3
Outcome figure_three() {
    Outcome o;
    const double d = oracles::dark_count_prob(0.85);
    const double g = oracles::argmax_efficiency();
    const double peak = oracles::nominal_efficiency(g);
    const double peak2 = oracles::nominal_efficiency_sigma2(g);
    o.check(std::abs(d - 0.42) <= 0.005, "delta(0.85) = %.5f (0.42 +/- 0.005)", d);
    o.check(std::abs(g - 0.85) <= 0.001, "argmax eta = %.5f (0.85 +/- 0.001)", g);
    o.check(std::abs(peak - 0.5206) <= 0.001, "peak eta, gamma^2/sigma^4 form = %.5f (0.5206 +/- 0.001)", peak);
    o.check(std::abs(peak2 - 0.2603) <= 0.001, "peak eta, gamma^2/sigma^2 form = %.5f (0.2603 +/- 0.001)", peak2);
    o.note("the plotted peak 0.26 corresponds to the sigma^2 normalization; the formula as printed gives 0.52");
    return o;
}

// 4
Outcome oracle_vs_monte_carlo() {
    Outcome o;
    struct Point {
        double dcr, ah, av;
    };
    std::vector<Point> pts;
    for (double dcr : {1e3, 1e4, 1e5, 3e5}) {
        for (auto [ah, av] : std::vector<std::pair<double, double>>{{0, 0}, {0.5, 0}, {1.0, 0.5}, {1.5, 1.5}, {2.5, 0.3}})
            pts.push_back({dcr, ah, av});
    }
    struct Res {
        double freq = 0, pred = 0, z = 0;
    };
    std::vector<Res> res(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) {
        const auto &p = pts[i];
        const double a = std::hypot(p.ah, p.av);
        ExperimentSpec s;
        s.num_seconds = 1.0;
        GridPlacement laser, hwp, det;
        laser.params = default_params(Kind::Laser);
        laser.params.power = a == 0.0 ? 0.0 : (a * a + constants::sigma0_sq) * constants::photon_energy / constants::delta_t;
        laser.x = 1;
        laser.y = 1;
        hwp.params = default_params(Kind::HalfWavePlate);
        hwp.params.angle = std::atan2(p.av, p.ah) * 90.0 / std::numbers::pi;
        hwp.x = 2;
        hwp.y = 1;
        det.params = default_params(Kind::Detector);
        det.params.dcr = p.dcr;
        det.x = 3;
        det.y = 1;
        s.placements = {laser, hwp, det};
        const auto r = run_experiment(build_experiment(s), i, PropagationMode::Instant);
        const double n = static_cast<double>(r.num_steps);
        const double amp = std::sqrt(laser_alpha_sq(laser.params.power));
        const double t2 = 2.0 * deg_to_rad(hwp.params.angle);
        const double pred = oracles::pr_click(amp * std::cos(t2), amp * std::sin(t2), threshold_from_dcr(p.dcr));
        const double freq = static_cast<double>(tabulate(r).detector_total(0)) / n;
        res[i] = {freq, pred, (freq - pred) / std::sqrt(pred * (1.0 - pred) / n)};
    });
    int within3 = 0, within2 = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        within3 += std::abs(res[i].z) <= 3.0;
        within2 += std::abs(res[i].z) <= 2.0;
        o.note("gamma=%.4f |aH|=%.2f |aV|=%.2f: freq %.6f, pr_click %.6f, z=%+.2f", threshold_from_dcr(pts[i].dcr),
               pts[i].ah, pts[i].av, res[i].freq, res[i].pred, res[i].z);
    }
    o.check(within3 == 20, "%d/20 points within 3 SE (need 20)", within3);
    o.check(within2 >= 18, "%d/20 points within 2 SE (need >= 18)", within2);
    return o;
}

// 5
Outcome homodyne() {
    Outcome o;
    const auto rs = over_seeds("homodyne", fixture("homodyne"), 20);
    int p_ok = 0, s_ok = 0;
    double pmin = 1, pmax = 0, smin = 1, smax = 0;
    for (const auto &r : rs) {
        const double p = r.get("p0_hat_W"), s = r.get("s_W");
        p_ok += std::abs(p / 2.0e-13 - 1.0) <= 0.2;
        s_ok += s >= 50e-9 && s <= 66e-9;
        pmin = std::min(pmin, p);
        pmax = std::max(pmax, p);
        smin = std::min(smin, s);
        smax = std::max(smax, s);
    }
    const double m = mean_of(rs, "p0_hat_W");
    o.check(p_ok == 20, "%d/20 runs with P0_hat within 2.0e-13 +/- 20%% (range %.3g..%.3g W)", p_ok, pmin, pmax);
    o.check(std::abs(m / 2.0e-13 - 1.0) <= 0.05, "mean P0_hat over K=20 = %.4g W (2.0e-13 +/- 5%%)", m);
    o.check(s_ok == 20, "%d/20 runs with s in [50, 66] nW (range %.2f..%.2f nW)", s_ok, smin * 1e9, smax * 1e9);
    return o;
}

// 6
Outcome laser_efficiency() {
    Outcome o;
    const auto spec = fixture("efficiency_laser");
    const auto rows = sweep(spec, "NDF.d", parse_range("8:11:0.1"), "efficiency_laser");
    std::size_t best = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].result.get("eta_L") > rows[best].result.get("eta_L")) best = i;
    const double dpk = rows[best].value, peak = rows[best].result.get("eta_L");
    o.note("eta_L at d=8.0, 9.3, 10.0, 11.0: %.4f %.4f %.4f %.4f", rows[0].result.get("eta_L"),
           rows[13].result.get("eta_L"), rows[20].result.get("eta_L"), rows[30].result.get("eta_L"));
    o.check(std::abs(dpk - 9.3) <= 0.3 + 1e-9, "peak at d = %.1f (9.3 +/- 0.3)", dpk);
    o.check(std::abs(peak - 0.15) <= 0.03, "peak eta_L = %.4f (0.15 +/- 0.03)", peak);
    const auto high = sweep(spec, "NDF.d", {12.0, 13.0}, "efficiency_laser");
    for (const auto &r : high)
        o.check(r.result.get("eta_L") > 1.0 && r.result.get("invalid") == 1.0,
                "d = %.0f: eta_L = %.4f (> 1, invalid-regime flag %g)", r.value, r.result.get("eta_L"),
                r.result.get("invalid"));
    return o;
}

// 7
Outcome heralded_efficiency() {
    Outcome o;
    const auto spec = fixture("efficiency_heralded");
    std::vector<double> means;
    for (double r : {0.5, 1.0, 1.5, 2.0}) {
        const auto rs = over_seeds("efficiency_heralded", with_overrides(spec, {{"ENT.r", num(r)}}), 10);
        means.push_back(mean_of(rs, "eta_E"));
        o.note("r = %.1f: mean eta_E = %.4f", r, means.back());
    }
    bool mono = true;
    for (std::size_t i = 1; i < means.size(); ++i) mono = mono && means[i] >= means[i - 1];
    o.check(mono, "mean eta_E nondecreasing in r");
    o.check(*std::max_element(means.begin(), means.end()) <= 1.0, "mean eta_E never exceeds 1");
    return o;
}

// 8
Outcome born_rule() {
    Outcome o;
    const auto thetas = parse_range("0:90:5");
    {
        const auto rows = sweep(fixture("born"), "Polarizer.angle", thetas, "born");
        std::vector<double> x, y;
        for (const auto &r : rows) {
            x.push_back(cos2(r.value));
            y.push_back(r.result.get("N1"));
        }
        const double n = static_cast<double>(x.size());
        const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sxy += (x[i] - mx) * (y[i] - my);
            sxx += (x[i] - mx) * (x[i] - mx);
            syy += (y[i] - my) * (y[i] - my);
        }
        const double a = sxy / sxx, b = my - a * mx, r2 = sxy * sxy / (sxx * syy);
        o.check(r2 >= 0.98, "single detector: N1 = %.0f cos^2 + %.0f, R^2 = %.5f (>= 0.98)", a, b, r2);
    }
    std::vector<double> half;
    for (double t : thetas) half.push_back(t / 2.0);
    auto max_dev = [&](const std::vector<SweepRow> &rows, const char *key) {
        double m = 0.0;
        for (const auto &r : rows) m = std::max(m, std::abs(r.result.get(key) - cos2(2.0 * r.value)));
        return m;
    };
    const auto pbs = sweep(fixture("born_pbs"), "HWP.angle", half, "born_pbs");
    o.note("PBS variant: max |p1 - cos^2| = %.4f under standard normalization", max_dev(pbs, "p1"));
    const double dp = max_dev(pbs, "p1_prime");
    o.check(dp <= 0.05, "PBS variant: max |p1' - cos^2| = %.4f (<= 0.05)", dp);
    const auto pbs15 = sweep(fixture("born_pbs"), "HWP.angle", parse_range("0:45:7.5"), "born_pbs");
    o.note("PBS variant on the 15 degree grid: max |p1' - cos^2| = %.4f", max_dev(pbs15, "p1_prime"));
    const auto her = sweep(fixture("born_heralded"), "HWP.angle", half, "born_heralded");
    o.note("heralded variant: max |p1 - cos^2| = %.4f under standard normalization", max_dev(her, "p1"));
    const double dh = max_dev(her, "p1_prime");
    o.check(dh <= 0.03, "heralded variant: max |p1' - cos^2| = %.4f (<= 0.03)", dh);
    return o;
}

// 9
Outcome state_tomography() {
    Outcome o;
    const auto spec = fixture("qst");
    const auto h = run_pipeline("qst", spec, 0);
    o.check(h.get("fidelity") >= 0.9 && h.get("psd") == 1.0, "|H> at d=10: fidelity %.4f (>= 0.9), psd %g",
            h.get("fidelity"), h.get("psd"));

    // elliptical states: HWP1 sweep behind a QWP1 at 15 degrees, plus the linear sweep
    auto scan = [&](double d) {
        struct Best {
            double f = 0, hwp = 0, qwp = 0;
            int nonpsd_over_one = 0;
        } best;
        std::vector<std::pair<double, double>> settings;
        for (double q : {0.0, 15.0})
            for (double a : parse_range("0:45:2.5")) settings.push_back({q, a});
        std::vector<PipelineResult> rs(settings.size());
        parallel_for(settings.size(), [&](std::size_t i) {
            rs[i] = run_pipeline("qst", with_overrides(spec, {{"NDF.d", num(d)},
                                                              {"QWP1.angle", num(settings[i].first)},
                                                              {"HWP1.angle", num(settings[i].second)}}),
                                 0);
        });
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const double f = rs[i].get("fidelity");
            if (f > 1.0 && rs[i].get("psd") == 0.0) ++best.nonpsd_over_one;
            if (f > best.f) best = {f, settings[i].second, settings[i].first, best.nonpsd_over_one};
        }
        return best;
    };
    const auto b6 = scan(6.0);
    o.check(b6.nonpsd_over_one > 0,
            "d=6: %d sweep points with fidelity > 1 and psd false; max fidelity %.4f at QWP1=%g HWP1=%g",
            b6.nonpsd_over_one, b6.f, b6.qwp, b6.hwp);
    const auto b9 = scan(9.0);
    o.note("d=9: %d sweep points with fidelity > 1 and psd false; max fidelity %.4f at QWP1=%g HWP1=%g",
           b9.nonpsd_over_one, b9.f, b9.qwp, b9.hwp);
    return o;
}

// 10
Outcome mach_zehnder() {
    Outcome o;
    const auto spec = fixture("mz");
    std::vector<std::pair<double, double>> grid;
    for (double theta : parse_range("0:45:15"))
        for (double phi : parse_range("0:360:30")) grid.push_back({phi, theta});
    std::vector<PipelineResult> rs(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        rs[i] = run_pipeline("mz", with_overrides(spec, {{"PhaseDelay.phi", num(grid[i].first)},
                                                          {"HWP.angle", num(grid[i].second)}}),
                             0);
    });
    double dev = 0.0, lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        dev = std::max(dev, std::abs(rs[i].get("p1_prime") - rs[i].get("q1")));
        if (grid[i].second == 45.0) {
            lo = std::min(lo, rs[i].get("p1_prime"));
            hi = std::max(hi, rs[i].get("p1_prime"));
        }
    }
    o.note("theta=0: p1' at phi=0, 90, 180 = %.3f %.3f %.3f", rs[0].get("p1_prime"), rs[3].get("p1_prime"),
           rs[6].get("p1_prime"));
    o.check(dev <= 0.06, "max |p1' - q1| over %zu grid points = %.4f (<= 0.06)", grid.size(), dev);
    o.check(hi - lo <= 0.05, "theta=45: phi-contrast of p1' = %.4f (<= 0.05)", hi - lo);
    return o;
}

// 11
Outcome anticorrelation() {
    Outcome o;
    const auto spec = fixture("anticorrelation");
    const auto rs = over_seeds("anticorr", spec, 100);
    const double m = mean_of(rs, "alpha"), se = stderr_of(rs, "alpha");
    o.check(m >= 0.84 && m <= 0.89, "mean alpha over K=100 = %.4f +/- %.4f ([0.84, 0.89])", m, se);
    o.check((1.0 - m) / se >= 10.0, "mean below 1 by %.1f standard errors (>= 10)", (1.0 - m) / se);

    const auto r = run_experiment(build_experiment(spec), 0);
    const auto t = table_for(r, {"D1", "D2", "D3"});
    struct Ref {
        const char *name;
        std::int64_t got, want;
    };
    const Ref refs[] = {{"N1", t.pattern({1}), 8401},        {"N2", t.pattern({2}), 8373},
                        {"N3", t.pattern({3}), 43407},       {"N12", t.pattern({1, 2}), 63},
                        {"N13", t.pattern({1, 3}), 6710},    {"N23", t.pattern({2, 3}), 6772},
                        {"N123", t.pattern({1, 2, 3}), 703}};
    std::vector<CoincidenceTable> tables(20, CoincidenceTable(3));
    const auto exp = build_experiment(spec);
    parallel_for(tables.size(), [&](std::size_t i) { tables[i] = table_for(run_experiment(exp, i), {"D1", "D2", "D3"}); });
    auto mean_pattern = [&](std::initializer_list<int> ds) {
        double m = 0.0;
        for (const auto &tb : tables) m += static_cast<double>(tb.pattern(ds));
        return m / static_cast<double>(tables.size());
    };
    o.note("K=20 means: N1 %.0f N2 %.0f N3 %.0f N12 %.1f N13 %.0f N23 %.0f N123 %.1f", mean_pattern({1}),
           mean_pattern({2}), mean_pattern({3}), mean_pattern({1, 2}), mean_pattern({1, 3}), mean_pattern({2, 3}),
           mean_pattern({1, 2, 3}));
    for (const auto &ref : refs) {
        const double rel = static_cast<double>(ref.got) / static_cast<double>(ref.want) - 1.0;
        o.check(std::abs(rel) <= 0.10, "seed 0 %s = %lld vs %lld (%+.1f%%, within 10%%)", ref.name,
                static_cast<long long>(ref.got), static_cast<long long>(ref.want), 100.0 * rel);
    }
    return o;
}

// 12
Outcome chsh() {
    Outcome o;
    const auto rs = over_seeds("chsh", fixture("chsh"), 100);
    const double s = mean_of(rs, "S"), ce = mean_of(rs, "coincidence_efficiency");
    int over = 0;
    for (const auto &r : rs) over += r.get("S") > 2.0 * std::sqrt(2.0);
    o.note("mean C11 %.4f C12 %.4f C21 %.4f C22 %.4f; %d/100 runs above 2 sqrt 2", mean_of(rs, "C11"),
           mean_of(rs, "C12"), mean_of(rs, "C21"), mean_of(rs, "C22"), over);
    o.check(s > 2.3, "mean S over K=100 = %.4f +/- %.4f (> 2.3)", s, stderr_of(rs, "S"));
    o.check(std::abs(ce - 0.54) <= 0.05, "mean coincidence efficiency = %.4f (0.54 +/- 0.05)", ce);
    return o;
}

// 13
Outcome hom_classical() {
    Outcome o;
    const auto rows = sweep(fixture("hom"), "PhaseDelay.phi", parse_range("0:360:30"), "hom");
    // 1% of full scale plus a generous bound on the vacuum cross term
    const double vac = 6.0 * std::sqrt(2.0 * laser_alpha_sq(4e-3) * constants::sigma0_sq) * constants::photon_energy /
                       constants::delta_t;
    const double tol = 0.01 * 8e-3 + vac;
    double worst = 0.0;
    for (const auto &r : rows) {
        const double half = deg_to_rad(r.value) / 2.0;
        worst = std::max({worst, std::abs(r.result.get("pm1_W") - 8e-3 * std::cos(half) * std::cos(half)),
                          std::abs(r.result.get("pm2_W") - 8e-3 * std::sin(half) * std::sin(half))});
    }
    o.check(worst <= tol, "max deviation from 8 cos^2 / 8 sin^2 mW = %.3g W over 13 phases (<= %.3g W)", worst, tol);
    return o;
}

// 14
Outcome bell_state_analysis() {
    Outcome o;
    const auto spec = fixture("bsa");
    struct State {
        const char *name;
        const char *type;
        double varphi;
        const char *label;
    };
    const State states[] = {{"Psi-", "II", 180, "Psi_minus"},
                            {"Psi+", "II", 0, "Psi_plus"},
                            {"Phi+", "I", 0, "Phi_pair"},
                            {"Phi-", "I", 180, "Phi_pair"}};
    for (const auto &st : states) {
        const auto rs =
            over_seeds("bsa", with_overrides(spec, {{"ENT.type", st.type}, {"ENT.varphi", num(st.varphi)}}), 50);
        int correct = 0;
        double gm = 0, gp = 0, go = 0, singles = 0;
        for (const auto &r : rs) {
            correct += r.label == st.label;
            gm += r.get("g_minus");
            gp += r.get("g_plus");
            go += r.get("g_other");
            singles += r.get("singles");
        }
        o.check(correct >= 48, "%s: %d/50 runs labelled %s (>= 95%%)", st.name, correct, st.label);
        o.note("%s per-run means: g_minus %.1f, g_plus %.1f, g_other %.1f, singles %.1f", st.name, gm / 50,
               gp / 50, go / 50, singles / 50);
        if (st.label == std::string("Psi_minus"))
            o.check(gm >= 3.0 * (gp + go), "Psi-: signature doubles %.0f vs off-signature %.0f (>= 3x)", gm, gp + go);
        if (st.label == std::string("Psi_plus"))
            o.check(gp >= 3.0 * (gm + go), "Psi+: signature doubles %.0f vs off-signature %.0f (>= 3x)", gp, gm + go);
    }
    return o;
}

// 15
Outcome teleportation() {
    Outcome o;
    const auto spec = fixture("teleport");
    const auto rs = over_seeds("teleport", spec, 20);
    const double f = mean_of(rs, "F");
    o.note("seed 0: NH %.0f NV %.0f F %.4f CI (%.4f, %.4f)", rs[0].get("NH"), rs[0].get("NV"), rs[0].get("F"),
           rs[0].get("ci_low"), rs[0].get("ci_high"));
    o.check(f >= 0.84 && f <= 0.90, "psi(22.5, 30): mean F over K=20 = %.4f +/- %.4f ([0.84, 0.90])", f,
            stderr_of(rs, "F"));
    const auto hs = over_seeds("teleport", with_overrides(spec, {{"HWP1.angle", "0"}, {"QWP1.angle", "0"},
                                                                   {"QWP2.angle", "0"}, {"HWP2.angle", "0"}}),
                               20);
    const double fh = mean_of(hs, "F");
    o.check(fh >= 0.9, "|H>: mean F over K=20 = %.4f +/- %.4f (>= 0.9)", fh, stderr_of(hs, "F"));
    return o;
}

// 16
Outcome determinism() {
    Outcome o;
    for (const char *name : {"anticorrelation", "chsh", "teleport"}) {
        auto spec = fixture(name);
        spec.num_seconds = std::min(spec.num_seconds, 0.05);
        const auto e = build_experiment(spec);
        const std::string a = csv_text(run_experiment(e, 42));
        const std::string b = csv_text(run_experiment(e, 42));
        o.check(a == b, "%s: two runs with seed 42 give identical CSV (%zu bytes)", name, a.size());
    }
    const auto e = build_experiment(fixture("mz"));
    RunConfig cfg;
    cfg.seed = 9;
    cfg.num_steps = 2000;
    const auto f1 = frame_at(e.graph, cfg, 1500);
    const auto f2 = frame_at(e.graph, cfg, 37);
    const auto f3 = frame_at(e.graph, cfg, 1999);
    const bool stable = frame_at(e.graph, cfg, 1500) == f1 && frame_at(e.graph, cfg, 37) == f2 &&
                        frame_at(e.graph, cfg, 1999) == f3;
    Engine eng(e.graph, cfg);
    for (int i = 0; i <= 1500; ++i) eng.step();
    o.check(stable && eng.frame() == f1, "frame_at invariant under interleaved queries and equal to forward play");
    return o;
}

// 17
GridPlacement random_placement(std::mt19937_64 &rng, int x, int y) {
    std::uniform_int_distribution<int> kind_d(0, kKindCount - 1), orient(0, 3), small(0, 50);
    std::uniform_real_distribution<double> unit(0.0, 1.0), deg(-360.0, 360.0);
    GridPlacement p;
    p.params = default_params(static_cast<Kind>(kind_d(rng)));
    p.x = x;
    p.y = y;
    p.orientation = 90 * orient(rng);
    if (unit(rng) < 0.3) p.id = "c" + std::to_string(x) + "_" + std::to_string(y);
    auto &q = p.params;
    for (auto key : kind_keys(q.kind)) {
        const std::string k(key);
        if (k == "angle") q.angle = q.kind == Kind::Rotator ? 90.0 * unit(rng) : deg(rng);
        else if (k == "phi") q.phi = deg(rng);
        else if (k == "steps") q.steps = small(rng);
        else if (k == "d") q.d = 15.0 * unit(rng);
        else if (k == "r") q.r = q.kind == Kind::BeamSplitter ? unit(rng) : 2.0 * unit(rng);
        else if (k == "basis") q.basis = static_cast<PbsBasis>(small(rng) % 3);
        else if (k == "power") q.power = 1e-2 * unit(rng);
        else if (k == "polarization") q.polarization = static_cast<Polarization>(small(rng) % 6);
        else if (k == "type") q.ent_type = static_cast<EntType>(small(rng) % 2);
        else if (k == "varphi") q.varphi = deg(rng);
        else if (k == "directions") q.directions = static_cast<EntDirections>(small(rng) % 6);
        else if (k == "dcr") q.dcr = 1e5 * unit(rng);
    }
    return p;
}

Outcome dsl() {
    Outcome o;
    const std::string malus = read_text_file(std::string(VQOL_SOURCE_DIR) + "/fixtures/malus.vqol");
    const auto r = parse(malus);
    const auto &ps = r.spec.placements;
    const bool exact = r.ok() && r.diagnostics.empty() && ps.size() == 3 && r.spec.num_seconds == 1e-3 &&
                       !r.spec.offline_mode && ps[0].params.kind == Kind::Laser && ps[0].x == 1 && ps[0].y == 1 &&
                       ps[1].params.kind == Kind::Polarizer && ps[1].x == 3 && ps[1].params.angle == 30.0 &&
                       ps[2].params.kind == Kind::PowerMeter && ps[2].x == 5;
    o.check(exact, "Malus text parses to Laser(1,1), Polarizer(3,1, angle 30), PowerMeter(5,1), 1e-3 s");

    std::mt19937_64 rng(2024);
    const std::string alphabet = "=,#.\n -+eE0123456789xyLaserBSPDNT<>J\t";
    int fuzzed = 0;
    for (int i = 0; i < 20000; ++i) {
        std::string t = malus;
        for (int e = 0, n = 1 + static_cast<int>(rng() % 10); e < n; ++e) {
            const std::size_t pos = rng() % (t.size() + 1);
            switch (rng() % 4) {
            case 0: t.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
            case 1: if (pos < t.size()) t.erase(pos, 1); break;
            case 2: t.insert(pos, 1, static_cast<char>(rng() % 256)); break;
            default: if (pos < t.size()) t[pos] = alphabet[rng() % alphabet.size()]; break;
            }
        }
        const auto pr = parse(t);
        if (pr.ok()) (void)build_experiment(pr.spec);
        ++fuzzed;
    }
    o.check(fuzzed == 20000, "20000 fuzzed inputs parsed without a crash");

    int identical = 0;
    std::uniform_int_distribution<int> count(0, 15), coord(0, 31);
    for (int i = 0; i < 1000; ++i) {
        ExperimentSpec s;
        s.num_seconds = static_cast<double>(std::uniform_int_distribution<std::int64_t>(1, 10000000)(rng)) * constants::delta_t;
        s.offline_mode = i % 2;
        std::set<std::pair<int, int>> used;
        for (int k = 0, n = count(rng); k < n; ++k) {
            const int x = coord(rng), y = coord(rng);
            if (used.insert({x, y}).second) s.placements.push_back(random_placement(rng, x, y));
        }
        const std::string text = serialize(s);
        const auto back = parse(text);
        identical += back.ok() && structurally_equal(s, back.spec) && serialize(back.spec) == text;
    }
    o.check(identical == 1000, "parse(serialize(spec)) == spec for %d/1000 generated specs", identical);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char *title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "Dark-count calibration", dark_count_calibration},
        {2, "Threshold formula", threshold_formula},
        {3, "Efficiency analytics", figure_three},
        {4, "Oracle vs Monte Carlo", oracle_vs_monte_carlo},
        {5, "Homodyne vacuum power", homodyne},
        {6, "Laser efficiency curve", laser_efficiency},
        {7, "Heralded efficiency", heralded_efficiency},
        {8, "Born rule", born_rule},
        {9, "State tomography", state_tomography},
        {10, "Mach-Zehnder", mach_zehnder},
        {11, "Anticorrelation", anticorrelation},
        {12, "CHSH", chsh},
        {13, "HOM classical", hom_classical},
        {14, "Bell-state analysis", bell_state_analysis},
        {15, "Teleportation", teleportation},
        {16, "Determinism and replay", determinism},
        {17, "DSL", dsl},
    };
    int failed = 0;
    for (const auto &c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception &e) {
            o.pass = false;
            o.details.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %2d %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs);
        for (const auto &d : o.details) std::printf("       %s\n", d.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu primary criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
