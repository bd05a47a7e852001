#include "vqol/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

#include "vqol/oracles.hpp"

namespace vqol::analysis {

HomodyneEstimate homodyne_estimate(std::span<const double> p1, std::span<const double> p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("power series differ in length");
    if (p1.size() < 2) throw std::invalid_argument("need at least two samples");
    const double n = static_cast<double>(p1.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        sx += p1[i] - p2[i];
        sy += p1[i] + p2[i];
    }
    const double mx = sx / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        const double dx = p1[i] - p2[i] - mx;
        ss += dx * dx;
    }
    HomodyneEstimate e;
    e.mu = sy / n;
    if (e.mu == 0.0) throw std::domain_error("mean total power is zero");
    const double var = ss / (n - 1.0);
    e.s = std::sqrt(var);
    e.p0_hat = var / (2.0 * e.mu);
    return e;
}

double efficiency_laser(std::int64_t n, double d, double alpha_sq, double t_seconds, double delta_t) {
    if (t_seconds <= 0.0) throw std::invalid_argument("duration must be positive");
    return static_cast<double>(n) * delta_t / (std::pow(10.0, -d) * alpha_sq * t_seconds);
}

double efficiency_heralded(std::int64_t n1, std::int64_t n12) {
    if (n1 + n12 <= 0) throw std::domain_error("no heralded events");
    return static_cast<double>(n12) / static_cast<double>(n1 + n12);
}

BornPoint born_probability(double n1, double n2, double dark1, double dark2) {
    const double a = n1 - dark1;
    const double den = a + n2 - dark2;
    if (den <= 0.0) throw std::domain_error("no counts remain after dark subtraction");
    BornPoint b;
    b.p = a / den;
    if (b.p < 0.0 || b.p > 1.0) {
        b.out_of_range = true;
        b.p = std::clamp(b.p, 0.0, 1.0);
    }
    return b;
}

std::vector<BornPoint> born_sweep(std::span<const double> n1, std::span<const double> n2,
                                  DarkSubtraction mode, double dark1, double dark2) {
    if (n1.size() != n2.size()) throw std::invalid_argument("count series differ in length");
    if (n1.empty()) throw std::invalid_argument("empty sweep");
    double d1 = 0.0, d2 = 0.0;
    if (mode == DarkSubtraction::MinOverSweep) {
        d1 = *std::min_element(n1.begin(), n1.end());
        d2 = *std::min_element(n2.begin(), n2.end());
    } else if (mode == DarkSubtraction::RateTime) {
        d1 = dark1;
        d2 = dark2;
    }
    std::vector<BornPoint> out;
    out.reserve(n1.size());
    for (std::size_t i = 0; i < n1.size(); ++i) out.push_back(born_probability(n1[i], n2[i], d1, d2));
    return out;
}

QstResult qst_reconstruct(double x, double y, double z) {
    QstResult r;
    r.rho.m = {Complex(0.5 * (1.0 + z), 0.0), Complex(0.5 * x, -0.5 * y), Complex(0.5 * x, 0.5 * y),
               Complex(0.5 * (1.0 - z), 0.0)};
    const double radius = std::sqrt(x * x + y * y + z * z);
    r.eigenvalues = {0.5 * (1.0 - radius), 0.5 * (1.0 + radius)};
    r.psd = r.eigenvalues[0] >= -1e-12;
    return r;
}

double fidelity(const JonesVector &psi, const DensityMatrix2 &rho) {
    const double n = psi.norm_sq();
    if (n <= 0.0) throw std::invalid_argument("state vector is zero");
    const Complex h = psi.h, v = psi.v;
    const Complex f = std::conj(h) * (rho(0, 0) * h + rho(0, 1) * v) +
                      std::conj(v) * (rho(1, 0) * h + rho(1, 1) * v);
    return f.real() / n;
}

double pauli_expectation(double n1, double n2) {
    const double den = n1 + n2;
    return den == 0.0 ? 0.0 : (n1 - n2) / den;
}

WavePlateSetting qst_basis_settings(char basis) {
    switch (basis) {
    case 'Z': case 'z': return {0.0, 0.0};
    case 'X': case 'x': return {45.0, 22.5};
    case 'Y': case 'y': return {90.0, 22.5};
    default: throw std::invalid_argument(std::string("unknown basis '") + basis + "'");
    }
}

PolarizerSetting polarizer_settings(Polarization p) {
    switch (p) {
    case Polarization::H: return {0.0, 0.0};
    case Polarization::V: return {90.0, 0.0};
    case Polarization::D: return {45.0, 0.0};
    case Polarization::A: return {-45.0, 0.0};
    case Polarization::R: return {45.0, 90.0};
    case Polarization::L: return {45.0, -90.0};
    }
    throw std::invalid_argument("unknown polarization");
}

ProbabilityPair mz_probabilities(double phi_deg, double theta_deg, double d, double dcr, double laser_power) {
    const double gamma = threshold_from_dcr(dcr);
    const auto amp = oracles::mz_mean_amplitudes(phi_deg, theta_deg, d, std::sqrt(laser_alpha_sq(laser_power)));
    const double c1 = oracles::pr_click(amp.alpha_h, amp.alpha_v, gamma);
    const double c2 = oracles::pr_click(amp.beta_h, amp.beta_v, gamma);
    return {c1 * (1.0 - c2), c2 * (1.0 - c1)};
}

ProbabilityPair mz_quantum(double phi_deg, double theta_deg) {
    const double k = std::cos(deg_to_rad(phi_deg)) * std::cos(2.0 * deg_to_rad(theta_deg));
    return {0.5 * (1.0 + k), 0.5 * (1.0 - k)};
}

double dark_subtracted(double p1, double p2, double delta1, double delta2) {
    const double den = p1 - delta1 + p2 - delta2;
    if (den == 0.0) throw std::domain_error("no signal after dark subtraction");
    return (p1 - delta1) / den;
}

double anticorrelation_alpha(std::int64_t n3, std::int64_t n13, std::int64_t n23, std::int64_t n123) {
    if (n13 <= 0 || n23 <= 0) throw std::domain_error("insufficient heralded singles");
    return static_cast<double>(n123) * static_cast<double>(n3 + n13 + n23 + n123) /
           (static_cast<double>(n13) * static_cast<double>(n23));
}

ChshCounts chsh_counts(const CoincidenceTable &t) {
    if (t.num_detectors() != 4) throw std::invalid_argument("CHSH needs a 4-detector table");
    return {t.pattern({1, 3}), t.pattern({1, 4}), t.pattern({2, 3}), t.pattern({2, 4})};
}

double chsh_correlation(const ChshCounts &n) {
    const std::int64_t total = n.n13 + n.n14 + n.n23 + n.n24;
    if (total <= 0) throw std::domain_error("no coincidences for a setting");
    return static_cast<double>(n.n13 - n.n14 - n.n23 + n.n24) / static_cast<double>(total);
}

ChshResult chsh(const std::array<std::array<ChshCounts, 2>, 2> &counts) {
    ChshResult r;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) r.c[i][j] = chsh_correlation(counts[i][j]);
    }
    r.s = std::abs(r.c[0][0] + r.c[0][1]) + std::abs(r.c[1][0] - r.c[1][1]);
    return r;
}

double coincidence_efficiency(const CoincidenceTable &t) {
    if (t.num_detectors() != 4) throw std::invalid_argument("coincidence efficiency needs 4 detectors");
    const auto hit = t.pattern({1, 3}) + t.pattern({1, 4});
    const auto den = t.pattern({1}) + hit;
    if (den == 0) throw std::domain_error("no single detections on D1");
    return static_cast<double>(hit) / static_cast<double>(den);
}

FidelityEstimate teleport_fidelity(std::int64_t nh, std::int64_t nv) {
    if (nh < 0 || nv < 0) throw std::invalid_argument("counts must be nonnegative");
    const std::int64_t n = nh + nv;
    if (n == 0) throw std::domain_error("no valid teleportation events");
    constexpr double alpha = 0.05;
    FidelityEstimate e;
    e.f = static_cast<double>(nh) / static_cast<double>(n);
    const auto x = static_cast<double>(nh);
    const auto m = static_cast<double>(n);
    e.ci_low = nh == 0 ? 0.0 : boost::math::ibeta_inv(x, m - x + 1.0, alpha / 2.0);
    e.ci_high = nh == n ? 1.0 : boost::math::ibeta_inv(x + 1.0, m - x, 1.0 - alpha / 2.0);
    return e;
}

std::array<std::int64_t, 2> teleport_counts(const CoincidenceTable &t) {
    if (t.num_detectors() != 4) throw std::invalid_argument("teleportation needs a 4-detector table");
    return {t.pattern({1, 2, 3}), t.pattern({1, 2, 4})};
}

std::string bell_label_name(BellLabel l) {
    switch (l) {
    case BellLabel::PsiMinus: return "Psi_minus";
    case BellLabel::PsiPlus: return "Psi_plus";
    case BellLabel::PhiPair: return "Phi_pair";
    case BellLabel::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

BellLabel bsa_classify(const CoincidenceTable &t) {
    if (t.num_detectors() != 4) throw std::invalid_argument("Bell-state analysis needs 4 detectors");
    const std::int64_t minus = t.pattern({1, 4}) + t.pattern({2, 3});
    const std::int64_t plus = t.pattern({1, 2}) + t.pattern({3, 4});
    const std::int64_t other = t.pattern({1, 3}) + t.pattern({2, 4});
    const std::int64_t singles = t.pattern({1}) + t.pattern({2}) + t.pattern({3}) + t.pattern({4});
    // Phi runs still show a few signature doubles, so singles are checked first
    if (singles > 0 && singles > 2 * (minus + plus + other)) return BellLabel::PhiPair;
    if (minus > 2 * plus && minus > 2 * other) return BellLabel::PsiMinus;
    if (plus > 2 * minus && plus > 2 * other) return BellLabel::PsiPlus;
    return BellLabel::Inconclusive;
}

}  // namespace vqol::analysis
