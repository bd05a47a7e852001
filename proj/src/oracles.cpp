#include "vqol/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace vqol::oracles {

double p_no_click(double gamma, double sigma, Complex alpha) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be nonnegative");
    const double s2 = std::sqrt(2.0);
    return 1.0 - marcum_q1(s2 * std::abs(alpha) / sigma, s2 * gamma / sigma);
}

double pr_click(Complex alpha_h, Complex alpha_v, double gamma, double sigma) {
    return 1.0 - p_no_click(gamma, sigma, alpha_h) * p_no_click(gamma, sigma, alpha_v);
}

double dark_count_prob(double gamma, double sigma) {
    const double e = std::exp(-gamma * gamma / (sigma * sigma));
    return 1.0 - (1.0 - e) * (1.0 - e);
}

double nominal_efficiency(double gamma, double sigma) {
    const double s2 = sigma * sigma;
    const double e = std::exp(-gamma * gamma / s2);
    return e * (1.0 - e) * gamma * gamma / (s2 * s2);
}

double nominal_efficiency_sigma2(double gamma, double sigma) {
    return nominal_efficiency(gamma, sigma) * sigma * sigma;
}

double argmax_efficiency(double sigma) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 5.0 * sigma;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = nominal_efficiency(x1, sigma), f2 = nominal_efficiency(x2, sigma);
    while (hi - lo > 1e-12) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = nominal_efficiency(x2, sigma);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = nominal_efficiency(x1, sigma);
        }
    }
    return 0.5 * (lo + hi);
}

MzAmplitudes mz_mean_amplitudes(double phi_deg, double theta_deg, double d, double alpha) {
    const Complex e = std::polar(1.0, deg_to_rad(phi_deg));
    const double c2 = std::cos(2.0 * deg_to_rad(theta_deg));
    const double s2 = std::sin(2.0 * deg_to_rad(theta_deg));
    const double amp = std::pow(10.0, -d / 2.0) * alpha;
    return {0.5 * (1.0 + e * c2) * amp, 0.5 * (1.0 - e * c2) * amp, 0.5 * e * s2 * amp,
            -0.5 * e * s2 * amp};
}

HomPowers hom_powers(double phi_rad, double laser_power) {
    const double total = 2.0 * laser_alpha_sq(laser_power) * constants::photon_energy /
                         constants::delta_t;
    const double c = std::cos(phi_rad / 2.0);
    const double s = std::sin(phi_rad / 2.0);
    return {total * c * c, total * s * s};
}

EntMoments ent_second_moments(EntType type, double r, double varphi_deg) {
    // v = sigma0 (A z + B conj(z)) with z = (z1H, z1V, z2H, z2V).
    const double c = std::cosh(r), s = std::sinh(r);
    const Complex e = std::polar(1.0, deg_to_rad(varphi_deg));
    Matrix4 a{}, b{};
    for (int i = 0; i < 4; ++i) a[i][i] = c;
    if (type == EntType::I) {
        b[0][2] = s;
        b[1][3] = e * s;
        b[2][0] = s;
        b[3][1] = e * s;
    } else {
        b[0][3] = s;
        b[1][2] = e * s;
        b[2][1] = e * s;
        b[3][0] = s;
    }
    EntMoments m{};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            Complex cov{}, pseudo{};
            for (int k = 0; k < 4; ++k) {
                cov += a[i][k] * std::conj(a[j][k]) + b[i][k] * std::conj(b[j][k]);
                pseudo += a[i][k] * b[j][k] + b[i][k] * a[j][k];
            }
            m.vv_dagger[i][j] = constants::sigma0_sq * cov;
            m.vv_transpose[i][j] = constants::sigma0_sq * pseudo;
        }
    }
    return m;
}

}  // namespace vqol::oracles
