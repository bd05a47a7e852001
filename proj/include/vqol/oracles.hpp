#pragma once

#include <array>

#include "vqol/components.hpp"
#include "vqol/core_math.hpp"

namespace vqol::oracles {

/// No-click probability of one mode, Pr[|alpha + sigma z| <= gamma]
/// = 1 - Q1(sqrt2 |alpha| / sigma, sqrt2 gamma / sigma).
double p_no_click(double gamma, double sigma, Complex alpha);

/// Click probability of a threshold detector on a coherent input with mean
/// amplitudes (alpha_h, alpha_v).
double pr_click(Complex alpha_h, Complex alpha_v, double gamma, double sigma = kSigma0);

/// delta = 1 - (1 - e^{-gamma^2 / sigma^2})^2.
double dark_count_prob(double gamma, double sigma = kSigma0);

/// eta = e (1 - e) gamma^2 / sigma^4 with e = e^{-gamma^2 / sigma^2}.
double nominal_efficiency(double gamma, double sigma = kSigma0);

/// Same expression normalized by sigma^2 instead of sigma^4; this is the
/// convention under which the peak value is 0.26 at sigma^2 = 1/2.
double nominal_efficiency_sigma2(double gamma, double sigma = kSigma0);

/// Threshold maximizing nominal_efficiency, found by golden-section search.
double argmax_efficiency(double sigma = kSigma0);

struct MzAmplitudes {
    Complex alpha_h;  // toward D1
    Complex beta_h;   // toward D2
    Complex alpha_v;
    Complex beta_v;
};

/// Mean output amplitudes of the Mach-Zehnder interferometer; angles in
/// degrees, alpha is the laser amplitude before the NDF.
MzAmplitudes mz_mean_amplitudes(double phi_deg, double theta_deg, double d, double alpha);

struct HomPowers {
    double right;  // W
    double down;   // W
};

/// Classical two-laser interference powers for a relative phase phi (rad).
HomPowers hom_powers(double phi_rad, double laser_power = 4e-3);

using Matrix4 = std::array<std::array<Complex, 4>, 4>;

struct EntMoments {
    Matrix4 vv_dagger;    // E[v v^dagger]
    Matrix4 vv_transpose; // E[v v^T]
};

/// Second moments of v = (a_H, a_V, b_H, b_V) for an entanglement source.
EntMoments ent_second_moments(EntType type, double r, double varphi_deg);

}  // namespace vqol::oracles
