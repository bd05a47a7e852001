#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vqol/components.hpp"
#include "vqol/core_math.hpp"
#include "vqol/recorder.hpp"

namespace vqol::analysis {

struct HomodyneEstimate {
    double p0_hat = 0.0;  // W
    double s = 0.0;       // sample standard deviation of p1 - p2, W
    double mu = 0.0;      // mean of p1 + p2, W
};

/// Vacuum power estimate s^2 / (2 mu) from x = p1 - p2 and y = p1 + p2.
HomodyneEstimate homodyne_estimate(std::span<const double> p1, std::span<const double> p2);

/// eta_L = N dt / (10^-d |alpha|^2 t).
double efficiency_laser(std::int64_t n, double d, double alpha_sq, double t_seconds,
                        double delta_t = constants::delta_t);

/// eta_E = N12 / (N1 + N12).
double efficiency_heralded(std::int64_t n1, std::int64_t n12);

enum class DarkSubtraction { None, MinOverSweep, RateTime };

struct BornPoint {
    double p = 0.0;
    bool out_of_range = false;  // raw value fell outside [0, 1] and was clamped
};

/// n1 / (n1 + n2) after subtracting dark1 and dark2.
BornPoint born_probability(double n1, double n2, double dark1 = 0.0, double dark2 = 0.0);

/// Born probabilities of a whole sweep. MinOverSweep subtracts the minimum
/// of each series; RateTime subtracts the given expected dark counts.
std::vector<BornPoint> born_sweep(std::span<const double> n1, std::span<const double> n2,
                                  DarkSubtraction mode, double dark1 = 0.0, double dark2 = 0.0);

struct DensityMatrix2 {
    std::array<Complex, 4> m{};  // row-major
    Complex operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }
};

struct QstResult {
    DensityMatrix2 rho;
    std::array<double, 2> eigenvalues{};  // ascending
    bool psd = false;
};

/// Linear-inversion estimate rho = (I + x X + y Y + z Z) / 2.
QstResult qst_reconstruct(double exp_x, double exp_y, double exp_z);

/// <psi| rho |psi> for a normalized copy of psi.
double fidelity(const JonesVector &psi, const DensityMatrix2 &rho);

/// (n1 - n2) / (n1 + n2), 0 when both are zero.
double pauli_expectation(double n1, double n2);

struct WavePlateSetting {
    double qwp = 0.0;  // fast-axis angle of the QWP (applied first), degrees
    double hwp = 0.0;  // fast-axis angle of the HWP, degrees
};

/// Measurement settings rotating basis 'X', 'Y' or 'Z' onto H/V.
WavePlateSetting qst_basis_settings(char basis);

struct PolarizerSetting {
    double theta = 0.0;
    double phi = 0.0;
};

PolarizerSetting polarizer_settings(Polarization p);

struct ProbabilityPair {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Exclusive single-detection probabilities of the Mach-Zehnder outputs
/// from the mean amplitudes and the detector click model.
ProbabilityPair mz_probabilities(double phi_deg, double theta_deg, double d, double dcr,
                                 double laser_power = 4e-3);

/// Ideal single-photon probabilities.
ProbabilityPair mz_quantum(double phi_deg, double theta_deg);

/// (p1 - delta1) / (p1 - delta1 + p2 - delta2).
double dark_subtracted(double p1, double p2, double delta1, double delta2);

/// alpha = N123 (N3 + N13 + N23 + N123) / (N13 N23).
double anticorrelation_alpha(std::int64_t n3, std::int64_t n13, std::int64_t n23, std::int64_t n123);

struct ChshCounts {
    std::int64_t n13 = 0;
    std::int64_t n14 = 0;
    std::int64_t n23 = 0;
    std::int64_t n24 = 0;
};

struct ChshResult {
    std::array<std::array<double, 2>, 2> c{};
    double s = 0.0;
};

/// Counts for one setting from a 4-detector table (Bob on D1/D2, Alice on D3/D4).
ChshCounts chsh_counts(const CoincidenceTable &table);
double chsh_correlation(const ChshCounts &n);
/// counts[i][j] is setting (alpha_i, beta_j).
ChshResult chsh(const std::array<std::array<ChshCounts, 2>, 2> &counts);

/// Fraction of single D1 detections accompanied by exactly one Alice click,
/// (N13 + N14) / (N1 + N13 + N14).
double coincidence_efficiency(const CoincidenceTable &table);

struct FidelityEstimate {
    double f = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
};

/// F = nh / (nh + nv) with a 95% Clopper-Pearson interval.
FidelityEstimate teleport_fidelity(std::int64_t nh, std::int64_t nv);

/// Valid teleportation counts from a 4-detector table: D1 and D2 clicked,
/// plus exactly one of D3 (nh) or D4 (nv).
std::array<std::int64_t, 2> teleport_counts(const CoincidenceTable &table);

enum class BellLabel { PsiMinus, PsiPlus, PhiPair, Inconclusive };
std::string bell_label_name(BellLabel l);

/// Classify a 4-detector Bell-state-analyzer table.
BellLabel bsa_classify(const CoincidenceTable &table);

}  // namespace vqol::analysis
