#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <numbers>

namespace vqol {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

/// Physical constants of the simulated laboratory. All light is monochromatic
/// at a single wavelength and time is sliced into segments of `delta_t`.
namespace constants {
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double k_boltzmann = 1.380649e-23;   // J / K
inline constexpr double wavelength = 496.61e-9;       // m
inline constexpr double frequency = 603.68e12;        // Hz
inline constexpr double omega = 2.0 * std::numbers::pi * frequency;
inline constexpr double delta_t = 1e-6;               // s
inline constexpr double sigma0_sq = 0.5;
inline constexpr double photon_energy = hbar * omega; // J
/// Vacuum power of a single beam, sigma0^2 * hbar * omega / delta_t.
inline constexpr double vacuum_power = sigma0_sq * photon_energy / delta_t;
}  // namespace constants

/// sigma0 = sqrt(1/2), the vacuum amplitude scale.
inline const double kSigma0 = std::sqrt(constants::sigma0_sq);

/// Polarization state of one beam segment: complex amplitudes of the
/// horizontal and vertical modes.
struct JonesVector {
    Complex h{};
    Complex v{};

    double norm_sq() const { return std::norm(h) + std::norm(v); }

    JonesVector &operator+=(const JonesVector &o) {
        h += o.h;
        v += o.v;
        return *this;
    }
    friend JonesVector operator+(JonesVector a, const JonesVector &b) { return a += b; }
    friend JonesVector operator-(const JonesVector &a, const JonesVector &b) {
        return {a.h - b.h, a.v - b.v};
    }
    friend JonesVector operator*(Complex s, const JonesVector &a) { return {s * a.h, s * a.v}; }
    friend JonesVector operator*(double s, const JonesVector &a) { return {s * a.h, s * a.v}; }
    friend bool operator==(const JonesVector &, const JonesVector &) = default;
};

/// 2x2 complex matrix acting on Jones vectors, row-major.
struct JonesMatrix {
    std::array<Complex, 4> m{Complex{1.0}, Complex{}, Complex{}, Complex{1.0}};

    static JonesMatrix identity() { return {}; }
    static JonesMatrix from(Complex a, Complex b, Complex c, Complex d) {
        return JonesMatrix{{a, b, c, d}};
    }

    Complex operator()(int row, int col) const { return m[2 * row + col]; }

    JonesMatrix adjoint() const {
        return from(std::conj(m[0]), std::conj(m[2]), std::conj(m[1]), std::conj(m[3]));
    }
    Complex determinant() const { return m[0] * m[3] - m[1] * m[2]; }

    /// Largest entry-wise deviation of M^dagger M from the identity.
    double unitarity_error() const;

    friend JonesVector operator*(const JonesMatrix &a, const JonesVector &x) {
        return {a.m[0] * x.h + a.m[1] * x.v, a.m[2] * x.h + a.m[3] * x.v};
    }
    friend JonesMatrix operator*(const JonesMatrix &a, const JonesMatrix &b) {
        return from(a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
                    a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]);
    }
    friend JonesMatrix operator*(Complex s, const JonesMatrix &a) {
        return from(s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]);
    }
    friend bool operator==(const JonesMatrix &, const JonesMatrix &) = default;
};

/// Address of one random draw. The sample behind a key is a pure function of
/// the key, so any step of any run can be replayed without replaying others.
struct RngKey {
    std::uint64_t run_seed = 0;
    std::uint64_t node_id = 0;
    std::uint64_t step_index = 0;
    std::uint64_t draw_index = 0;
};

/// Counter-based generator bound to one (seed, node, step) triple. Draw
/// indices select independent streams of words.
class KeyedRng {
public:
    KeyedRng(std::uint64_t seed, std::uint64_t node, std::uint64_t step);
    explicit KeyedRng(const RngKey &key) : KeyedRng(key.run_seed, key.node_id, key.step_index) {}

    std::uint64_t word(std::uint64_t index) const;
    /// Uniform on [0, 1).
    double uniform(std::uint64_t draw) const;
    /// Standard complex Gaussian: E[z] = 0, E[z^2] = 0, E[|z|^2] = 1.
    Complex complex_gaussian(std::uint64_t draw) const;
    /// Pair of independent standard complex Gaussians using draws `draw` and `draw + 1`.
    JonesVector gaussian_pair(std::uint64_t draw) const {
        return {complex_gaussian(draw), complex_gaussian(draw + 1)};
    }

private:
    std::uint64_t base_;
};

std::uint64_t mix64(std::uint64_t x);

Complex sample_standard_complex_gaussian(const RngKey &key);
double sample_uniform(const RngKey &key);

/// Thermal mode variance 1/(exp(hbar omega / kT) - 1) + 1/2; 1/2 at T = 0.
double sigma_thermal_sq(double temperature_kelvin, double omega = constants::omega);

/// Generalized Marcum Q function of order one, absolute error below 1e-10.
double marcum_q1(double a, double b);

/// e^{i chi} diag(1, e^{i phi}) R(theta) diag(1, e^{i lambda}) with
/// theta = acos(2u - 1) / 2. Haar distributed when u ~ U[0,1] and the
/// three phases are uniform on [0, 2 pi).
JonesMatrix haar_random_unitary(double u, double phi, double lambda, double chi);

struct BlochPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// Stokes / Bloch coordinates of a polarization. Throws std::domain_error on a
/// zero field.
BlochPoint bloch_coords(const JonesVector &j);

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace vqol
