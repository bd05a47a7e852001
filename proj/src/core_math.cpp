#include "vqol/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vqol {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// U(0,1] at 53-bit resolution.
inline double open_low_uniform(std::uint64_t w) {
    return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

// Scaled modified Bessel values s_k = e^{-x} I_k(x) for k = 0..n by Miller's
// backward recurrence, normalized with s_0 + 2 sum_{k>=1} s_k = 1.
void scaled_bessel_i(double x, int n, std::vector<double> &out) {
    out.assign(static_cast<std::size_t>(n) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return;
    }
    const int start = n + 40 + static_cast<int>(std::ceil(12.0 * std::sqrt(x)));
    double next = 0.0;
    double cur = 1e-300;
    double norm = 0.0;
    for (int k = start; k >= 1; --k) {
        const double prev = next + (2.0 * k / x) * cur;  // I_{k-1}
        next = cur;
        cur = prev;
        if (k - 1 <= n) out[static_cast<std::size_t>(k - 1)] = cur;
        if (k - 1 >= 1) norm += 2.0 * cur;
        if (std::abs(cur) > 1e250) {
            const double scale = 1e-250;
            cur *= scale;
            next *= scale;
            norm *= scale;
            for (int j = k - 1; j <= n; ++j) out[static_cast<std::size_t>(j)] *= scale;
        }
    }
    norm += cur;
    for (double &v : out) v /= norm;
}

}  // namespace

double JonesMatrix::unitarity_error() const {
    const JonesMatrix p = adjoint() * (*this);
    double err = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Complex ideal = (i == 0 || i == 3) ? Complex{1.0} : Complex{};
        err = std::max(err, std::abs(p.m[i] - ideal));
    }
    return err;
}

std::uint64_t mix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

KeyedRng::KeyedRng(std::uint64_t seed, std::uint64_t node, std::uint64_t step)
    : base_(mix64(mix64(mix64(seed) ^ node) ^ step)) {}

std::uint64_t KeyedRng::word(std::uint64_t index) const {
    return mix64(base_ ^ mix64(index * kGolden + 0x632BE59BD9B4E019ULL));
}

double KeyedRng::uniform(std::uint64_t draw) const {
    return static_cast<double>(word(2 * draw) >> 11) * 0x1.0p-53;
}

Complex KeyedRng::complex_gaussian(std::uint64_t draw) const {
    const double u1 = open_low_uniform(word(2 * draw));
    const double u2 = static_cast<double>(word(2 * draw + 1) >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

Complex sample_standard_complex_gaussian(const RngKey &key) {
    return KeyedRng(key).complex_gaussian(key.draw_index);
}

double sample_uniform(const RngKey &key) { return KeyedRng(key).uniform(key.draw_index); }

double sigma_thermal_sq(double temperature_kelvin, double omega) {
    if (temperature_kelvin < 0.0) throw std::invalid_argument("temperature must be nonnegative");
    if (temperature_kelvin == 0.0) return 0.5;
    const double x = constants::hbar * omega / (constants::k_boltzmann * temperature_kelvin);
    return 1.0 / std::expm1(x) + 0.5;
}

double marcum_q1(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("marcum_q1 requires finite nonnegative arguments");
    if (b == 0.0) return 1.0;
    if (a == 0.0) return std::exp(-0.5 * b * b);
    if (b - a > 40.0) return 0.0;
    if (a - b > 40.0) return 1.0;

    const double x = a * b;
    const double pre = std::exp(-0.5 * (a - b) * (a - b));
    const double ratio = a < b ? a / b : b / a;
    // Beyond k ~ 12 sqrt(x) the scaled Bessel values fall below e^{-70}, and
    // the ratio^k factor only shrinks the tail further.
    const int n_terms = 60 + static_cast<int>(std::ceil(12.0 * std::sqrt(x)));
    thread_local std::vector<double> s;
    scaled_bessel_i(x, n_terms, s);

    double sum = 0.0;
    double power = a < b ? 1.0 : ratio;
    for (int k = a < b ? 0 : 1; k <= n_terms; ++k) {
        const double term = power * s[static_cast<std::size_t>(k)];
        sum += term;
        if (term < 1e-18 * sum) break;
        power *= ratio;
    }
    const double q = a < b ? pre * sum : 1.0 - pre * sum;
    return std::clamp(q, 0.0, 1.0);
}

JonesMatrix haar_random_unitary(double u, double phi, double lambda, double chi) {
    const double theta = 0.5 * std::acos(std::clamp(2.0 * u - 1.0, -1.0, 1.0));
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Complex ep = std::polar(1.0, phi);
    const Complex el = std::polar(1.0, lambda);
    const Complex ec = std::polar(1.0, chi);
    // diag(1, e^{i phi}) * [[c, -s], [s, c]] * diag(1, e^{i lambda})
    return ec * JonesMatrix::from(c, -s * el, ep * s, ep * el * c);
}

BlochPoint bloch_coords(const JonesVector &j) {
    const double n = j.norm_sq();
    if (!(n > 0.0)) throw std::domain_error("dark segment has no polarization");
    const Complex cross = std::conj(j.h) * j.v;
    return {2.0 * cross.real() / n, 2.0 * cross.imag() / n, (std::norm(j.h) - std::norm(j.v)) / n};
}

}  // namespace vqol
