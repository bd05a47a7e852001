#include "vqol/components.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace vqol {

namespace {

struct KindInfo {
    Kind kind;
    std::string_view name;
    std::string_view alias;
    KindClass cls;
};

constexpr std::array<KindInfo, kKindCount> kKinds{{
    {Kind::HalfWavePlate, "HalfWavePlate", "HWP", KindClass::Lossless},
    {Kind::QuarterWavePlate, "QuarterWavePlate", "QWP", KindClass::Lossless},
    {Kind::PhaseDelay, "PhaseDelay", "", KindClass::Lossless},
    {Kind::Dephaser, "Dephaser", "", KindClass::Lossless},
    {Kind::TimeDelay, "TimeDelay", "", KindClass::Delay},
    {Kind::Rotator, "Rotator", "", KindClass::Lossless},
    {Kind::PhaseRetarder, "PhaseRetarder", "", KindClass::Lossless},
    {Kind::Depolarizer, "Depolarizer", "", KindClass::Lossless},
    {Kind::NeutralDensityFilter, "NeutralDensityFilter", "NDF", KindClass::Lossy},
    {Kind::BeamBlocker, "BeamBlocker", "", KindClass::Lossy},
    {Kind::Polarizer, "Polarizer", "", KindClass::Lossy},
    {Kind::BeamSplitter, "BeamSplitter", "BS", KindClass::TwoBeam},
    {Kind::Mirror, "Mirror", "", KindClass::TwoBeam},
    {Kind::PolarizingBeamSplitter, "PolarizingBeamSplitter", "PBS", KindClass::TwoBeam},
    {Kind::LED, "LED", "", KindClass::Source},
    {Kind::Laser, "Laser", "", KindClass::Source},
    {Kind::EntanglementSource, "EntanglementSource", "ENT", KindClass::Source},
    {Kind::PowerMeter, "PowerMeter", "", KindClass::Sink},
    {Kind::Detector, "Detector", "", KindClass::Sink},
}};

const KindInfo &info(Kind k) { return kKinds[static_cast<std::size_t>(k)]; }

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::string_view, N> &names) {
    for (std::size_t i = 0; i < N; ++i) {
        if (iequals(s, names[i])) return static_cast<E>(i);
    }
    return std::nullopt;
}

constexpr std::array<std::string_view, 3> kBasisNames{"HV", "DA", "RL"};
constexpr std::array<std::string_view, 6> kPolNames{"H", "V", "D", "A", "R", "L"};
constexpr std::array<std::string_view, 2> kEntTypeNames{"I", "II"};
constexpr std::array<std::string_view, 6> kDirNames{"LR", "LU", "LD", "UR", "DR", "UD"};

}  // namespace

ComponentParams default_params(Kind kind) {
    ComponentParams p;
    p.kind = kind;
    if (kind == Kind::BeamSplitter) p.r = 1.0 / std::sqrt(2.0);
    if (kind == Kind::Mirror) p.r = 1.0;
    if (kind == Kind::EntanglementSource) p.r = 1.0;
    return p;
}

double default_varphi(EntType type) { return type == EntType::I ? 0.0 : 180.0; }

KindClass kind_class(Kind kind) { return info(kind).cls; }
std::string_view kind_name(Kind kind) { return info(kind).name; }

std::optional<Kind> parse_kind(std::string_view name) {
    for (const auto &k : kKinds) {
        if (iequals(name, k.name) || (!k.alias.empty() && iequals(name, k.alias))) return k.kind;
    }
    return std::nullopt;
}

std::string_view basis_name(PbsBasis b) { return kBasisNames[static_cast<std::size_t>(b)]; }
std::string_view polarization_name(Polarization p) { return kPolNames[static_cast<std::size_t>(p)]; }
std::string_view ent_type_name(EntType t) { return kEntTypeNames[static_cast<std::size_t>(t)]; }
std::string_view directions_name(EntDirections d) { return kDirNames[static_cast<std::size_t>(d)]; }
std::optional<PbsBasis> parse_basis(std::string_view s) { return lookup<PbsBasis>(s, kBasisNames); }
std::optional<Polarization> parse_polarization(std::string_view s) {
    return lookup<Polarization>(s, kPolNames);
}
std::optional<EntType> parse_ent_type(std::string_view s) {
    if (s == "1") return EntType::I;
    if (s == "2") return EntType::II;
    return lookup<EntType>(s, kEntTypeNames);
}
std::optional<EntDirections> parse_directions(std::string_view s) {
    return lookup<EntDirections>(s, kDirNames);
}

JonesVector polarization_ket(Polarization p) {
    const double h = 1.0 / std::sqrt(2.0);
    switch (p) {
    case Polarization::H: return {1.0, 0.0};
    case Polarization::V: return {0.0, 1.0};
    case Polarization::D: return {h, h};
    case Polarization::A: return {h, -h};
    case Polarization::R: return {h, Complex{0.0, h}};
    case Polarization::L: return {h, Complex{0.0, -h}};
    }
    return {};
}

JonesMatrix jones_matrix_of(const ComponentParams &p, const KeyedRng &rng) {
    switch (p.kind) {
    case Kind::HalfWavePlate: {
        const double t = 2.0 * deg_to_rad(p.angle);
        const double c = std::cos(t), s = std::sin(t);
        return JonesMatrix::from(c, s, s, -c);
    }
    case Kind::QuarterWavePlate: {
        const double t = deg_to_rad(p.angle);
        const double c = std::cos(t), s = std::sin(t);
        const Complex off = Complex{1.0, -1.0} * (c * s);
        return JonesMatrix::from(Complex{c * c, s * s}, off, off, Complex{s * s, c * c});
    }
    case Kind::PhaseDelay: {
        const Complex e = std::polar(1.0, deg_to_rad(p.phi));
        return JonesMatrix::from(e, 0.0, 0.0, e);
    }
    case Kind::Dephaser: {
        const Complex e = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform(0));
        return JonesMatrix::from(e, 0.0, 0.0, e);
    }
    case Kind::Rotator: {
        const double t = deg_to_rad(p.angle);
        const double c = std::cos(t), s = std::sin(t);
        return JonesMatrix::from(c, -s, s, c);
    }
    case Kind::PhaseRetarder:
        return JonesMatrix::from(1.0, 0.0, 0.0, std::polar(1.0, deg_to_rad(p.phi)));
    case Kind::Depolarizer: {
        const double two_pi = 2.0 * std::numbers::pi;
        return haar_random_unitary(rng.uniform(0), two_pi * rng.uniform(1),
                                   two_pi * rng.uniform(2), two_pi * rng.uniform(3));
    }
    default:
        throw std::invalid_argument("not a lossless element: " + std::string(kind_name(p.kind)));
    }
}

JonesMatrix jones_matrix_of(const ComponentParams &p, const RngKey &key) {
    return jones_matrix_of(p, KeyedRng(key));
}

JonesMatrix polarizer_projection(double theta_deg, double phi_deg) {
    const double t = deg_to_rad(theta_deg);
    const double c = std::cos(t), s = std::sin(t);
    const Complex e = std::polar(1.0, deg_to_rad(phi_deg));
    return JonesMatrix::from(c * c, std::conj(e) * (c * s), e * (c * s), s * s);
}

JonesVector apply_lossy(const ComponentParams &p, const JonesVector &in, const KeyedRng &rng,
                        std::uint64_t draw) {
    const JonesVector vac = kSigma0 * rng.gaussian_pair(draw);
    switch (p.kind) {
    case Kind::NeutralDensityFilter: {
        const double t = std::pow(10.0, -p.d / 2.0);
        return t * in + (1.0 - t) * vac;
    }
    case Kind::BeamBlocker:
        return vac;
    case Kind::Polarizer: {
        const JonesMatrix proj = polarizer_projection(p.angle, p.phi);
        const JonesMatrix comp = JonesMatrix::from(1.0 - proj.m[0], -proj.m[1], -proj.m[2],
                                                   1.0 - proj.m[3]);
        return proj * in + comp * vac;
    }
    default:
        throw std::invalid_argument("not a lossy element: " + std::string(kind_name(p.kind)));
    }
}

BeamPair apply_two_beam(const ComponentParams &p, const JonesVector &a, const JonesVector &b) {
    switch (p.kind) {
    case Kind::BeamSplitter:
    case Kind::Mirror: {
        const double r = p.kind == Kind::Mirror ? 1.0 : p.r;
        const double t = std::sqrt(std::max(0.0, 1.0 - r * r));
        return {t * a + r * b, r * a - t * b};
    }
    case Kind::PolarizingBeamSplitter:
        switch (p.basis) {
        case PbsBasis::HV:
            return {{a.h, b.v}, {b.h, a.v}};
        case PbsBasis::DA: {
            const Complex ta = 0.5 * (a.h + a.v), ra = 0.5 * (a.h - a.v);
            const Complex tb = 0.5 * (b.h + b.v), rb = 0.5 * (b.h - b.v);
            return {{ta + rb, ta - rb}, {tb + ra, tb - ra}};
        }
        case PbsBasis::RL: {
            const Complex ta = 0.5 * (a.h - kI * a.v), ra = 0.5 * (a.h + kI * a.v);
            const Complex tb = 0.5 * (b.h - kI * b.v), rb = 0.5 * (b.h + kI * b.v);
            return {{ta + rb, kI * ta - kI * rb}, {tb + ra, kI * tb - kI * ra}};
        }
        }
        break;
    default:
        break;
    }
    throw std::invalid_argument("not a two-beam element: " + std::string(kind_name(p.kind)));
}

double laser_alpha_sq(double power_watts) {
    const double n = power_watts * constants::delta_t / constants::photon_energy - constants::sigma0_sq;
    return std::max(0.0, n);
}

double led_sigma_sq(double power_watts) {
    return std::max(0.0, power_watts) * constants::delta_t / constants::photon_energy;
}

SourceSample sample_source(const ComponentParams &p, const KeyedRng &rng) {
    switch (p.kind) {
    case Kind::LED: {
        const double amp = std::sqrt(led_sigma_sq(p.power) + constants::sigma0_sq);
        return {amp * rng.gaussian_pair(0), {}, false};
    }
    case Kind::Laser: {
        const double alpha = std::sqrt(laser_alpha_sq(p.power));
        return {alpha * polarization_ket(p.polarization) + kSigma0 * rng.gaussian_pair(0), {}, false};
    }
    case Kind::EntanglementSource: {
        const double c = std::cosh(p.r), s = std::sinh(p.r);
        const Complex e = std::polar(1.0, deg_to_rad(p.varphi));
        const Complex z1h = rng.complex_gaussian(0), z1v = rng.complex_gaussian(1);
        const Complex z2h = rng.complex_gaussian(2), z2v = rng.complex_gaussian(3);
        SourceSample out;
        out.two_beams = true;
        if (p.ent_type == EntType::I) {
            out.a = {z1h * c + std::conj(z2h) * s, z1v * c + e * std::conj(z2v) * s};
            out.b = {z2h * c + std::conj(z1h) * s, z2v * c + e * std::conj(z1v) * s};
        } else {
            out.a = {z1h * c + std::conj(z2v) * s, z1v * c + e * std::conj(z2h) * s};
            out.b = {z2h * c + e * std::conj(z1v) * s, z2v * c + std::conj(z1h) * s};
        }
        out.a = kSigma0 * out.a;
        out.b = kSigma0 * out.b;
        return out;
    }
    default:
        throw std::invalid_argument("not a source: " + std::string(kind_name(p.kind)));
    }
}

double threshold_from_dcr(double dcr, double delta_t) {
    const double delta = dcr * delta_t;
    if (!(delta >= 0.0)) throw std::invalid_argument("dark count rate must be nonnegative");
    if (delta > 1.0) throw std::invalid_argument("dark count probability exceeds 1");
    if (delta == 1.0) return 0.0;
    return kSigma0 * std::sqrt(-std::log(1.0 - std::sqrt(1.0 - delta)));
}

bool detector_evaluate(DetectorState &state, const JonesVector &in) {
    const bool click = std::abs(in.h) > state.gamma || std::abs(in.v) > state.gamma;
    if (click) ++state.count;
    return click;
}

std::int64_t quantize_nw(double watts) {
    return static_cast<std::int64_t>(std::floor(watts * 1e9));
}

double power_meter_read(std::span<const JonesVector> inputs) {
    double best = 0.0;
    for (const auto &j : inputs) best = std::max(best, beam_power(j));
    return static_cast<double>(quantize_nw(best)) * 1e-9;
}

}  // namespace vqol
