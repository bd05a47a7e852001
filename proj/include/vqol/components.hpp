#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "vqol/core_math.hpp"

namespace vqol {

enum class Kind {
    HalfWavePlate,
    QuarterWavePlate,
    PhaseDelay,
    Dephaser,
    TimeDelay,
    Rotator,
    PhaseRetarder,
    Depolarizer,
    NeutralDensityFilter,
    BeamBlocker,
    Polarizer,
    BeamSplitter,
    Mirror,
    PolarizingBeamSplitter,
    LED,
    Laser,
    EntanglementSource,
    PowerMeter,
    Detector,
};

inline constexpr int kKindCount = 19;

enum class KindClass {
    Lossless,   // unitary Jones matrix, single beam
    Delay,      // TimeDelay, identity on the field
    Lossy,      // single beam with vacuum injection
    TwoBeam,    // BeamSplitter, Mirror, PBS
    Source,
    Sink,
};

enum class PbsBasis { HV, DA, RL };
enum class Polarization { H, V, D, A, R, L };
enum class EntType { I, II };
/// Output directions of an entanglement source; the first letter is beam a.
enum class EntDirections { LR, LU, LD, UR, DR, UD };

/// Flat parameter record. Only the fields relevant to `kind` are meaningful;
/// the rest keep their defaults so that structural comparison is exact.
struct ComponentParams {
    Kind kind = Kind::Laser;
    double angle = 0.0;    // deg: HWP, QWP, Rotator, Polarizer
    double phi = 0.0;      // deg: PhaseDelay, PhaseRetarder, Polarizer
    int steps = 0;         // TimeDelay
    double d = 10.0;       // NDF optical density
    double r = 0.0;        // BS reflection coefficient or ENT squeezing
    PbsBasis basis = PbsBasis::HV;
    double power = 4e-3;   // W
    Polarization polarization = Polarization::H;
    EntType ent_type = EntType::I;
    double varphi = 0.0;   // deg
    EntDirections directions = EntDirections::LR;
    double dcr = 1000.0;   // counts / s

    friend bool operator==(const ComponentParams &, const ComponentParams &) = default;
};

/// Parameters of `kind` with every field at its documented default.
ComponentParams default_params(Kind kind);
/// Default varphi for an entanglement source of the given type.
double default_varphi(EntType type);

KindClass kind_class(Kind kind);
std::string_view kind_name(Kind kind);
/// Case-insensitive lookup including the short aliases (BS, PBS, HWP, ...).
std::optional<Kind> parse_kind(std::string_view name);

std::string_view basis_name(PbsBasis b);
std::string_view polarization_name(Polarization p);
std::string_view ent_type_name(EntType t);
std::string_view directions_name(EntDirections d);
std::optional<PbsBasis> parse_basis(std::string_view s);
std::optional<Polarization> parse_polarization(std::string_view s);
std::optional<EntType> parse_ent_type(std::string_view s);
std::optional<EntDirections> parse_directions(std::string_view s);

/// Normalized polarization ket of a laser.
JonesVector polarization_ket(Polarization p);

/// Matrix of a lossless single-beam element. Dephaser and Depolarizer draw
/// their random parameters from `rng`; the others ignore it.
JonesMatrix jones_matrix_of(const ComponentParams &p, const KeyedRng &rng);
JonesMatrix jones_matrix_of(const ComponentParams &p, const RngKey &key);

/// Polarizer projection P(theta, phi), angles in degrees.
JonesMatrix polarizer_projection(double theta_deg, double phi_deg);

/// NDF, BeamBlocker or Polarizer acting on `in`; the vacuum pair uses draws
/// `draw` and `draw + 1` of `rng`.
JonesVector apply_lossy(const ComponentParams &p, const JonesVector &in, const KeyedRng &rng,
                        std::uint64_t draw = 0);

struct BeamPair {
    JonesVector a;
    JonesVector b;
};

/// BeamSplitter, Mirror or PBS. Callers substitute vacuum for a missing port.
BeamPair apply_two_beam(const ComponentParams &p, const JonesVector &a, const JonesVector &b);

struct SourceSample {
    JonesVector a;
    JonesVector b;   // entanglement sources only
    bool two_beams = false;
};

/// Squared mean amplitude of a laser, power dt / (hbar omega) - sigma0^2,
/// clamped at zero.
double laser_alpha_sq(double power_watts);
/// LED variance sigma^2 = power dt / (hbar omega).
double led_sigma_sq(double power_watts);

SourceSample sample_source(const ComponentParams &p, const KeyedRng &rng);

struct DetectorState {
    double gamma = 0.0;
    std::int64_t count = 0;
};

/// gamma = sigma0 sqrt(-log(1 - sqrt(1 - dcr dt))).
double threshold_from_dcr(double dcr, double delta_t = constants::delta_t);

/// Click iff either mode amplitude exceeds the threshold. Increments the
/// cumulative count on a click.
bool detector_evaluate(DetectorState &state, const JonesVector &in);

inline bool crosses_threshold(double gamma_sq, const JonesVector &in) {
    return std::norm(in.h) > gamma_sq || std::norm(in.v) > gamma_sq;
}

/// Power of one beam in W, (|h|^2 + |v|^2) hbar omega / dt, unquantized.
inline double beam_power(const JonesVector &j) {
    return j.norm_sq() * constants::photon_energy / constants::delta_t;
}

/// Power truncated to whole nanowatts.
std::int64_t quantize_nw(double watts);

/// Largest beam power among `inputs`, quantized to 1 nW and returned in W.
double power_meter_read(std::span<const JonesVector> inputs);

}  // namespace vqol
