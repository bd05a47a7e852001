#include <gtest/gtest.h>

#include <cmath>

#include "vqol/analysis.hpp"
#include "vqol/components.hpp"

using namespace vqol;

namespace {

ComponentParams with_angle(Kind k, double angle) {
    auto p = default_params(k);
    p.angle = angle;
    return p;
}

void expect_vec(const JonesVector &a, const JonesVector &b, double tol = 1e-12) {
    EXPECT_NEAR(std::abs(a.h - b.h), 0.0, tol);
    EXPECT_NEAR(std::abs(a.v - b.v), 0.0, tol);
}

const KeyedRng kRng(0, 0, 0);

}  // namespace

TEST(Components, KindNamesRoundTrip) {
    for (int i = 0; i < kKindCount; ++i) {
        const auto k = static_cast<Kind>(i);
        EXPECT_EQ(parse_kind(kind_name(k)), k);
    }
    EXPECT_EQ(parse_kind("bs"), Kind::BeamSplitter);
    EXPECT_EQ(parse_kind("PBS"), Kind::PolarizingBeamSplitter);
    EXPECT_EQ(parse_kind("hwp"), Kind::HalfWavePlate);
    EXPECT_EQ(parse_kind("ENT"), Kind::EntanglementSource);
    EXPECT_FALSE(parse_kind("Telescope"));
}

TEST(Components, Defaults) {
    EXPECT_DOUBLE_EQ(default_params(Kind::Laser).power, 4e-3);
    EXPECT_DOUBLE_EQ(default_params(Kind::NeutralDensityFilter).d, 10.0);
    EXPECT_DOUBLE_EQ(default_params(Kind::Detector).dcr, 1000.0);
    EXPECT_DOUBLE_EQ(default_params(Kind::EntanglementSource).r, 1.0);
    EXPECT_DOUBLE_EQ(default_params(Kind::BeamSplitter).r, std::sqrt(0.5));
}

TEST(Components, LosslessMatricesAreUnitary) {
    for (Kind k : {Kind::HalfWavePlate, Kind::QuarterWavePlate, Kind::PhaseDelay, Kind::Dephaser, Kind::Rotator,
                   Kind::PhaseRetarder, Kind::Depolarizer}) {
        for (double a : {0.0, 17.0, 45.0, 90.0}) {
            auto p = with_angle(k, a);
            p.phi = a;
            EXPECT_LT(jones_matrix_of(p, kRng).unitarity_error(), 1e-12) << kind_name(k);
        }
    }
    EXPECT_THROW(jones_matrix_of(default_params(Kind::Laser), kRng), std::invalid_argument);
}

TEST(Components, HalfWavePlateAt45SwapsHandV) {
    const auto m = jones_matrix_of(with_angle(Kind::HalfWavePlate, 45.0), kRng);
    expect_vec(m * JonesVector{1.0, 0.0}, {0.0, 1.0});
}

TEST(Components, HalfWavePlateAt22p5GivesDiagonal) {
    const auto m = jones_matrix_of(with_angle(Kind::HalfWavePlate, 22.5), kRng);
    expect_vec(m * JonesVector{1.0, 0.0}, polarization_ket(Polarization::D));
}

TEST(Components, QuarterWavePlateAt45TurnsHIntoCircular) {
    const auto m = jones_matrix_of(with_angle(Kind::QuarterWavePlate, 45.0), kRng);
    const auto out = m * JonesVector{1.0, 0.0};
    EXPECT_NEAR(std::abs(out.h), std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(std::abs(out.v), std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(std::arg(out.v / out.h), -std::numbers::pi / 2.0, 1e-12);
}

TEST(Components, TwoQuarterWavePlatesMakeAHalfWavePlateUpToPhase) {
    const auto q = jones_matrix_of(with_angle(Kind::QuarterWavePlate, 30.0), kRng);
    const auto h = jones_matrix_of(with_angle(Kind::HalfWavePlate, 30.0), kRng);
    const auto qq = q * q;
    const Complex ph = qq(0, 0) / h(0, 0);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(qq.m[i] - ph * h.m[i]), 0.0, 1e-12);
}

TEST(Components, RotatorRotatesLinearPolarization) {
    const auto m = jones_matrix_of(with_angle(Kind::Rotator, 30.0), kRng);
    expect_vec(m * JonesVector{1.0, 0.0}, {std::cos(deg_to_rad(30.0)), std::sin(deg_to_rad(30.0))});
}

TEST(Components, DephaserIsAGlobalPhase) {
    const auto m = jones_matrix_of(default_params(Kind::Dephaser), KeyedRng(4, 5, 6));
    EXPECT_NEAR(std::abs(m(0, 1)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(m(0, 0) - m(1, 1)), 0.0, 1e-15);
}

TEST(Components, NdfAtZeroDensityIsIdentity) {
    auto p = default_params(Kind::NeutralDensityFilter);
    p.d = 0.0;
    const JonesVector in{Complex(3.0, 1.0), 2.0};
    expect_vec(apply_lossy(p, in, KeyedRng(1, 2, 3)), in);
}

TEST(Components, NdfAttenuatesAmplitude) {
    auto p = default_params(Kind::NeutralDensityFilter);
    p.d = 2.0;
    const KeyedRng rng(1, 2, 3);
    const JonesVector vac = kSigma0 * rng.gaussian_pair(0);
    expect_vec(apply_lossy(p, {100.0, 0.0}, rng), 0.1 * JonesVector{100.0, 0.0} + 0.9 * vac);
}

TEST(Components, BlockerEmitsVacuum) {
    const KeyedRng rng(1, 2, 3);
    expect_vec(apply_lossy(default_params(Kind::BeamBlocker), {1e5, 1e5}, rng), kSigma0 * rng.gaussian_pair(0));
}

TEST(Components, PolarizerAtZeroKeepsHAndInjectsVacuumOnV) {
    const KeyedRng rng(9, 9, 9);
    const JonesVector vac = kSigma0 * rng.gaussian_pair(0);
    const auto out = apply_lossy(with_angle(Kind::Polarizer, 0.0), {5.0, 7.0}, rng);
    expect_vec(out, {5.0, vac.v});
}

TEST(Components, PolarizerCanEnhanceNorm) {
    const JonesVector in{0.1, 0.0};
    bool enhanced = false;
    for (std::uint64_t i = 0; i < 1000 && !enhanced; ++i)
        enhanced = apply_lossy(with_angle(Kind::Polarizer, 0.0), in, KeyedRng(0, 0, i)).norm_sq() > in.norm_sq();
    EXPECT_TRUE(enhanced);
}

TEST(Components, PolarizerProjectionIsIdempotent) {
    const auto p = polarizer_projection(33.0, 71.0);
    const auto pp = p * p;
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(pp.m[i] - p.m[i]), 0.0, 1e-12);
}

TEST(Components, BalancedBeamSplitterConservesNorm) {
    const auto p = default_params(Kind::BeamSplitter);
    const JonesVector a{Complex(1.0, 2.0), 0.5}, b{-0.3, Complex(0.0, 1.0)};
    const auto out = apply_two_beam(p, a, b);
    EXPECT_NEAR(out.a.norm_sq() + out.b.norm_sq(), a.norm_sq() + b.norm_sq(), 1e-12);
    const double t = std::sqrt(0.5);
    expect_vec(out.a, t * a + t * b);
    expect_vec(out.b, t * a - t * b);
}

TEST(Components, MirrorSwapsPorts) {
    const JonesVector a{1.0, 2.0}, b{3.0, 4.0};
    const auto out = apply_two_beam(default_params(Kind::Mirror), a, b);
    expect_vec(out.a, b);
    expect_vec(out.b, a);
}

TEST(Components, PbsSplitsByPolarization) {
    const auto p = default_params(Kind::PolarizingBeamSplitter);
    const auto out = apply_two_beam(p, {1.0, 2.0}, {3.0, 4.0});
    expect_vec(out.a, {1.0, 4.0});
    expect_vec(out.b, {3.0, 2.0});
}

TEST(Components, DiagonalPbsTransmitsD) {
    auto p = default_params(Kind::PolarizingBeamSplitter);
    p.basis = PbsBasis::DA;
    const auto out = apply_two_beam(p, polarization_ket(Polarization::D), {});
    EXPECT_NEAR(out.a.norm_sq(), 1.0, 1e-12);
    EXPECT_NEAR(out.b.norm_sq(), 0.0, 1e-12);
    const auto anti = apply_two_beam(p, polarization_ket(Polarization::A), {});
    EXPECT_NEAR(anti.b.norm_sq(), 1.0, 1e-12);
}

TEST(Components, LaserAmplitudeAtDefaultPower) {
    EXPECT_NEAR(laser_alpha_sq(4e-3) / 1e10, 1.0, 1e-3);
    EXPECT_DOUBLE_EQ(laser_alpha_sq(0.0), 0.0);
}

TEST(Components, LaserSampleIsMeanPlusVacuum) {
    auto p = default_params(Kind::Laser);
    p.polarization = Polarization::V;
    const KeyedRng rng(2, 3, 4);
    const auto s = sample_source(p, rng);
    EXPECT_FALSE(s.two_beams);
    expect_vec(s.a, std::sqrt(laser_alpha_sq(4e-3)) * JonesVector{0.0, 1.0} + kSigma0 * rng.gaussian_pair(0), 1e-6);
}

TEST(Components, EntanglementSourceAtZeroSqueezingIsVacuum) {
    auto p = default_params(Kind::EntanglementSource);
    p.r = 0.0;
    const KeyedRng rng(2, 3, 4);
    const auto s = sample_source(p, rng);
    EXPECT_TRUE(s.two_beams);
    expect_vec(s.a, kSigma0 * JonesVector{rng.complex_gaussian(0), rng.complex_gaussian(1)});
    expect_vec(s.b, kSigma0 * JonesVector{rng.complex_gaussian(2), rng.complex_gaussian(3)});
}

TEST(Components, EntanglementSourceModeVariance) {
    auto p = default_params(Kind::EntanglementSource);
    constexpr int n = 200000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::norm(sample_source(p, KeyedRng(0, 1, static_cast<std::uint64_t>(i))).a.h);
    EXPECT_NEAR(s / n, 0.5 * std::cosh(2.0), 0.03);
}

TEST(Components, ThresholdFromDarkCountRate) {
    EXPECT_NEAR(threshold_from_dcr(1000.0), 1.95, 0.005);
    EXPECT_NEAR(threshold_from_dcr(1e5), 1.219, 0.001);
    EXPECT_DOUBLE_EQ(threshold_from_dcr(1e6), 0.0);
    EXPECT_THROW(threshold_from_dcr(2e6), std::invalid_argument);
    EXPECT_THROW(threshold_from_dcr(-1.0), std::invalid_argument);
}

TEST(Components, VacuumClickRateMatchesDcr) {
    const double gamma = threshold_from_dcr(1e5);
    DetectorState st{gamma, 0};
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) detector_evaluate(st, kSigma0 * KeyedRng(5, 0, static_cast<std::uint64_t>(i)).gaussian_pair(0));
    EXPECT_NEAR(static_cast<double>(st.count) / n, 0.1, 0.002);
}

TEST(Components, DetectorClicksOnEitherMode) {
    DetectorState st{1.0, 0};
    EXPECT_FALSE(detector_evaluate(st, {0.9, 0.9}));
    EXPECT_TRUE(detector_evaluate(st, {0.0, 1.1}));
    EXPECT_TRUE(detector_evaluate(st, {-1.1, 0.0}));
    EXPECT_EQ(st.count, 2);
    EXPECT_TRUE(crosses_threshold(1.0, {0.0, 1.1}));
    EXPECT_FALSE(crosses_threshold(1.0, {1.0, 0.0}));
}

TEST(Components, PowerMeterReadsFourMilliwatts) {
    const JonesVector j{std::sqrt(laser_alpha_sq(4e-3)), 0.0};
    EXPECT_NEAR(power_meter_read(std::span(&j, 1)), 4e-3, 1e-8);
    EXPECT_EQ(quantize_nw(1.9999e-9), 1);
    EXPECT_EQ(quantize_nw(0.0), 0);
}

TEST(Components, PowerMeterTakesStrongestBeam) {
    const std::array<JonesVector, 2> beams{JonesVector{1e4, 0.0}, JonesVector{1e5, 0.0}};
    EXPECT_DOUBLE_EQ(power_meter_read(beams), static_cast<double>(quantize_nw(beam_power(beams[1]))) * 1e-9);
}

TEST(Components, QstYSettingMapsRightCircularToTransmittedPort) {
    const auto s = analysis::qst_basis_settings('Y');
    const auto q = jones_matrix_of(with_angle(Kind::QuarterWavePlate, s.qwp), kRng);
    const auto h = jones_matrix_of(with_angle(Kind::HalfWavePlate, s.hwp), kRng);
    const auto out = h * (q * polarization_ket(Polarization::R));
    EXPECT_NEAR(std::norm(out.h), 1.0, 1e-12);
    const auto sx = analysis::qst_basis_settings('X');
    const auto outx = jones_matrix_of(with_angle(Kind::HalfWavePlate, sx.hwp), kRng) *
                      (jones_matrix_of(with_angle(Kind::QuarterWavePlate, sx.qwp), kRng) *
                       polarization_ket(Polarization::D));
    EXPECT_NEAR(std::norm(outx.h), 1.0, 1e-12);
}
