#include "doctest.h"

#include <random>

#include "repspace/repcon.hpp"
#include "support.hpp"

using namespace repspace;
using testing::kTwoPi;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::IoError;
}

RepetitiveController ideal(double tau_d) {
    RepetitiveController c;
    c.tau_d = tau_d;
    c.qp_sections = {BiquadSection::unity()};
    return c;
}

// Section whose response at omega is exactly `value`: n0 + n1 s.
BiquadSection section_with_value(Complex value, double omega) {
    return {0.0, value.imag() / omega, value.real(), 0.0, 0.0, 1.0};
}

RepetitiveController random_controller(std::mt19937_64& rng, double omega) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RepetitiveController c;
    c.tau_d = testing::log_uniform(rng, 1e-3, 1.0);
    c.tau_q = u(rng) * 0.3 * c.tau_d;
    c.tau_b = u(rng) * 0.3 * c.tau_d;
    c.qp_sections = {section_with_value(testing::random_complex(rng, 0.05, 0.95), omega)};
    c.bp_sections = {section_with_value(testing::random_complex(rng, 0.1, 10.0), omega)};
    return c;
}

} // namespace

TEST_CASE("controller validation") {
    auto c = ideal(1.0);
    c.tau_q = 0.6;
    c.tau_b = 0.4;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::InvalidArgument);
    c.tau_b = 0.3;
    CHECK_NOTHROW(c.validate());
    c.qp_sections.clear();
    CHECK_THROWS_AS(c.validate(), Error);
    c.qp_sections = {BiquadSection{0, 0, 1, 0, 0, 0}};
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("weight schedule validation") {
    CHECK_NOTHROW((void)WeightSchedule::from_table(0.0005, {{1, 0, 500, 0, Band::NP}}));
    const auto s = WeightSchedule::from_table(0.0005, {{1, 0, 500, 0, Band::NP}});
    CHECK(s.rows[0].omega == kTwoPi * 1 / 0.0005);
    CHECK_THROWS_AS((void)WeightSchedule::from_table(0.0005, {{1, 0, 500, 0.1, Band::NP}}), Error);
    CHECK_THROWS_AS((void)WeightSchedule::from_table(0.0005, {{80, 0, 1, 0.05, Band::RS}}), Error);
    CHECK_THROWS_AS((void)WeightSchedule::from_table(0.0005, {{2, 0, 1, 0, Band::NP}, {1, 0, 1, 0, Band::NP}}),
                    Error);
    CHECK_THROWS_AS((void)WeightSchedule::from_table(0.0005, {}, 1.5), Error);
    WeightSchedule drifted = s;
    drifted.rows[0].omega *= 1.0 + 1e-9;
    CHECK_THROWS_AS(drifted.validate(0.0005), Error);
}

TEST_CASE("disabled repetitive loop leaves the plant alone") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const Complex G = testing::random_complex(rng);
        const double w = testing::log_uniform(rng, 1.0, 1e5);
        auto c = random_controller(rng, w);
        c.qp_sections = {BiquadSection::zero()};
        CHECK(testing::close_rel(loop_gain(G, c, w), G, 1e-14));
    }
}

TEST_CASE("ideal internal model has a regenerative pole at every harmonic") {
    const auto c = ideal(0.01);
    for (int k : {1, 2, 7}) {
        CHECK(kind_of([&] { (void)loop_gain(Complex(2.0, 0.0), c, kTwoPi * k / 0.01); }) ==
              ErrorKind::RegenerativePole);
    }
    // near-ideal filter: perfect tracking in the limit
    auto near = c;
    near.qp_sections = {BiquadSection{0, 0, 1.0 - 1e-9, 0, 0, 1}};
    const Complex L = loop_gain(Complex(2.0, 0.0), near, kTwoPi / 0.01);
    CHECK(std::abs(sensitivity_from_loop(L)) < 1e-6);
}

TEST_CASE("sensitivities of a zero loop") {
    CHECK(sensitivity_from_loop(0.0) == Complex(1.0, 0.0));
    CHECK(comp_sensitivity_from_loop(0.0) == Complex(0.0, 0.0));
    CHECK(kind_of([] { (void)sensitivity_from_loop(Complex(-1.0, 0.0)); }) == ErrorKind::CriticalPoint);
}

TEST_CASE("S + T = 1 on random configurations") {
    std::mt19937_64 rng(17);
    int evaluated = 0;
    for (int i = 0; i < 1000; ++i) {
        const Complex G = testing::random_complex(rng);
        const double w = testing::log_uniform(rng, 1.0, 1e5);
        const auto c = random_controller(rng, w);
        Complex L;
        try {
            L = loop_gain(G, c, w);
        } catch (const Error&) {
            continue;
        }
        const Complex sum = sensitivity_from_loop(L) + comp_sensitivity_from_loop(L);
        CHECK(std::abs(sum - 1.0) <= 1e-12 * std::max(1.0, std::abs(sensitivity_from_loop(L))));
        ++evaluated;
    }
    CHECK(evaluated > 990);
}

TEST_CASE("loop gain agrees with the textbook expression") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 500; ++i) {
        const Complex G = testing::random_complex(rng);
        const double w = testing::log_uniform(rng, 1.0, 1e5);
        const auto c = random_controller(rng, w);
        const Complex j(0.0, 1.0);
        const Complex q = eval_section(c.qp_sections[0], w) * std::exp(j * w * c.tau_q);
        const Complex b = eval_section(c.bp_sections[0], w) * std::exp(j * w * c.tau_b);
        const Complex z = q * std::exp(-j * w * c.tau_d);
        // closed loop of the positive-feedback internal model in front of b
        const Complex expected = G * (1.0 + b * z / (1.0 - z));
        CHECK(testing::close_rel(loop_gain(G, c, w), expected, 1e-11));
    }
}

TEST_CASE("regeneration spectrum examples") {
    RepetitiveController c = ideal(1.0);
    CHECK(regeneration_spectrum(Complex(1.0, 0.0), c, 3.0) == doctest::Approx(0.5));
    const TransferFunction one = TransferFunction::constant(1.0);
    const std::vector<double> grid{0.5, 1.0, 2.0};
    auto pass = regen_stability_check(one, c, grid, 0.4);
    CHECK(pass.pass);
    CHECK(pass.worst_value == doctest::Approx(0.5));
    CHECK(pass.margin == doctest::Approx(0.1));
    CHECK_FALSE(regen_stability_check(one, c, grid, 0.6).pass);

    c.qp_sections = {BiquadSection::zero()};
    const auto off = regen_stability_check(one, c, grid, 0.05);
    CHECK(off.pass);
    CHECK(off.worst_value == 0.0);
    CHECK_THROWS_AS((void)regen_stability_check(one, c, std::vector<double>{}, 0.05), Error);

    // b inverting G/(1+G) exactly kills the spectrum
    const Complex G(3.0, -1.0);
    const double w = 2.0;
    RepetitiveController inv = ideal(1.0);
    inv.bp_sections = {section_with_value((1.0 + G) / G, w)};
    CHECK(regeneration_spectrum(G, inv, w) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(kind_of([&] { (void)regeneration_spectrum(Complex(-1.0, 0.0), inv, w); }) == ErrorKind::CriticalPoint);
}

TEST_CASE("robust performance functional") {
    CHECK(robust_perf_value_from_loop(Complex(0.3, 0.2), 0.0, 0.0) == 0.0);
    CHECK(robust_perf_value_from_loop(Complex(1.0, 0.0), 1.0, 1.0) == doctest::Approx(1.0));
    // |S| = 1/600 with ws = 500
    CHECK(robust_perf_value_from_loop(Complex(599.0, 0.0), 500.0, 0.0) == doctest::Approx(5.0 / 6.0));

    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> weight(0.0, 5.0);
    int agree = 0;
    for (int i = 0; i < 2000; ++i) {
        const Complex L = testing::random_complex(rng, 1e-2, 1e2);
        const double ws = weight(rng), wt = weight(rng) / 5.0;
        const double value = robust_perf_value_from_loop(L, ws, wt);
        const double recomputed =
            std::abs(ws / (1.0 + L)) + std::abs(wt * L / (1.0 + L));
        CHECK(testing::close_rel(value, recomputed, 1e-12));
        // equivalent ratio form
        const bool ratio_form = (ws + wt * std::abs(L)) / std::abs(1.0 + L) < 1.0;
        agree += ratio_form == (value < 1.0);
    }
    CHECK(agree == 2000);
}

TEST_CASE("AFM plant-only loop cannot meet the first nominal-performance row") {
    const auto cfg = testing::afm_config();
    RepetitiveController off = cfg.controller();
    off.qp_sections = {BiquadSection::zero()};
    const double w = kTwoPi * 2000.0;
    const Complex G = testing::afm_plant_value(w);
    const double s = std::abs(1.0 / (1.0 + G));
    CHECK(s > 1.0 / 500.0);
    CHECK(robust_perf_value(cfg.plant(), off, 500.0, 0.0, w) == doctest::Approx(500.0 * s));
}
