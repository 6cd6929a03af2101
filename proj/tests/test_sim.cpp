#include "doctest.h"

#include <random>

#include "repspace/commands.hpp"
#include "repspace/sim.hpp"
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

SimulationTrace constant_error_trace(double c, double dt, std::size_t n) {
    SimulationTrace t;
    t.dt = dt;
    t.reference.assign(n, c);
    t.output.assign(n, 0.0);
    t.error.assign(n, c);
    t.control.assign(n, 0.0);
    return t;
}

RepetitiveController loop_off(const DesignConfig& cfg) {
    auto ctrl = cfg.controller();
    ctrl.qp_sections = {BiquadSection::zero()};
    return ctrl;
}

} // namespace

TEST_CASE("first-order realization") {
    const auto b = realize(TransferFunction({1.0}, {1.0, 1.0}));
    REQUIRE(b.order() == 1);
    CHECK(b.A(0, 0) == -1.0);
    CHECK(b.B(0) == 1.0);
    CHECK(b.C(0) == 1.0);
    CHECK(b.D == 0.0);

    const auto k = realize(TransferFunction::constant(2.5));
    CHECK(k.order() == 0);
    CHECK(k.D == 2.5);
    CHECK(k.frequency_response(3.0) == Complex(2.5, 0.0));
}

TEST_CASE("improper or delayed input cannot be realized") {
    CHECK(kind_of([] { (void)realize(TransferFunction({0.0, 1.0}, {1.0})); }) ==
          ErrorKind::ImproperTransferFunction);
    CHECK(kind_of([] { (void)realize(TransferFunction({1.0}, {1.0, 1.0}, 0.1)); }) ==
          ErrorKind::ImproperTransferFunction);
}

TEST_CASE("AFM plant realization") {
    const auto cfg = testing::afm_config();
    const auto b = realize(cfg.plant());
    CHECK(b.order() == 4);
    const double dc = 1e12 * std::pow(kTwoPi * 41600.0, 2) /
                      (std::pow(kTwoPi * 40900.0, 2) * std::pow(kTwoPi * 120000.0, 2));
    CHECK(dc == doctest::Approx(1.82).epsilon(0.01));
    CHECK(testing::close_rel(b.frequency_response(0.0), Complex(dc, 0.0), 1e-10));
}

TEST_CASE("realizations reproduce the frequency response") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> coef(0.5, 2.0);
    const auto cfg = testing::afm_config();
    const auto afm = cfg.plant();
    const auto afm_block = realize(afm);
    const auto q_block = realize(cfg.controller().qp_sections);
    const auto q_tf = chain_to_tf(cfg.controller().qp_sections);
    for (int i = 0; i < 16; ++i) {
        const double w = testing::log_uniform(rng, 10.0, 1e7);
        CHECK(testing::close_rel(afm_block.frequency_response(w), testing::afm_plant_value(w), 1e-8));
        CHECK(testing::close_rel(q_block.frequency_response(w), eval_tf(q_tf, w), 1e-8));

        // random proper third-order system
        const TransferFunction tf({coef(rng), coef(rng), coef(rng), coef(rng)},
                                  {coef(rng), coef(rng), coef(rng), 1.0});
        const Complex s(0.0, w / 1e4);
        const Complex direct = eval_polynomial(tf.num(), s) / eval_polynomial(tf.den(), s);
        CHECK(testing::close_rel(realize(tf).frequency_response(w / 1e4), direct, 1e-8));
    }
}

TEST_CASE("triangular reference") {
    CHECK(triangular_wave(1.0, 1.0, 0.0) == doctest::Approx(0.0));
    CHECK(triangular_wave(1.0, 1.0, 0.25) == doctest::Approx(1.0));
    CHECK(triangular_wave(1.0, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(triangular_wave(1.0, 1.0, 0.75) == doctest::Approx(-1.0));
    CHECK(triangular_wave(2.0, 0.0005, 0.000375) == doctest::Approx(-2.0));
    // periodic and odd
    for (double t : {0.01, 0.13, 0.37, 0.61, 0.9}) {
        CHECK(triangular_wave(3.0, 1.0, t + 4.0) == doctest::Approx(triangular_wave(3.0, 1.0, t)));
        CHECK(triangular_wave(3.0, 1.0, -t) == doctest::Approx(-triangular_wave(3.0, 1.0, t)));
    }
    const auto sine = ReferenceSignal::sine(2.0, 0.5);
    CHECK(sine(0.125) == doctest::Approx(2.0));
    CHECK(ReferenceSignal::zero()(0.3) == 0.0);
}

TEST_CASE("delay line taps") {
    DelayLine line(1.0, 0.1);
    CHECK(line.lag_samples(0.5) == 5);
    CHECK(kind_of([&] { (void)line.lag_samples(0.55); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { (void)line.lag_samples(5.0); }) == ErrorKind::InvalidArgument);
    CHECK(line.tap(3) == 0.0);
    for (int k = 0; k < 20; ++k) {
        line.push(static_cast<double>(k));
    }
    CHECK(line.tap(0) == 19.0);
    CHECK(line.tap(5) == 14.0);
    // cubic interpolation is exact on a ramp
    CHECK(line.tap_half(5) == doctest::Approx(14.5));
    CHECK(line.tap_half(1) == doctest::Approx(18.5));
}

TEST_CASE("aligned step") {
    const std::vector<double> lags{0.5, 0.3};
    CHECK(aligned_step(0.1, lags) == doctest::Approx(0.1));
    const double h = aligned_step(0.07, lags);
    CHECK(h <= 0.07);
    CHECK(std::abs(0.5 / h - std::round(0.5 / h)) < 1e-9);
    CHECK(std::abs(0.3 / h - std::round(0.3 / h)) < 1e-9);
}

TEST_CASE("period metrics") {
    const auto zero = constant_error_trace(0.0, 0.01, 301);
    const auto m0 = per_period_error_metrics(zero, 1.0);
    REQUIRE(m0.size() == 3);
    for (const auto& m : m0) {
        CHECK(m.rms_error == 0.0);
        CHECK(m.peak_error == 0.0);
    }
    const auto m1 = per_period_error_metrics(constant_error_trace(-0.7, 0.01, 250), 1.0);
    REQUIRE(m1.size() == 2);
    CHECK(m1[1].rms_error == doctest::Approx(0.7));
    CHECK(m1[1].peak_error == doctest::Approx(0.7));
    CHECK(kind_of([] { (void)per_period_error_metrics(constant_error_trace(1.0, 0.01, 150), 1.0); }) ==
          ErrorKind::TraceTooShort);
}

TEST_CASE("zero reference gives a silent loop") {
    const auto cfg = testing::afm_config();
    const auto trace = simulate(cfg.plant(), cfg.controller(), ReferenceSignal::zero(), 2 * cfg.tau_d,
                                cfg.sim_dt());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        CHECK(trace.output[k] == 0.0);
        CHECK(trace.error[k] == 0.0);
    }
}

TEST_CASE("plant-only loop follows the complementary sensitivity") {
    const auto cfg = testing::afm_config();
    const auto off = loop_off(cfg);
    for (double f : {2000.0, 9000.0}) {
        const double period = 1.0 / f;
        const double duration = 40.0 * period;
        const auto trace = simulate(cfg.plant(), off, ReferenceSignal::sine(1.0, period), duration,
                                    period / 400.0);
        const double w = kTwoPi * f;
        const std::size_t n = trace.size();
        const double amp = sinusoid_amplitude(trace.output, trace.dt, w, n / 2, n);
        const Complex G = testing::afm_plant_value(w);
        CHECK(amp == doctest::Approx(std::abs(G / (1.0 + G))).epsilon(0.02));
    }
}

TEST_CASE("repetitive loop on the AFM fixture") {
    const auto cfg = testing::afm_config();
    const std::array<double, 2> point{31980320548.64794, 238742.47263309997};
    const auto run = run_simulation(cfg, point);
    REQUIRE(run.metrics.size() >= 2);
    CHECK(run.metrics.back().peak_error < run.metrics.front().peak_error);
    REQUIRE_FALSE(run.baseline.empty());
    CHECK(run.metrics.back().peak_error < run.baseline.back().peak_error);

    SUBCASE("deterministic") {
        const auto again = run_simulation(cfg, point);
        CHECK(again.trace.output == run.trace.output);
        CHECK(again.trace.error == run.trace.error);
    }
    SUBCASE("halving the step barely moves the settled error") {
        auto fine = cfg;
        fine.simulation.dt = cfg.sim_dt() / 2.0;
        const auto half = run_simulation(fine, point);
        const double a = run.metrics.back().rms_error;
        const double b = half.metrics.back().rms_error;
        CHECK(std::abs(a - b) <= 0.01 * a);
    }
}
