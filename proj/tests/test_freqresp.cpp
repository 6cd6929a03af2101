#include "doctest.h"

#include <random>

#include "repspace/freqresp.hpp"
#include "support.hpp"

using namespace repspace;
using testing::kPi;
using testing::kTwoPi;

TEST_CASE("first-order lag evaluates at dc and at its corner") {
    const TransferFunction tf({1.0}, {1.0, 1.0});
    const Complex dc = eval_tf(tf, 0.0);
    CHECK(dc.real() == doctest::Approx(1.0));
    CHECK(dc.imag() == doctest::Approx(0.0));
    const Complex corner = eval_tf(tf, 1.0);
    CHECK(corner.real() == doctest::Approx(0.5));
    CHECK(corner.imag() == doctest::Approx(-0.5));
}

TEST_CASE("AFM plant dc gain matches the closed form") {
    const auto plant = testing::afm_config().plant();
    REQUIRE(plant.num_degree() == 2);
    REQUIRE(plant.den_degree() == 4);
    const double f1 = 40900.0, f2 = 41600.0, f3 = 120000.0;
    const double closed = 1e12 * f2 * f2 / (kTwoPi * kTwoPi * f1 * f1 * f3 * f3);
    CHECK(closed == doctest::Approx(1.82).epsilon(0.01));
    CHECK(testing::close_rel(eval_tf(plant, 0.0), Complex(closed, 0.0), 1e-12));
    // and away from dc against the factored form
    for (double f : {10.0, 2000.0, 40900.0, 41600.0, 1e5, 1e6}) {
        CHECK(testing::close_rel(eval_tf(plant, kTwoPi * f), testing::afm_plant_value(kTwoPi * f), 1e-10));
    }
}

TEST_CASE("evaluation errors") {
    const TransferFunction integrator({1.0}, {0.0, 1.0});
    CHECK_THROWS_AS((void)eval_tf(integrator, 0.0), Error);
    try {
        (void)eval_tf(integrator, 0.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PoleAtFrequency);
    }
    try {
        (void)eval_tf(integrator, std::nan(""));
        FAIL("expected NonFiniteInput");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFiniteInput);
    }
    CHECK_THROWS_AS(TransferFunction({1.0}, {0.0, 0.0}), Error);
}

TEST_CASE("pure delay rotates the phase") {
    const TransferFunction d({1.0}, {1.0}, 0.25);
    const Complex v = eval_tf(d, kPi);
    CHECK(std::abs(v) == doctest::Approx(1.0));
    CHECK(std::arg(v) == doctest::Approx(-kPi / 4));
    const TransferFunction adv({1.0}, {1.0}, -0.25);
    CHECK(std::arg(eval_tf(adv, kPi)) == doctest::Approx(kPi / 4));
}

TEST_CASE("bode grid of a constant is flat") {
    const auto grid = bode_grid(TransferFunction::constant(1.0), log_space(0.1, 1e6, 50));
    REQUIRE(grid.size() == 50);
    for (const auto& p : grid) {
        CHECK(p.magnitude == doctest::Approx(1.0));
        CHECK(p.phase == doctest::Approx(0.0));
    }
}

TEST_CASE("bode grid of an integrator") {
    const std::vector<double> w{1.0, 10.0};
    const auto grid = bode_grid(TransferFunction({1.0}, {0.0, 1.0}), w);
    CHECK(grid[0].magnitude == doctest::Approx(1.0));
    CHECK(grid[1].magnitude == doctest::Approx(0.1));
    CHECK(grid[0].phase == doctest::Approx(-kPi / 2));
    CHECK(grid[1].phase == doctest::Approx(-kPi / 2));
}

TEST_CASE("bode grid rejects bad grids and names the failing frequency") {
    const std::vector<double> decreasing{10.0, 1.0};
    CHECK_THROWS_AS((void)bode_grid(TransferFunction::constant(1.0), decreasing), Error);
    const std::vector<double> with_pole{0.5, 1.0, 2.0};
    const TransferFunction osc({1.0}, {1.0, 0.0, 1.0});
    try {
        (void)bode_grid(osc, with_pole);
        FAIL("expected PoleAtFrequency");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::PoleAtFrequency);
        CHECK(std::string(e.what()).find("1") != std::string::npos);
    }
}

TEST_CASE("phase unwraps through a long delay") {
    const TransferFunction d({1.0}, {1.0}, 1.0);
    const auto grid = bode_grid(d, lin_space(0.1, 20.0, 400));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(grid[i].phase == doctest::Approx(-grid[i].omega).epsilon(1e-9));
    }
}

TEST_CASE("AFM resonance peaks sit inside the half-power bands of the nominal modes") {
    // Light damping and the nearby anti-resonance pull the magnitude maxima
    // below the nominal frequencies, so the tolerance is the half-power
    // bandwidth 2*zeta*f of each mode.
    const auto plant = testing::afm_config().plant();
    std::vector<double> w;
    for (double f = 1000.0; f <= 200000.0; f += 10.0) {
        w.push_back(kTwoPi * f);
    }
    const auto grid = bode_grid(plant, w);
    std::vector<double> peaks;
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (grid[i].magnitude > grid[i - 1].magnitude && grid[i].magnitude >= grid[i + 1].magnitude) {
            peaks.push_back(grid[i].omega / kTwoPi);
        }
    }
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(peaks[0] - 40900.0) < 2 * 0.016 * 40900.0);
    CHECK(std::abs(peaks[1] - 120000.0) < 2 * 0.17 * 120000.0);
}

TEST_CASE("controller table rows") {
    SUBCASE("P") {
        const auto b = make_controller_tf(ControllerKind::P, {.K = 3.0});
        CHECK(b == BiquadSection{0, 0, 3, 0, 0, 1});
    }
    SUBCASE("PID") {
        const auto b = make_controller_tf(ControllerKind::PID, {.K = 2.0, .Td = 0.5, .Ti = 4.0});
        CHECK(b == BiquadSection{1, 2, 8, 0, 1, 0});
    }
    SUBCASE("second-order filter") {
        const auto b = make_controller_tf(ControllerKind::SecondOrderFilter,
                                          {.K = 1.0, .zeta = 0.7, .omega = 10.0});
        CHECK(b.n2 == 0.0);
        CHECK(b.n1 == 0.0);
        CHECK(b.n0 == doctest::Approx(100.0));
        CHECK(b.d2 == 1.0);
        CHECK(b.d1 == doctest::Approx(14.0));
        CHECK(b.d0 == doctest::Approx(100.0));
    }
}

TEST_CASE("controller table errors") {
    auto kind_of = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;
    };
    CHECK(kind_of([] { (void)controller_kind_from_string("PIDF"); }) == ErrorKind::UnknownKind);
    CHECK(kind_of([] { (void)make_controller_tf(ControllerKind::PD, {.K = 1.0}); }) ==
          ErrorKind::MissingParameter);
    CHECK(kind_of([] { (void)make_controller_tf(ControllerKind::Lead, {.K = 1.0, .T = 1.0, .alpha = 1.5}); }) ==
          ErrorKind::InvalidParameter);
    CHECK(kind_of([] { (void)make_controller_tf(ControllerKind::Lag, {.K = 1.0, .T = 1.0, .beta = 0.5}); }) ==
          ErrorKind::InvalidParameter);
    for (auto k : {ControllerKind::P, ControllerKind::PD, ControllerKind::PI, ControllerKind::PID,
                   ControllerKind::Lag, ControllerKind::Lead, ControllerKind::FirstOrderFilter,
                   ControllerKind::SecondOrderFilter}) {
        CHECK(controller_kind_from_string(to_string(k)) == k);
    }
}

TEST_CASE("controller table matches textbook closed forms") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double K = u(rng), Td = u(rng), Ti = u(rng), T = u(rng), tau = u(rng), zeta = u(rng) / 5,
                     wn = u(rng) * 10;
        const double beta = 1.0 + u(rng), alpha = u(rng) / 5.01;
        const double w = testing::log_uniform(rng, 1e-2, 1e3);
        const Complex s(0.0, w);
        auto eval = [w](const BiquadSection& b) { return eval_section(b, w); };
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::P, {.K = K})), Complex(K), 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::PD, {.K = K, .Td = Td})),
                                 K * (1.0 + Td * s), 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::PI, {.K = K, .Ti = Ti})),
                                 K + K * Ti / s, 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::PID, {.K = K, .Td = Td, .Ti = Ti})),
                                 (K * Td * s * s + K * s + K * Ti) / s, 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::Lag, {.K = K, .T = T, .beta = beta})),
                                 K * (1.0 + T * s) / (1.0 + beta * T * s), 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::Lead, {.K = K, .T = T, .alpha = alpha})),
                                 K * (1.0 + T * s) / (1.0 + alpha * T * s), 1e-12));
        CHECK(testing::close_rel(eval(make_controller_tf(ControllerKind::FirstOrderFilter, {.K = K, .tau = tau})),
                                 K / (1.0 + tau * s), 1e-12));
        CHECK(testing::close_rel(
            eval(make_controller_tf(ControllerKind::SecondOrderFilter, {.K = K, .zeta = zeta, .omega = wn})),
            K * wn * wn / (s * s + 2.0 * zeta * wn * s + wn * wn), 1e-12));
    }
}

namespace {

std::vector<double> random_poly(std::mt19937_64& rng, std::size_t degree) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> p(degree + 1);
    for (auto& c : p) {
        c = u(rng);
    }
    p.back() = 1.0 + std::abs(p.back());
    return p;
}

// Direct power-sum evaluation at s = j*w, independent of Horner.
Complex power_sum(const std::vector<double>& p, Complex s) {
    Complex acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i] * std::pow(s, static_cast<int>(i));
    }
    return acc;
}

} // namespace

TEST_CASE("conjugate symmetry") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto num = random_poly(rng, 3);
        const auto den = random_poly(rng, 4);
        const double w = testing::log_uniform(rng, 1e-2, 1e2);
        const TransferFunction tf(num, den);
        const Complex reflected = power_sum(num, Complex(0.0, -w)) / power_sum(den, Complex(0.0, -w));
        CHECK(testing::close_rel(eval_tf(tf, w), std::conj(reflected), 1e-9));
    }
}

TEST_CASE("multiplicativity of series connection") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> delay(0.0, 0.1);
    for (int trial = 0; trial < 500; ++trial) {
        const TransferFunction a(random_poly(rng, 2), random_poly(rng, 3), delay(rng));
        const TransferFunction b(random_poly(rng, 1), random_poly(rng, 2), delay(rng));
        const double w = testing::log_uniform(rng, 1e-2, 1e2);
        CHECK(testing::close_rel(eval_tf(a * b, w), eval_tf(a, w) * eval_tf(b, w), 1e-12));
    }
}

TEST_CASE("biquad chains") {
    CHECK(eval_chain({}, 3.0) == Complex(1.0, 0.0));
    const std::vector<BiquadSection> chain{{0, 0, 1, 0, 1, 1}, {0, 1, 0, 1, 0, 4}};
    for (double w : {0.3, 1.0, 7.0}) {
        CHECK(testing::close_rel(eval_chain(chain, w), eval_tf(chain_to_tf(chain), w), 1e-12));
    }
    BiquadSection b;
    for (auto slot : kAllSlots) {
        b.set(slot, 2.5);
        CHECK(b.get(slot) == 2.5);
        CHECK(slot_from_string(to_string(slot)) == slot);
    }
    CHECK_FALSE(slot_from_string("q7").has_value());
}
