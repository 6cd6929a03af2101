#pragma once

#include <algorithm>
#include <cmath>
#include <vector>
#include <complex>
#include <numbers>
#include <random>
#include <string>

#include "repspace/config.hpp"

namespace testing {

using repspace::Complex;

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::string fixture(const std::string& name) {
    return std::string(REPSPACE_FIXTURE_DIR) + "/" + name;
}

inline repspace::DesignConfig afm_config() {
    return repspace::load_config(fixture("afm.json"));
}

// AFM scanner model written out directly from its factored form.
inline Complex afm_plant_value(double omega) {
    const Complex s(0.0, omega);
    auto factor = [&](double f, double zeta) {
        const double w = kTwoPi * f;
        return s * s + 2.0 * zeta * w * s + w * w;
    };
    return 1e12 * factor(41600.0, 0.016) / (factor(40900.0, 0.016) * factor(120000.0, 0.17));
}

inline bool close_rel(Complex a, Complex b, double tol) {
    return std::abs(a - b) <= tol * std::max({1e-300, std::abs(a), std::abs(b)});
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1e-300, std::abs(a), std::abs(b)});
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

inline Complex random_complex(std::mt19937_64& rng, double lo = 1e-2, double hi = 1e2) {
    std::uniform_real_distribution<double> phase(-kPi, kPi);
    return std::polar(log_uniform(rng, lo, hi), phase(rng));
}

// Positive real roots of a x^2 + b x + c in extended precision, polished by
// Newton steps. Kept deliberately naive: an independent reference.
inline std::vector<double> oracle_positive_roots(double a_in, double b_in, double c_in) {
    using ld = long double;
    const ld a = a_in, b = b_in, c = c_in;
    std::vector<ld> raw;
    if (std::fabs(a) < 1e-12L) {
        if (b != 0.0L) {
            raw.push_back(-c / b);
        }
    } else {
        const ld disc = b * b - 4.0L * a * c;
        if (disc >= 0.0L) {
            const ld r = std::sqrt(disc);
            raw.push_back((-b - r) / (2.0L * a));
            raw.push_back((-b + r) / (2.0L * a));
        }
    }
    std::vector<double> out;
    for (ld x : raw) {
        for (int it = 0; it < 3; ++it) {
            const ld f = (a * x + b) * x + c;
            const ld df = 2.0L * a * x + b;
            if (df == 0.0L) {
                break;
            }
            x -= f / df;
        }
        if (x > 0.0L) {
            out.push_back(static_cast<double>(x));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace testing
