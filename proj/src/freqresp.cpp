#include "repspace/freqresp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "repspace/error.hpp"

namespace repspace {

namespace {

constexpr double kPoleFloor = 1e-300;

void trim_trailing_zeros(std::vector<double>& coeffs) {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) {
        coeffs.pop_back();
    }
    if (coeffs.empty()) {
        coeffs.push_back(0.0);
    }
}

void require_finite(const std::vector<double>& coeffs, const char* what) {
    for (double c : coeffs) {
        if (!std::isfinite(c)) {
            throw Error(ErrorKind::NonFiniteInput, std::string(what) + " has a non-finite coefficient");
        }
    }
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            out[i + j] += a[i] * b[j];
        }
    }
    return out;
}

double require(const std::optional<double>& value, const char* name, ControllerKind kind) {
    if (!value) {
        std::ostringstream msg;
        msg << to_string(kind) << " requires parameter '" << name << "'";
        throw Error(ErrorKind::MissingParameter, msg.str());
    }
    return *value;
}

} // namespace

TransferFunction::TransferFunction(std::vector<double> num, std::vector<double> den, double delay)
    : num_(std::move(num)), den_(std::move(den)), delay_(delay) {
    require_finite(num_, "numerator");
    require_finite(den_, "denominator");
    if (!std::isfinite(delay_)) {
        throw Error(ErrorKind::NonFiniteInput, "delay must be finite");
    }
    trim_trailing_zeros(num_);
    trim_trailing_zeros(den_);
    if (den_.size() == 1 && den_[0] == 0.0) {
        throw Error(ErrorKind::InvalidArgument, "denominator has no nonzero coefficient");
    }
}

TransferFunction TransferFunction::constant(double gain) {
    return TransferFunction({gain}, {1.0});
}

TransferFunction TransferFunction::operator*(const TransferFunction& rhs) const {
    return TransferFunction(poly_mul(num_, rhs.num_), poly_mul(den_, rhs.den_), delay_ + rhs.delay_);
}

std::string_view to_string(Slot slot) noexcept {
    switch (slot) {
    case Slot::N2: return "n2";
    case Slot::N1: return "n1";
    case Slot::N0: return "n0";
    case Slot::D2: return "d2";
    case Slot::D1: return "d1";
    case Slot::D0: return "d0";
    }
    return "?";
}

std::optional<Slot> slot_from_string(std::string_view name) noexcept {
    for (Slot s : kAllSlots) {
        if (to_string(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

double BiquadSection::get(Slot slot) const noexcept {
    switch (slot) {
    case Slot::N2: return n2;
    case Slot::N1: return n1;
    case Slot::N0: return n0;
    case Slot::D2: return d2;
    case Slot::D1: return d1;
    case Slot::D0: return d0;
    }
    return 0.0;
}

void BiquadSection::set(Slot slot, double value) noexcept {
    switch (slot) {
    case Slot::N2: n2 = value; break;
    case Slot::N1: n1 = value; break;
    case Slot::N0: n0 = value; break;
    case Slot::D2: d2 = value; break;
    case Slot::D1: d1 = value; break;
    case Slot::D0: d0 = value; break;
    }
}

TransferFunction BiquadSection::to_tf() const {
    return TransferFunction({n0, n1, n2}, {d0, d1, d2});
}

Complex eval_polynomial(std::span<const double> coeffs, Complex s) noexcept {
    if (coeffs.empty()) {
        return {0.0, 0.0};
    }
    Complex acc(coeffs.back(), 0.0);
    for (std::size_t i = coeffs.size() - 1; i-- > 0;) {
        acc = acc * s + coeffs[i];
    }
    return acc;
}

Complex eval_tf(const TransferFunction& tf, double omega) {
    if (!std::isfinite(omega)) {
        throw Error(ErrorKind::NonFiniteInput, "omega must be finite");
    }
    const Complex s(0.0, omega);
    const Complex den = eval_polynomial(tf.den(), s);
    if (std::abs(den) < kPoleFloor) {
        std::ostringstream msg;
        msg << "denominator vanishes at omega=" << omega;
        throw Error(ErrorKind::PoleAtFrequency, msg.str());
    }
    Complex value = eval_polynomial(tf.num(), s) / den;
    if (tf.delay() != 0.0) {
        value *= std::polar(1.0, -omega * tf.delay());
    }
    return value;
}

Complex eval_section(const BiquadSection& section, double omega) {
    if (!std::isfinite(omega)) {
        throw Error(ErrorKind::NonFiniteInput, "omega must be finite");
    }
    const double w2 = omega * omega;
    const Complex num(section.n0 - section.n2 * w2, section.n1 * omega);
    const Complex den(section.d0 - section.d2 * w2, section.d1 * omega);
    if (std::abs(den) < kPoleFloor) {
        std::ostringstream msg;
        msg << "section denominator vanishes at omega=" << omega;
        throw Error(ErrorKind::PoleAtFrequency, msg.str());
    }
    return num / den;
}

Complex eval_chain(std::span<const BiquadSection> sections, double omega) {
    Complex value(1.0, 0.0);
    for (const auto& section : sections) {
        value *= eval_section(section, omega);
    }
    return value;
}

TransferFunction chain_to_tf(std::span<const BiquadSection> sections) {
    TransferFunction tf = TransferFunction::constant(1.0);
    for (const auto& section : sections) {
        tf = tf * section.to_tf();
    }
    return tf;
}

std::vector<BodePoint> bode_grid(const TransferFunction& tf, std::span<const double> omegas) {
    std::vector<BodePoint> points;
    points.reserve(omegas.size());
    double prev_raw = 0.0;
    double prev_phase = 0.0;
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        const double w = omegas[i];
        if (!(w > 0.0) || (i > 0 && !(w > omegas[i - 1]))) {
            throw Error(ErrorKind::InvalidArgument, "bode grid must be positive and strictly increasing");
        }
        Complex value;
        try {
            value = eval_tf(tf, w);
        } catch (const Error& e) {
            std::ostringstream msg;
            msg << "at omega=" << w << " rad/s: " << e.what();
            throw Error(e.kind(), msg.str());
        }
        const double raw = std::arg(value);
        double phase = raw;
        if (i > 0) {
            double diff = raw - prev_raw;
            while (diff > std::numbers::pi) {
                diff -= 2.0 * std::numbers::pi;
            }
            while (diff < -std::numbers::pi) {
                diff += 2.0 * std::numbers::pi;
            }
            phase = prev_phase + diff;
        }
        points.push_back({w, value, std::abs(value), phase});
        prev_raw = raw;
        prev_phase = phase;
    }
    return points;
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    return out;
}

std::vector<double> lin_space(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

std::string_view to_string(ControllerKind kind) noexcept {
    switch (kind) {
    case ControllerKind::P: return "P";
    case ControllerKind::PD: return "PD";
    case ControllerKind::PI: return "PI";
    case ControllerKind::PID: return "PID";
    case ControllerKind::Lag: return "Lag";
    case ControllerKind::Lead: return "Lead";
    case ControllerKind::FirstOrderFilter: return "FirstOrderFilter";
    case ControllerKind::SecondOrderFilter: return "SecondOrderFilter";
    }
    return "?";
}

ControllerKind controller_kind_from_string(std::string_view name) {
    for (auto kind : {ControllerKind::P, ControllerKind::PD, ControllerKind::PI, ControllerKind::PID,
                      ControllerKind::Lag, ControllerKind::Lead, ControllerKind::FirstOrderFilter,
                      ControllerKind::SecondOrderFilter}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw Error(ErrorKind::UnknownKind, "unknown controller kind '" + std::string(name) + "'");
}

BiquadSection make_controller_tf(ControllerKind kind, const ControllerParams& p) {
    const double K = require(p.K, "K", kind);
    switch (kind) {
    case ControllerKind::P:
        return {0.0, 0.0, K, 0.0, 0.0, 1.0};
    case ControllerKind::PD: {
        const double Td = require(p.Td, "Td", kind);
        return {0.0, K * Td, K, 0.0, 0.0, 1.0};
    }
    case ControllerKind::PI: {
        const double Ti = require(p.Ti, "Ti", kind);
        return {0.0, K, K * Ti, 0.0, 1.0, 0.0};
    }
    case ControllerKind::PID: {
        const double Td = require(p.Td, "Td", kind);
        const double Ti = require(p.Ti, "Ti", kind);
        return {K * Td, K, K * Ti, 0.0, 1.0, 0.0};
    }
    case ControllerKind::Lag: {
        const double T = require(p.T, "T", kind);
        const double beta = require(p.beta, "beta", kind);
        if (!(beta > 1.0)) {
            throw Error(ErrorKind::InvalidParameter, "Lag requires beta > 1");
        }
        return {0.0, K * T, K, 0.0, beta * T, 1.0};
    }
    case ControllerKind::Lead: {
        const double T = require(p.T, "T", kind);
        const double alpha = require(p.alpha, "alpha", kind);
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw Error(ErrorKind::InvalidParameter, "Lead requires 0 < alpha < 1");
        }
        return {0.0, K * T, K, 0.0, alpha * T, 1.0};
    }
    case ControllerKind::FirstOrderFilter: {
        const double tau = require(p.tau, "tau", kind);
        return {0.0, 0.0, K, 0.0, tau, 1.0};
    }
    case ControllerKind::SecondOrderFilter: {
        const double zeta = require(p.zeta, "zeta", kind);
        const double w = require(p.omega, "omega", kind);
        return {0.0, 0.0, K * w * w, 1.0, 2.0 * zeta * w, w * w};
    }
    }
    throw Error(ErrorKind::UnknownKind, "unhandled controller kind");
}

} // namespace repspace
