#include "repspace/repcon.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "repspace/error.hpp"

namespace repspace {

namespace {

bool below_floor(double magnitude, double scale) {
    return magnitude < kRelativeFloor * std::max(1.0, scale);
}

} // namespace

void RepetitiveController::validate() const {
    if (!(tau_d > 0.0) || !std::isfinite(tau_d)) {
        throw Error(ErrorKind::InvalidArgument, "tau_d must be positive and finite");
    }
    if (!(tau_q >= 0.0) || !(tau_b >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "tau_q and tau_b must be non-negative");
    }
    if (!(tau_d > tau_q + tau_b)) {
        throw Error(ErrorKind::InvalidArgument,
                    "realizability requires tau_d > tau_q + tau_b so the advances can be "
                    "absorbed into the period delay");
    }
    if (qp_sections.empty()) {
        throw Error(ErrorKind::InvalidArgument, "q_p needs at least one section");
    }
    auto check = [](const std::vector<BiquadSection>& sections, const char* name) {
        for (std::size_t i = 0; i < sections.size(); ++i) {
            if (sections[i].denominator_is_zero()) {
                std::ostringstream msg;
                msg << name << " section " << i << " has an all-zero denominator";
                throw Error(ErrorKind::InvalidArgument, msg.str());
            }
        }
    };
    check(qp_sections, "q_p");
    check(bp_sections, "b_p");
}

Complex advance_factor(double omega, double tau) {
    return std::polar(1.0, omega * tau);
}

Complex RepetitiveController::q(double omega) const {
    return qp(omega) * advance_factor(omega, tau_q);
}

Complex RepetitiveController::b(double omega) const {
    return bp(omega) * advance_factor(omega, tau_b);
}

std::string_view to_string(Band band) noexcept {
    switch (band) {
    case Band::NP: return "NP";
    case Band::RP: return "RP";
    case Band::RS: return "RS";
    case Band::STAB: return "STAB";
    }
    return "?";
}

Band band_from_string(std::string_view name) {
    for (auto band : {Band::NP, Band::RP, Band::RS, Band::STAB}) {
        if (to_string(band) == name) {
            return band;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown band '" + std::string(name) + "'");
}

double WeightSchedule::harmonic_omega(int k, double tau_d) {
    return 2.0 * std::numbers::pi * static_cast<double>(k) / tau_d;
}

WeightSchedule WeightSchedule::from_table(double tau_d, std::vector<WeightRow> rows, double epsilon) {
    WeightSchedule schedule{std::move(rows), epsilon};
    for (auto& row : schedule.rows) {
        row.omega = harmonic_omega(row.k, tau_d);
    }
    schedule.validate(tau_d);
    return schedule;
}

void WeightSchedule::validate(double tau_d) const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        auto fail = [i](const std::string& why) {
            std::ostringstream msg;
            msg << "schedule row " << i << ": " << why;
            throw Error(ErrorKind::InvalidArgument, msg.str());
        };
        if (row.k < 1) {
            fail("harmonic index must be >= 1");
        }
        if (!(row.ws >= 0.0) || !(row.wt >= 0.0) || !std::isfinite(row.ws) || !std::isfinite(row.wt)) {
            fail("weights must be finite and non-negative");
        }
        if (row.band == Band::STAB) {
            fail("STAB is not a weight band");
        }
        if (row.band == Band::NP && row.wt != 0.0) {
            fail("NP rows require wt = 0");
        }
        if (row.band == Band::RS && row.ws != 0.0) {
            fail("RS rows require ws = 0");
        }
        if (row.omega != harmonic_omega(row.k, tau_d)) {
            fail("omega must equal 2*pi*k/tau_d");
        }
        if (i > 0 && !(row.omega > rows[i - 1].omega)) {
            fail("frequencies must be strictly increasing");
        }
    }
}

Complex loop_gain(Complex plant_value, const RepetitiveController& ctrl, double omega) {
    const Complex qp = ctrl.qp(omega);
    if (qp == Complex(0.0, 0.0)) {
        return plant_value;
    }
    // per-delay factors rather than one summed phase: the back-solvers use the
    // same factors, so forward and inverse see identically rounded phases
    const Complex delay = std::conj(advance_factor(omega, ctrl.tau_d));
    const Complex loop = qp * advance_factor(omega, ctrl.tau_q) * delay;
    const Complex denom = 1.0 - loop;
    if (below_floor(std::abs(denom), std::abs(loop))) {
        std::ostringstream msg;
        msg << "positive-feedback denominator vanishes at omega=" << omega;
        throw Error(ErrorKind::RegenerativePole, msg.str());
    }
    const Complex bp_path = ctrl.b(omega) * advance_factor(omega, ctrl.tau_q) * delay;
    return plant_value * (1.0 + qp / denom * bp_path);
}

Complex loop_gain(const TransferFunction& plant, const RepetitiveController& ctrl, double omega) {
    return loop_gain(eval_tf(plant, omega), ctrl, omega);
}

Complex sensitivity_from_loop(Complex L) {
    const Complex one_plus = 1.0 + L;
    if (below_floor(std::abs(one_plus), std::abs(L))) {
        throw Error(ErrorKind::CriticalPoint, "loop gain passes through -1");
    }
    return 1.0 / one_plus;
}

Complex comp_sensitivity_from_loop(Complex L) {
    const Complex one_plus = 1.0 + L;
    if (below_floor(std::abs(one_plus), std::abs(L))) {
        throw Error(ErrorKind::CriticalPoint, "loop gain passes through -1");
    }
    return L / one_plus;
}

Complex sensitivity(const TransferFunction& plant, const RepetitiveController& ctrl, double omega) {
    return sensitivity_from_loop(loop_gain(plant, ctrl, omega));
}

Complex comp_sensitivity(const TransferFunction& plant, const RepetitiveController& ctrl,
                         double omega) {
    return comp_sensitivity_from_loop(loop_gain(plant, ctrl, omega));
}

double regeneration_spectrum(Complex plant_value, const RepetitiveController& ctrl, double omega) {
    const Complex one_plus = 1.0 + plant_value;
    if (below_floor(std::abs(one_plus), std::abs(plant_value))) {
        std::ostringstream msg;
        msg << "1 + G vanishes at omega=" << omega;
        throw Error(ErrorKind::CriticalPoint, msg.str());
    }
    const Complex q = ctrl.q(omega);
    if (q == Complex(0.0, 0.0)) {
        return 0.0;
    }
    return std::abs(q * (1.0 - ctrl.b(omega) * plant_value / one_plus));
}

double regeneration_spectrum(const TransferFunction& plant, const RepetitiveController& ctrl,
                             double omega) {
    return regeneration_spectrum(eval_tf(plant, omega), ctrl, omega);
}

RegenCheck regen_stability_check(const TransferFunction& plant, const RepetitiveController& ctrl,
                                 std::span<const double> omega_grid, double epsilon) {
    if (omega_grid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "regeneration check needs a nonempty grid");
    }
    RegenCheck result;
    result.worst_omega = omega_grid.front();
    result.worst_value = -1.0;
    for (double w : omega_grid) {
        const double r = regeneration_spectrum(plant, ctrl, w);
        if (r > result.worst_value) {
            result.worst_value = r;
            result.worst_omega = w;
        }
    }
    result.margin = 1.0 - epsilon - result.worst_value;
    result.pass = result.worst_value < 1.0 - epsilon;
    return result;
}

double robust_perf_value_from_loop(Complex L, double ws, double wt) {
    const Complex one_plus = 1.0 + L;
    if (below_floor(std::abs(one_plus), std::abs(L))) {
        throw Error(ErrorKind::CriticalPoint, "loop gain passes through -1");
    }
    const double mag = std::abs(one_plus);
    double value = 0.0;
    if (ws != 0.0) {
        value += ws / mag;
    }
    if (wt != 0.0) {
        value += wt * (std::abs(L) / mag);
    }
    return value;
}

double robust_perf_value(const TransferFunction& plant, const RepetitiveController& ctrl, double ws,
                         double wt, double omega) {
    return robust_perf_value_from_loop(loop_gain(plant, ctrl, omega), ws, wt);
}

} // namespace repspace
