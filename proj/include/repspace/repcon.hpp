#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "repspace/freqresp.hpp"

namespace repspace {

// e^{j omega tau}.
[[nodiscard]] Complex advance_factor(double omega, double tau);

// Repetitive controller of the form
//   q(s) = q_p(s) exp(tau_q s),   b(s) = b_p(s) exp(tau_b s)
// inside a positive feedback loop with period delay exp(-tau_d s).
// q_p and b_p are products of biquad sections; an empty b_p chain is unity.
struct RepetitiveController {
    double tau_d = 0.0;
    double tau_q = 0.0;
    double tau_b = 0.0;
    std::vector<BiquadSection> qp_sections;
    std::vector<BiquadSection> bp_sections;

    // Throws InvalidArgument when tau_d <= tau_q + tau_b, a time constant is
    // negative, qp_sections is empty or a section has a zero denominator.
    void validate() const;

    [[nodiscard]] Complex qp(double omega) const { return eval_chain(qp_sections, omega); }
    [[nodiscard]] Complex bp(double omega) const { return eval_chain(bp_sections, omega); }
    // Full filters including the advances.
    [[nodiscard]] Complex q(double omega) const;
    [[nodiscard]] Complex b(double omega) const;
};

enum class Band { NP, RP, RS, STAB };

[[nodiscard]] std::string_view to_string(Band band) noexcept;
// Throws InvalidArgument.
[[nodiscard]] Band band_from_string(std::string_view name);

struct WeightRow {
    int k = 1;
    double omega = 0.0;
    double ws = 0.0;
    double wt = 0.0;
    Band band = Band::RP;
};

struct WeightSchedule {
    std::vector<WeightRow> rows;
    double epsilon = 0.05;

    [[nodiscard]] static double harmonic_omega(int k, double tau_d);

    // Builds rows with omega = 2*pi*k/tau_d and validates them.
    [[nodiscard]] static WeightSchedule from_table(double tau_d, std::vector<WeightRow> rows,
                                                   double epsilon = 0.05);

    // Throws InvalidArgument with the offending row index.
    void validate(double tau_d) const;
};

// Near-singular denominators are detected relative to the operand scale:
// |x| < kRelativeFloor * max(1, |other operand|).
inline constexpr double kRelativeFloor = 1e-14;

// L = G (1 + q_p b_p e^{(-tau_d+tau_q+tau_b)jw} / (1 - q_p e^{(-tau_d+tau_q)jw})).
// Throws RegenerativePole when the positive-feedback denominator vanishes.
[[nodiscard]] Complex loop_gain(Complex plant_value, const RepetitiveController& ctrl, double omega);
[[nodiscard]] Complex loop_gain(const TransferFunction& plant, const RepetitiveController& ctrl,
                                double omega);

// S = 1/(1+L), T = L/(1+L). Throw CriticalPoint when |1+L| is below the floor.
[[nodiscard]] Complex sensitivity_from_loop(Complex L);
[[nodiscard]] Complex comp_sensitivity_from_loop(Complex L);
[[nodiscard]] Complex sensitivity(const TransferFunction& plant, const RepetitiveController& ctrl,
                                  double omega);
[[nodiscard]] Complex comp_sensitivity(const TransferFunction& plant,
                                       const RepetitiveController& ctrl, double omega);

// R(w) = |q(jw) (1 - b(jw) G/(1+G))|.
[[nodiscard]] double regeneration_spectrum(Complex plant_value, const RepetitiveController& ctrl,
                                           double omega);
[[nodiscard]] double regeneration_spectrum(const TransferFunction& plant,
                                           const RepetitiveController& ctrl, double omega);

struct RegenCheck {
    bool pass = false;
    double worst_omega = 0.0;
    double worst_value = 0.0;
    // 1 - epsilon - worst_value; positive when the check passes.
    double margin = 0.0;
};

// Sufficient stability test R(w) < 1 - epsilon over a frequency grid.
[[nodiscard]] RegenCheck regen_stability_check(const TransferFunction& plant,
                                               const RepetitiveController& ctrl,
                                               std::span<const double> omega_grid, double epsilon);

// |W_S||S| + |W_T||T|; the design requirement is a value below one.
[[nodiscard]] double robust_perf_value_from_loop(Complex L, double ws, double wt);
[[nodiscard]] double robust_perf_value(const TransferFunction& plant,
                                       const RepetitiveController& ctrl, double ws, double wt,
                                       double omega);

} // namespace repspace
