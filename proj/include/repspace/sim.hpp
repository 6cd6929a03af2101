#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "repspace/error.hpp"
#include "repspace/freqresp.hpp"
#include "repspace/repcon.hpp"

namespace repspace {

// SISO state-space block  x' = A x + B u,  y = C x + D u.
struct StateSpaceBlock {
    Eigen::MatrixXd A;
    Eigen::VectorXd B;
    Eigen::RowVectorXd C;
    double D = 0.0;

    [[nodiscard]] std::size_t order() const noexcept { return static_cast<std::size_t>(A.rows()); }
    // C (jwI - A)^{-1} B + D, solved with a dense LU.
    [[nodiscard]] Complex frequency_response(double omega) const;
};

// Controllable canonical form of a proper, delay-free transfer function.
// Throws ImproperTransferFunction for improper or delayed input.
[[nodiscard]] StateSpaceBlock realize(const TransferFunction& tf);
[[nodiscard]] StateSpaceBlock realize(std::span<const BiquadSection> sections);

// Fixed-lag delay line on a uniform sample grid. Lags are whole samples.
class DelayLine {
public:
    DelayLine(double length_seconds, double dt);

    // Converts a lag in seconds to samples; throws InvalidArgument when the lag
    // is not an integer multiple of dt (1e-12 relative) or exceeds the length.
    [[nodiscard]] std::size_t lag_samples(double lag_seconds) const;

    void push(double value);
    // Sample written `lag` pushes ago (lag 0 is the newest); zero before start.
    [[nodiscard]] double tap(std::size_t lag) const noexcept;
    // Value half a sample newer than tap(lag), from cubic interpolation over
    // the neighbouring samples (linear when lag < 2).
    [[nodiscard]] double tap_half(std::size_t lag) const noexcept;

    [[nodiscard]] std::size_t capacity() const noexcept { return buffer_.size(); }

private:
    double dt_;
    double length_;
    std::vector<double> buffer_;
    std::size_t head_ = 0; // index of the newest sample
};

// Periodic triangle: 0 at t=0, +amplitude at period/4, -amplitude at 3*period/4.
[[nodiscard]] double triangular_wave(double amplitude, double period, double t);

struct ReferenceSignal {
    enum class Kind { Zero, Triangle, Sine };
    Kind kind = Kind::Zero;
    double amplitude = 0.0;
    double period = 1.0; // Triangle / Sine period in seconds

    [[nodiscard]] double operator()(double t) const;

    static ReferenceSignal zero() { return {}; }
    static ReferenceSignal triangle(double amplitude, double period) {
        return {Kind::Triangle, amplitude, period};
    }
    static ReferenceSignal sine(double amplitude, double period) {
        return {Kind::Sine, amplitude, period};
    }
};

struct SimulationTrace {
    double dt = 0.0;
    std::vector<double> reference;
    std::vector<double> output;
    std::vector<double> error;
    std::vector<double> control;

    [[nodiscard]] std::size_t size() const noexcept { return output.size(); }
    [[nodiscard]] double time(std::size_t k) const noexcept { return static_cast<double>(k) * dt; }
};

class UnstableSimulation : public Error {
public:
    UnstableSimulation(const std::string& message, SimulationTrace partial)
        : Error(ErrorKind::UnstableSimulation, message), partial_(std::move(partial)) {}

    [[nodiscard]] const SimulationTrace& partial() const noexcept { return partial_; }

private:
    SimulationTrace partial_;
};

// Largest step <= dt for which every lag is an integer number of steps.
// Throws InvalidArgument when no such step exists within a 1e6-fold refinement.
[[nodiscard]] double aligned_step(double dt, std::span<const double> lags);

inline constexpr double kDefaultStepsPerPeriod = 5000.0;

// Closed loop with unity negative feedback:
//   e = r - y,   w = q_p(e + w(t - (tau_d - tau_q))),
//   u = e + b_p(w(t - (tau_d - tau_q - tau_b))),   y = G u.
// All blocks advance together with classical RK4. Delayed signals come from
// whole-sample taps, except at the RK4 midpoints where the half-sample value
// is interpolated. dt is reduced so the taps are aligned.
// Throws UnstableSimulation when |y| exceeds 1e6 times the reference amplitude.
[[nodiscard]] SimulationTrace simulate(const TransferFunction& plant,
                                       const RepetitiveController& ctrl,
                                       const ReferenceSignal& reference, double duration, double dt);

struct PeriodMetrics {
    std::size_t period = 0;
    double rms_error = 0.0;
    double peak_error = 0.0;
};

// Metrics over every complete period window [k*period, (k+1)*period).
// Throws TraceTooShort when fewer than two periods are covered.
[[nodiscard]] std::vector<PeriodMetrics> per_period_error_metrics(const SimulationTrace& trace,
                                                                  double period);

// Least-squares amplitude of the sinusoid of angular frequency omega in
// samples [begin, end) of a signal.
[[nodiscard]] double sinusoid_amplitude(std::span<const double> signal, double dt, double omega,
                                        std::size_t begin, std::size_t end);

} // namespace repspace
