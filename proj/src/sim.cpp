#include "repspace/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

namespace repspace {

namespace {

constexpr double kAlignTolerance = 1e-12;
constexpr double kUnstableRatio = 1e6;

bool is_integer_multiple(double lag, double h) {
    const double x = lag / h;
    return std::abs(x - std::round(x)) <= kAlignTolerance * std::max(1.0, x);
}

} // namespace

Complex StateSpaceBlock::frequency_response(double omega) const {
    if (order() == 0) {
        return {D, 0.0};
    }
    const auto n = A.rows();
    Eigen::MatrixXcd M = -A.cast<Complex>();
    M.diagonal().array() += Complex(0.0, omega);
    const Eigen::VectorXcd x = M.partialPivLu().solve(B.cast<Complex>());
    Complex y(D, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        y += C(i) * x(i);
    }
    return y;
}

StateSpaceBlock realize(const TransferFunction& tf) {
    if (tf.delay() != 0.0) {
        throw Error(ErrorKind::ImproperTransferFunction,
                    "pure delays and advances must be realized by delay taps, not states");
    }
    if (!tf.is_proper()) {
        throw Error(ErrorKind::ImproperTransferFunction, "numerator degree exceeds denominator degree");
    }
    const std::size_t n = tf.den_degree();
    const double lead = tf.den()[n];
    std::vector<double> a(n + 1);
    std::vector<double> b(n + 1, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
        a[i] = tf.den()[i] / lead;
    }
    for (std::size_t i = 0; i < tf.num().size(); ++i) {
        b[i] = tf.num()[i] / lead;
    }

    StateSpaceBlock block;
    const auto dim = static_cast<Eigen::Index>(n);
    block.A = Eigen::MatrixXd::Zero(dim, dim);
    block.B = Eigen::VectorXd::Zero(dim);
    block.C = Eigen::RowVectorXd::Zero(dim);
    block.D = b[n];
    if (n == 0) {
        return block;
    }
    for (Eigen::Index i = 0; i + 1 < dim; ++i) {
        block.A(i, i + 1) = 1.0;
    }
    for (Eigen::Index i = 0; i < dim; ++i) {
        block.A(dim - 1, i) = -a[static_cast<std::size_t>(i)];
        block.C(i) = b[static_cast<std::size_t>(i)] - b[n] * a[static_cast<std::size_t>(i)];
    }
    block.B(dim - 1) = 1.0;
    return block;
}

StateSpaceBlock realize(std::span<const BiquadSection> sections) {
    return realize(chain_to_tf(sections));
}

DelayLine::DelayLine(double length_seconds, double dt) : dt_(dt), length_(length_seconds) {
    if (!(dt > 0.0) || !(length_seconds >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "delay line needs dt > 0 and a non-negative length");
    }
    const auto samples = static_cast<std::size_t>(std::ceil(length_seconds / dt - kAlignTolerance));
    // Two extra samples for the interpolation stencil.
    buffer_.assign(samples + 3, 0.0);
}

std::size_t DelayLine::lag_samples(double lag_seconds) const {
    if (!(lag_seconds >= 0.0) || lag_seconds > length_ * (1.0 + kAlignTolerance)) {
        throw Error(ErrorKind::InvalidArgument, "tap lag outside the delay line");
    }
    if (!is_integer_multiple(lag_seconds, dt_)) {
        std::ostringstream msg;
        msg << "tap lag " << lag_seconds << " s is not a multiple of dt=" << dt_;
        throw Error(ErrorKind::InvalidArgument, msg.str());
    }
    return static_cast<std::size_t>(std::llround(lag_seconds / dt_));
}

void DelayLine::push(double value) {
    head_ = (head_ + 1) % buffer_.size();
    buffer_[head_] = value;
}

double DelayLine::tap(std::size_t lag) const noexcept {
    const std::size_t n = buffer_.size();
    return buffer_[(head_ + n - (lag % n)) % n];
}

double DelayLine::tap_half(std::size_t lag) const noexcept {
    if (lag == 0) {
        return tap(0);
    }
    if (lag < 2) {
        return 0.5 * (tap(lag) + tap(lag - 1));
    }
    return (-tap(lag + 1) + 9.0 * tap(lag) + 9.0 * tap(lag - 1) - tap(lag - 2)) / 16.0;
}

double triangular_wave(double amplitude, double period, double t) {
    const double x = t / period;
    const double phase = x - std::floor(x);
    if (phase < 0.25) {
        return amplitude * 4.0 * phase;
    }
    if (phase < 0.75) {
        return amplitude * (2.0 - 4.0 * phase);
    }
    return amplitude * (4.0 * phase - 4.0);
}

double ReferenceSignal::operator()(double t) const {
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Triangle: return triangular_wave(amplitude, period, t);
    case Kind::Sine: return amplitude * std::sin(2.0 * std::numbers::pi * t / period);
    }
    return 0.0;
}

double aligned_step(double dt, std::span<const double> lags) {
    if (!(dt > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    }
    double longest = 0.0;
    for (double lag : lags) {
        longest = std::max(longest, lag);
    }
    if (longest == 0.0) {
        return dt;
    }
    const auto first = static_cast<long long>(std::ceil(longest / dt * (1.0 - kAlignTolerance)));
    const long long limit = std::max(first, 1LL) * 1000000LL;
    for (long long n = std::max(first, 1LL); n <= limit; ++n) {
        const double h = longest / static_cast<double>(n);
        bool ok = true;
        for (double lag : lags) {
            if (lag > 0.0 && !is_integer_multiple(lag, h)) {
                ok = false;
                break;
            }
        }
        if (ok) {
            return h;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "no common step aligns the delay lags");
}

SimulationTrace simulate(const TransferFunction& plant, const RepetitiveController& ctrl,
                         const ReferenceSignal& reference, double duration, double dt) {
    ctrl.validate();
    if (!(duration >= 2.0 * ctrl.tau_d)) {
        throw Error(ErrorKind::InvalidArgument, "duration must cover at least two periods");
    }
    if (plant.delay() < 0.0) {
        throw Error(ErrorKind::ImproperTransferFunction, "a plant advance cannot be simulated");
    }
    const double lag_q = ctrl.tau_d - ctrl.tau_q;
    const double lag_b = ctrl.tau_d - ctrl.tau_q - ctrl.tau_b;
    const double lag_p = plant.delay();
    const std::vector<double> lags{lag_q, lag_b, lag_p};
    const double h = aligned_step(dt, lags);

    const StateSpaceBlock gp = realize(TransferFunction(plant.num(), plant.den()));
    const StateSpaceBlock gq = realize(ctrl.qp_sections);
    const StateSpaceBlock gb = realize(ctrl.bp_sections);

    DelayLine w_line(lag_q, h);
    const std::size_t n_q = w_line.lag_samples(lag_q);
    const std::size_t n_b = w_line.lag_samples(lag_b);
    std::optional<DelayLine> u_line;
    std::size_t n_p = 0;
    if (lag_p > 0.0) {
        u_line.emplace(lag_p, h);
        n_p = u_line->lag_samples(lag_p);
    }

    const Eigen::Index np = gp.A.rows();
    const Eigen::Index nq = gq.A.rows();
    const Eigen::Index nb = gb.A.rows();
    const Eigen::Index dim = np + nq + nb;

    struct Taps {
        double d_q;
        double d_b;
        double u_delayed;
    };
    struct Signals {
        double r, y, e, u, w;
    };

    auto signals = [&](double t, const Eigen::VectorXd& x, const Taps& taps) {
        Signals s{};
        s.r = reference(t);
        const double v = gb.C.dot(x.segment(np + nq, nb)) + gb.D * taps.d_b;
        const double cx = gp.C.dot(x.head(np));
        if (u_line) {
            s.y = cx + gp.D * taps.u_delayed;
        } else {
            s.y = (cx + gp.D * (s.r + v)) / (1.0 + gp.D);
        }
        s.e = s.r - s.y;
        s.u = s.e + v;
        s.w = gq.C.dot(x.segment(np, nq)) + gq.D * (s.e + taps.d_q);
        return s;
    };
    auto derivative = [&](double t, const Eigen::VectorXd& x, const Taps& taps, Eigen::VectorXd& dx) {
        const Signals s = signals(t, x, taps);
        const double u_in = u_line ? taps.u_delayed : s.u;
        dx.head(np).noalias() = gp.A * x.head(np) + gp.B * u_in;
        dx.segment(np, nq).noalias() = gq.A * x.segment(np, nq) + gq.B * (s.e + taps.d_q);
        dx.segment(np + nq, nb).noalias() = gb.A * x.segment(np + nq, nb) + gb.B * taps.d_b;
    };
    // Taps for a stage `offset` half-samples after the newest stored sample
    // (0: at it, 1: half a step later, 2: one step later).
    auto taps_at = [&](int offset) {
        Taps taps{};
        auto read = [offset](const DelayLine& line, std::size_t lag) {
            switch (offset) {
            case 0: return line.tap(lag);
            case 1: return line.tap_half(lag);
            default: return lag == 0 ? 0.0 : line.tap(lag - 1);
            }
        };
        taps.d_q = read(w_line, n_q);
        taps.d_b = read(w_line, n_b);
        taps.u_delayed = u_line ? read(*u_line, n_p) : 0.0;
        return taps;
    };

    const auto steps = static_cast<std::size_t>(std::ceil(duration / h - 1e-9));
    SimulationTrace trace;
    trace.dt = h;
    trace.reference.reserve(steps + 1);
    trace.output.reserve(steps + 1);
    trace.error.reserve(steps + 1);
    trace.control.reserve(steps + 1);

    const double limit = kUnstableRatio * std::abs(reference.amplitude);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);

    // Record sample k; the lines hold samples up to k-1 at this point.
    auto record = [&](std::size_t k) {
        const Signals s = signals(static_cast<double>(k) * h, x, taps_at(2));
        trace.reference.push_back(s.r);
        trace.output.push_back(s.y);
        trace.error.push_back(s.e);
        trace.control.push_back(s.u);
        w_line.push(s.w);
        if (u_line) {
            u_line->push(s.u);
        }
        if (!std::isfinite(s.y) || std::abs(s.y) > limit) {
            std::ostringstream msg;
            msg << "output magnitude " << std::abs(s.y) << " exceeded " << limit << " at t="
                << static_cast<double>(k) * h;
            throw UnstableSimulation(msg.str(), trace);
        }
    };

    // At t=0 the newest stored sample is the zero history before the start.
    {
        const Signals s = signals(0.0, x, taps_at(0));
        trace.reference.push_back(s.r);
        trace.output.push_back(s.y);
        trace.error.push_back(s.e);
        trace.control.push_back(s.u);
        w_line.push(s.w);
        if (u_line) {
            u_line->push(s.u);
        }
    }
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        const Taps t0 = taps_at(0);
        const Taps th = taps_at(1);
        const Taps t1 = taps_at(2);
        derivative(t, x, t0, k1);
        tmp = x + 0.5 * h * k1;
        derivative(t + 0.5 * h, tmp, th, k2);
        tmp = x + 0.5 * h * k2;
        derivative(t + 0.5 * h, tmp, th, k3);
        tmp = x + h * k3;
        derivative(t + h, tmp, t1, k4);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        record(k + 1);
    }
    return trace;
}

std::vector<PeriodMetrics> per_period_error_metrics(const SimulationTrace& trace, double period) {
    if (!(period > 0.0) || !(trace.dt > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "period and dt must be positive");
    }
    auto boundary = [&](std::size_t k) {
        return static_cast<std::size_t>(std::ceil(static_cast<double>(k) * period / trace.dt - 1e-9));
    };
    std::vector<PeriodMetrics> out;
    for (std::size_t k = 0;; ++k) {
        const std::size_t begin = boundary(k);
        const std::size_t end = boundary(k + 1);
        if (end > trace.error.size() || end <= begin) {
            break;
        }
        double sum2 = 0.0;
        double peak = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            const double e = trace.error[i];
            sum2 += e * e;
            peak = std::max(peak, std::abs(e));
        }
        out.push_back({k, std::sqrt(sum2 / static_cast<double>(end - begin)), peak});
    }
    if (out.size() < 2) {
        throw Error(ErrorKind::TraceTooShort, "trace spans fewer than two complete periods");
    }
    return out;
}

double sinusoid_amplitude(std::span<const double> signal, double dt, double omega, std::size_t begin,
                          std::size_t end) {
    if (end > signal.size() || end <= begin + 3) {
        throw Error(ErrorKind::InvalidArgument, "fit window is too short");
    }
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (std::size_t i = begin; i < end; ++i) {
        const double t = static_cast<double>(i) * dt;
        const Eigen::Vector3d row(std::cos(omega * t), std::sin(omega * t), 1.0);
        ata += row * row.transpose();
        atb += row * signal[i];
    }
    const Eigen::Vector3d coef = ata.ldlt().solve(atb);
    return std::hypot(coef(0), coef(1));
}

} // namespace repspace
