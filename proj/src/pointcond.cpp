#include "repspace/pointcond.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "repspace/error.hpp"

namespace repspace {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLinearThreshold = 1e-12;
constexpr double kBisectTolerance = 1e-10;
constexpr double kMinIntervalWidth = 1e-9;
constexpr double kSingularThreshold = 1e-12;
constexpr double kResidualTolerance = 1e-9;
constexpr double kZeroFloor = 1e-300;

struct BranchRoots {
    std::optional<double> plus;
    std::optional<double> minus;
};

// Roots labelled by the sign in front of the square root of the closed-form
// solution ((ws wt - cos) +- sqrt(disc)) / (1 - wt^2).
BranchRoots loop_magnitude_branches(double ws, double wt, double theta) {
    BranchRoots out;
    const double c = std::cos(theta);
    const double a = 1.0 - wt * wt;
    const double half_b = c - ws * wt;
    const double cc = 1.0 - ws * ws;
    if (std::abs(a) < kLinearThreshold) {
        if (half_b != 0.0) {
            const double x = -cc / (2.0 * half_b);
            if (x > 0.0) {
                out.plus = x;
            }
        }
        return out;
    }
    const double disc = discriminant(ws, wt, theta);
    if (disc < 0.0) {
        return out;
    }
    const double sq = std::sqrt(disc);
    // Cancellation-free evaluation: one root from q/a, the other from c/q.
    const double q = half_b >= 0.0 ? -(half_b + sq) : -(half_b - sq);
    double r_plus;
    double r_minus;
    if (q == 0.0) {
        r_plus = r_minus = 0.0;
    } else if (half_b >= 0.0) {
        // q = -(half_b + sq): q/a carries the minus sign.
        r_minus = q / a;
        r_plus = cc / q;
    } else {
        r_plus = q / a;
        r_minus = cc / q;
    }
    if (r_plus > 0.0) {
        out.plus = r_plus;
    }
    if (r_minus > 0.0) {
        out.minus = r_minus;
    }
    return out;
}

double bisect_edge(double ws, double wt, double outside, double inside) {
    while (std::abs(inside - outside) > kBisectTolerance) {
        const double mid = 0.5 * (inside + outside);
        if (discriminant(ws, wt, mid) >= 0.0) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    return inside;
}

Complex slot_coefficient(Slot slot, Complex t, double omega) {
    const Complex jw(0.0, omega);
    switch (slot) {
    case Slot::N2: return {-omega * omega, 0.0};
    case Slot::N1: return jw;
    case Slot::N0: return {1.0, 0.0};
    case Slot::D2: return t * (omega * omega);
    case Slot::D1: return -t * jw;
    case Slot::D0: return -t;
    }
    return {0.0, 0.0};
}

std::vector<BiquadSection>& chain_of(RepetitiveController& ctrl, FilterTarget target) {
    return target == FilterTarget::Qp ? ctrl.qp_sections : ctrl.bp_sections;
}

const std::vector<BiquadSection>& chain_of(const RepetitiveController& ctrl, FilterTarget target) {
    return target == FilterTarget::Qp ? ctrl.qp_sections : ctrl.bp_sections;
}

} // namespace

void ParameterSelection::validate() const {
    if (free[0] == free[1]) {
        throw Error(ErrorKind::InvalidArgument, "the two free slots must be distinct");
    }
    if (tie) {
        if (tie->source != free[0] && tie->source != free[1]) {
            throw Error(ErrorKind::InvalidArgument, "tie must reference a free slot");
        }
        if (tie->tied == free[0] || tie->tied == free[1]) {
            throw Error(ErrorKind::InvalidArgument, "tied slot cannot itself be free");
        }
    }
    for (const Axis* axis : {&box.p1, &box.p2}) {
        if (!std::isfinite(axis->lo) || !std::isfinite(axis->hi) || !(axis->hi > axis->lo)) {
            throw Error(ErrorKind::InvalidArgument, "parameter box must have positive area");
        }
        if (axis->log && !(axis->lo > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "log-spaced axes need a positive lower bound");
        }
    }
}

RepetitiveController apply_parameters(const RepetitiveController& ctrl_template,
                                      const ParameterSelection& selection, double p1, double p2) {
    RepetitiveController ctrl = ctrl_template;
    auto& chain = chain_of(ctrl, selection.target);
    if (selection.section >= chain.size()) {
        throw Error(ErrorKind::InvalidArgument, "selected section index is out of range");
    }
    BiquadSection& section = chain[selection.section];
    section.set(selection.free[0], p1);
    section.set(selection.free[1], p2);
    if (selection.tie) {
        section.set(selection.tie->tied, section.get(selection.tie->source));
    }
    return ctrl;
}

double discriminant(double ws, double wt, double theta) noexcept {
    // cos^2 - 1 written as -sin^2 so the zeros at 0 and pi stay sharp
    const double sn = std::sin(theta);
    return ws * ws + wt * wt - 2.0 * ws * wt * std::cos(theta) - sn * sn;
}

std::vector<double> solve_loop_magnitude(double ws, double wt, double theta) {
    const BranchRoots roots = loop_magnitude_branches(ws, wt, theta);
    std::vector<double> out;
    if (roots.plus) {
        out.push_back(*roots.plus);
    }
    if (roots.minus) {
        out.push_back(*roots.minus);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<ThetaInterval> active_theta_intervals(double ws, double wt, std::size_t resolution) {
    if (resolution < 16) {
        throw Error(ErrorKind::InvalidArgument, "theta resolution must be at least 16");
    }
    std::vector<double> grid(resolution);
    std::vector<bool> active(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        grid[i] = kTwoPi * static_cast<double>(i) / static_cast<double>(resolution - 1);
        active[i] = discriminant(ws, wt, grid[i]) >= 0.0;
    }
    std::vector<ThetaInterval> out;
    std::size_t i = 0;
    while (i < resolution) {
        if (!active[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < resolution && active[j + 1]) {
            ++j;
        }
        ThetaInterval iv{grid[i], grid[j]};
        if (i > 0) {
            iv.lo = bisect_edge(ws, wt, grid[i - 1], grid[i]);
        }
        if (j + 1 < resolution) {
            iv.hi = bisect_edge(ws, wt, grid[j + 1], grid[j]);
        }
        if (iv.width() >= kMinIntervalWidth) {
            out.push_back(iv);
        }
        i = j + 1;
    }
    return out;
}

Complex backsolve_qp_target(Complex L, Complex G, Complex b, double tau_d, double tau_q,
                            double omega) {
    const Complex shifted = G * (1.0 - b);
    const Complex denom = L - shifted;
    const double scale = std::max({1.0, std::abs(L), std::abs(shifted)});
    if (std::abs(denom) < kRelativeFloor * scale) {
        throw Error(ErrorKind::DegenerateBackSolve, "L - G(1-b) vanishes");
    }
    return (L - G) / denom * advance_factor(omega, tau_d) * std::conj(advance_factor(omega, tau_q));
}

Complex backsolve_bp_target(Complex L, Complex G, Complex q, double tau_d, double tau_b,
                            double omega) {
    if (std::abs(G) < kZeroFloor) {
        throw Error(ErrorKind::DegenerateBackSolve, "plant response vanishes");
    }
    const Complex z = q * std::conj(advance_factor(omega, tau_d));
    if (std::abs(z) < kZeroFloor) {
        throw Error(ErrorKind::DegenerateBackSolve, "q filter response vanishes");
    }
    return ((L - G) / G) * ((1.0 - z) / z) * std::conj(advance_factor(omega, tau_b));
}

std::array<double, 2> solve_two_params(const ParameterSelection& selection,
                                       const RepetitiveController& fixed, Complex target,
                                       double omega) {
    if (!std::isfinite(target.real()) || !std::isfinite(target.imag())) {
        throw Error(ErrorKind::NonFiniteInput, "filter target is not finite");
    }
    if (!(omega > 0.0) || !std::isfinite(omega)) {
        throw Error(ErrorKind::InvalidArgument, "solve_two_params needs omega > 0");
    }
    const auto& chain = chain_of(fixed, selection.target);
    if (selection.section >= chain.size()) {
        throw Error(ErrorKind::InvalidArgument, "selected section index is out of range");
    }
    Complex others(1.0, 0.0);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (i != selection.section) {
            others *= eval_section(chain[i], omega);
        }
    }
    if (std::abs(others) < kZeroFloor) {
        throw Error(ErrorKind::DegenerateBackSolve, "remaining sections vanish at this frequency");
    }
    const Complex t = target / others;
    const BiquadSection& section = chain[selection.section];

    auto is_unknown = [&](Slot s) {
        return s == selection.free[0] || s == selection.free[1] ||
               (selection.tie && s == selection.tie->tied);
    };
    Complex r0(0.0, 0.0);
    for (Slot s : kAllSlots) {
        if (!is_unknown(s)) {
            r0 += section.get(s) * slot_coefficient(s, t, omega);
        }
    }
    std::array<Complex, 2> col;
    for (std::size_t k = 0; k < 2; ++k) {
        col[k] = slot_coefficient(selection.free[k], t, omega);
        if (selection.tie && selection.tie->source == selection.free[k]) {
            col[k] += slot_coefficient(selection.tie->tied, t, omega);
        }
    }
    const double a = col[0].real();
    const double b = col[1].real();
    const double c = col[0].imag();
    const double d = col[1].imag();
    const double det = a * d - b * c;
    const double scale = std::abs(col[0]) * std::abs(col[1]);
    if (!(scale > 0.0) || std::abs(det) < kSingularThreshold * scale) {
        throw Error(ErrorKind::SingularSystem, "free coefficients cannot reach the target");
    }
    const double rhs_re = -r0.real();
    const double rhs_im = -r0.imag();
    const std::array<double, 2> p{(rhs_re * d - b * rhs_im) / det, (a * rhs_im - c * rhs_re) / det};

    BiquadSection solved = section;
    solved.set(selection.free[0], p[0]);
    solved.set(selection.free[1], p[1]);
    if (selection.tie) {
        solved.set(selection.tie->tied, solved.get(selection.tie->source));
    }
    const double w2 = omega * omega;
    const Complex N(solved.n0 - solved.n2 * w2, solved.n1 * omega);
    const Complex D(solved.d0 - solved.d2 * w2, solved.d1 * omega);
    const double residual = std::abs(N - t * D);
    if (residual > kResidualTolerance * (std::abs(N) + std::abs(t * D))) {
        throw Error(ErrorKind::SingularSystem, "back-solve residual too large");
    }
    if (selection.clip && !selection.box.contains(p[0], p[1])) {
        throw Error(ErrorKind::NoSolution, "solved parameters lie outside the parameter box");
    }
    return p;
}

std::vector<std::vector<CurvePoint>> PointConditionCurve::loops() const {
    std::vector<std::vector<CurvePoint>> out;
    for (std::size_t s = 0; s < full_circle.size(); ++s) {
        std::vector<CurvePoint> plus;
        std::vector<CurvePoint> minus;
        for (const auto& pt : points) {
            if (pt.segment != s) {
                continue;
            }
            (pt.branch == Branch::Plus ? plus : minus).push_back(pt);
        }
        if (full_circle[s]) {
            if (!plus.empty()) {
                out.push_back(std::move(plus));
            }
            if (!minus.empty()) {
                out.push_back(std::move(minus));
            }
        } else {
            plus.insert(plus.end(), minus.rbegin(), minus.rend());
            if (!plus.empty()) {
                out.push_back(std::move(plus));
            }
        }
    }
    return out;
}

PointConditionCurve trace_point_condition_curve(const TransferFunction& plant,
                                                const RepetitiveController& ctrl_template,
                                                const ParameterSelection& selection, double ws,
                                                double wt, double omega, std::size_t resolution) {
    selection.validate();
    PointConditionCurve curve;
    curve.omega = omega;
    curve.ws = ws;
    curve.wt = wt;
    curve.intervals = active_theta_intervals(ws, wt, resolution);

    const auto& ivs = curve.intervals;
    auto grid_inside = [resolution](const ThetaInterval& iv, std::vector<double>& out) {
        out.push_back(iv.lo);
        for (std::size_t i = 0; i < resolution; ++i) {
            const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(resolution - 1);
            if (th > iv.lo && th < iv.hi) {
                out.push_back(th);
            }
        }
        if (iv.hi > iv.lo) {
            out.push_back(iv.hi);
        }
    };

    std::vector<std::vector<double>> segments;
    std::size_t first = 0;
    std::size_t last = ivs.size();
    const bool wraps = ivs.size() >= 2 && ivs.front().lo == 0.0 && ivs.back().hi == kTwoPi;
    if (wraps) {
        std::vector<double> merged;
        grid_inside(ivs.back(), merged);
        std::vector<double> head;
        grid_inside(ivs.front(), head);
        merged.insert(merged.end(), head.begin() + 1, head.end());
        segments.push_back(std::move(merged));
        curve.full_circle.push_back(false);
        first = 1;
        last = ivs.size() - 1;
    }
    for (std::size_t i = first; i < last; ++i) {
        std::vector<double> thetas;
        grid_inside(ivs[i], thetas);
        segments.push_back(std::move(thetas));
        curve.full_circle.push_back(ivs[i].lo == 0.0 && ivs[i].hi == kTwoPi);
    }

    const Complex G = eval_tf(plant, omega);
    const Complex other_filter =
        selection.target == FilterTarget::Qp ? ctrl_template.b(omega) : ctrl_template.q(omega);

    std::vector<CurvePoint> plus_points;
    std::vector<CurvePoint> minus_points;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        for (double theta : segments[s]) {
            const BranchRoots roots = loop_magnitude_branches(ws, wt, theta);
            for (Branch branch : {Branch::Plus, Branch::Minus}) {
                const auto& x = branch == Branch::Plus ? roots.plus : roots.minus;
                if (!x) {
                    continue;
                }
                const Complex L = std::polar(*x, theta);
                try {
                    const Complex target =
                        selection.target == FilterTarget::Qp
                            ? backsolve_qp_target(L, G, other_filter, ctrl_template.tau_d,
                                                  ctrl_template.tau_q, omega)
                            : backsolve_bp_target(L, G, other_filter, ctrl_template.tau_d,
                                                  ctrl_template.tau_b, omega);
                    const auto p = solve_two_params(selection, ctrl_template, target, omega);
                    CurvePoint pt{theta, branch, L, p[0], p[1], s};
                    (branch == Branch::Plus ? plus_points : minus_points).push_back(pt);
                } catch (const Error&) {
                    ++curve.skipped;
                }
            }
        }
    }
    curve.points = std::move(plus_points);
    curve.points.insert(curve.points.end(), minus_points.begin(), minus_points.end());
    return curve;
}

} // namespace repspace
