#pragma once

#include <array>
#include <optional>
#include <vector>

#include "repspace/freqresp.hpp"
#include "repspace/repcon.hpp"

namespace repspace {

// Closed range of loop-gain angles where the point-condition quadratic has
// real roots.
struct ThetaInterval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] double width() const noexcept { return hi - lo; }
};

enum class FilterTarget { Qp, Bp };

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    friend bool operator==(const Axis&, const Axis&) = default;
};

struct ParameterBox {
    Axis p1;
    Axis p2;

    [[nodiscard]] bool contains(double v1, double v2) const noexcept {
        return v1 >= p1.lo && v1 <= p1.hi && v2 >= p2.lo && v2 <= p2.hi;
    }
    friend bool operator==(const ParameterBox&, const ParameterBox&) = default;
};

// `tied` always takes the value of the free slot `source`.
struct Tie {
    Slot tied = Slot::N0;
    Slot source = Slot::D0;
};

// The two free controller coefficients and the plane they span.
struct ParameterSelection {
    FilterTarget target = FilterTarget::Qp;
    std::size_t section = 0;
    std::array<Slot, 2> free{Slot::D0, Slot::D1};
    std::optional<Tie> tie;
    ParameterBox box;
    // When set, solve_two_params rejects solutions outside the box.
    bool clip = false;

    // Throws InvalidArgument.
    void validate() const;
};

// Copy of the template with the free slots (and the tied slot) set.
[[nodiscard]] RepetitiveController apply_parameters(const RepetitiveController& ctrl_template,
                                                    const ParameterSelection& selection, double p1,
                                                    double p2);

enum class Branch { Plus, Minus };

struct CurvePoint {
    double theta = 0.0;
    Branch branch = Branch::Plus;
    Complex L;
    double p1 = 0.0;
    double p2 = 0.0;
    // Index of the (wrap-merged) active angle range the point was traced on.
    std::size_t segment = 0;
};

// Discriminant of the point-condition quadratic in |L|:
//   cos^2(theta) + ws^2 + wt^2 - 2 ws wt cos(theta) - 1.
[[nodiscard]] double discriminant(double ws, double wt, double theta) noexcept;

// Positive roots x of (1 - wt^2) x^2 + 2 (cos(theta) - ws wt) x + (1 - ws^2) = 0,
// i.e. loop-gain magnitudes with (ws + wt x)^2 = x^2 + 1 + 2 x cos(theta).
// Sorted ascending. Degenerates to the linear equation when |1 - wt^2| < 1e-12.
[[nodiscard]] std::vector<double> solve_loop_magnitude(double ws, double wt, double theta);

// Maximal sub-ranges of [0, 2*pi] where the discriminant is non-negative.
// The grid has `resolution` samples; edges are bisected to 1e-10 rad.
// Ranges of zero width are dropped.
[[nodiscard]] std::vector<ThetaInterval> active_theta_intervals(double ws, double wt,
                                                                std::size_t resolution);

// q_p(jw) that places the loop gain at L, given G(jw) and the full b(jw).
[[nodiscard]] Complex backsolve_qp_target(Complex L, Complex G, Complex b, double tau_d,
                                          double tau_q, double omega);

// b_p(jw) that places the loop gain at L, given G(jw) and the full q(jw).
[[nodiscard]] Complex backsolve_bp_target(Complex L, Complex G, Complex q, double tau_d,
                                          double tau_b, double omega);

// Solves N(jw) - t D(jw) = 0 for the free coefficients of the selected
// section, where t is `target` with all other sections of the same filter
// divided out. Throws SingularSystem, NoSolution, DegenerateBackSolve.
[[nodiscard]] std::array<double, 2> solve_two_params(const ParameterSelection& selection,
                                                     const RepetitiveController& fixed,
                                                     Complex target, double omega);

struct PointConditionCurve {
    double omega = 0.0;
    double ws = 0.0;
    double wt = 0.0;
    std::vector<ThetaInterval> intervals;
    // One entry per segment: true when the segment spans the whole circle.
    std::vector<bool> full_circle;
    std::vector<CurvePoint> points; // ordered by (branch, segment, theta)
    std::size_t skipped = 0;

    [[nodiscard]] bool empty() const noexcept { return points.empty(); }
    // Closed loops in the parameter plane: per segment, the plus branch
    // followed by the reversed minus branch (full-circle segments give one
    // loop per branch).
    [[nodiscard]] std::vector<std::vector<CurvePoint>> loops() const;
};

inline constexpr std::size_t kDefaultThetaResolution = 2048;

// Traces the point-condition boundary of one frequency in the parameter
// plane. An empty result is the "no solution points" outcome, not an error.
[[nodiscard]] PointConditionCurve trace_point_condition_curve(
    const TransferFunction& plant, const RepetitiveController& ctrl_template,
    const ParameterSelection& selection, double ws, double wt, double omega,
    std::size_t resolution = kDefaultThetaResolution);

} // namespace repspace
