#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repspace/pointcond.hpp"
#include "repspace/repcon.hpp"

namespace repspace {

// Cell-centred sampling of a parameter box. Cell (i, j) covers the i-th slice
// of the p1 axis and the j-th slice of the p2 axis; log axes are sliced
// uniformly in log10.
struct RasterGrid {
    ParameterBox box;
    std::size_t nx = 512;
    std::size_t ny = 512;

    [[nodiscard]] double p1_at(std::size_t i) const noexcept;
    [[nodiscard]] double p2_at(std::size_t j) const noexcept;
    // Fractional cell coordinate of a parameter value; the centre of cell i
    // maps to i + 0.5. NaN for non-positive values on a log axis.
    [[nodiscard]] double p1_to_cell(double value) const noexcept;
    [[nodiscard]] double p2_to_cell(double value) const noexcept;

    friend bool operator==(const RasterGrid&, const RasterGrid&) = default;
};

inline constexpr std::size_t kDefaultRasterResolution = 512;

class Raster {
public:
    explicit Raster(RasterGrid grid, bool value = false);

    [[nodiscard]] const RasterGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] bool at(std::size_t i, std::size_t j) const noexcept {
        return cells_[j * grid_.nx + i] != 0;
    }
    void set(std::size_t i, std::size_t j, bool value) noexcept {
        cells_[j * grid_.nx + i] = value ? 1 : 0;
    }
    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] bool any() const noexcept { return count() > 0; }

    // Cellwise AND / complement; AND throws MismatchedGrids.
    [[nodiscard]] Raster operator&(const Raster& rhs) const;
    [[nodiscard]] Raster operator~() const;
    // True when every member cell of this raster is also a member of `outer`.
    [[nodiscard]] bool subset_of(const Raster& outer) const;

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    RasterGrid grid_;
    std::vector<std::uint8_t> cells_;
};

using CellPredicate = std::function<bool(double p1, double p2)>;

// Evaluates the predicate at every cell centre, in parallel over rows.
// Evaluation errors thrown by the predicate count as violations.
[[nodiscard]] Raster rasterize(const RasterGrid& grid, const CellPredicate& predicate);

enum class Side { Inside, Outside };

[[nodiscard]] const char* to_string(Side side) noexcept;

struct SolutionRegion {
    double omega = 0.0;
    int k = 0;
    Band band = Band::RP;
    std::optional<PointConditionCurve> curve;
    Side side = Side::Inside;
    Raster raster;
};

// Fills the raster by direct predicate evaluation and decides which side of
// the curve is the solution by comparing member fractions inside and outside
// the curve loops (winding number). Without a curve the region is raster-only.
[[nodiscard]] SolutionRegion classify_region(std::optional<PointConditionCurve> curve,
                                             const CellPredicate& predicate,
                                             const RasterGrid& grid);

// Winding-number membership of a parameter point in the curve loops; several
// loops combine by parity.
[[nodiscard]] bool inside_curve(const PointConditionCurve& curve, double p1, double p2);

struct CurveAgreement {
    std::size_t compared = 0;
    std::size_t agreeing = 0;
    std::size_t excluded = 0; // cells within the boundary band
    [[nodiscard]] double fraction() const noexcept {
        return compared == 0 ? 1.0 : static_cast<double>(agreeing) / static_cast<double>(compared);
    }
};

// Compares the curve-side prediction with the raster on every cell farther
// than `band_cells` cell widths from the traced curve.
[[nodiscard]] CurveAgreement curve_side_agreement(const SolutionRegion& region,
                                                  double band_cells = 2.0);

struct OverallRegion {
    Raster raster;
    std::vector<std::pair<double, Band>> contributing;
    bool nonempty = false;
};

// Cellwise AND. Throws MismatchedGrids or InvalidArgument for an empty input.
[[nodiscard]] OverallRegion intersect_regions(std::span<const SolutionRegion> regions);

enum class PickStrategy { Centroid, MaxClearance };

struct PickedPoint {
    double p1 = 0.0;
    double p2 = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    // Chebyshev distance (in cells) to the nearest non-member cell or box edge.
    std::size_t clearance = 0;
};

// Throws EmptyRegion.
[[nodiscard]] PickedPoint pick_point(const OverallRegion& overall, PickStrategy strategy);
[[nodiscard]] PickedPoint pick_point(const Raster& raster, PickStrategy strategy);

// ---------------------------------------------------------------------------
// Design problem: everything needed to evaluate constraints at a point.

struct DesignProblem {
    TransferFunction plant = TransferFunction::constant(1.0);
    RepetitiveController ctrl_template;
    ParameterSelection selection;
    WeightSchedule schedule;
    bool check_stability = true;
    std::vector<double> stab_grid; // empty: default_stab_grid()
};

inline constexpr std::size_t kDefaultStabGridSize = 400;

// Log-spaced grid from omega_1/10 to 4*omega_l (omega_1 = 2*pi/tau_d when the
// schedule is empty).
[[nodiscard]] std::vector<double> default_stab_grid(const WeightSchedule& schedule, double tau_d,
                                                    std::size_t count = kDefaultStabGridSize);

// Caches plant responses on the schedule and stability grids.
class ProblemEvaluator {
public:
    explicit ProblemEvaluator(DesignProblem problem);

    [[nodiscard]] const DesignProblem& problem() const noexcept { return problem_; }
    [[nodiscard]] std::span<const double> stab_grid() const noexcept { return stab_grid_; }

    [[nodiscard]] RepetitiveController controller_at(double p1, double p2) const;

    // |W_S||S| + |W_T||T| for one schedule row. Throws on evaluation errors.
    [[nodiscard]] double row_value(std::size_t row, const RepetitiveController& ctrl) const;
    [[nodiscard]] bool row_holds(std::size_t row, const RepetitiveController& ctrl) const;
    // Single-weight predicates |W_S S| < 1 and |W_T T| < 1.
    [[nodiscard]] bool np_holds(std::size_t row, const RepetitiveController& ctrl) const;
    [[nodiscard]] bool rs_holds(std::size_t row, const RepetitiveController& ctrl) const;

    [[nodiscard]] RegenCheck regen(const RepetitiveController& ctrl) const;
    [[nodiscard]] bool stab_holds(const RepetitiveController& ctrl) const;

    [[nodiscard]] CellPredicate row_predicate(std::size_t row) const;
    [[nodiscard]] CellPredicate np_predicate(std::size_t row) const;
    [[nodiscard]] CellPredicate rs_predicate(std::size_t row) const;
    [[nodiscard]] CellPredicate stab_predicate() const;

private:
    [[nodiscard]] Complex loop_at_row(std::size_t row, const RepetitiveController& ctrl) const;

    DesignProblem problem_;
    std::vector<Complex> row_plant_;
    std::vector<double> stab_grid_;
    std::vector<Complex> stab_plant_;
};

struct RowVerdict {
    int k = 0;
    double omega = 0.0;
    Band band = Band::RP;
    double value = 0.0;
    bool pass = false;
    std::string diagnostic;
};

struct MembershipReport {
    bool member = false;
    std::vector<RowVerdict> rows;
    std::optional<RegenCheck> regen;
    std::string diagnostic;
};

// Direct evaluation of every schedule row (and the regeneration condition
// when enabled) at one parameter point. Throws InvalidArgument when the point
// is outside the parameter box.
[[nodiscard]] MembershipReport membership_oracle(double p1, double p2,
                                                 const ProblemEvaluator& evaluator);

// Region of one schedule row: curve traced by the point-condition solver and
// raster from the row predicate.
[[nodiscard]] SolutionRegion build_row_region(const ProblemEvaluator& evaluator, std::size_t row,
                                              const RasterGrid& grid,
                                              std::size_t theta_resolution = kDefaultThetaResolution);

[[nodiscard]] SolutionRegion build_stab_region(const ProblemEvaluator& evaluator,
                                               const RasterGrid& grid);

} // namespace repspace
