#include "repspace/regions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "repspace/error.hpp"

namespace repspace {

namespace {

double axis_center(const Axis& axis, std::size_t i, std::size_t n) {
    const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    if (axis.log) {
        const double a = std::log10(axis.lo);
        const double b = std::log10(axis.hi);
        return std::pow(10.0, a + (b - a) * frac);
    }
    return axis.lo + (axis.hi - axis.lo) * frac;
}

double axis_to_cell(const Axis& axis, double value, std::size_t n) {
    double frac;
    if (axis.log) {
        if (!(value > 0.0)) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        frac = (std::log10(value) - std::log10(axis.lo)) / (std::log10(axis.hi) - std::log10(axis.lo));
    } else {
        frac = (value - axis.lo) / (axis.hi - axis.lo);
    }
    return frac * static_cast<double>(n);
}

bool finite_point(const CurvePoint& pt) {
    return std::isfinite(pt.p1) && std::isfinite(pt.p2);
}

// Winding number of a closed polygon around (x, y).
int winding_number(const std::vector<CurvePoint>& loop, double x, double y) {
    int wn = 0;
    const std::size_t n = loop.size();
    for (std::size_t k = 0; k < n; ++k) {
        const CurvePoint& a = loop[k];
        const CurvePoint& b = loop[(k + 1) % n];
        const double is_left = (b.p1 - a.p1) * (y - a.p2) - (x - a.p1) * (b.p2 - a.p2);
        if (a.p2 <= y) {
            if (b.p2 > y && is_left > 0.0) {
                ++wn;
            }
        } else if (b.p2 <= y && is_left < 0.0) {
            --wn;
        }
    }
    return wn;
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0) {
        t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
    }
    const double cx = ax + t * dx - px;
    const double cy = ay + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

// Liang-Barsky clip of a segment to [xmin,xmax]x[ymin,ymax]; false if outside.
bool clip_segment(double& ax, double& ay, double& bx, double& by, double xmin, double xmax,
                  double ymin, double ymax) {
    double t0 = 0.0;
    double t1 = 1.0;
    const double dx = bx - ax;
    const double dy = by - ay;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {ax - xmin, xmax - ax, ay - ymin, ymax - ay};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0) {
                return false;
            }
            continue;
        }
        const double r = q[k] / p[k];
        if (p[k] < 0.0) {
            t0 = std::max(t0, r);
        } else {
            t1 = std::min(t1, r);
        }
        if (t0 > t1) {
            return false;
        }
    }
    const double nax = ax + t0 * dx;
    const double nay = ay + t0 * dy;
    bx = ax + t1 * dx;
    by = ay + t1 * dy;
    ax = nax;
    ay = nay;
    return true;
}

std::vector<std::uint8_t> boundary_band(const PointConditionCurve& curve, const RasterGrid& grid,
                                        double band_cells) {
    std::vector<std::uint8_t> band(grid.nx * grid.ny, 0);
    const double nx = static_cast<double>(grid.nx);
    const double ny = static_cast<double>(grid.ny);
    const double pad = band_cells + 1.0;
    for (const auto& loop : curve.loops()) {
        const std::size_t n = loop.size();
        for (std::size_t k = 0; k < n; ++k) {
            const CurvePoint& a = loop[k];
            const CurvePoint& b = loop[(k + 1) % n];
            double ax = grid.p1_to_cell(a.p1);
            double ay = grid.p2_to_cell(a.p2);
            double bx = grid.p1_to_cell(b.p1);
            double by = grid.p2_to_cell(b.p2);
            if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(bx) || !std::isfinite(by)) {
                continue;
            }
            if (!clip_segment(ax, ay, bx, by, -pad, nx + pad, -pad, ny + pad)) {
                continue;
            }
            const auto lo_i = static_cast<long>(std::floor(std::min(ax, bx) - band_cells - 1.0));
            const auto hi_i = static_cast<long>(std::ceil(std::max(ax, bx) + band_cells + 1.0));
            const auto lo_j = static_cast<long>(std::floor(std::min(ay, by) - band_cells - 1.0));
            const auto hi_j = static_cast<long>(std::ceil(std::max(ay, by) + band_cells + 1.0));
            for (long j = std::max(0L, lo_j); j <= std::min(static_cast<long>(grid.ny) - 1, hi_j); ++j) {
                for (long i = std::max(0L, lo_i); i <= std::min(static_cast<long>(grid.nx) - 1, hi_i); ++i) {
                    const double cx = static_cast<double>(i) + 0.5;
                    const double cy = static_cast<double>(j) + 0.5;
                    if (point_segment_distance(cx, cy, ax, ay, bx, by) <= band_cells) {
                        band[static_cast<std::size_t>(j) * grid.nx + static_cast<std::size_t>(i)] = 1;
                    }
                }
            }
        }
    }
    return band;
}


std::vector<std::vector<CurvePoint>> finite_loops(const PointConditionCurve& curve) {
    std::vector<std::vector<CurvePoint>> loops;
    for (auto loop : curve.loops()) {
        std::erase_if(loop, [](const CurvePoint& pt) { return !finite_point(pt); });
        if (loop.size() >= 3) {
            loops.push_back(std::move(loop));
        }
    }
    return loops;
}

// Inside/outside mask of all cell centres, by scanline: for each row the
// signed crossings of a rightward ray give the winding number of every cell.
std::vector<std::uint8_t> inside_mask(const PointConditionCurve& curve, const RasterGrid& grid) {
    std::vector<std::uint8_t> mask(grid.nx * grid.ny, 0);
    const auto loops = finite_loops(curve);
    std::vector<double> xs(grid.nx);
    for (std::size_t i = 0; i < grid.nx; ++i) {
        xs[i] = grid.p1_at(i);
    }
    std::vector<std::pair<double, int>> crossings;
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.p2_at(j);
        for (const auto& loop : loops) {
            crossings.clear();
            const std::size_t n = loop.size();
            int total = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const CurvePoint& a = loop[k];
                const CurvePoint& b = loop[(k + 1) % n];
                int dir = 0;
                if (a.p2 <= y && b.p2 > y) {
                    dir = 1;
                } else if (b.p2 <= y && a.p2 > y) {
                    dir = -1;
                }
                if (dir == 0) {
                    continue;
                }
                const double t = (y - a.p2) / (b.p2 - a.p2);
                crossings.emplace_back(a.p1 + t * (b.p1 - a.p1), dir);
                total += dir;
            }
            if (crossings.empty()) {
                continue;
            }
            std::sort(crossings.begin(), crossings.end());
            // winding(x) = sum of crossings strictly to the right of x.
            std::size_t c = 0;
            int left_sum = 0;
            for (std::size_t i = 0; i < grid.nx; ++i) {
                while (c < crossings.size() && crossings[c].first <= xs[i]) {
                    left_sum += crossings[c].second;
                    ++c;
                }
                if (total - left_sum != 0) {
                    mask[j * grid.nx + i] ^= 1;
                }
            }
        }
    }
    return mask;
}

} // namespace

double RasterGrid::p1_at(std::size_t i) const noexcept { return axis_center(box.p1, i, nx); }
double RasterGrid::p2_at(std::size_t j) const noexcept { return axis_center(box.p2, j, ny); }
double RasterGrid::p1_to_cell(double value) const noexcept { return axis_to_cell(box.p1, value, nx); }
double RasterGrid::p2_to_cell(double value) const noexcept { return axis_to_cell(box.p2, value, ny); }

Raster::Raster(RasterGrid grid, bool value)
    : grid_(grid), cells_(grid.nx * grid.ny, value ? 1 : 0) {
    if (grid.nx == 0 || grid.ny == 0) {
        throw Error(ErrorKind::InvalidArgument, "raster resolution must be positive");
    }
}

std::size_t Raster::count() const noexcept {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), std::uint8_t{1}));
}

Raster Raster::operator&(const Raster& rhs) const {
    if (!(grid_ == rhs.grid_)) {
        throw Error(ErrorKind::MismatchedGrids, "rasters do not share box and resolution");
    }
    Raster out(grid_);
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        out.cells_[k] = cells_[k] & rhs.cells_[k];
    }
    return out;
}

Raster Raster::operator~() const {
    Raster out(grid_);
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        out.cells_[k] = cells_[k] ? 0 : 1;
    }
    return out;
}

bool Raster::subset_of(const Raster& outer) const {
    if (!(grid_ == outer.grid_)) {
        throw Error(ErrorKind::MismatchedGrids, "rasters do not share box and resolution");
    }
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        if (cells_[k] && !outer.cells_[k]) {
            return false;
        }
    }
    return true;
}

Raster rasterize(const RasterGrid& grid, const CellPredicate& predicate) {
    Raster raster(grid);
    std::atomic<std::size_t> next_row{0};
    auto worker = [&] {
        for (std::size_t j = next_row++; j < grid.ny; j = next_row++) {
            const double p2 = grid.p2_at(j);
            for (std::size_t i = 0; i < grid.nx; ++i) {
                bool ok = false;
                try {
                    ok = predicate(grid.p1_at(i), p2);
                } catch (const Error&) {
                    ok = false;
                }
                raster.set(i, j, ok);
            }
        }
    };
    const unsigned threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    return raster;
}

const char* to_string(Side side) noexcept {
    return side == Side::Inside ? "inside" : "outside";
}

bool inside_curve(const PointConditionCurve& curve, double p1, double p2) {
    bool inside = false;
    for (const auto& loop : finite_loops(curve)) {
        if (winding_number(loop, p1, p2) != 0) {
            inside = !inside;
        }
    }
    return inside;
}

SolutionRegion classify_region(std::optional<PointConditionCurve> curve,
                               const CellPredicate& predicate, const RasterGrid& grid) {
    SolutionRegion region{0.0, 0, Band::RP, std::move(curve), Side::Inside, rasterize(grid, predicate)};
    if (!region.curve || region.curve->empty()) {
        return region;
    }
    std::size_t in_total = 0;
    std::size_t in_true = 0;
    std::size_t out_total = 0;
    std::size_t out_true = 0;
    const auto mask = inside_mask(*region.curve, grid);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const bool member = region.raster.at(i, j);
            if (mask[j * grid.nx + i]) {
                ++in_total;
                in_true += member ? 1 : 0;
            } else {
                ++out_total;
                out_true += member ? 1 : 0;
            }
        }
    }
    const double in_frac = in_total ? static_cast<double>(in_true) / static_cast<double>(in_total) : -1.0;
    const double out_frac = out_total ? static_cast<double>(out_true) / static_cast<double>(out_total) : -1.0;
    if (in_total == 0) {
        region.side = out_frac > 0.5 ? Side::Outside : Side::Inside;
    } else {
        region.side = in_frac >= out_frac ? Side::Inside : Side::Outside;
    }
    return region;
}

CurveAgreement curve_side_agreement(const SolutionRegion& region, double band_cells) {
    CurveAgreement out;
    const RasterGrid& grid = region.raster.grid();
    if (!region.curve || region.curve->empty()) {
        out.compared = grid.nx * grid.ny;
        out.agreeing = out.compared;
        return out;
    }
    const auto band = boundary_band(*region.curve, grid, band_cells);
    const auto mask = inside_mask(*region.curve, grid);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        for (std::size_t i = 0; i < grid.nx; ++i) {
            if (band[j * grid.nx + i]) {
                ++out.excluded;
                continue;
            }
            const bool inside = mask[j * grid.nx + i] != 0;
            const bool predicted = region.side == Side::Inside ? inside : !inside;
            ++out.compared;
            out.agreeing += predicted == region.raster.at(i, j) ? 1 : 0;
        }
    }
    return out;
}

OverallRegion intersect_regions(std::span<const SolutionRegion> regions) {
    if (regions.empty()) {
        throw Error(ErrorKind::InvalidArgument, "nothing to intersect");
    }
    OverallRegion overall{regions.front().raster, {}, false};
    for (std::size_t k = 0; k < regions.size(); ++k) {
        if (k > 0) {
            overall.raster = overall.raster & regions[k].raster;
        }
        overall.contributing.emplace_back(regions[k].omega, regions[k].band);
    }
    overall.nonempty = overall.raster.any();
    return overall;
}

PickedPoint pick_point(const OverallRegion& overall, PickStrategy strategy) {
    return pick_point(overall.raster, strategy);
}

PickedPoint pick_point(const Raster& raster, PickStrategy strategy) {
    const RasterGrid& grid = raster.grid();
    const std::size_t nx = grid.nx;
    const std::size_t ny = grid.ny;
    if (!raster.any()) {
        throw Error(ErrorKind::EmptyRegion, "solution region is empty");
    }

    // Chessboard distance to the nearest non-member cell; the box exterior
    // counts as non-member.
    constexpr std::size_t kInf = std::numeric_limits<std::size_t>::max() / 2;
    std::vector<std::size_t> dist(nx * ny);
    auto d = [&](long i, long j) -> std::size_t {
        if (i < 0 || j < 0 || i >= static_cast<long>(nx) || j >= static_cast<long>(ny)) {
            return 0;
        }
        return dist[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)];
    };
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            dist[j * nx + i] = raster.at(i, j) ? kInf : 0;
        }
    }
    for (long j = 0; j < static_cast<long>(ny); ++j) {
        for (long i = 0; i < static_cast<long>(nx); ++i) {
            auto& v = dist[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)];
            if (v == 0) {
                continue;
            }
            v = std::min({v, d(i - 1, j) + 1, d(i - 1, j - 1) + 1, d(i, j - 1) + 1, d(i + 1, j - 1) + 1});
        }
    }
    for (long j = static_cast<long>(ny) - 1; j >= 0; --j) {
        for (long i = static_cast<long>(nx) - 1; i >= 0; --i) {
            auto& v = dist[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)];
            if (v == 0) {
                continue;
            }
            v = std::min({v, d(i + 1, j) + 1, d(i + 1, j + 1) + 1, d(i, j + 1) + 1, d(i - 1, j + 1) + 1});
        }
    }

    double si = 0.0;
    double sj = 0.0;
    std::size_t n = 0;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (raster.at(i, j)) {
                si += static_cast<double>(i);
                sj += static_cast<double>(j);
                ++n;
            }
        }
    }
    const double ci = si / static_cast<double>(n);
    const double cj = sj / static_cast<double>(n);

    // Centroid: nearest member cell. Max clearance: deepest cell, ties going
    // to the one nearest the centroid.
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    std::size_t best_clearance = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    const bool by_clearance = strategy == PickStrategy::MaxClearance;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            if (!raster.at(i, j)) {
                continue;
            }
            const std::size_t c = dist[j * nx + i];
            if (by_clearance && c < best_clearance) {
                continue;
            }
            const double di = static_cast<double>(i) - ci;
            const double dj = static_cast<double>(j) - cj;
            const double d2 = di * di + dj * dj;
            if ((by_clearance && c > best_clearance) || d2 < best_d2) {
                best_clearance = c;
                best_d2 = d2;
                best_i = i;
                best_j = j;
            }
        }
    }
    return {grid.p1_at(best_i), grid.p2_at(best_j), best_i, best_j, dist[best_j * nx + best_i]};
}

std::vector<double> default_stab_grid(const WeightSchedule& schedule, double tau_d, std::size_t count) {
    const double w1 = WeightSchedule::harmonic_omega(1, tau_d);
    const double wl = schedule.rows.empty() ? w1 : schedule.rows.back().omega;
    return log_space(w1 / 10.0, 4.0 * wl, count);
}

ProblemEvaluator::ProblemEvaluator(DesignProblem problem) : problem_(std::move(problem)) {
    problem_.selection.validate();
    problem_.schedule.validate(problem_.ctrl_template.tau_d);
    for (const auto& row : problem_.schedule.rows) {
        row_plant_.push_back(eval_tf(problem_.plant, row.omega));
    }
    stab_grid_ = problem_.stab_grid.empty()
                     ? default_stab_grid(problem_.schedule, problem_.ctrl_template.tau_d)
                     : problem_.stab_grid;
    for (double w : stab_grid_) {
        stab_plant_.push_back(eval_tf(problem_.plant, w));
    }
}

RepetitiveController ProblemEvaluator::controller_at(double p1, double p2) const {
    return apply_parameters(problem_.ctrl_template, problem_.selection, p1, p2);
}

Complex ProblemEvaluator::loop_at_row(std::size_t row, const RepetitiveController& ctrl) const {
    return loop_gain(row_plant_.at(row), ctrl, problem_.schedule.rows[row].omega);
}

double ProblemEvaluator::row_value(std::size_t row, const RepetitiveController& ctrl) const {
    const auto& r = problem_.schedule.rows.at(row);
    return robust_perf_value_from_loop(loop_at_row(row, ctrl), r.ws, r.wt);
}

bool ProblemEvaluator::row_holds(std::size_t row, const RepetitiveController& ctrl) const {
    return row_value(row, ctrl) < 1.0;
}

bool ProblemEvaluator::np_holds(std::size_t row, const RepetitiveController& ctrl) const {
    const Complex L = loop_at_row(row, ctrl);
    return problem_.schedule.rows[row].ws * std::abs(sensitivity_from_loop(L)) < 1.0;
}

bool ProblemEvaluator::rs_holds(std::size_t row, const RepetitiveController& ctrl) const {
    const Complex L = loop_at_row(row, ctrl);
    return problem_.schedule.rows[row].wt * std::abs(comp_sensitivity_from_loop(L)) < 1.0;
}

RegenCheck ProblemEvaluator::regen(const RepetitiveController& ctrl) const {
    RegenCheck result;
    result.worst_value = -1.0;
    for (std::size_t k = 0; k < stab_grid_.size(); ++k) {
        const double r = regeneration_spectrum(stab_plant_[k], ctrl, stab_grid_[k]);
        if (r > result.worst_value) {
            result.worst_value = r;
            result.worst_omega = stab_grid_[k];
        }
    }
    result.margin = 1.0 - problem_.schedule.epsilon - result.worst_value;
    result.pass = result.worst_value < 1.0 - problem_.schedule.epsilon;
    return result;
}

bool ProblemEvaluator::stab_holds(const RepetitiveController& ctrl) const {
    const double limit = 1.0 - problem_.schedule.epsilon;
    for (std::size_t k = 0; k < stab_grid_.size(); ++k) {
        if (!(regeneration_spectrum(stab_plant_[k], ctrl, stab_grid_[k]) < limit)) {
            return false;
        }
    }
    return true;
}

CellPredicate ProblemEvaluator::row_predicate(std::size_t row) const {
    return [this, row](double p1, double p2) { return row_holds(row, controller_at(p1, p2)); };
}

CellPredicate ProblemEvaluator::np_predicate(std::size_t row) const {
    return [this, row](double p1, double p2) { return np_holds(row, controller_at(p1, p2)); };
}

CellPredicate ProblemEvaluator::rs_predicate(std::size_t row) const {
    return [this, row](double p1, double p2) { return rs_holds(row, controller_at(p1, p2)); };
}

CellPredicate ProblemEvaluator::stab_predicate() const {
    return [this](double p1, double p2) { return stab_holds(controller_at(p1, p2)); };
}

MembershipReport membership_oracle(double p1, double p2, const ProblemEvaluator& evaluator) {
    const DesignProblem& problem = evaluator.problem();
    if (!problem.selection.box.contains(p1, p2)) {
        throw Error(ErrorKind::InvalidArgument, "point lies outside the parameter box");
    }
    MembershipReport report;
    report.member = true;
    const RepetitiveController ctrl = evaluator.controller_at(p1, p2);
    for (std::size_t r = 0; r < problem.schedule.rows.size(); ++r) {
        const auto& row = problem.schedule.rows[r];
        RowVerdict verdict{row.k, row.omega, row.band, 0.0, false, {}};
        try {
            verdict.value = evaluator.row_value(r, ctrl);
            verdict.pass = verdict.value < 1.0;
        } catch (const Error& e) {
            verdict.value = std::numeric_limits<double>::infinity();
            verdict.diagnostic = e.what();
        }
        if (!verdict.pass) {
            report.member = false;
            if (report.diagnostic.empty()) {
                std::ostringstream msg;
                msg << "row k=" << row.k << " (" << to_string(row.band) << ") violated";
                if (!verdict.diagnostic.empty()) {
                    msg << ": " << verdict.diagnostic;
                }
                report.diagnostic = msg.str();
            }
        }
        report.rows.push_back(std::move(verdict));
    }
    if (problem.check_stability) {
        try {
            report.regen = evaluator.regen(ctrl);
            if (!report.regen->pass) {
                report.member = false;
                if (report.diagnostic.empty()) {
                    report.diagnostic = "regeneration condition violated";
                }
            }
        } catch (const Error& e) {
            report.member = false;
            if (report.diagnostic.empty()) {
                report.diagnostic = std::string("regeneration evaluation failed: ") + e.what();
            }
        }
    }
    return report;
}

SolutionRegion build_row_region(const ProblemEvaluator& evaluator, std::size_t row,
                                const RasterGrid& grid, std::size_t theta_resolution) {
    const DesignProblem& problem = evaluator.problem();
    const auto& r = problem.schedule.rows.at(row);
    std::optional<PointConditionCurve> curve;
    try {
        curve = trace_point_condition_curve(problem.plant, problem.ctrl_template, problem.selection,
                                            r.ws, r.wt, r.omega, theta_resolution);
    } catch (const Error&) {
        curve.reset();
    }
    SolutionRegion region = classify_region(std::move(curve), evaluator.row_predicate(row), grid);
    region.omega = r.omega;
    region.k = r.k;
    region.band = r.band;
    return region;
}

SolutionRegion build_stab_region(const ProblemEvaluator& evaluator, const RasterGrid& grid) {
    SolutionRegion region = classify_region(std::nullopt, evaluator.stab_predicate(), grid);
    region.omega = 0.0;
    region.k = 0;
    region.band = Band::STAB;
    return region;
}

} // namespace repspace
