#include "doctest.h"

#include <random>

#include "repspace/export.hpp"
#include "repspace/regions.hpp"
#include "support.hpp"

using namespace repspace;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::IoError;
}

RasterGrid small_grid(std::size_t nx = 12, std::size_t ny = 9) {
    return {ParameterBox{{1.0, 10.0, true}, {-1.0, 1.0, false}}, nx, ny};
}

SolutionRegion raster_region(Raster r, Band band = Band::RP, double omega = 1.0) {
    SolutionRegion out{omega, 1, band, std::nullopt, Side::Inside, std::move(r)};
    return out;
}

// AFM problem on a coarse raster so the tests stay quick.
DesignConfig coarse_afm(std::size_t n = 48) {
    auto cfg = testing::afm_config();
    cfg.raster_nx = n;
    cfg.raster_ny = n;
    cfg.theta_resolution = 512;
    return cfg;
}

} // namespace

TEST_CASE("raster grid centres and inverse mapping") {
    const auto g = small_grid(10, 4);
    CHECK(g.p1_at(0) == doctest::Approx(std::pow(10.0, 0.05)));
    CHECK(g.p2_at(0) == doctest::Approx(-0.75));
    for (std::size_t i = 0; i < g.nx; ++i) {
        CHECK(g.p1_to_cell(g.p1_at(i)) == doctest::Approx(i + 0.5));
    }
    for (std::size_t j = 0; j < g.ny; ++j) {
        CHECK(g.p2_to_cell(g.p2_at(j)) == doctest::Approx(j + 0.5));
    }
    CHECK(std::isnan(g.p1_to_cell(-1.0)));
}

TEST_CASE("constant predicates give full and empty regions") {
    const auto g = small_grid();
    const Raster all = rasterize(g, [](double, double) { return true; });
    const Raster none = rasterize(g, [](double, double) { return false; });
    CHECK(all.count() == g.nx * g.ny);
    CHECK(none.count() == 0);
    // throwing predicates count as violations
    const Raster thrown = rasterize(g, [](double, double) -> bool {
        throw Error(ErrorKind::CriticalPoint, "x");
    });
    CHECK(thrown.count() == 0);
}

TEST_CASE("intersection of one region and of a region with its complement") {
    const auto g = small_grid();
    const Raster half = rasterize(g, [](double, double p2) { return p2 > 0.0; });
    const std::vector<SolutionRegion> one{raster_region(half)};
    const auto o1 = intersect_regions(one);
    CHECK(o1.raster == half);
    CHECK(o1.nonempty);

    const std::vector<SolutionRegion> both{raster_region(half), raster_region(~half)};
    const auto o2 = intersect_regions(both);
    CHECK(o2.raster.count() == 0);
    CHECK_FALSE(o2.nonempty);

    CHECK(kind_of([] { (void)intersect_regions(std::span<const SolutionRegion>{}); }) ==
          ErrorKind::InvalidArgument);
    const std::vector<SolutionRegion> mismatched{raster_region(half), raster_region(Raster(small_grid(3, 3)))};
    CHECK(kind_of([&] { (void)intersect_regions(mismatched); }) == ErrorKind::MismatchedGrids);
}

TEST_CASE("adding regions never grows the intersection") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution coin(0.7);
    const auto g = small_grid(20, 20);
    std::vector<SolutionRegion> regions;
    std::size_t previous = g.nx * g.ny;
    for (int r = 0; r < 8; ++r) {
        Raster raster(g);
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t i = 0; i < g.nx; ++i) {
                raster.set(i, j, coin(rng));
            }
        }
        regions.push_back(raster_region(raster));
        const auto overall = intersect_regions(regions);
        CHECK(overall.raster.count() <= previous);
        CHECK(overall.raster.subset_of(regions.front().raster));
        previous = overall.raster.count();
    }
}

TEST_CASE("point picking") {
    const auto g = small_grid(9, 7);
    const Raster full(g, true);
    const auto centre = pick_point(full, PickStrategy::MaxClearance);
    CHECK(centre.i == 4);
    CHECK(centre.j == 3);
    const auto centroid = pick_point(full, PickStrategy::Centroid);
    CHECK(centroid.i == 4);
    CHECK(centroid.j == 3);

    Raster single(g);
    single.set(2, 5, true);
    for (auto strategy : {PickStrategy::Centroid, PickStrategy::MaxClearance}) {
        const auto p = pick_point(single, strategy);
        CHECK(p.i == 2);
        CHECK(p.j == 5);
        CHECK(p.p1 == g.p1_at(2));
        CHECK(p.p2 == g.p2_at(5));
    }
    CHECK(kind_of([&] { (void)pick_point(Raster(g), PickStrategy::Centroid); }) == ErrorKind::EmptyRegion);
}

TEST_CASE("membership oracle basics") {
    auto cfg = testing::afm_config();
    {
        auto empty_cfg = cfg;
        empty_cfg.rows.clear();
        empty_cfg.check_stability = false;
        const ProblemEvaluator ev(empty_cfg.problem());
        CHECK(membership_oracle(3e10, 3e5, ev).member);
    }
    const ProblemEvaluator ev(cfg.problem());
    // outside the box is an argument error
    CHECK(kind_of([&] { (void)membership_oracle(1e13, 3e5, ev); }) == ErrorKind::InvalidArgument);

    // a vanishing a0 all but switches the filter off, and the plant alone
    // cannot meet the first nominal-performance row
    auto wide = cfg;
    wide.selection.box.p1.lo = 1e-6;
    const ProblemEvaluator ev_wide(wide.problem());
    const auto report = membership_oracle(1e-6, 3e5, ev_wide);
    CHECK_FALSE(report.member);
    REQUIRE_FALSE(report.rows.empty());
    CHECK(report.rows.front().k == 1);
    CHECK_FALSE(report.rows.front().pass);
    const Complex G = testing::afm_plant_value(report.rows.front().omega);
    CHECK(report.rows.front().value == doctest::Approx(500.0 * std::abs(1.0 / (1.0 + G))).epsilon(1e-6));
}

TEST_CASE("single-weight reductions match the combined machinery cell for cell") {
    auto cfg = coarse_afm(24);
    // NP rows have wt = 0, RS rows ws = 0: the combined predicate must equal
    // the single-weight one exactly
    const ProblemEvaluator ev(cfg.problem());
    const auto g = cfg.grid();
    const auto& rows = ev.problem().schedule.rows;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Raster combined = rasterize(g, ev.row_predicate(r));
        if (rows[r].band == Band::NP) {
            CHECK(combined == rasterize(g, ev.np_predicate(r)));
        } else if (rows[r].band == Band::RS) {
            CHECK(combined == rasterize(g, ev.rs_predicate(r)));
        } else {
            // RP implies both single-weight conditions
            const Raster split = rasterize(g, ev.np_predicate(r)) & rasterize(g, ev.rs_predicate(r));
            CHECK(combined.subset_of(split));
        }
    }
}

TEST_CASE("row region raster matches the oracle and the traced curve") {
    auto cfg = coarse_afm(40);
    const ProblemEvaluator ev(cfg.problem());
    const auto g = cfg.grid();
    const SolutionRegion region = build_row_region(ev, 0, g, 512);
    REQUIRE(region.curve.has_value());
    CHECK_FALSE(region.curve->empty());
    for (std::size_t j = 0; j < g.ny; j += 3) {
        for (std::size_t i = 0; i < g.nx; i += 3) {
            const auto ctrl = ev.controller_at(g.p1_at(i), g.p2_at(j));
            bool holds = false;
            try {
                holds = ev.row_holds(0, ctrl);
            } catch (const Error&) {
            }
            CHECK(region.raster.at(i, j) == holds);
        }
    }
    const auto agreement = curve_side_agreement(region);
    CHECK(agreement.compared > 0);
    CHECK(agreement.fraction() >= 0.99);
}

TEST_CASE("region export round trip") {
    const auto g = small_grid(17, 11);
    std::mt19937_64 rng(9);
    std::bernoulli_distribution coin(0.4);
    Raster r(g);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            r.set(i, j, coin(rng));
        }
    }
    const auto region = raster_region(r, Band::NP, 12566.0);
    const std::string json = export_region(region, ExportFormat::Json, "abc");
    const Raster decoded = decode_region_json(json);
    CHECK(decoded == r);
    CHECK(decoded.count() == r.count());
    CHECK(json.find("abc") != std::string::npos);

    const std::string csv = export_region(region, ExportFormat::Csv, "abc", {"a0", "a1"});
    const auto lines = std::count(csv.begin(), csv.end(), '\n');
    CHECK(static_cast<std::size_t>(lines) == r.count() + 2);
    CHECK(csv.rfind("# config_sha256=abc", 0) == 0);

    const auto empty = raster_region(Raster(g), Band::RS);
    CHECK(decode_region_json(export_region(empty, ExportFormat::Json, "h")).count() == 0);
    const std::string svg = export_region(empty, ExportFormat::Svg, "h");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    CHECK(kind_of([] { (void)export_format_from_string("png"); }) == ErrorKind::UnsupportedFormat);
    CHECK(export_format_from_string("csv") == ExportFormat::Csv);
}

TEST_CASE("overall export has one layer per band plus the intersection") {
    const auto g = small_grid();
    const Raster a = rasterize(g, [](double p1, double) { return p1 > 2.0; });
    const Raster b = rasterize(g, [](double, double p2) { return p2 < 0.5; });
    const std::vector<SolutionRegion> regions{raster_region(a, Band::NP), raster_region(b, Band::RS),
                                              raster_region(a & b, Band::RP)};
    const auto overall = intersect_regions(regions);
    const std::string svg = export_overall(overall, regions, ExportFormat::Svg, "h");
    for (const char* id : {"band-NP", "band-RS", "band-RP", "intersection"}) {
        CHECK(svg.find(id) != std::string::npos);
    }
    CHECK(svg.find("band-STAB") == std::string::npos);
    CHECK(decode_region_json(export_overall(overall, regions, ExportFormat::Json, "h")) == overall.raster);
}
