#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "repspace/config.hpp"
#include "repspace/export.hpp"
#include "repspace/regions.hpp"
#include "repspace/sim.hpp"

namespace repspace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitEmpty = 2;

struct CommandOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::array<double, 2>> point;
    std::optional<std::array<std::size_t, 2>> raster;
    std::optional<std::size_t> theta_resolution;
    std::optional<double> dt;
    // When set, only artifacts of this format are written.
    std::optional<ExportFormat> format;
    std::ostream* log = nullptr;
};

// Config with command-line overrides (raster, theta resolution, dt, point) applied.
[[nodiscard]] DesignConfig effective_config(const DesignConfig& config, const CommandOptions& options);

struct RowSummary {
    int k = 0;
    double omega = 0.0;
    Band band = Band::RP;
    std::size_t members = 0;
    bool has_curve = false;
    std::size_t curve_points = 0;
    std::size_t curve_loops = 0;
    std::size_t curve_skipped = 0;
    CurveAgreement agreement;
};

struct MapResult {
    std::vector<SolutionRegion> regions; // schedule rows, then STAB when enabled
    std::vector<RowSummary> rows;
    OverallRegion overall{Raster(RasterGrid{{}, 1, 1}), {}, false};
    std::optional<PickedPoint> max_clearance;
    std::optional<PickedPoint> centroid;
    std::vector<std::string> violated; // rows whose own region is empty
};

// Region computation without writing anything.
[[nodiscard]] MapResult compute_map(const DesignConfig& config);

// Design point: explicit point, else the config point, else the
// max-clearance pick of the overall region (throws EmptyRegion).
[[nodiscard]] std::array<double, 2> resolve_point(const DesignConfig& config);

struct SimulationRun {
    SimulationTrace trace;
    std::vector<PeriodMetrics> metrics;
    std::vector<PeriodMetrics> baseline; // repetitive loop disabled
};

[[nodiscard]] SimulationRun run_simulation(const DesignConfig& config, std::array<double, 2> point);

// Each command writes its artifacts under options.out_dir and returns the
// exit status: 0 success, 2 empty region / failing point, 1 error.
int cmd_map(const DesignConfig& config, const CommandOptions& options);
int cmd_check(const DesignConfig& config, const CommandOptions& options);
int cmd_bode(const DesignConfig& config, const CommandOptions& options);
int cmd_regen(const DesignConfig& config, const CommandOptions& options);
int cmd_simulate(const DesignConfig& config, const CommandOptions& options);

} // namespace repspace
