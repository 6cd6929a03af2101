#pragma once

#include <span>
#include <string>

#include "repspace/regions.hpp"
#include "repspace/sim.hpp"

namespace repspace {

enum class ExportFormat { Json, Csv, Svg };

// "json" | "csv" | "svg"; throws UnsupportedFormat.
[[nodiscard]] ExportFormat export_format_from_string(const std::string& name);
[[nodiscard]] const char* to_string(ExportFormat format) noexcept;

struct AxisLabels {
    std::string p1 = "p1";
    std::string p2 = "p2";
};

// One region: JSON carries the box, resolution, band, omega and the raster as
// run-length-encoded rows ([start, length] pairs of member cells); CSV lists
// member cell centres; SVG fills the member cells and draws the traced curve.
[[nodiscard]] std::string export_region(const SolutionRegion& region, ExportFormat format,
                                        const std::string& config_hash,
                                        const AxisLabels& labels = {});

// Overall region. The SVG has one layer per band (cellwise AND of that band's
// regions) followed by the intersection layer.
[[nodiscard]] std::string export_overall(const OverallRegion& overall,
                                         std::span<const SolutionRegion> regions,
                                         ExportFormat format, const std::string& config_hash,
                                         const AxisLabels& labels = {});

// Rebuilds the raster from a region or overall JSON export.
[[nodiscard]] Raster decode_region_json(const std::string& text);

// CSV with header t,reference,output,error,control; 17 significant digits.
[[nodiscard]] std::string export_trace_csv(const SimulationTrace& trace, const std::string& config_hash);

} // namespace repspace
