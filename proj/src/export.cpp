#include "repspace/export.hpp"

#include <map>
#include <sstream>

#include "json.hpp"

#include "repspace/svg.hpp"

namespace repspace {

namespace {

using Json = nlohmann::ordered_json;

const char* band_color(Band band) {
    switch (band) {
    case Band::NP: return "#1f77b4";
    case Band::RP: return "#ff7f0e";
    case Band::RS: return "#9467bd";
    case Band::STAB: return "#7f7f7f";
    }
    return "#000000";
}

constexpr const char* kIntersectionColor = "#2ca02c";

Json axis_json(const Axis& a) {
    return Json{{"lo", a.lo}, {"hi", a.hi}, {"log", a.log}};
}

Axis axis_from_json(const Json& j) {
    return {j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("log").get<bool>()};
}

Json raster_json(const Raster& raster) {
    const auto& g = raster.grid();
    Json rows = Json::array();
    for (std::size_t j = 0; j < g.ny; ++j) {
        Json runs = Json::array();
        std::size_t i = 0;
        while (i < g.nx) {
            if (!raster.at(i, j)) {
                ++i;
                continue;
            }
            const std::size_t start = i;
            while (i < g.nx && raster.at(i, j)) {
                ++i;
            }
            runs.push_back(Json::array({start, i - start}));
        }
        rows.push_back(std::move(runs));
    }
    Json out;
    out["box"] = Json{{"p1", axis_json(g.box.p1)}, {"p2", axis_json(g.box.p2)}};
    out["resolution"] = Json::array({g.nx, g.ny});
    out["members"] = raster.count();
    out["rows"] = std::move(rows);
    return out;
}

std::string members_csv(const Raster& raster, const std::string& hash, const AxisLabels& labels) {
    const auto& g = raster.grid();
    std::ostringstream out;
    out << "# config_sha256=" << hash << "\n";
    out << labels.p1 << "," << labels.p2 << "\n";
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (raster.at(i, j)) {
                out << format_double(g.p1_at(i)) << "," << format_double(g.p2_at(j)) << "\n";
            }
        }
    }
    return out.str();
}

void fill_raster(SvgPlot& plot, const Raster& raster) {
    const auto& g = raster.grid();
    const double nx = static_cast<double>(g.nx);
    const double ny = static_cast<double>(g.ny);
    for (std::size_t j = 0; j < g.ny; ++j) {
        std::size_t i = 0;
        while (i < g.nx) {
            if (!raster.at(i, j)) {
                ++i;
                continue;
            }
            const std::size_t start = i;
            while (i < g.nx && raster.at(i, j)) {
                ++i;
            }
            plot.rect_fraction(static_cast<double>(start) / nx, static_cast<double>(i) / nx,
                               static_cast<double>(j) / ny, static_cast<double>(j + 1) / ny);
        }
    }
}

SvgPlot plot_for(const RasterGrid& g, const std::string& title, const AxisLabels& labels) {
    return SvgPlot({g.box.p1.lo, g.box.p1.hi, g.box.p1.log, labels.p1},
                   {g.box.p2.lo, g.box.p2.hi, g.box.p2.log, labels.p2}, title);
}

std::string hash_comment(const std::string& hash) {
    return "<!-- config_sha256=" + hash + " -->\n";
}

std::string with_svg_comment(const std::string& svg, const std::string& hash) {
    // Keep the comment after the root element opens so the file stays valid XML.
    const auto pos = svg.find('\n');
    return svg.substr(0, pos + 1) + hash_comment(hash) + svg.substr(pos + 1);
}

std::string region_title(const SolutionRegion& region) {
    std::ostringstream t;
    t << to_string(region.band);
    if (region.k > 0) {
        t << " k=" << region.k;
    }
    if (region.omega > 0.0) {
        t << " omega=" << region.omega << " rad/s";
    }
    return t.str();
}

} // namespace

ExportFormat export_format_from_string(const std::string& name) {
    if (name == "json") return ExportFormat::Json;
    if (name == "csv") return ExportFormat::Csv;
    if (name == "svg") return ExportFormat::Svg;
    throw Error(ErrorKind::UnsupportedFormat, "unknown export format '" + name + "'");
}

const char* to_string(ExportFormat format) noexcept {
    switch (format) {
    case ExportFormat::Json: return "json";
    case ExportFormat::Csv: return "csv";
    case ExportFormat::Svg: return "svg";
    }
    return "?";
}

std::string export_region(const SolutionRegion& region, ExportFormat format,
                          const std::string& config_hash, const AxisLabels& labels) {
    switch (format) {
    case ExportFormat::Json: {
        Json out;
        out["config_sha256"] = config_hash;
        out["band"] = std::string(to_string(region.band));
        out["k"] = region.k;
        out["omega"] = region.omega;
        out["side"] = to_string(region.side);
        out["curve_points"] = region.curve ? region.curve->points.size() : 0;
        out.update(raster_json(region.raster));
        return out.dump(1) + "\n";
    }
    case ExportFormat::Csv:
        return members_csv(region.raster, config_hash, labels);
    case ExportFormat::Svg: {
        SvgPlot plot = plot_for(region.raster.grid(), region_title(region), labels);
        plot.begin_layer("region", band_color(region.band), 0.6, "solution region");
        fill_raster(plot, region.raster);
        if (region.curve) {
            std::size_t n = 0;
            for (const auto& loop : region.curve->loops()) {
                std::vector<double> x, y;
                for (const auto& p : loop) {
                    x.push_back(p.p1);
                    y.push_back(p.p2);
                }
                plot.polyline(x, y, "#000000", n++ == 0 ? "point-condition curve" : "");
            }
        }
        return with_svg_comment(plot.render(), config_hash);
    }
    }
    throw Error(ErrorKind::UnsupportedFormat, "unknown export format");
}

std::string export_overall(const OverallRegion& overall, std::span<const SolutionRegion> regions,
                           ExportFormat format, const std::string& config_hash,
                           const AxisLabels& labels) {
    switch (format) {
    case ExportFormat::Json: {
        Json out;
        out["config_sha256"] = config_hash;
        out["band"] = "overall";
        out["nonempty"] = overall.nonempty;
        Json contributing = Json::array();
        for (const auto& [omega, band] : overall.contributing) {
            contributing.push_back(Json{{"omega", omega}, {"band", std::string(to_string(band))}});
        }
        out["contributing"] = std::move(contributing);
        out.update(raster_json(overall.raster));
        return out.dump(1) + "\n";
    }
    case ExportFormat::Csv:
        return members_csv(overall.raster, config_hash, labels);
    case ExportFormat::Svg: {
        SvgPlot plot = plot_for(overall.raster.grid(), "overall solution region", labels);
        std::map<Band, Raster> per_band;
        for (const auto& region : regions) {
            auto it = per_band.find(region.band);
            if (it == per_band.end()) {
                per_band.emplace(region.band, region.raster);
            } else {
                it->second = it->second & region.raster;
            }
        }
        for (const auto& [band, raster] : per_band) {
            const std::string name(to_string(band));
            plot.begin_layer("band-" + name, band_color(band), 0.25, name + " rows");
            fill_raster(plot, raster);
        }
        plot.begin_layer("intersection", kIntersectionColor, 0.9, "intersection");
        fill_raster(plot, overall.raster);
        return with_svg_comment(plot.render(), config_hash);
    }
    }
    throw Error(ErrorKind::UnsupportedFormat, "unknown export format");
}

Raster decode_region_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    RasterGrid grid;
    grid.box.p1 = axis_from_json(j.at("box").at("p1"));
    grid.box.p2 = axis_from_json(j.at("box").at("p2"));
    grid.nx = j.at("resolution").at(0).get<std::size_t>();
    grid.ny = j.at("resolution").at(1).get<std::size_t>();
    Raster raster(grid);
    const auto& rows = j.at("rows");
    if (rows.size() != grid.ny) {
        throw Error(ErrorKind::ParseError, "row count does not match resolution");
    }
    for (std::size_t r = 0; r < grid.ny; ++r) {
        for (const auto& run : rows[r]) {
            const auto start = run.at(0).get<std::size_t>();
            const auto length = run.at(1).get<std::size_t>();
            if (start + length > grid.nx) {
                throw Error(ErrorKind::ParseError, "run exceeds row width");
            }
            for (std::size_t i = start; i < start + length; ++i) {
                raster.set(i, r, true);
            }
        }
    }
    return raster;
}

std::string export_trace_csv(const SimulationTrace& trace, const std::string& config_hash) {
    std::string out = "# config_sha256=" + config_hash + "\n";
    out += "t,reference,output,error,control\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        out += format_double(trace.time(k));
        out += ',';
        out += format_double(trace.reference[k]);
        out += ',';
        out += format_double(trace.output[k]);
        out += ',';
        out += format_double(trace.error[k]);
        out += ',';
        out += format_double(trace.control[k]);
        out += '\n';
    }
    return out;
}

} // namespace repspace
