#include "repspace/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "repspace/svg.hpp"

namespace repspace {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void write_file(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path path = dir / name;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorKind::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
}

bool wants(const CommandOptions& options, ExportFormat format, bool by_default) {
    return options.format ? *options.format == format : by_default;
}

void say(const CommandOptions& options, const std::string& line) {
    if (options.log) {
        *options.log << line << '\n';
    }
}

Json picked_json(const PickedPoint& p) {
    return Json{{"p1", p.p1}, {"p2", p.p2}, {"i", p.i}, {"j", p.j}, {"clearance", p.clearance}};
}

std::string region_name(const SolutionRegion& region) {
    if (region.band == Band::STAB) {
        return "stab";
    }
    return "omega_" + std::to_string(region.k) + "_" + std::string(to_string(region.band));
}

std::string csv_row(std::initializer_list<double> values) {
    std::string line;
    bool first = true;
    for (double v : values) {
        if (!first) {
            line += ',';
        }
        line += format_double(v);
        first = false;
    }
    return line + '\n';
}

// Positive finite range of several series, padded a little for plotting.
std::pair<double, double> positive_range(std::initializer_list<const std::vector<double>*> series) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto* s : series) {
        for (double v : *s) {
            if (std::isfinite(v) && v > 0.0) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (!(hi > 0.0)) {
        return {1e-3, 1.0};
    }
    if (lo == hi) {
        return {lo / 10.0, hi * 10.0};
    }
    return {lo / 2.0, hi * 2.0};
}

AxisLabels labels_of(const DesignConfig& config) {
    return {config.axis_labels[0], config.axis_labels[1]};
}

RegenCheck regen_at(const DesignConfig& config, const RepetitiveController& ctrl) {
    const auto grid = default_stab_grid(config.schedule(), config.tau_d, config.stab_points);
    return regen_stability_check(config.plant(), ctrl, grid, config.epsilon);
}

Json regen_json(const RegenCheck& r) {
    return Json{{"pass", r.pass},
                {"worst_omega", r.worst_omega},
                {"worst_value", r.worst_value},
                {"margin", r.margin}};
}

Json metrics_json(const std::vector<PeriodMetrics>& metrics) {
    Json out = Json::array();
    for (const auto& m : metrics) {
        out.push_back(Json{{"period", m.period}, {"rms_error", m.rms_error}, {"peak_error", m.peak_error}});
    }
    return out;
}

} // namespace

DesignConfig effective_config(const DesignConfig& config, const CommandOptions& options) {
    DesignConfig c = config;
    if (options.raster) {
        if ((*options.raster)[0] < 2 || (*options.raster)[1] < 2) {
            throw Error(ErrorKind::InvalidArgument, "--raster needs at least 2x2 cells");
        }
        c.raster_nx = (*options.raster)[0];
        c.raster_ny = (*options.raster)[1];
    }
    if (options.theta_resolution) {
        if (*options.theta_resolution < 16) {
            throw Error(ErrorKind::InvalidArgument, "--theta-res must be at least 16");
        }
        c.theta_resolution = *options.theta_resolution;
    }
    if (options.dt) {
        if (!(*options.dt > 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "--dt must be positive");
        }
        c.simulation.dt = *options.dt;
    }
    if (options.point) {
        c.point = options.point;
    }
    return c;
}

MapResult compute_map(const DesignConfig& config) {
    const ProblemEvaluator evaluator(config.problem());
    const RasterGrid grid = config.grid();
    MapResult result;
    const auto& rows = evaluator.problem().schedule.rows;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        SolutionRegion region = build_row_region(evaluator, r, grid, config.theta_resolution);
        RowSummary s;
        s.k = region.k;
        s.omega = region.omega;
        s.band = region.band;
        s.members = region.raster.count();
        if (region.curve && !region.curve->empty()) {
            s.has_curve = true;
            s.curve_points = region.curve->points.size();
            s.curve_loops = region.curve->loops().size();
            s.curve_skipped = region.curve->skipped;
            s.agreement = curve_side_agreement(region);
        }
        if (s.members == 0) {
            std::ostringstream name;
            name << "k=" << region.k << " (omega=" << region.omega << " rad/s, " << to_string(region.band) << ")";
            result.violated.push_back(name.str());
        }
        result.rows.push_back(s);
        result.regions.push_back(std::move(region));
    }
    if (config.check_stability) {
        result.regions.push_back(build_stab_region(evaluator, grid));
        if (!result.regions.back().raster.any()) {
            result.violated.emplace_back("regeneration condition");
        }
    }
    if (result.regions.empty()) {
        result.overall.raster = Raster(grid, true);
        result.overall.nonempty = true;
    } else {
        result.overall = intersect_regions(result.regions);
    }
    if (result.overall.nonempty) {
        result.max_clearance = pick_point(result.overall, PickStrategy::MaxClearance);
        result.centroid = pick_point(result.overall, PickStrategy::Centroid);
    }
    return result;
}

std::array<double, 2> resolve_point(const DesignConfig& config) {
    if (config.point) {
        return *config.point;
    }
    const MapResult map = compute_map(config);
    if (!map.max_clearance) {
        throw Error(ErrorKind::EmptyRegion, "no design point: the overall solution region is empty");
    }
    return {map.max_clearance->p1, map.max_clearance->p2};
}

SimulationRun run_simulation(const DesignConfig& config, std::array<double, 2> point) {
    const RepetitiveController ctrl =
        apply_parameters(config.controller(), config.selection, point[0], point[1]);
    const TransferFunction plant = config.plant();
    const auto& ref = config.simulation.reference;
    const double duration = static_cast<double>(config.simulation.periods) * config.tau_d;
    const double period = ref.kind == ReferenceSignal::Kind::Zero ? config.tau_d : ref.period;

    SimulationRun run;
    run.trace = simulate(plant, ctrl, ref, duration, config.sim_dt());
    run.metrics = per_period_error_metrics(run.trace, period);

    RepetitiveController off = ctrl;
    off.qp_sections = {BiquadSection::zero()};
    try {
        const SimulationTrace baseline = simulate(plant, off, ref, duration, config.sim_dt());
        run.baseline = per_period_error_metrics(baseline, period);
    } catch (const UnstableSimulation&) {
        run.baseline.clear();
    }
    return run;
}

int cmd_map(const DesignConfig& config_in, const CommandOptions& options) {
    const DesignConfig config = effective_config(config_in, options);
    const std::string hash = config_hash(config);
    const AxisLabels labels = labels_of(config);
    const MapResult map = compute_map(config);
    const fs::path& out = options.out_dir;

    for (const auto& region : map.regions) {
        const std::string base = "regions/" + region_name(region);
        if (wants(options, ExportFormat::Json, true)) {
            write_file(out, base + ".json", export_region(region, ExportFormat::Json, hash, labels));
        }
        if (wants(options, ExportFormat::Svg, true)) {
            write_file(out, base + ".svg", export_region(region, ExportFormat::Svg, hash, labels));
        }
        if (wants(options, ExportFormat::Csv, false)) {
            write_file(out, base + ".csv", export_region(region, ExportFormat::Csv, hash, labels));
        }
    }
    for (ExportFormat f : {ExportFormat::Json, ExportFormat::Csv, ExportFormat::Svg}) {
        if (wants(options, f, true)) {
            write_file(out, std::string("overall.") + to_string(f),
                       export_overall(map.overall, map.regions, f, hash, labels));
        }
    }

    Json summary;
    summary["config_sha256"] = hash;
    summary["nonempty"] = map.overall.nonempty;
    summary["overall_members"] = map.overall.raster.count();
    summary["resolution"] = Json::array({config.raster_nx, config.raster_ny});
    summary["theta_resolution"] = config.theta_resolution;
    Json rows = Json::array();
    for (const auto& r : map.rows) {
        Json row{{"k", r.k}, {"omega", r.omega}, {"band", std::string(to_string(r.band))},
                 {"members", r.members}};
        if (r.has_curve) {
            row["curve"] = Json{{"points", r.curve_points},
                                {"loops", r.curve_loops},
                                {"skipped", r.curve_skipped},
                                {"compared_cells", r.agreement.compared},
                                {"agreeing_cells", r.agreement.agreeing},
                                {"agreement", r.agreement.fraction()}};
        } else {
            row["curve"] = nullptr;
        }
        rows.push_back(std::move(row));
    }
    summary["rows"] = std::move(rows);
    if (config.check_stability) {
        summary["stab_members"] = map.regions.back().raster.count();
    }
    summary["violated"] = map.violated;
    Json picks = Json::object();
    if (map.max_clearance) {
        picks["max_clearance"] = picked_json(*map.max_clearance);
    }
    if (map.centroid) {
        picks["centroid"] = picked_json(*map.centroid);
    }
    summary["picks"] = std::move(picks);
    write_file(out, "summary.json", summary.dump(2) + "\n");

    if (!map.overall.nonempty) {
        std::string names;
        for (const auto& v : map.violated) {
            names += (names.empty() ? "" : ", ") + v;
        }
        say(options, "no solution points: overall region is empty" +
                         (names.empty() ? std::string(" (every row is individually satisfiable)")
                                        : "; empty rows: " + names));
        return kExitEmpty;
    }
    std::ostringstream msg;
    msg << "overall region: " << map.overall.raster.count() << " of "
        << config.raster_nx * config.raster_ny << " cells";
    if (map.max_clearance) {
        msg << "; max-clearance pick (" << map.max_clearance->p1 << ", " << map.max_clearance->p2 << ")";
    }
    say(options, msg.str());
    return kExitOk;
}

int cmd_check(const DesignConfig& config_in, const CommandOptions& options) {
    const DesignConfig config = effective_config(config_in, options);
    const std::string hash = config_hash(config);
    const auto point = resolve_point(config);
    const ProblemEvaluator evaluator(config.problem());
    const MembershipReport report = membership_oracle(point[0], point[1], evaluator);
    const RepetitiveController ctrl = evaluator.controller_at(point[0], point[1]);
    const TransferFunction plant = config.plant();

    auto sensitivities = [&](double omega) -> std::pair<double, double> {
        try {
            const Complex L = loop_gain(plant, ctrl, omega);
            return {std::abs(sensitivity_from_loop(L)), std::abs(comp_sensitivity_from_loop(L))};
        } catch (const Error&) {
            return {std::nan(""), std::nan("")};
        }
    };

    Json out;
    out["config_sha256"] = hash;
    out["point"] = Json::array({point[0], point[1]});
    out["member"] = report.member;
    Json rows = Json::array();
    const auto& sched = evaluator.problem().schedule.rows;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const auto& v = report.rows[i];
        const auto [s, t] = sensitivities(v.omega);
        Json row{{"k", v.k},   {"omega", v.omega}, {"band", std::string(to_string(v.band))},
                 {"ws", sched[i].ws}, {"wt", sched[i].wt}, {"value", v.value},
                 {"pass", v.pass}, {"abs_S", s},       {"abs_T", t}};
        if (!v.diagnostic.empty()) {
            row["diagnostic"] = v.diagnostic;
        }
        rows.push_back(std::move(row));
    }
    out["rows"] = std::move(rows);
    const RegenCheck regen = regen_at(config, ctrl);
    out["regen"] = regen_json(regen);
    if (!report.diagnostic.empty()) {
        out["diagnostic"] = report.diagnostic;
    }
    if (wants(options, ExportFormat::Json, true)) {
        write_file(options.out_dir, "check.json", out.dump(2) + "\n");
    }

    const auto grid = default_stab_grid(config.schedule(), config.tau_d, 2000);
    std::vector<double> f, abs_s, abs_t, regen_values;
    std::string csv = "# config_sha256=" + hash + "\nomega,f_hz,abs_S,abs_T,R\n";
    for (double w : grid) {
        const auto [s, t] = sensitivities(w);
        double r = std::nan("");
        try {
            r = regeneration_spectrum(plant, ctrl, w);
        } catch (const Error&) {
        }
        f.push_back(w / kTwoPi);
        abs_s.push_back(s);
        abs_t.push_back(t);
        regen_values.push_back(r);
        csv += csv_row({w, w / kTwoPi, s, t, r});
    }
    if (wants(options, ExportFormat::Csv, true)) {
        write_file(options.out_dir, "envelopes.csv", csv);
    }
    if (wants(options, ExportFormat::Svg, true)) {
        const auto [lo, hi] = positive_range({&abs_s, &abs_t, &regen_values});
        SvgPlot plot({f.front(), f.back(), true, "frequency [Hz]"}, {lo, hi, true, "magnitude"},
                     "sensitivity envelopes");
        plot.polyline(f, abs_s, "#1f77b4", "|S|");
        plot.polyline(f, abs_t, "#d62728", "|T|");
        plot.polyline(f, regen_values, "#2ca02c", "R");
        write_file(options.out_dir, "envelopes.svg", plot.render());
    }

    std::ostringstream msg;
    msg << "point (" << point[0] << ", " << point[1] << "): " << (report.member ? "member" : "not a member");
    for (const auto& v : report.rows) {
        if (!v.pass) {
            msg << "\n  fails k=" << v.k << " " << to_string(v.band) << " value=" << v.value;
        }
    }
    msg << "\n  regeneration: worst R=" << regen.worst_value << " at omega=" << regen.worst_omega
        << " (margin " << regen.margin << ")";
    say(options, msg.str());
    return report.member ? kExitOk : kExitEmpty;
}

int cmd_bode(const DesignConfig& config_in, const CommandOptions& options) {
    const DesignConfig config = effective_config(config_in, options);
    const std::string hash = config_hash(config);
    const TransferFunction plant = config.plant();
    std::vector<double> omegas = log_space(kTwoPi * 0.1 / config.tau_d, kTwoPi * 1000.0 / config.tau_d, 4000);
    const auto bode = bode_grid(plant, omegas);

    std::vector<double> f, db;
    std::string csv = "# config_sha256=" + hash + "\nf_hz,omega,magnitude,magnitude_db,phase_deg\n";
    for (const auto& p : bode) {
        f.push_back(p.omega / kTwoPi);
        db.push_back(20.0 * std::log10(p.magnitude));
        csv += csv_row({p.omega / kTwoPi, p.omega, p.magnitude, db.back(), p.phase * 180.0 / std::numbers::pi});
    }
    Json peaks = Json::array();
    for (std::size_t i = 1; i + 1 < bode.size(); ++i) {
        if (bode[i].magnitude > bode[i - 1].magnitude && bode[i].magnitude >= bode[i + 1].magnitude) {
            peaks.push_back(Json{{"f_hz", f[i]}, {"magnitude", bode[i].magnitude}});
        }
    }
    Json marks = Json::array();
    for (const auto& r : config.rows) {
        marks.push_back(Json{{"k", r.k}, {"f_hz", r.omega / kTwoPi}, {"band", std::string(to_string(r.band))}});
    }
    Json out{{"config_sha256", hash},
             {"dc_magnitude", std::abs(eval_tf(plant, 0.0))},
             {"peaks", std::move(peaks)},
             {"mapping_frequencies", std::move(marks)}};

    if (wants(options, ExportFormat::Csv, true)) {
        write_file(options.out_dir, "bode.csv", csv);
    }
    if (wants(options, ExportFormat::Json, true)) {
        write_file(options.out_dir, "bode.json", out.dump(2) + "\n");
    }
    if (wants(options, ExportFormat::Svg, true)) {
        double lo = *std::min_element(db.begin(), db.end());
        double hi = *std::max_element(db.begin(), db.end());
        if (hi - lo < 1.0) {
            lo -= 10.0;
            hi += 10.0;
        }
        SvgPlot plot({f.front(), f.back(), true, "frequency [Hz]"}, {lo, hi, false, "magnitude [dB]"},
                     "plant magnitude");
        plot.polyline(f, db, "#000000", "|G|");
        for (const auto& r : config.rows) {
            const double fr = r.omega / kTwoPi;
            const std::vector<double> x{fr, fr};
            const std::vector<double> y{lo, hi};
            const char* color = r.band == Band::NP ? "#1f77b4" : r.band == Band::RP ? "#ff7f0e" : "#9467bd";
            plot.polyline(x, y, color, "");
        }
        write_file(options.out_dir, "bode.svg", plot.render());
    }
    say(options, "bode: " + std::to_string(bode.size()) + " points");
    return kExitOk;
}

int cmd_regen(const DesignConfig& config_in, const CommandOptions& options) {
    const DesignConfig config = effective_config(config_in, options);
    const std::string hash = config_hash(config);
    const auto point = resolve_point(config);
    const RepetitiveController ctrl =
        apply_parameters(config.controller(), config.selection, point[0], point[1]);
    const TransferFunction plant = config.plant();
    const RegenCheck check = regen_at(config, ctrl);

    const auto grid = default_stab_grid(config.schedule(), config.tau_d, 2000);
    std::vector<double> f, values;
    std::string csv = "# config_sha256=" + hash + "\nomega,f_hz,R\n";
    for (double w : grid) {
        double r = std::nan("");
        try {
            r = regeneration_spectrum(plant, ctrl, w);
        } catch (const Error&) {
        }
        f.push_back(w / kTwoPi);
        values.push_back(r);
        csv += csv_row({w, w / kTwoPi, r});
    }
    Json out{{"config_sha256", hash},
             {"point", Json::array({point[0], point[1]})},
             {"epsilon", config.epsilon},
             {"check", regen_json(check)}};
    if (wants(options, ExportFormat::Csv, true)) {
        write_file(options.out_dir, "regen.csv", csv);
    }
    if (wants(options, ExportFormat::Json, true)) {
        write_file(options.out_dir, "regen.json", out.dump(2) + "\n");
    }
    if (wants(options, ExportFormat::Svg, true)) {
        double hi = 1.0;
        for (double v : values) {
            if (std::isfinite(v)) {
                hi = std::max(hi, v);
            }
        }
        SvgPlot plot({f.front(), f.back(), true, "frequency [Hz]"}, {0.0, hi * 1.1, false, "R"},
                     "regeneration spectrum");
        plot.polyline(f, values, "#2ca02c", "R");
        const std::vector<double> x{f.front(), f.back()};
        const std::vector<double> y{1.0 - config.epsilon, 1.0 - config.epsilon};
        plot.polyline(x, y, "#d62728", "1 - epsilon");
        write_file(options.out_dir, "regen.svg", plot.render());
    }
    std::ostringstream msg;
    msg << "regeneration check " << (check.pass ? "passes" : "fails") << ": worst R=" << check.worst_value
        << " at omega=" << check.worst_omega << " (margin " << check.margin << ")";
    say(options, msg.str());
    return check.pass ? kExitOk : kExitEmpty;
}

int cmd_simulate(const DesignConfig& config_in, const CommandOptions& options) {
    const DesignConfig config = effective_config(config_in, options);
    const std::string hash = config_hash(config);
    const auto point = resolve_point(config);
    SimulationRun run;
    try {
        run = run_simulation(config, point);
    } catch (const UnstableSimulation& e) {
        if (wants(options, ExportFormat::Csv, true)) {
            write_file(options.out_dir, "trace.csv", export_trace_csv(e.partial(), hash));
        }
        throw;
    }
    const auto& trace = run.trace;

    Json out;
    out["config_sha256"] = hash;
    out["point"] = Json::array({point[0], point[1]});
    out["dt"] = trace.dt;
    out["samples"] = trace.size();
    out["metrics"] = metrics_json(run.metrics);
    out["baseline_metrics"] = metrics_json(run.baseline);
    if (!run.baseline.empty() && run.metrics.back().peak_error > 0.0) {
        out["peak_error_reduction"] = run.baseline.back().peak_error / run.metrics.back().peak_error;
    }
    if (wants(options, ExportFormat::Json, true)) {
        write_file(options.out_dir, "metrics.json", out.dump(2) + "\n");
    }
    if (wants(options, ExportFormat::Csv, true)) {
        write_file(options.out_dir, "trace.csv", export_trace_csv(trace, hash));
    }
    if (wants(options, ExportFormat::Svg, true)) {
        const std::size_t stride = std::max<std::size_t>(1, trace.size() / 4000);
        std::vector<double> t, r, y, e;
        for (std::size_t k = 0; k < trace.size(); k += stride) {
            t.push_back(trace.time(k));
            r.push_back(trace.reference[k]);
            y.push_back(trace.output[k]);
            e.push_back(trace.error[k]);
        }
        double amp = 0.0;
        for (double v : y) {
            amp = std::max(amp, std::abs(v));
        }
        for (double v : r) {
            amp = std::max(amp, std::abs(v));
        }
        amp = amp > 0.0 ? amp * 1.1 : 1.0;
        SvgPlot tracking({t.front(), t.back(), false, "time [s]"}, {-amp, amp, false, "signal"},
                         "tracking");
        tracking.polyline(t, r, "#7f7f7f", "reference");
        tracking.polyline(t, y, "#1f77b4", "output");
        write_file(options.out_dir, "trace.svg", tracking.render());

        double eamp = 0.0;
        for (double v : e) {
            eamp = std::max(eamp, std::abs(v));
        }
        eamp = eamp > 0.0 ? eamp * 1.1 : 1.0;
        SvgPlot error_plot({t.front(), t.back(), false, "time [s]"}, {-eamp, eamp, false, "error"},
                           "tracking error");
        error_plot.polyline(t, e, "#d62728", "error");
        write_file(options.out_dir, "error.svg", error_plot.render());
    }
    std::ostringstream msg;
    msg << "simulated " << trace.size() << " samples at dt=" << trace.dt << "; peak error first period "
        << run.metrics.front().peak_error << ", last period " << run.metrics.back().peak_error;
    if (!run.baseline.empty()) {
        msg << " (without repetitive loop " << run.baseline.back().peak_error << ")";
    }
    say(options, msg.str());
    return kExitOk;
}

} // namespace repspace
