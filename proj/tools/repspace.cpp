#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "repspace/commands.hpp"
#include "repspace/config.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out = ".";
    std::vector<double> point;
    std::vector<std::size_t> raster;
    std::size_t theta_res = 0;
    double dt = 0.0;
    std::string format;
};

void add_common(CLI::App* cmd, Flags& f, bool takes_point) {
    cmd->add_option("--config", f.config, "design configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--raster", f.raster, "raster resolution NX,NY")->delimiter(',')->expected(2);
    cmd->add_option("--theta-res", f.theta_res, "angle samples per point-condition curve");
    cmd->add_option("--dt", f.dt, "simulation step in seconds");
    cmd->add_option("--format", f.format, "only write artifacts of this format")
        ->check(CLI::IsMember({"json", "csv", "svg"}));
    if (takes_point) {
        cmd->add_option("--point", f.point, "design point P1,P2")->delimiter(',')->expected(2);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameter-space design of repetitive controllers"};
    app.require_subcommand(1);
    Flags flags;

    auto* map = app.add_subcommand("map", "compute solution regions and their intersection");
    auto* check = app.add_subcommand("check", "evaluate every design condition at one point");
    auto* bode = app.add_subcommand("bode", "plant magnitude and phase");
    auto* regen = app.add_subcommand("regen", "regeneration spectrum at a design point");
    auto* simulate = app.add_subcommand("simulate", "closed-loop time response at a design point");
    add_common(map, flags, false);
    add_common(check, flags, true);
    add_common(bode, flags, false);
    add_common(regen, flags, true);
    add_common(simulate, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : repspace::kExitError;
    }

    try {
        const repspace::DesignConfig config = repspace::load_config(flags.config);
        repspace::CommandOptions options;
        options.out_dir = flags.out;
        options.log = &std::cout;
        if (flags.point.size() == 2) {
            options.point = {flags.point[0], flags.point[1]};
        }
        if (flags.raster.size() == 2) {
            options.raster = {flags.raster[0], flags.raster[1]};
        }
        if (flags.theta_res > 0) {
            options.theta_resolution = flags.theta_res;
        }
        if (flags.dt > 0.0) {
            options.dt = flags.dt;
        }
        if (!flags.format.empty()) {
            options.format = repspace::export_format_from_string(flags.format);
        }

        if (map->parsed()) return repspace::cmd_map(config, options);
        if (check->parsed()) return repspace::cmd_check(config, options);
        if (bode->parsed()) return repspace::cmd_bode(config, options);
        if (regen->parsed()) return repspace::cmd_regen(config, options);
        if (simulate->parsed()) return repspace::cmd_simulate(config, options);
    } catch (const repspace::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind() == repspace::ErrorKind::EmptyRegion ? repspace::kExitEmpty : repspace::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return repspace::kExitError;
    }
    return repspace::kExitError;
}
