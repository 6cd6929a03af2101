#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "repspace/freqresp.hpp"
#include "repspace/pointcond.hpp"
#include "repspace/regions.hpp"
#include "repspace/repcon.hpp"
#include "repspace/sim.hpp"

namespace repspace {

inline constexpr std::string_view kConfigSchema = "repspace/1";

struct ResonantFactor {
    double f_hz = 0.0;
    double zeta = 0.0;

    friend bool operator==(const ResonantFactor&, const ResonantFactor&) = default;
};

// Plant as written in the file. The resonant form is
//   gain * prod(s^2 + 2 z w s + w^2 over zeros) / prod(same over poles), w = 2 pi f.
struct PlantSpec {
    enum class Form { Coefficients, Resonant };
    Form form = Form::Coefficients;
    std::vector<double> num{1.0};
    std::vector<double> den{1.0};
    double gain = 1.0;
    std::vector<ResonantFactor> zeros;
    std::vector<ResonantFactor> poles;
    double delay = 0.0;

    [[nodiscard]] TransferFunction expand() const;

    friend bool operator==(const PlantSpec&, const PlantSpec&) = default;
};

// A biquad section given either by its coefficients or by a controller kind.
struct SectionSpec {
    std::optional<ControllerKind> kind;
    ControllerParams params;
    BiquadSection coefficients;

    [[nodiscard]] BiquadSection section() const;
    friend bool operator==(const SectionSpec& a, const SectionSpec& b);
};

struct SimulationSettings {
    double dt = 0.0; // 0: tau_d / 5000
    std::size_t periods = 20;
    ReferenceSignal reference = ReferenceSignal::triangle(100.0, 0.0005);

    friend bool operator==(const SimulationSettings& a, const SimulationSettings& b) {
        return a.dt == b.dt && a.periods == b.periods && a.reference.kind == b.reference.kind &&
               a.reference.amplitude == b.reference.amplitude &&
               a.reference.period == b.reference.period;
    }
};

struct DesignConfig {
    std::string name;
    PlantSpec plant_spec;
    double tau_d = 0.0;
    double tau_q = 0.0;
    double tau_b = 0.0;
    std::vector<SectionSpec> qp;
    std::vector<SectionSpec> bp;
    ParameterSelection selection;
    std::array<std::string, 2> axis_labels{"p1", "p2"};
    std::optional<std::array<double, 2>> point;
    std::vector<WeightRow> rows; // omega derived from k and tau_d
    double epsilon = 0.05;
    bool check_stability = true;
    std::size_t stab_points = kDefaultStabGridSize;
    std::size_t raster_nx = kDefaultRasterResolution;
    std::size_t raster_ny = kDefaultRasterResolution;
    std::size_t theta_resolution = kDefaultThetaResolution;
    SimulationSettings simulation;

    [[nodiscard]] TransferFunction plant() const { return plant_spec.expand(); }
    [[nodiscard]] RepetitiveController controller() const;
    [[nodiscard]] WeightSchedule schedule() const;
    [[nodiscard]] DesignProblem problem() const;
    [[nodiscard]] RasterGrid grid() const;
    [[nodiscard]] double sim_dt() const;
};

// Throws ParseError (with line and column) or ValidationError (with the
// field path).
[[nodiscard]] DesignConfig parse_config(std::string_view text);
// Also throws IoError.
[[nodiscard]] DesignConfig load_config(const std::filesystem::path& path);

// Canonical JSON text; parse_config(serialize_config(c)) reproduces c.
[[nodiscard]] std::string serialize_config(const DesignConfig& config);
// SHA-256 (hex) of the canonical serialization.
[[nodiscard]] std::string config_hash(const DesignConfig& config);
[[nodiscard]] std::string sha256_hex(std::string_view data);

} // namespace repspace
