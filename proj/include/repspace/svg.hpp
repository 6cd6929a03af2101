#pragma once

#include <span>
#include <string>
#include <vector>

namespace repspace {

struct SvgAxis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;
    std::string label;
};

// Minimal deterministic plot: axes frame with tick labels, filled layers,
// polylines and a legend. Elements render in insertion order.
class SvgPlot {
public:
    SvgPlot(SvgAxis x, SvgAxis y, std::string title, double width = 720.0, double height = 540.0);

    // Starts a named group; subsequent rects go into it until the next layer.
    void begin_layer(const std::string& id, const std::string& color, double opacity,
                     const std::string& label);
    // Rectangle in axis fractions (0..1 along each axis, y upwards).
    void rect_fraction(double fx0, double fx1, double fy0, double fy1);

    // Non-finite points (or non-positive on a log axis) break the line.
    void polyline(std::span<const double> x, std::span<const double> y, const std::string& color,
                  const std::string& label);

    [[nodiscard]] std::string render() const;

private:
    struct Layer {
        std::string id;
        std::string color;
        double opacity;
        std::string label;
        std::string path;
        bool is_line;
    };

    [[nodiscard]] double px(double fx) const noexcept;
    [[nodiscard]] double py(double fy) const noexcept;
    [[nodiscard]] double fraction(const SvgAxis& axis, double v) const noexcept;

    SvgAxis x_;
    SvgAxis y_;
    std::string title_;
    double width_;
    double height_;
    std::vector<Layer> layers_;
};

// 17 significant digits, enough to read back the same double.
[[nodiscard]] std::string format_double(double v);

} // namespace repspace
