#include "repspace/svg.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace repspace {

namespace {

constexpr double kMarginLeft = 80.0;
constexpr double kMarginRight = 150.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 60.0;

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

SvgPlot::SvgPlot(SvgAxis x, SvgAxis y, std::string title, double width, double height)
    : x_(std::move(x)), y_(std::move(y)), title_(std::move(title)), width_(width), height_(height) {}

double SvgPlot::px(double fx) const noexcept {
    return kMarginLeft + fx * (width_ - kMarginLeft - kMarginRight);
}

double SvgPlot::py(double fy) const noexcept {
    return height_ - kMarginBottom - fy * (height_ - kMarginTop - kMarginBottom);
}

double SvgPlot::fraction(const SvgAxis& axis, double v) const noexcept {
    if (axis.log) {
        if (!(v > 0.0) || !(axis.lo > 0.0)) {
            return std::nan("");
        }
        return (std::log10(v) - std::log10(axis.lo)) / (std::log10(axis.hi) - std::log10(axis.lo));
    }
    return (v - axis.lo) / (axis.hi - axis.lo);
}

void SvgPlot::begin_layer(const std::string& id, const std::string& color, double opacity,
                          const std::string& label) {
    layers_.push_back({id, color, opacity, label, {}, false});
}

void SvgPlot::rect_fraction(double fx0, double fx1, double fy0, double fy1) {
    if (layers_.empty() || layers_.back().is_line) {
        begin_layer("layer" + std::to_string(layers_.size()), "#888888", 0.5, "");
    }
    auto& path = layers_.back().path;
    path += "M" + fixed(px(fx0)) + " " + fixed(py(fy0)) + "H" + fixed(px(fx1)) + "V" +
            fixed(py(fy1)) + "H" + fixed(px(fx0)) + "Z";
}

void SvgPlot::polyline(std::span<const double> x, std::span<const double> y, const std::string& color,
                       const std::string& label) {
    Layer layer{"line" + std::to_string(layers_.size()), color, 1.0, label, {}, true};
    bool pen_down = false;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        const double fx = fraction(x_, x[i]);
        const double fy = fraction(y_, y[i]);
        if (!std::isfinite(fx) || !std::isfinite(fy)) {
            pen_down = false;
            continue;
        }
        layer.path += (pen_down ? "L" : "M") + fixed(px(fx)) + " " + fixed(py(fy));
        pen_down = true;
    }
    layers_.push_back(std::move(layer));
}

std::string SvgPlot::render() const {
    std::ostringstream out;
    const double x0 = px(0.0), x1 = px(1.0), y0 = py(0.0), y1 = py(1.0);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width_) << "\" height=\""
        << fixed(height_) << "\" viewBox=\"0 0 " << fixed(width_) << " " << fixed(height_) << "\">\n";
    out << "<defs><clipPath id=\"plot-area\"><rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y1)
        << "\" width=\"" << fixed(x1 - x0) << "\" height=\"" << fixed(y0 - y1)
        << "\"/></clipPath></defs>\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << fixed(width_ / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title_) << "</text>\n";

    out << "<g id=\"layers\" clip-path=\"url(#plot-area)\">\n";
    for (const auto& layer : layers_) {
        out << "<g id=\"" << escape(layer.id) << "\">";
        if (!layer.path.empty()) {
            if (layer.is_line) {
                out << "<path d=\"" << layer.path << "\" fill=\"none\" stroke=\"" << layer.color
                    << "\" stroke-width=\"1.5\"/>";
            } else {
                out << "<path d=\"" << layer.path << "\" fill=\"" << layer.color << "\" fill-opacity=\""
                    << short_number(layer.opacity) << "\" stroke=\"none\"/>";
            }
        }
        out << "</g>\n";
    }
    out << "</g>\n";

    out << "<g id=\"axes\" font-size=\"11\">\n";
    out << "<rect x=\"" << fixed(x0) << "\" y=\"" << fixed(y1) << "\" width=\"" << fixed(x1 - x0)
        << "\" height=\"" << fixed(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
    constexpr int kTicks = 5;
    for (int t = 0; t <= kTicks; ++t) {
        const double f = static_cast<double>(t) / kTicks;
        auto value = [f](const SvgAxis& a) {
            return a.log ? std::pow(10.0, std::log10(a.lo) + f * (std::log10(a.hi) - std::log10(a.lo)))
                         : a.lo + f * (a.hi - a.lo);
        };
        out << "<text x=\"" << fixed(px(f)) << "\" y=\"" << fixed(y0 + 16)
            << "\" text-anchor=\"middle\">" << short_number(value(x_)) << "</text>\n";
        out << "<text x=\"" << fixed(x0 - 6) << "\" y=\"" << fixed(py(f) + 4)
            << "\" text-anchor=\"end\">" << short_number(value(y_)) << "</text>\n";
    }
    out << "<text x=\"" << fixed((x0 + x1) / 2) << "\" y=\"" << fixed(height_ - 16)
        << "\" text-anchor=\"middle\">" << escape(x_.label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << fixed((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << fixed((y0 + y1) / 2) << ")\">" << escape(y_.label) << "</text>\n";
    out << "</g>\n";

    out << "<g id=\"legend\" font-size=\"11\">\n";
    double ly = y1 + 10;
    for (const auto& layer : layers_) {
        if (layer.label.empty()) {
            continue;
        }
        out << "<rect x=\"" << fixed(x1 + 12) << "\" y=\"" << fixed(ly - 8) << "\" width=\"12\" height=\"10\" fill=\""
            << layer.color << "\"/><text x=\"" << fixed(x1 + 30) << "\" y=\"" << fixed(ly) << "\">"
            << escape(layer.label) << "</text>\n";
        ly += 16;
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

} // namespace repspace
