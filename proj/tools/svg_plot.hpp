#pragma once

#include <string>
#include <utility>
#include <vector>

namespace selfsim_cli {

struct Curve {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool markers = false;  // points instead of a polyline
};

struct Cell {
    double x0, y0, x1, y1;
    std::string color;
};

struct Panel {
    Panel(std::string t = "", std::string xl = "", std::string yl = "")
        : title(std::move(t)), xlabel(std::move(xl)), ylabel(std::move(yl)) {}
    std::string title, xlabel, ylabel;
    bool logx = false, logy = false;
    // fixed axis range; auto when lo >= hi
    double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
    std::vector<Curve> curves;
    std::vector<Cell> cells;  // filled rectangles in data coordinates, drawn first
};

// Self-contained SVG, panels laid out in one row. Throws std::invalid_argument
// when there is nothing to draw. Same input, same bytes.
std::string render_svg(const std::vector<Panel>& panels);

void write_text(const std::string& path, const std::string& text);

}  // namespace selfsim_cli
