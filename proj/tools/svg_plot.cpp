#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace selfsim_cli {

namespace {

constexpr double kW = 420.0, kH = 340.0;
constexpr double kLeft = 64.0, kRight = 16.0, kTop = 30.0, kBottom = 46.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else o += c;
    }
    return o;
}

struct Axis {
    double lo, hi;
    bool log;
    double map(double v) const {
        const double a = log ? std::log10(v) : v;
        return (a - lo) / (hi - lo);
    }
};

Axis make_axis(std::vector<double> vals, bool log, double flo, double fhi) {
    if (flo < fhi) return {log ? std::log10(flo) : flo, log ? std::log10(fhi) : fhi, log};
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : vals) {
        if (!std::isfinite(v) || (log && v <= 0.0)) continue;
        const double a = log ? std::log10(v) : v;
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) lo -= 0.5, hi += 0.5;
    const double pad = 0.04 * (hi - lo);
    return {lo - pad, hi + pad, log};
}

bool drawable(double v, const Axis& a) { return std::isfinite(v) && (!a.log || v > 0.0); }

void panel_svg(std::ostringstream& os, const Panel& p, double ox) {
    std::vector<double> xs, ys;
    for (const auto& c : p.curves) {
        xs.insert(xs.end(), c.x.begin(), c.x.end());
        ys.insert(ys.end(), c.y.begin(), c.y.end());
    }
    for (const auto& c : p.cells) {
        xs.push_back(c.x0), xs.push_back(c.x1);
        ys.push_back(c.y0), ys.push_back(c.y1);
    }
    const Axis ax = make_axis(xs, p.logx, p.xlo, p.xhi);
    const Axis ay = make_axis(ys, p.logy, p.ylo, p.yhi);
    const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
    auto X = [&](double v) { return ox + kLeft + ax.map(v) * pw; };
    auto Y = [&](double v) { return kTop + (1.0 - ay.map(v)) * ph; };

    os << "<g>\n";
    os << "<rect x=\"" << num(ox + kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"white\" stroke=\"black\"/>\n";
    for (const auto& c : p.cells) {
        const double x0 = X(c.x0), x1 = X(c.x1), y0 = Y(c.y0), y1 = Y(c.y1);
        os << "<rect x=\"" << num(std::min(x0, x1)) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\""
           << num(std::abs(x1 - x0)) << "\" height=\"" << num(std::abs(y1 - y0)) << "\" fill=\"" << c.color
           << "\" stroke=\"none\"/>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double fx = ax.lo + (ax.hi - ax.lo) * k / 4.0;
        const double fy = ay.lo + (ay.hi - ay.lo) * k / 4.0;
        const double vx = ax.log ? std::pow(10.0, fx) : fx;
        const double vy = ay.log ? std::pow(10.0, fy) : fy;
        const double px = ox + kLeft + pw * k / 4.0, py = kTop + ph * (1.0 - k / 4.0);
        os << "<line x1=\"" << num(px) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px) << "\" y2=\""
           << num(kTop + ph + 4) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px) << "\" y=\"" << num(kTop + ph + 16)
           << "\" font-size=\"10\" text-anchor=\"middle\">" << num(vx) << "</text>\n";
        os << "<line x1=\"" << num(ox + kLeft - 4) << "\" y1=\"" << num(py) << "\" x2=\"" << num(ox + kLeft)
           << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(ox + kLeft - 6) << "\" y=\"" << num(py + 3)
           << "\" font-size=\"10\" text-anchor=\"end\">" << num(vy) << "</text>\n";
    }
    for (const auto& c : p.curves) {
        const std::size_t n = std::min(c.x.size(), c.y.size());
        if (c.markers) {
            for (std::size_t i = 0; i < n; ++i)
                if (drawable(c.x[i], ax) && drawable(c.y[i], ay))
                    os << "<circle cx=\"" << num(X(c.x[i])) << "\" cy=\"" << num(Y(c.y[i])) << "\" r=\"2\" fill=\""
                       << c.color << "\"/>\n";
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << c.color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < n; ++i) {
            if (!drawable(c.x[i], ax) || !drawable(c.y[i], ay)) continue;
            os << (first ? "" : " ") << num(X(c.x[i])) << "," << num(Y(c.y[i]));
            first = false;
        }
        os << "\"/>\n";
    }
    double ly = kTop + 14;
    for (const auto& c : p.curves) {
        if (c.label.empty()) continue;
        os << "<text x=\"" << num(ox + kLeft + pw - 6) << "\" y=\"" << num(ly) << "\" font-size=\"10\" fill=\""
           << c.color << "\" text-anchor=\"end\">" << esc(c.label) << "</text>\n";
        ly += 12;
    }
    os << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"18\" font-size=\"12\" text-anchor=\"middle\">"
       << esc(p.title) << "</text>\n";
    os << "<text x=\"" << num(ox + kLeft + pw / 2) << "\" y=\"" << num(kH - 8)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << esc(p.xlabel) << "</text>\n";
    os << "<text x=\"" << num(ox + 14) << "\" y=\"" << num(kTop + ph / 2)
       << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 " << num(ox + 14) << " "
       << num(kTop + ph / 2) << ")\">" << esc(p.ylabel) << "</text>\n";
    os << "</g>\n";
}

}  // namespace

std::string render_svg(const std::vector<Panel>& panels) {
    bool any = false;
    for (const auto& p : panels) {
        for (const auto& c : p.curves) any = any || (!c.x.empty() && !c.y.empty());
        any = any || !p.cells.empty();
    }
    if (!any) throw std::invalid_argument("plot has no data");
    std::ostringstream os;
    const double W = kW * panels.size();
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(kH)
       << "\" viewBox=\"0 0 " << num(W) << " " << num(kH) << "\" font-family=\"sans-serif\">\n";
    for (std::size_t i = 0; i < panels.size(); ++i) panel_svg(os, panels[i], kW * i);
    os << "</svg>\n";
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
    if (!f) throw std::runtime_error("failed writing: " + path);
}

}  // namespace selfsim_cli
