// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "megan/cli.hpp"

namespace megan {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void grow(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    // Pads the span and rescues degenerate or empty ranges.
    void finish() {
        if (lo > hi) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.06 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct Series {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> pts;
};

// One framed plot box with polylines, corner scale labels, and a color key.
void draw_panel(std::ostringstream& os, double px, double py, double pw, double ph,
                const std::string& title, const std::vector<Series>& series,
                bool fixed_unit_y = false, double hline = std::nan("")) {
    Range xr, yr;
    for (const Series& s : series)
        for (const auto& [x, y] : s.pts) {
            xr.grow(x);
            yr.grow(y);
        }
    xr.finish();
    if (fixed_unit_y) {
        yr.lo = -0.04;
        yr.hi = 1.04;
    } else {
        yr.finish();
    }
    const auto mx = [&](double x) { return px + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    const auto my = [&](double y) { return py + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    os << "<rect x='" << px << "' y='" << py << "' width='" << pw << "' height='" << ph
       << "' fill='white' stroke='#444'/>\n";
    os << "<text x='" << px << "' y='" << py - 8 << "' font-size='14' fill='#222'>" << title
       << "</text>\n";

    if (!std::isnan(hline)) {
        os << "<line x1='" << px << "' y1='" << my(hline) << "' x2='" << px + pw << "' y2='"
           << my(hline) << "' stroke='#999' stroke-dasharray='5,4'/>\n";
    }
    for (const Series& s : series) {
        if (s.pts.empty()) continue;
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (const auto& [x, y] : s.pts) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", mx(x), my(y));
            os << buf;
        }
        os << "'/>\n";
    }
    // Scale labels on the corners, series key across the top edge.
    os << "<text x='" << px - 4 << "' y='" << py + ph << "' font-size='11' fill='#555' "
       << "text-anchor='end'>" << fmt(yr.lo) << "</text>\n";
    os << "<text x='" << px - 4 << "' y='" << py + 10 << "' font-size='11' fill='#555' "
       << "text-anchor='end'>" << fmt(yr.hi) << "</text>\n";
    os << "<text x='" << px << "' y='" << py + ph + 14 << "' font-size='11' fill='#555'>"
       << fmt(xr.lo) << "</text>\n";
    os << "<text x='" << px + pw << "' y='" << py + ph + 14
       << "' font-size='11' fill='#555' text-anchor='end'>" << fmt(xr.hi) << "</text>\n";
    double key_x = px + pw;
    for (std::size_t i = series.size(); i-- > 0;) {
        os << "<text x='" << key_x << "' y='" << py - 8 << "' font-size='12' fill='"
           << series[i].color << "' text-anchor='end'>" << series[i].label << "</text>\n";
        key_x -= 12.0 * static_cast<double>(series[i].label.size() + 2);
    }
}

}  // namespace

std::string color_for(std::size_t index) {
    const double hue = std::fmod(static_cast<double>(index) * 137.508, 360.0);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "hsl(%.0f,70%%,45%%)", hue);
    return buf;
}

void write_scatter_svg(const std::string& path, const std::vector<double>& points,
                       const std::vector<std::size_t>& gens, std::size_t n,
                       const MixtureSpec& spec) {
    const double bx = 50, by = 30, bw = 560, bh = 560;
    Range xr, yr;
    for (std::size_t k = 0; k < gens.size(); ++k) {
        xr.grow(points[k * 2]);
        yr.grow(points[k * 2 + 1]);
    }
    for (const auto& c : spec.centers) {
        xr.grow(c[0]);
        yr.grow(c[1]);
    }
    xr.finish();
    yr.finish();
    const auto mx = [&](double x) { return bx + (x - xr.lo) / (xr.hi - xr.lo) * bw; };
    const auto my = [&](double y) { return by + bh - (y - yr.lo) / (yr.hi - yr.lo) * bh; };

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='820' height='640' "
          "viewBox='0 0 820 640'>\n";
    os << "<rect width='820' height='640' fill='white'/>\n";
    os << "<text x='50' y='20' font-size='15' fill='#222'>generated samples by generator"
          "</text>\n";
    os << "<rect x='" << bx << "' y='" << by << "' width='" << bw << "' height='" << bh
       << "' fill='none' stroke='#444'/>\n";
    for (std::size_t k = 0; k < gens.size(); ++k) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "<circle cx='%.2f' cy='%.2f' r='2.4' fill='%s' fill-opacity='0.6'/>\n",
                      mx(points[k * 2]), my(points[k * 2 + 1]), color_for(gens[k]).c_str());
        os << buf;
    }
    for (const auto& c : spec.centers) {
        const double cx = mx(c[0]), cy = my(c[1]);
        os << "<circle cx='" << cx << "' cy='" << cy
           << "' r='6' fill='none' stroke='black' stroke-width='2'/>\n";
        os << "<line x1='" << cx - 9 << "' y1='" << cy << "' x2='" << cx + 9 << "' y2='" << cy
           << "' stroke='black'/>\n";
        os << "<line x1='" << cx << "' y1='" << cy - 9 << "' x2='" << cx << "' y2='" << cy + 9
           << "' stroke='black'/>\n";
    }
    // Corner scale labels.
    os << "<text x='" << bx << "' y='" << by + bh + 16 << "' font-size='11' fill='#555'>"
       << fmt(xr.lo) << "</text>\n";
    os << "<text x='" << bx + bw << "' y='" << by + bh + 16
       << "' font-size='11' fill='#555' text-anchor='end'>" << fmt(xr.hi) << "</text>\n";
    os << "<text x='" << bx - 4 << "' y='" << by + bh
       << "' font-size='11' fill='#555' text-anchor='end'>" << fmt(yr.lo) << "</text>\n";
    os << "<text x='" << bx - 4 << "' y='" << by + 10
       << "' font-size='11' fill='#555' text-anchor='end'>" << fmt(yr.hi) << "</text>\n";

    // Legend: exactly one swatch per generator.
    std::vector<std::uint64_t> per_gen(n, 0);
    for (std::size_t g : gens) per_gen[g]++;
    for (std::size_t i = 0; i < n; ++i) {
        const double ly = 40.0 + 26.0 * static_cast<double>(i);
        os << "<g class='legend-swatch'>";
        os << "<rect x='630' y='" << ly << "' width='14' height='14' fill='" << color_for(i)
           << "'/>";
        os << "<text x='650' y='" << ly + 12 << "' font-size='13' fill='#222'>G" << (i + 1)
           << " (" << per_gen[i] << ")</text>";
        os << "</g>\n";
    }
    os << "<g class='legend-center'><circle cx='637' cy='" << 47.0 + 26.0 * double(n)
       << "' r='6' fill='none' stroke='black' stroke-width='2'/><text x='650' y='"
       << 52.0 + 26.0 * double(n) << "' font-size='13' fill='#222'>mode center</text></g>\n";
    os << "</svg>\n";

    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << os.str();
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

void write_curves_svg(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
    if (header.size() < 8)
        throw ConfigError("metrics CSV header has " + std::to_string(header.size()) +
                          " columns, expected at least 8");
    const std::size_t n = header.size() - 7;  // p_1..p_n sit between the fixed columns
    const auto column = [&rows](std::size_t c) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(rows.size());
        for (const auto& row : rows) pts.push_back({row[0], row[c]});
        return pts;
    };

    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='900' height='870' "
          "viewBox='0 0 900 870'>\n";
    os << "<rect width='900' height='870' fill='white'/>\n";

    std::vector<Series> losses;
    losses.push_back({"loss_d", "crimson", column(2)});
    losses.push_back({"loss_g", "steelblue", column(3)});
    losses.push_back({"loss_gate_adv", "seagreen", column(4)});
    losses.push_back({"loss_lb", "darkorange", column(5)});
    draw_panel(os, 70, 40, 790, 210, "losses", losses);

    std::vector<Series> usage;
    for (std::size_t i = 0; i < n; ++i)
        usage.push_back({"p_" + std::to_string(i + 1), color_for(i), column(6 + i)});
    draw_panel(os, 70, 330, 790, 210, "generator usage", usage, /*fixed_unit_y=*/true,
               1.0 / static_cast<double>(n));

    std::vector<Series> anneal;
    anneal.push_back({"tau", "purple", column(1)});
    anneal.push_back({"logit_row_std", "#777", column(header.size() - 1)});
    draw_panel(os, 70, 620, 790, 210, "temperature and logit spread", anneal);

    os << "</svg>\n";
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << os.str();
    out.flush();
    if (!out) throw IoError("write failure: " + path);
}

}  // namespace megan
