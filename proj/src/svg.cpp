#include "porescope/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "porescope/errors.hpp"

namespace porescope {

namespace fs = std::filesystem;

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

} // namespace

void write_polar_histogram_svg(const fs::path& path, const PolarHistogram& hist, bool axial,
                               const std::string& title, const std::string& comment) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    const double W = 520, H = 560, cx = W / 2, cy = H / 2 + 20, R = 200;
    int cmax = 1;
    for (int c : hist.counts) cmax = std::max(cmax, c);

    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    if (!comment.empty()) f << "<!-- " << escape(comment) << " -->\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << cx << "' y='24' text-anchor='middle' font-family='sans-serif' font-size='16'>"
      << escape(title) << "</text>\n";
    for (int ring = 1; ring <= 4; ++ring)
        f << "<circle cx='" << cx << "' cy='" << cy << "' r='" << fmt(R * ring / 4.0)
          << "' fill='none' stroke='#dddddd'/>\n";

    const auto n = hist.counts.size();
    auto wedge = [&](double a0_deg, double a1_deg, double r) {
        const double a0 = a0_deg * M_PI / 180.0, a1 = a1_deg * M_PI / 180.0;
        // SVG y grows downward; negate sine so angles run counter-clockwise
        const double x0 = cx + r * std::cos(a0), y0 = cy - r * std::sin(a0);
        const double x1 = cx + r * std::cos(a1), y1 = cy - r * std::sin(a1);
        f << "<path d='M" << fmt(cx) << " " << fmt(cy) << " L" << fmt(x0) << " " << fmt(y0)
          << " A" << fmt(r) << " " << fmt(r) << " 0 0 0 " << fmt(x1) << " " << fmt(y1)
          << " Z' fill='#1f77b488' stroke='#1f77b4'/>\n";
    };
    for (std::size_t b = 0; b < n; ++b) {
        if (hist.counts[b] == 0) continue;
        const double r = R * double(hist.counts[b]) / cmax;
        wedge(hist.bin_edges_deg[b], hist.bin_edges_deg[b + 1], r);
        if (axial) wedge(hist.bin_edges_deg[b] + 180.0, hist.bin_edges_deg[b + 1] + 180.0, r);
    }
    for (int a = 0; a < 360; a += 45) {
        const double rad = a * M_PI / 180.0;
        f << "<text x='" << fmt(cx + (R + 16) * std::cos(rad)) << "' y='"
          << fmt(cy - (R + 16) * std::sin(rad) + 4)
          << "' text-anchor='middle' font-family='sans-serif' font-size='11' fill='#666666'>" << a
          << "&#176;</text>\n";
    }
    f << "<text x='" << cx << "' y='" << H - 8
      << "' text-anchor='middle' font-family='sans-serif' font-size='11' fill='#666666'>max bin count "
      << cmax << "</text>\n";
    f << "</svg>\n";
}

void write_xy_chart_svg(const fs::path& path, const std::vector<XySeries>& series,
                        const std::string& x_label, const std::string& y_label,
                        const std::string& title, const std::string& comment) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;

    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (x0 > x1) {
        x0 = 0;
        x1 = 1;
        y0 = 0;
        y1 = 1;
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double px = (x1 - x0) * 0.05, py = (y1 - y0) * 0.05;
    x0 -= px;
    x1 += px;
    y0 -= py;
    y1 += py;
    auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
    auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    if (!comment.empty()) f << "<!-- " << escape(comment) << " -->\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-family='sans-serif' font-size='16'>"
      << escape(title) << "</text>\n";

    for (int i = 0; i <= 5; ++i) {
        const double gx = x0 + (x1 - x0) * i / 5.0, gy = y0 + (y1 - y0) * i / 5.0;
        f << "<line x1='" << fmt(X(gx)) << "' y1='" << Y(y0) << "' x2='" << fmt(X(gx)) << "' y2='"
          << Y(y1) << "' stroke='#eeeeee'/>\n";
        f << "<line x1='" << X(x0) << "' y1='" << fmt(Y(gy)) << "' x2='" << X(x1) << "' y2='"
          << fmt(Y(gy)) << "' stroke='#eeeeee'/>\n";
        f << "<text x='" << fmt(X(gx)) << "' y='" << H - mb + 18
          << "' text-anchor='middle' font-family='sans-serif' font-size='11'>" << fmt(gx)
          << "</text>\n";
        f << "<text x='" << ml - 8 << "' y='" << fmt(Y(gy) + 4)
          << "' text-anchor='end' font-family='sans-serif' font-size='11'>" << fmt(gy)
          << "</text>\n";
    }
    f << "<rect x='" << ml << "' y='" << mt << "' width='" << W - ml - mr << "' height='"
      << H - mt - mb << "' fill='none' stroke='#333333'/>\n";
    f << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 10
      << "' text-anchor='middle' font-family='sans-serif' font-size='13'>" << escape(x_label)
      << "</text>\n";
    f << "<text x='16' y='" << (mt + H - mb) / 2
      << "' text-anchor='middle' font-family='sans-serif' font-size='13' transform='rotate(-90 16 "
      << (mt + H - mb) / 2 << ")'>" << escape(y_label) << "</text>\n";

    int ci = 0;
    double ly = mt + 14;
    for (const auto& s : series) {
        const char* color = kPalette[ci++ % 6];
        if (s.line) {
            f << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                f << fmt(X(s.x[i])) << "," << fmt(Y(s.y[i])) << " ";
            f << "'/>\n";
        } else {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                f << "<circle cx='" << fmt(X(s.x[i])) << "' cy='" << fmt(Y(s.y[i]))
                  << "' r='2.5' fill='" << color << "' fill-opacity='0.7'/>\n";
        }
        if (!s.name.empty()) {
            f << "<rect x='" << W - mr - 150 << "' y='" << ly - 9
              << "' width='10' height='10' fill='" << color << "'/>\n";
            f << "<text x='" << W - mr - 135 << "' y='" << ly
              << "' font-family='sans-serif' font-size='11'>" << escape(s.name) << "</text>\n";
            ly += 16;
        }
    }
    f << "</svg>\n";
}

} // namespace porescope
