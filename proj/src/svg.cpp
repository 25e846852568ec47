#include "auvgp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "auvgp/types.hpp"

namespace auvgp {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void pad() {
        if (!(lo < hi)) {
            lo -= 1;
            hi += 1;
        } else {
            const double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

std::string fmt(double v, const char* spec = "%.3f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
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

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgBand>& bands,
                      const std::vector<SvgSeries>& series, int width,
                      int height) {
    const double ml = 62, mr = 14, mt = 26, mb = 40;
    const double pw = width - ml - mr, ph = height - mt - mb;

    Range rx, ry;
    for (const auto& b : bands)
        for (std::size_t i = 0; i < b.x.size(); ++i) {
            rx.include(b.x[i]);
            ry.include(b.lo[i]);
            ry.include(b.hi[i]);
        }
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            rx.include(s.x[i]);
            ry.include(s.y[i]);
        }
    if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo)) {
        rx = {0, 1};
        ry = {0, 1};
    }
    rx.pad();
    ry.pad();

    auto px = [&](double x) {
        return ml + pw * (x - rx.lo) / (rx.hi - rx.lo);
    };
    auto py = [&](double y) {
        return mt + ph * (1.0 - (y - ry.lo) / (ry.hi - ry.lo));
    };

    std::ofstream f(path);
    if (!f) throw Error("cannot write SVG file: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
    f << "<rect width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";

    // Grid and tick labels, five divisions per axis.
    f << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double gx = ml + pw * i / 5.0;
        const double gy = mt + ph * i / 5.0;
        f << "<line x1=\"" << fmt(gx) << "\" y1=\"" << fmt(mt) << "\" x2=\""
          << fmt(gx) << "\" y2=\"" << fmt(mt + ph) << "\"/>\n";
        f << "<line x1=\"" << fmt(ml) << "\" y1=\"" << fmt(gy) << "\" x2=\""
          << fmt(ml + pw) << "\" y2=\"" << fmt(gy) << "\"/>\n";
    }
    f << "</g>\n";
    f << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = rx.lo + (rx.hi - rx.lo) * i / 5.0;
        const double yv = ry.hi - (ry.hi - ry.lo) * i / 5.0;
        f << "<text x=\"" << fmt(ml + pw * i / 5.0) << "\" y=\""
          << fmt(mt + ph + 14) << "\" text-anchor=\"middle\">"
          << fmt(xv, "%.4g") << "</text>\n";
        f << "<text x=\"" << fmt(ml - 6) << "\" y=\""
          << fmt(mt + ph * i / 5.0 + 3) << "\" text-anchor=\"end\">"
          << fmt(yv, "%.4g") << "</text>\n";
    }
    f << "</g>\n";

    for (const auto& b : bands) {
        if (b.x.empty()) continue;
        f << "<path fill=\"" << b.color << "\" fill-opacity=\""
          << fmt(b.opacity, "%.2f") << "\" stroke=\"none\" d=\"M";
        for (std::size_t i = 0; i < b.x.size(); ++i)
            f << fmt(px(b.x[i])) << "," << fmt(py(b.hi[i]))
              << (i + 1 < b.x.size() ? " L" : " ");
        for (std::size_t k = b.x.size(); k-- > 0;)
            f << "L" << fmt(px(b.x[k])) << "," << fmt(py(b.lo[k])) << " ";
        f << "Z\"/>\n";
    }

    for (const auto& s : series) {
        if (s.x.empty()) continue;
        f << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"" << fmt(s.width, "%.2f") << "\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            f << fmt(px(s.x[i])) << "," << fmt(py(s.y[i]))
              << (i + 1 < s.x.size() ? " " : "");
        f << "\"/>\n";
    }

    // Frame, labels, legend.
    f << "<rect x=\"" << fmt(ml) << "\" y=\"" << fmt(mt) << "\" width=\""
      << fmt(pw) << "\" height=\"" << fmt(ph)
      << "\" fill=\"none\" stroke=\"#888888\"/>\n";
    f << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\"" << fmt(16.0)
      << "\" font-family=\"sans-serif\" font-size=\"12\" "
         "text-anchor=\"middle\">"
      << escape(title) << "</text>\n";
    f << "<text x=\"" << fmt(ml + pw / 2) << "\" y=\""
      << fmt(static_cast<double>(height) - 6)
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
    f << "<text x=\"" << fmt(14.0) << "\" y=\"" << fmt(mt + ph / 2)
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
         "text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fmt(mt + ph / 2) << ")\">" << escape(y_label) << "</text>\n";

    double lx = ml + 8, ly = mt + 14;
    for (const auto& s : series) {
        if (s.label.empty()) continue;
        f << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 3)
          << "\" x2=\"" << fmt(lx + 18) << "\" y2=\"" << fmt(ly - 3)
          << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << fmt(lx + 22) << "\" y=\"" << fmt(ly)
          << "\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape(s.label) << "</text>\n";
        ly += 13;
    }
    for (const auto& b : bands) {
        if (b.label.empty()) continue;
        f << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 9)
          << "\" width=\"18\" height=\"8\" fill=\"" << b.color
          << "\" fill-opacity=\"" << fmt(b.opacity, "%.2f") << "\"/>\n";
        f << "<text x=\"" << fmt(lx + 22) << "\" y=\"" << fmt(ly)
          << "\" font-family=\"sans-serif\" font-size=\"10\">"
          << escape(b.label) << "</text>\n";
        ly += 13;
    }
    f << "</svg>\n";
    if (!f) throw Error("short write on SVG file: " + path);
}

}  // namespace auvgp
