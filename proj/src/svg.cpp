#include "dgt/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dgt/errors.hpp"

namespace dgt {
namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

// Canvas geometry; everything below draws inside the plot rectangle.
constexpr double kW = 860.0, kH = 520.0;
constexpr double kLeft = 72.0, kRight = 16.0, kTop = 44.0, kBottom = 48.0;
constexpr double kPlotW = kW - kLeft - kRight;
constexpr double kPlotH = kH - kTop - kBottom;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '&') out += "&amp;";
        else if (ch == '<') out += "&lt;";
        else if (ch == '>') out += "&gt;";
        else out += ch;
    }
    return out;
}

bool plottable(double v) { return std::isfinite(v) && v > 0.0; }

// Tick spacing of the form {1,2,5}*10^m giving roughly eight x labels.
long long nice_step(long long span) {
    if (span <= 8) return 1;
    double raw = static_cast<double>(span) / 8.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) return static_cast<long long>(mag * mult);
    }
    return static_cast<long long>(mag * 10.0);
}

}  // namespace

std::string render_log_chart(const std::string& title,
                             const std::vector<SvgSeries>& series) {
    long long kmax = 0;
    double vmin = 0.0, vmax = 0.0;
    bool any = false;
    for (const auto& s : series) {
        if (!s.values.empty())
            kmax = std::max(kmax, static_cast<long long>(s.values.size()) - 1);
        for (double v : s.values) {
            if (!plottable(v)) continue;
            if (!any) { vmin = vmax = v; any = true; }
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
    }

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)kW
        << "\" height=\"" << (int)kH << "\" viewBox=\"0 0 " << (int)kW << " "
        << (int)kH << "\">\n";
    out << "<rect width=\"" << (int)kW << "\" height=\"" << (int)kH
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kW / 2)
        << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" "
           "text-anchor=\"middle\">"
        << escape(title) << "</text>\n";

    if (!any) {
        out << "<text x=\"" << num(kW / 2) << "\" y=\"" << num(kH / 2)
            << "\" font-family=\"sans-serif\" font-size=\"14\" "
               "text-anchor=\"middle\">no positive values to plot</text>\n";
        out << "</svg>\n";
        return out.str();
    }

    int dec_lo = static_cast<int>(std::floor(std::log10(vmin)));
    int dec_hi = static_cast<int>(std::ceil(std::log10(vmax)));
    if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;
    double span_k = kmax > 0 ? static_cast<double>(kmax) : 1.0;

    auto X = [&](double k) { return kLeft + kPlotW * (k / span_k); };
    auto Y = [&](double v) {
        double t = (std::log10(v) - dec_lo) / (dec_hi - dec_lo);
        return kTop + kPlotH * (1.0 - t);
    };

    // Frame and decade gridlines.
    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\""
        << num(kPlotW) << "\" height=\"" << num(kPlotH)
        << "\" fill=\"none\" stroke=\"#333333\"/>\n";
    int dec_step = std::max(1, (dec_hi - dec_lo) / 10);
    for (int dec = dec_lo; dec <= dec_hi; dec += dec_step) {
        double y = Y(std::pow(10.0, dec));
        if (dec != dec_lo && dec != dec_hi)
            out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y)
                << "\" x2=\"" << num(kLeft + kPlotW) << "\" y2=\"" << num(y)
                << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"end\">1e"
            << dec << "</text>\n";
    }

    long long step = nice_step(kmax);
    for (long long k = 0; k <= kmax; k += step) {
        double x = X(static_cast<double>(k));
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + kPlotH)
            << "\" x2=\"" << num(x) << "\" y2=\"" << num(kTop + kPlotH + 4)
            << "\" stroke=\"#333333\"/>\n";
        out << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + kPlotH + 18)
            << "\" font-family=\"sans-serif\" font-size=\"11\" "
               "text-anchor=\"middle\">"
            << k << "</text>\n";
    }
    out << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\""
        << num(kH - 10)
        << "\" font-family=\"sans-serif\" font-size=\"12\" "
           "text-anchor=\"middle\">k</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const char* color = kPalette[si % 6];
        std::ostringstream seg;
        int seg_points = 0;
        auto flush = [&]() {
            if (seg_points >= 2)
                out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.5\" points=\"" << seg.str()
                    << "\"/>\n";
            seg.str("");
            seg_points = 0;
        };
        for (std::size_t k = 0; k < series[si].values.size(); ++k) {
            double v = series[si].values[k];
            if (!plottable(v)) { flush(); continue; }
            if (seg_points) seg << " ";
            seg << num(X(static_cast<double>(k))) << "," << num(Y(v));
            ++seg_points;
        }
        flush();
        // Legend entry.
        double ly = kTop + 14.0 + 16.0 * static_cast<double>(si);
        out << "<line x1=\"" << num(kLeft + kPlotW - 150) << "\" y1=\""
            << num(ly - 4) << "\" x2=\"" << num(kLeft + kPlotW - 130)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(kLeft + kPlotW - 124) << "\" y=\"" << num(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">"
            << escape(series[si].label) << "</text>\n";
    }

    out << "</svg>\n";
    return out.str();
}

void write_log_chart_svg(const std::string& path, const std::string& title,
                         const std::vector<SvgSeries>& series) {
    std::string body = render_log_chart(title, series);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("svg: cannot open '" + path + "' for writing");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

}  // namespace dgt
