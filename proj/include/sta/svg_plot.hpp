#pragma once

// Minimal SVG line charts of CSV tables: first column on x, every other
// numeric column as a polyline.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "sta/csv.hpp"
#include "sta/errors.hpp"

namespace sta {

namespace detail {

inline std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline bool parse_cell(const std::string& s, double& v) {
    if (s.empty() || s == "nan") return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(v);
}

}  // namespace detail

inline std::string svg_line_chart(const CsvTable& table, const std::string& title) {
    constexpr double width = 720, height = 440, left = 70, right = 170, top = 40, bottom = 50;
    static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

    const auto& rows = table.rows();
    const std::size_t ncol = table.header().size();
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& r : rows) {
        double x = 0.0;
        if (!detail::parse_cell(r[0], x)) continue;
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        for (std::size_t c = 1; c < ncol; ++c) {
            double y = 0.0;
            if (!detail::parse_cell(r[c], y)) continue;
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) {
        ymin = std::isfinite(ymin) ? ymin - 0.5 : 0.0;
        ymax = ymin + 1.0;
    }
    const double pw = width - left - right;
    const double ph = height - top - bottom;
    const auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
    const auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_number(width) + "\" height=\"" +
         format_number(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + format_number(width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::xml_escape(title) + "</text>\n";
    s += "<rect x=\"" + format_number(left) + "\" y=\"" + format_number(top) + "\" width=\"" + format_number(pw) +
         "\" height=\"" + format_number(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        s += "<text x=\"" + format_number(sx(fx)) + "\" y=\"" + format_number(top + ph + 18) +
             "\" text-anchor=\"middle\">" + format_number(std::round(fx * 1e4) / 1e4) + "</text>\n";
        s += "<text x=\"" + format_number(left - 6) + "\" y=\"" + format_number(sy(fy) + 4) +
             "\" text-anchor=\"end\">" + format_number(std::round(fy * 1e4) / 1e4) + "</text>\n";
    }
    s += "<text x=\"" + format_number(left + pw / 2) + "\" y=\"" + format_number(height - 10) +
         "\" text-anchor=\"middle\">" + detail::xml_escape(table.header()[0]) + "</text>\n";

    for (std::size_t c = 1; c < ncol; ++c) {
        std::string pts;
        for (const auto& r : rows) {
            double x = 0.0, y = 0.0;
            if (!detail::parse_cell(r[0], x) || !detail::parse_cell(r[c], y)) continue;
            pts += format_number(sx(x)) + "," + format_number(sy(y)) + " ";
        }
        if (pts.empty()) continue;
        const char* col = colours[(c - 1) % (sizeof colours / sizeof *colours)];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(col) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
        const double ly = top + 14.0 * static_cast<double>(c);
        s += "<line x1=\"" + format_number(width - right + 10) + "\" y1=\"" + format_number(ly) + "\" x2=\"" +
             format_number(width - right + 30) + "\" y2=\"" + format_number(ly) + "\" stroke=\"" + col + "\"/>\n";
        s += "<text x=\"" + format_number(width - right + 35) + "\" y=\"" + format_number(ly + 4) + "\">" +
             detail::xml_escape(table.header()[c]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline void write_svg(const std::filesystem::path& path, const CsvTable& table, const std::string& title) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << svg_line_chart(table, title);
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace sta
