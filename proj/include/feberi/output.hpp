#pragma once
// Result bundle writers: CSV tables, summary JSON, minimal SVG line charts and
// the binary bound-state density dump.

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "feberi/core.hpp"
#include "json.hpp"

namespace feberi {

struct Table {
    Table() = default;
    Table(std::string n, std::vector<std::string> cols) : name(std::move(n)), columns(std::move(cols)) {}

    std::string name;                  // file stem
    std::vector<std::string> columns;  // units in brackets
    std::vector<std::vector<double>> rows;
    bool plot = true;                  // first column against the rest
    bool log_y = false;

    void add(std::vector<double> row) {
        if (row.size() != columns.size()) throw DomainError("table '" + name + "': row width mismatch");
        rows.push_back(std::move(row));
    }
};

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string to_csv(const Table& t) {
    std::string out;
    for (std::size_t j = 0; j < t.columns.size(); ++j) out += (j ? "," : "") + t.columns[j];
    out += '\n';
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j) out += ',';
            out += format_number(r[j]);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string o;
    for (char ch : s) {
        if (ch == '<') o += "&lt;";
        else if (ch == '>') o += "&gt;";
        else if (ch == '&') o += "&amp;";
        else o += ch;
    }
    return o;
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace detail

// Line chart of every column against the first.
inline std::string to_svg(const Table& t) {
    const double W = 760, H = 460, left = 90, right = 180, top = 40, bottom = 60;
    const double pw = W - left - right, ph = H - top - bottom;
    auto ymap = [&](double v) { return t.log_y ? std::log10(std::max(v, 1e-300)) : v; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& r : t.rows) {
        if (!std::isfinite(r[0])) continue;
        x0 = std::min(x0, r[0]);
        x1 = std::max(x1, r[0]);
        for (std::size_t j = 1; j < r.size(); ++j) {
            if (!std::isfinite(r[j]) || (t.log_y && r[j] <= 0.0)) continue;
            y0 = std::min(y0, ymap(r[j]));
            y1 = std::max(y1, ymap(r[j]));
        }
    }
    if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
    if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

    std::string s;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                  W, H);
    s += buf;
    s += "<text x=\"" + detail::fmt_tick(left) + "\" y=\"24\" font-size=\"15\">" + detail::svg_escape(t.name) +
         "</text>\n";
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n",
                  left, top, pw, ph);
    s += buf;
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n", sx(xv),
                      top + ph + 18, detail::fmt_tick(xv).c_str());
        s += buf;
        const std::string lab = t.log_y ? "1e" + detail::fmt_tick(yv) : detail::fmt_tick(yv);
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%s</text>\n", left - 6,
                      sy(yv) + 4, lab.c_str());
        s += buf;
        std::snprintf(buf, sizeof buf, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n",
                      left, sy(yv), left + pw, sy(yv));
        s += buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">", left + pw / 2, H - 16);
    s += buf + detail::svg_escape(t.columns[0]) + "</text>\n";
    for (std::size_t j = 1; j < t.columns.size(); ++j) {
        const char* col = palette[(j - 1) % 7];
        s += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(col) + "\" points=\"";
        for (const auto& r : t.rows) {
            if (!std::isfinite(r[0]) || !std::isfinite(r[j]) || (t.log_y && r[j] <= 0.0)) continue;
            std::snprintf(buf, sizeof buf, "%.2f,%.2f ", sx(r[0]), sy(ymap(r[j])));
            s += buf;
        }
        s += "\"/>\n";
        const double ly = top + 14 + 18 * double(j - 1);
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"/>\n",
                      left + pw + 10, ly - 4, left + pw + 30, ly - 4, col);
        s += buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">", left + pw + 36, ly);
        s += buf + detail::svg_escape(t.columns[j]) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
}

namespace detail {

inline void put_u64(std::ofstream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = char((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline void put_f64(std::ofstream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

}  // namespace detail

// Layout, little-endian: uint64 grid points, uint64 steps, float64 dt [fs], then for
// each step the 2x2 bound density in row-major order as (re, im) float64 pairs.
inline void write_rho_b(const std::filesystem::path& p, std::uint64_t grid_points, double dt,
                        const std::vector<Eigen::Matrix2cd>& rho) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    detail::put_u64(out, grid_points);
    detail::put_u64(out, rho.size());
    detail::put_f64(out, dt);
    for (const auto& r : rho)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                detail::put_f64(out, r(i, j).real());
                detail::put_f64(out, r(i, j).imag());
            }
}

struct RhoDump {
    std::uint64_t grid_points = 0;
    double dt = 0.0;
    std::vector<Eigen::Matrix2cd> rho;
};

inline RhoDump read_rho_b(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read '" + p.string() + "'");
    auto u64 = [&]() {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (!in) throw Error("truncated density dump");
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    };
    auto f64 = [&]() { return std::bit_cast<double>(u64()); };
    RhoDump d;
    d.grid_points = u64();
    const std::uint64_t steps = u64();
    d.dt = f64();
    d.rho.resize(steps);
    for (auto& r : d.rho)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double re = f64();
                r(i, j) = cplx(re, f64());
            }
    return d;
}

struct ResultBundle {
    Table main;                 // results.csv
    std::vector<Table> series;  // one CSV and SVG each
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    struct Dump {
        std::string name;
        std::uint64_t grid_points;
        double dt;
        std::vector<Eigen::Matrix2cd> rho;
    };
    std::vector<Dump> dumps;
};

inline void write_bundle(const ResultBundle& b, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "results.csv", to_csv(b.main));
    if (b.main.plot) write_text(dir / (b.main.name + ".svg"), to_svg(b.main));
    for (const auto& t : b.series) {
        write_text(dir / (t.name + ".csv"), to_csv(t));
        if (t.plot) write_text(dir / (t.name + ".svg"), to_svg(t));
    }
    write_text(dir / "summary.json", b.summary.dump(2) + "\n");
    for (const auto& d : b.dumps) write_rho_b(dir / (d.name + ".bin"), d.grid_points, d.dt, d.rho);
}

}  // namespace feberi
