#include "render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "qlert/error.hpp"

namespace qlert::cli {

namespace {

std::array<Rgb, 256> build_colormap() {
    constexpr double anchors[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
    std::array<Rgb, 256> out{};
    for (int i = 0; i < 256; ++i) {
        const double t = i / 255.0 * 4.0;
        const int k = std::min(3, static_cast<int>(t));
        const double f = t - k;
        auto mix = [&](int c) {
            return static_cast<std::uint8_t>(std::lround(anchors[k][c] + f * (anchors[k + 1][c] - anchors[k][c])));
        };
        out[static_cast<std::size_t>(i)] = {mix(0), mix(1), mix(2)};
    }
    return out;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
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

struct View {
    double xmin, ymin, scale, pad;

    double px(Point2 p) const { return pad + (p.x - xmin) * scale; }
    double py(Point2 p, double height) const { return pad + height - (p.y - ymin) * scale; }
};

struct Frame {
    View view;
    double width, height;
};

Frame frame_for(const Mesh& mesh, int size) {
    double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
    double xmax = -xmin, ymax = -xmin;
    for (const auto& p : mesh.nodes()) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double span = std::max(xmax - xmin, ymax - ymin);
    const double scale = span > 0.0 ? (size - 20.0) / span : 1.0;
    return {{xmin, ymin, scale, 10.0}, (xmax - xmin) * scale, (ymax - ymin) * scale};
}

std::string triangle_points(const Mesh& mesh, std::size_t e, const Frame& f) {
    std::string s;
    for (int k = 0; k < 3; ++k) {
        const Point2 p = mesh.node(mesh.element(e)[static_cast<std::size_t>(k)]);
        if (k) s += ' ';
        s += fmt_px(f.view.px(p)) + ',' + fmt_px(f.view.py(p, f.height));
    }
    return s;
}

// Interior edges whose two elements satisfy `differs`, in element order.
template <class Pred>
std::vector<std::pair<int, int>> interface_edges(const Mesh& mesh, Pred differs) {
    std::map<std::pair<int, int>, std::size_t> first;
    std::vector<std::pair<int, int>> out;
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const Triangle& t = mesh.element(e);
        for (int k = 0; k < 3; ++k) {
            int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = first.try_emplace({a, b}, e);
            if (!inserted && differs(it->second, e)) out.emplace_back(a, b);
        }
    }
    return out;
}

void stroke_edges(std::ostringstream& s, const Mesh& mesh, const std::vector<std::pair<int, int>>& edges,
                  const Frame& f, const std::string& color, double width) {
    if (edges.empty()) return;
    s << "<path fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << fmt_px(width) << "\" d=\"";
    for (const auto& [a, b] : edges) {
        const Point2 p = mesh.node(a), q = mesh.node(b);
        s << 'M' << fmt_px(f.view.px(p)) << ',' << fmt_px(f.view.py(p, f.height)) << 'L' << fmt_px(f.view.px(q)) << ','
          << fmt_px(f.view.py(q, f.height));
    }
    s << "\"/>\n";
}

void header(std::ostringstream& s, double w, double h, const Provenance& p) {
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s << p.line("<!--", " -->") << '\n';
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_px(w) << "\" height=\"" << fmt_px(h)
      << "\" viewBox=\"0 0 " << fmt_px(w) << ' ' << fmt_px(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

}  // namespace

const std::array<Rgb, 256>& colormap() {
    static const std::array<Rgb, 256> map = build_colormap();
    return map;
}

Rgb color_at(double t) {
    if (std::isnan(t)) return colormap()[0];
    t = std::clamp(t, 0.0, 1.0);
    return colormap()[static_cast<std::size_t>(std::floor(255.0 * t + 0.5))];
}

std::string hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::string Provenance::line(const std::string& prefix, const std::string& suffix) const {
    return prefix + " qlert " + command + " config-hash " + config_hash + " seed " + std::to_string(seed) + suffix;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

std::string heatmap_svg(const Mesh& mesh, std::span<const double> values, const HeatmapOptions& options,
                        const Provenance& provenance) {
    if (values.size() != mesh.element_count()) throw InvalidArgument("heatmap_svg: one value per element required");
    const Frame f = frame_for(mesh, options.size);

    auto mapped = [&](double v) {
        if (!options.log_scale) return v;
        return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
    };
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        const double m = mapped(v);
        if (!std::isfinite(m)) continue;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (!(lo <= hi)) lo = hi = 0.0;
    const double range = hi > lo ? hi - lo : 1.0;

    const double bar = 60.0;
    std::ostringstream s;
    header(s, f.width + 20.0 + bar, f.height + 40.0, provenance);
    s << "<text x=\"10\" y=\"" << fmt_px(f.height + 34.0) << "\">" << escape(options.title) << "</text>\n";
    s << "<g stroke-width=\"0.3\">\n";
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        const double m = mapped(values[e]);
        const std::string c = hex(color_at(std::isfinite(m) ? (m - lo) / range : 0.0));
        s << "<polygon points=\"" << triangle_points(mesh, e, f) << "\" fill=\"" << c << "\" stroke=\"" << c << "\"/>\n";
    }
    s << "</g>\n";
    stroke_edges(s, mesh, interface_edges(mesh, [&](std::size_t a, std::size_t b) { return mesh.region(a) != mesh.region(b); }),
                 f, "#000000", 1.0);

    // Colour bar: 64 bands, top is the maximum.
    const double x0 = f.width + 30.0, y0 = 10.0, h = f.height;
    for (int i = 0; i < 64; ++i) {
        const double t = (63 - i) / 63.0;
        s << "<rect x=\"" << fmt_px(x0) << "\" y=\"" << fmt_px(y0 + i * h / 64.0) << "\" width=\"14\" height=\""
          << fmt_px(h / 64.0 + 0.5) << "\" fill=\"" << hex(color_at(t)) << "\"/>\n";
    }
    auto label = [&](double v) {
        if (!options.log_scale) return fmt(v);
        char buf[32];
        std::snprintf(buf, sizeof buf, "1e%.2f", v);
        return std::string(buf);
    };
    s << "<text x=\"" << fmt_px(x0) << "\" y=\"" << fmt_px(y0 - 1.0) << "\" font-size=\"9\">" << label(hi) << "</text>\n";
    s << "<text x=\"" << fmt_px(x0) << "\" y=\"" << fmt_px(y0 + h + 10.0) << "\" font-size=\"9\">" << label(lo)
      << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

std::string overlay_svg(const Mesh& mesh, std::span<const char> truth, std::span<const char> estimate, int size,
                        const std::string& title, const Provenance& provenance) {
    if (truth.size() != mesh.element_count() || estimate.size() != mesh.element_count())
        throw InvalidArgument("overlay_svg: one mask entry per element required");
    const Frame f = frame_for(mesh, size);
    std::ostringstream s;
    header(s, f.width + 20.0, f.height + 40.0, provenance);
    s << "<text x=\"10\" y=\"" << fmt_px(f.height + 34.0) << "\">" << escape(title) << "</text>\n";
    s << "<g stroke-width=\"0.3\">\n";
    for (std::size_t e = 0; e < mesh.element_count(); ++e) {
        std::string c = mesh.region(e) > 0 ? "#707070" : "#e4e4e4";
        if (estimate[e]) c = "#e8706a";
        s << "<polygon points=\"" << triangle_points(mesh, e, f) << "\" fill=\"" << c << "\" stroke=\"" << c << "\"/>\n";
    }
    s << "</g>\n";
    stroke_edges(s, mesh,
                 interface_edges(mesh, [&](std::size_t a, std::size_t b) { return (mesh.region(a) > 0) != (mesh.region(b) > 0); }),
                 f, "#303030", 0.8);
    stroke_edges(s, mesh, interface_edges(mesh, [&](std::size_t a, std::size_t b) { return truth[a] != truth[b]; }), f,
                 "#1f3fbf", 2.0);
    s << "</svg>\n";
    return s.str();
}

std::string loglog_svg(std::span<const Series> series, const std::string& title, const std::string& xlabel,
                       const Provenance& provenance) {
    const double w = 640.0, h = 420.0, left = 70.0, right = 20.0, top = 30.0, bottom = 50.0;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (const auto& sr : series) {
        for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
            if (!(sr.x[i] > 0.0 && sr.y[i] > 0.0)) continue;
            xlo = std::min(xlo, std::log10(sr.x[i]));
            xhi = std::max(xhi, std::log10(sr.x[i]));
            ylo = std::min(ylo, std::log10(sr.y[i]));
            yhi = std::max(yhi, std::log10(sr.y[i]));
        }
    }
    if (!(xlo <= xhi)) xlo = xhi = 0.0;
    if (!(ylo <= yhi)) ylo = yhi = 0.0;
    xlo = std::floor(xlo);
    xhi = std::max(std::ceil(xhi), xlo + 1.0);
    ylo = std::floor(ylo);
    yhi = std::max(std::ceil(yhi), ylo + 1.0);
    const double pw = w - left - right, ph = h - top - bottom;
    auto X = [&](double lx) { return left + (lx - xlo) / (xhi - xlo) * pw; };
    auto Y = [&](double ly) { return top + ph - (ly - ylo) / (yhi - ylo) * ph; };

    std::ostringstream s;
    header(s, w, h, provenance);
    s << "<text x=\"" << fmt_px(left) << "\" y=\"18\">" << escape(title) << "</text>\n";
    s << "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
    for (double d = xlo; d <= xhi + 0.5; d += 1.0)
        s << "<line x1=\"" << fmt_px(X(d)) << "\" y1=\"" << fmt_px(top) << "\" x2=\"" << fmt_px(X(d)) << "\" y2=\""
          << fmt_px(top + ph) << "\"/>\n";
    for (double d = ylo; d <= yhi + 0.5; d += 1.0)
        s << "<line x1=\"" << fmt_px(left) << "\" y1=\"" << fmt_px(Y(d)) << "\" x2=\"" << fmt_px(left + pw) << "\" y2=\""
          << fmt_px(Y(d)) << "\"/>\n";
    s << "</g>\n";
    s << "<rect x=\"" << fmt_px(left) << "\" y=\"" << fmt_px(top) << "\" width=\"" << fmt_px(pw) << "\" height=\""
      << fmt_px(ph) << "\" fill=\"none\" stroke=\"#000000\"/>\n";
    const int xstep = std::max(1, static_cast<int>(std::ceil((xhi - xlo) / 10.0)));
    for (double d = xlo; d <= xhi + 0.5; d += xstep)
        s << "<text x=\"" << fmt_px(X(d) - 12.0) << "\" y=\"" << fmt_px(top + ph + 16.0) << "\" font-size=\"10\">1e"
          << static_cast<int>(d) << "</text>\n";
    const int ystep = std::max(1, static_cast<int>(std::ceil((yhi - ylo) / 10.0)));
    for (double d = ylo; d <= yhi + 0.5; d += ystep)
        s << "<text x=\"" << fmt_px(left - 40.0) << "\" y=\"" << fmt_px(Y(d) + 4.0) << "\" font-size=\"10\">1e"
          << static_cast<int>(d) << "</text>\n";
    s << "<text x=\"" << fmt_px(left + pw / 2.0 - 20.0) << "\" y=\"" << fmt_px(h - 12.0) << "\">" << escape(xlabel)
      << "</text>\n";

    double legend_y = top + 16.0;
    for (const auto& sr : series) {
        std::string d;
        for (std::size_t i = 0; i < sr.x.size() && i < sr.y.size(); ++i) {
            if (!(sr.x[i] > 0.0 && sr.y[i] > 0.0)) continue;
            d += (d.empty() ? "M" : "L") + fmt_px(X(std::log10(sr.x[i]))) + "," + fmt_px(Y(std::log10(sr.y[i])));
        }
        if (!d.empty())
            s << "<path fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.5\" d=\"" << d << "\"/>\n";
        s << "<text x=\"" << fmt_px(left + pw - 90.0) << "\" y=\"" << fmt_px(legend_y) << "\" fill=\"" << sr.color << "\">"
          << escape(sr.label) << "</text>\n";
        legend_y += 16.0;
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace qlert::cli
