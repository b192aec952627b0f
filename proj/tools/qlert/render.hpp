#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qlert/mesh.hpp"

namespace qlert::cli {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

// 256-step colormap: linear interpolation between five anchors
// (68,1,84) (59,82,139) (33,145,140) (94,201,98) (253,231,37) at
// t = 0, 1/4, 1/2, 3/4, 1, rounded to the nearest integer.
const std::array<Rgb, 256>& colormap();
// Index floor(255 * t + 0.5) after clamping t to [0, 1]; NaN maps to 0.
Rgb color_at(double t);
std::string hex(Rgb c);

// Shortest decimal that round-trips (std::to_chars).
std::string fmt(double v);
// Compact form for drawing coordinates.
std::string fmt_px(double v);

// Provenance line: "<prefix> qlert <command> config-hash <hash> seed <seed><suffix>".
struct Provenance {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;

    std::string line(const std::string& prefix, const std::string& suffix = "") const;
};

// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

struct HeatmapOptions {
    std::string title;
    bool log_scale = false;  // log10 of positive values; nonpositive values use the lowest color
    int size = 640;
};

// Flat-shaded triangles coloured by per-element values, region boundaries
// stroked, with a colour bar.
std::string heatmap_svg(const Mesh& mesh, std::span<const double> element_values, const HeatmapOptions& options,
                        const Provenance& provenance);

// Reconstruction overlay: matrix light grey, inclusions dark grey, the
// estimate filled, the true defect boundary stroked.
std::string overlay_svg(const Mesh& mesh, std::span<const char> truth, std::span<const char> estimate, int size,
                        const std::string& title, const Provenance& provenance);

struct Series {
    std::string label;
    std::string color;
    std::vector<double> x, y;  // nonpositive values are skipped
};

// Log-log line plot with decade grid lines.
std::string loglog_svg(std::span<const Series> series, const std::string& title, const std::string& xlabel,
                       const Provenance& provenance);

}  // namespace qlert::cli
