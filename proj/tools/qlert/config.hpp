#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlert/electrodes.hpp"
#include "qlert/materials.hpp"
#include "qlert/mesh.hpp"
#include "qlert/solver.hpp"
#include "qlert/tomography.hpp"

namespace qlert::cli {

// Schema violation; `path` is the dotted key path (e.g. "geometry.outer_radius_m").
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

enum class Command { solve, sweep, oracle, tomo };

Command parse_command(const std::string& name);  // throws ConfigError
const char* command_name(Command c);

struct GeometryConfig {
    std::string shape;  // disk | annulus | cable
    double outer_radius = 0.0;
    double inner_radius = 0.0;  // annulus
    std::vector<Point2> petal_centers;
    double petal_radius = 0.0;
    int refinement = 1;

    Mesh build() const;
    std::set<int> inclusion_labels() const;
};

struct MaterialsConfig {
    MaterialModel matrix;
    std::optional<MaterialModel> inclusion;  // required when the geometry has inclusions
    std::optional<MaterialModel> defect;     // default: linear, defect_factor * matrix sigma
    double defect_factor = 1e-3;

    MaterialMap map_for(const Mesh& mesh) const;
    MaterialModel defect_model() const;
};

struct BoundaryConfig {
    std::string profile = "x-linear";
    double amplitude = 1.0;  // V
    std::optional<ElectrodeLayout> electrodes;
};

struct SolveTask {
    ForwardModel model = ForwardModel::nonlinear;
    int image_size = 640;  // px
};

struct SweepTask {
    double lambda_max = 1e-1;
    double lambda_min = 1e-8;
    int per_decade = 3;
    LimitKind limit = LimitKind::pec;
    double p0 = 2.0;
};

struct OracleTask {
    double r = 10.0;
    std::vector<int> refinements{2, 3, 4};
    std::vector<double> margin_radii{10.0, 20.0, 40.0};
    std::vector<double> ratio_radii{10.0, 100.0, 1000.0};
    double big_l = 20.0;
    double lambda_pp1 = 1.0;
    int cycles = 6;
};

struct DefectDisc {
    Point2 center;
    double radius = 0.0;
};

struct TomoTask {
    ForwardModel forward = ForwardModel::nonlinear;
    double eta = 0.01;
    std::uint64_t seed = 0;
    std::vector<double> test_radii;
    double test_spacing = 0.0;
    std::vector<DefectDisc> defect;
    std::optional<double> delta;  // S; default: 2-norm of the injected noise
    double tol_rel = 1e-9;        // acceptance tolerance relative to max |G_BG|
    int image_size = 640;
};

struct RunConfig {
    Command command = Command::solve;
    std::string hash;  // 16 hex digits over the canonical config text
    std::optional<GeometryConfig> geometry;
    std::optional<MaterialsConfig> materials;
    std::optional<BoundaryConfig> boundary;
    NonlinearSolveConfig solver;
    std::optional<SolveTask> solve;
    std::optional<SweepTask> sweep;
    std::optional<OracleTask> oracle;
    std::optional<TomoTask> tomo;
};

// Parses and validates the config for `command`. Blocks the command does not
// use may be absent, but every present key must be known. Throws ConfigError
// (schema), IoError (unreadable file).
RunConfig parse_config(const std::string& text, Command command);
RunConfig load_config(const std::filesystem::path& path, Command command);

std::string fnv1a_hex(const std::string& text);

}  // namespace qlert::cli
