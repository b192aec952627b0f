#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qlert {

// sigma = sigma0.
struct LinearLaw {
    double sigma0 = 1.0;
};

// sigma = theta * E^(p-2), energy theta * E^p / p.
struct WeightedPowerLaw {
    double theta = 1.0;
    double p = 2.0;
};

// Superconductor E-J power law: sigma = (Jc/E0) (E/E0)^((1-n)/n).
struct PowerLawEJ {
    double jc = 1.0;  // A/m^2
    double n = 1.0;
    double e0 = 1e-4;  // V/m
};

// sigma(E) given at strictly increasing field samples, interpolated linearly in
// log-log coordinates and extrapolated with the end slopes.
struct TabulatedLaw {
    std::vector<double> field;
    std::vector<double> sigma;
};

using ConductivityLaw = std::variant<LinearLaw, WeightedPowerLaw, PowerLawEJ, TabulatedLaw>;

// The solver sees sigma_r(E) = min(sigma_cap, sigma(max(E, e_floor))).
struct Regularization {
    double e_floor = 1e-12;   // V/m
    double sigma_cap = 1e16;  // S/m
};

// Claimed growth exponents: p (large fields) and p0 (small fields).
struct GrowthExponents {
    double p = 2.0;
    double p0 = 2.0;
};

class MaterialModel {
public:
    MaterialModel() = default;
    explicit MaterialModel(ConductivityLaw law, Regularization reg = {});

    static MaterialModel linear(double sigma0);
    static MaterialModel weighted_power(double theta, double p, Regularization reg = {});
    static MaterialModel power_law(double jc, double n, double e0, Regularization reg = {});
    static MaterialModel tabulated(std::vector<double> field, std::vector<double> sigma, Regularization reg = {});

    const ConductivityLaw& law() const noexcept { return law_; }
    const Regularization& regularization() const noexcept { return reg_; }
    std::string kind_name() const;

    // Regularized conductivity, energy density and current magnitude. The
    // energy density is the exact integral of the regularized sigma, so
    // d/dE energy_density = current.
    double sigma(double e) const;
    double energy_density(double e) const;
    double current(double e) const { return sigma(e) * e; }

    double sigma_unregularized(double e) const;
    double energy_density_unregularized(double e) const;

    // False only for models whose conductivity does not depend on the field.
    bool field_dependent() const;
    // True when sigma never increases with the field (Picard is then a descent method).
    bool sigma_nonincreasing() const;

    // Exponents implied by the law (overridden by set_claimed_exponents).
    GrowthExponents exponents() const;
    void set_claimed_exponents(GrowthExponents g) { claimed_ = g; }

    // Reference field used for the growth bounds (E0 of the E-J law, else 1 V/m).
    double reference_field() const;

private:
    // sigma = s_ref * (E / e_ref)^slope on [lo, hi).
    struct Segment {
        double lo;
        double hi;
        double e_ref;
        double s_ref;
        double slope;

        double sigma(double e) const;
        double antiderivative(double e) const;  // of sigma(E) E, zero at E = 0
    };

    void build_segments();
    const Segment& segment_at(double e) const;
    double capped_integral(double a, double b) const;

    ConductivityLaw law_ = LinearLaw{};
    Regularization reg_{};
    std::optional<GrowthExponents> claimed_;
    std::vector<Segment> segments_;
};

// Weighted p0-power model with the small-field weight of `model`:
// theta = p0 * lim Q(E) / E^p0, evaluated deep in the small-field range.
MaterialModel small_field_limit(const MaterialModel& model, double p0);

// Region label -> model.
using MaterialMap = std::map<int, MaterialModel>;

// Published E-J tape presets (Jc converted from A/mm^2, E0 = 1e-4 V/m). Throws
// InvalidArgument for unknown names.
MaterialModel material_preset(std::string_view name, Regularization reg = {});
std::vector<std::string> material_preset_names();

struct ValidationReport {
    bool convex = false;
    double fitted_small_exponent = 0.0;
    double fitted_large_exponent = 0.0;
    bool small_exponent_ok = false;
    bool large_exponent_ok = false;
    bool a3_holds = false;
    double q_lower = 0.0;  // sandwich constants over the grid
    double q_upper = 0.0;
    bool a4_holds = false;
    double a4_spread = 0.0;  // relative spread of Q/E^p0 over the lowest decades
    std::vector<std::string> messages;

    bool all_ok() const { return convex && small_exponent_ok && large_exponent_ok && a3_holds && a4_holds; }
};

inline constexpr double kExponentTolerance = 0.05;

// Checks convexity, growth exponents, the two-sided power bound and the
// existence of lim Q/E^p0 on the sampled grid, using the unregularized model.
// The grid must reach 4 decades below and above the reference field.
ValidationReport validate_assumptions(const MaterialModel& model, std::span<const double> grid);

// Same checks for an arbitrary energy density with claimed exponents.
ValidationReport validate_energy_density(const std::function<double(double)>& q, GrowthExponents claimed,
                                         double reference_field, std::span<const double> grid);

// Log-uniform grid of `per_decade` points per decade on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace qlert
