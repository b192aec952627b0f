#include "qlert/materials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qlert/error.hpp"

namespace qlert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

struct Preset {
    const char* name;
    double jc_a_per_mm2;
    double n;
};

constexpr Preset kPresets[] = {
    {"BSCCO-EAS", 85.0, 17.0},        {"BSCCO-AMSC", 135.0, 16.0},
    {"YBCO-AMSC", 136.0, 28.0},       {"YBCO-SP-SF12100", 290.0, 30.0},
    {"YBCO-SP-SCS12050", 210.0, 36.0},
};

double fit_loglog_slope(std::span<const double> e, std::span<const double> q) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        double x = std::log(e[i]);
        double y = std::log(q[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

MaterialModel::MaterialModel(ConductivityLaw law, Regularization reg) : law_(std::move(law)), reg_(reg) {
    require(reg_.e_floor > 0.0 && std::isfinite(reg_.e_floor), "regularization E_floor must be positive");
    require(reg_.sigma_cap > 0.0, "regularization sigma_cap must be positive");
    build_segments();
}

MaterialModel MaterialModel::linear(double sigma0) { return MaterialModel(LinearLaw{sigma0}); }

MaterialModel MaterialModel::weighted_power(double theta, double p, Regularization reg) {
    return MaterialModel(WeightedPowerLaw{theta, p}, reg);
}

MaterialModel MaterialModel::power_law(double jc, double n, double e0, Regularization reg) {
    return MaterialModel(PowerLawEJ{jc, n, e0}, reg);
}

MaterialModel MaterialModel::tabulated(std::vector<double> field, std::vector<double> sigma, Regularization reg) {
    return MaterialModel(TabulatedLaw{std::move(field), std::move(sigma)}, reg);
}

void MaterialModel::build_segments() {
    segments_.clear();
    std::visit(Overloaded{
                   [&](const LinearLaw& l) {
                       require(l.sigma0 > 0.0 && std::isfinite(l.sigma0), "linear sigma0 must be positive");
                       segments_.push_back({0.0, kInf, 1.0, l.sigma0, 0.0});
                   },
                   [&](const WeightedPowerLaw& w) {
                       require(w.theta > 0.0 && std::isfinite(w.theta), "weighted-power theta must be positive");
                       require(w.p > 1.0 && std::isfinite(w.p), "weighted-power exponent p must exceed 1");
                       segments_.push_back({0.0, kInf, 1.0, w.theta, w.p - 2.0});
                   },
                   [&](const PowerLawEJ& j) {
                       require(j.jc > 0.0 && std::isfinite(j.jc), "power law Jc must be positive");
                       require(j.n >= 1.0 && std::isfinite(j.n), "power law n must be at least 1");
                       require(j.e0 > 0.0 && std::isfinite(j.e0), "power law E0 must be positive");
                       segments_.push_back({0.0, kInf, j.e0, j.jc / j.e0, (1.0 - j.n) / j.n});
                   },
                   [&](const TabulatedLaw& t) {
                       require(t.field.size() >= 2 && t.field.size() == t.sigma.size(),
                               "tabulated law needs at least two (E, sigma) pairs of equal length");
                       for (std::size_t i = 0; i < t.field.size(); ++i) {
                           require(t.field[i] > 0.0 && t.sigma[i] > 0.0, "tabulated E and sigma must be positive");
                           if (i > 0) require(t.field[i] > t.field[i - 1], "tabulated E must be strictly increasing");
                       }
                       std::vector<double> slopes;
                       for (std::size_t i = 0; i + 1 < t.field.size(); ++i)
                           slopes.push_back(std::log(t.sigma[i + 1] / t.sigma[i]) / std::log(t.field[i + 1] / t.field[i]));
                       require(slopes.front() > -2.0, "tabulated sigma decays too fast at small E (Q would diverge)");
                       segments_.push_back({0.0, t.field[0], t.field[0], t.sigma[0], slopes.front()});
                       for (std::size_t i = 0; i + 1 < t.field.size(); ++i)
                           segments_.push_back({t.field[i], t.field[i + 1], t.field[i], t.sigma[i], slopes[i]});
                       segments_.push_back({t.field.back(), kInf, t.field.back(), t.sigma.back(), slopes.back()});
                   },
               },
               law_);
}

std::string MaterialModel::kind_name() const {
    return std::visit(Overloaded{
                          [](const LinearLaw&) { return std::string("linear"); },
                          [](const WeightedPowerLaw&) { return std::string("weighted-power"); },
                          [](const PowerLawEJ&) { return std::string("ej-power-law"); },
                          [](const TabulatedLaw&) { return std::string("custom-tabulated"); },
                      },
                      law_);
}

double MaterialModel::Segment::sigma(double e) const {
    if (slope == 0.0) return s_ref;
    if (e == 0.0) return slope < 0.0 ? kInf : 0.0;
    return s_ref * std::pow(e / e_ref, slope);
}

double MaterialModel::Segment::antiderivative(double e) const {
    if (e == 0.0) return 0.0;
    return sigma(e) * e * e / (slope + 2.0);
}

const MaterialModel::Segment& MaterialModel::segment_at(double e) const {
    for (const auto& s : segments_) {
        if (e < s.hi) return s;
    }
    return segments_.back();
}

double MaterialModel::sigma_unregularized(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("field magnitude must be non-negative");
    return segment_at(e).sigma(e);
}

double MaterialModel::sigma(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("field magnitude must be non-negative");
    return std::min(reg_.sigma_cap, sigma_unregularized(std::max(e, reg_.e_floor)));
}

double MaterialModel::energy_density_unregularized(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("field magnitude must be non-negative");
    double q = 0.0;
    for (const auto& s : segments_) {
        if (s.lo >= e) break;
        q += s.antiderivative(std::min(e, s.hi)) - s.antiderivative(s.lo);
    }
    return q;
}

// Integral of min(cap, sigma(xi)) xi over [a, b] with 0 < a <= b.
double MaterialModel::capped_integral(double a, double b) const {
    const double cap = reg_.sigma_cap;
    double total = 0.0;
    for (const auto& s : segments_) {
        double lo = std::max(a, s.lo);
        double hi = std::min(b, s.hi);
        if (!(lo < hi)) continue;
        auto capped_part = [&](double x, double y) { return cap * 0.5 * (y * y - x * x); };
        auto free_part = [&](double x, double y) { return s.antiderivative(y) - s.antiderivative(x); };
        if (s.slope == 0.0) {
            total += s.s_ref >= cap ? capped_part(lo, hi) : free_part(lo, hi);
            continue;
        }
        // sigma crosses the cap at e_c.
        const double e_c = s.e_ref * std::pow(cap / s.s_ref, 1.0 / s.slope);
        if (s.slope < 0.0) {
            double mid = std::clamp(e_c, lo, hi);
            total += capped_part(lo, mid) + free_part(mid, hi);
        } else {
            double mid = std::clamp(e_c, lo, hi);
            total += free_part(lo, mid) + capped_part(mid, hi);
        }
    }
    return total;
}

double MaterialModel::energy_density(double e) const {
    if (!(e >= 0.0)) throw InvalidArgument("field magnitude must be non-negative");
    const double floor = reg_.e_floor;
    const double s_floor = std::min(reg_.sigma_cap, sigma_unregularized(floor));
    const double below = std::min(e, floor);
    double q = 0.5 * s_floor * below * below;
    if (e > floor) q += capped_integral(floor, e);
    return q;
}

bool MaterialModel::field_dependent() const {
    return std::any_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.slope != 0.0; });
}

bool MaterialModel::sigma_nonincreasing() const {
    return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.slope <= 0.0; });
}

MaterialModel small_field_limit(const MaterialModel& model, double p0) {
    require(p0 > 1.0, "small_field_limit: p0 must exceed 1");
    const double e = model.reference_field() * 1e-10;
    const double theta = p0 * model.energy_density_unregularized(e) / std::pow(e, p0);
    return MaterialModel::weighted_power(theta, p0, model.regularization());
}

GrowthExponents MaterialModel::exponents() const {
    if (claimed_) return *claimed_;
    return {segments_.back().slope + 2.0, segments_.front().slope + 2.0};
}

double MaterialModel::reference_field() const {
    if (const auto* j = std::get_if<PowerLawEJ>(&law_)) return j->e0;
    return 1.0;
}

MaterialModel material_preset(std::string_view name, Regularization reg) {
    for (const auto& p : kPresets) {
        if (name == p.name) return MaterialModel::power_law(p.jc_a_per_mm2 * 1e6, p.n, 1e-4, reg);
    }
    throw InvalidArgument("unknown material preset '" + std::string(name) + "'");
}

std::vector<std::string> material_preset_names() {
    std::vector<std::string> out;
    for (const auto& p : kPresets) out.emplace_back(p.name);
    return out;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    require(lo > 0.0 && hi > lo, "log_grid needs 0 < lo < hi");
    require(per_decade > 0, "log_grid needs a positive density");
    const int n = std::max(1, static_cast<int>(std::ceil(per_decade * std::log10(hi / lo) - 1e-9)));
    std::vector<double> out;
    for (int i = 0; i <= n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n));
    out.front() = lo;
    out.back() = hi;
    return out;
}

ValidationReport validate_energy_density(const std::function<double(double)>& q, GrowthExponents claimed,
                                         double reference_field, std::span<const double> grid_in) {
    std::vector<double> grid(grid_in.begin(), grid_in.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    require(!grid.empty() && grid.front() > 0.0, "validation grid must contain positive fields");
    require(grid.front() <= reference_field * 1e-4 * (1 + 1e-9) && grid.back() >= reference_field * 1e4 * (1 - 1e-9),
            "validation grid must span 4 decades below and above the reference field");
    require(grid.size() >= 16, "validation grid too small");

    ValidationReport r;
    std::vector<double> qv(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) qv[i] = q(grid[i]);

    // Convexity via nondecreasing chord slopes (including the chord from 0).
    r.convex = std::all_of(qv.begin(), qv.end(), [](double v) { return v > 0.0 && std::isfinite(v); });
    double prev = qv[0] / grid[0];
    for (std::size_t i = 0; i + 1 < grid.size() && r.convex; ++i) {
        double slope = (qv[i + 1] - qv[i]) / (grid[i + 1] - grid[i]);
        if (slope < prev - 1e-9 * std::abs(prev)) {
            r.convex = false;
            std::ostringstream msg;
            msg << "A2: convexity fails near E=" << grid[i];
            r.messages.push_back(msg.str());
        }
        prev = slope;
    }

    auto fit = [&](double lo, double hi) {
        std::vector<double> e, v;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] >= lo * (1 - 1e-12) && grid[i] <= hi * (1 + 1e-12) && qv[i] > 0.0) {
                e.push_back(grid[i]);
                v.push_back(qv[i]);
            }
        }
        require(e.size() >= 2, "validation grid needs at least two points in the end decades");
        return fit_loglog_slope(e, v);
    };
    r.fitted_small_exponent = fit(grid.front(), grid.front() * 10.0);
    r.fitted_large_exponent = fit(grid.back() / 10.0, grid.back());
    r.small_exponent_ok = std::abs(r.fitted_small_exponent - claimed.p0) <= kExponentTolerance;
    r.large_exponent_ok = std::abs(r.fitted_large_exponent - claimed.p) <= kExponentTolerance;
    if (!r.small_exponent_ok) r.messages.push_back("small-field exponent differs from claimed p0");
    if (!r.large_exponent_ok) r.messages.push_back("large-field exponent differs from claimed p");

    r.q_lower = kInf;
    r.q_upper = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double t = grid[i] / reference_field;
        double bound = std::max(std::pow(t, claimed.p0), std::pow(t, claimed.p));
        r.q_lower = std::min(r.q_lower, qv[i] / bound);
        r.q_upper = std::max(r.q_upper, qv[i] / bound);
    }
    r.a3_holds = claimed.p0 > 1.0 && claimed.p0 <= claimed.p && r.q_lower > 0.0 && std::isfinite(r.q_upper) &&
                 r.small_exponent_ok && r.large_exponent_ok;
    if (!r.a3_holds) r.messages.push_back("A3 violated");

    double lo = kInf, hi = 0.0;
    for (std::size_t i = 0; i < grid.size() && grid[i] <= grid.front() * 1e4 * (1 + 1e-12); ++i) {
        double ratio = qv[i] / std::pow(grid[i], claimed.p0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    r.a4_spread = hi > 0.0 ? (hi - lo) / hi : kInf;
    r.a4_holds = r.a4_spread <= 0.05;
    if (!r.a4_holds) r.messages.push_back("A4 violated: Q/E^p0 has no limit as E -> 0");
    return r;
}

ValidationReport validate_assumptions(const MaterialModel& model, std::span<const double> grid) {
    return validate_energy_density([&](double e) { return model.energy_density_unregularized(e); },
                                   model.exponents(), model.reference_field(), grid);
}

}  // namespace qlert
