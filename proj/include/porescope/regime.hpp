#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "porescope/errors.hpp"
#include "porescope/fluid.hpp"

namespace porescope {

struct RegimePoint {
    double velocity_mps = 0;       // inlet velocity
    double dp_per_length_pa_m = 0; // pressure drop per unit length
};

/// Pressure-drop curve of one sample section. Velocities must be strictly
/// increasing and positive, pressure drops positive.
struct RegimeCurve {
    std::string section;
    std::vector<RegimePoint> points;
    double sample_length_m = 0; // optional metadata
    double sample_area_m2 = 0;

    void validate() const;
};

struct DarcyFit {
    double slope = 0; // mu/k, Pa·s/m²
    double k_m2 = 0;
    double k_darcy = 0;
    double r_squared = 0; // uncentred (through-origin fit)
    std::size_t n = 0;
};

/// Zero-intercept least squares of dp/L against v restricted to v <= v_max.
DarcyFit fit_darcy(const RegimeCurve& curve, const FluidProps& props, double v_max);

struct ForchheimerFit {
    double k_m2 = 0;
    double k_darcy = 0;
    double beta_per_m = 0;
    double r_squared = 0;
    double condition = 0; // of the 2x2 normal system
};

/// Least squares of dp/L = (mu/k) v + beta rho v², no constant term.
ForchheimerFit fit_forchheimer(const RegimeCurve& curve, const FluidProps& props);

/// Darcy line anchored on the lowest-velocity pair of points; walking up the
/// curve, the first point whose relative deviation from that line exceeds
/// deviation_tol is the transition. Returns nothing when every point fits.
std::optional<double> detect_transition(const RegimeCurve& curve, double deviation_tol = 0.05);

struct PressureDropRow {
    std::string section; // "average" for the sample row
    double velocity_mps = 0;
    double dp_mpa_per_m = 0;
};

/// Per-section dp/L at each sampled velocity plus a sample-average row,
/// reported in MPa/m.
std::vector<PressureDropRow> pressure_drop_report(const std::vector<RegimeCurve>& curves);

/// CSV: section,inlet_velocity_mps,dp_per_length_pa_per_m
std::vector<RegimeCurve> load_regime_csv(const std::filesystem::path& path);

} // namespace porescope
