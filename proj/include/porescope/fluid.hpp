#pragma once

#include <cmath>
#include <stdexcept>

namespace porescope {

/// 1 Darcy in m².
inline constexpr double kDarcyM2 = 9.869233e-13;

inline double m2_to_darcy(double k_m2) { return k_m2 / kDarcyM2; }
inline double darcy_to_m2(double k_d) { return k_d * kDarcyM2; }

inline constexpr double kMicron = 1e-6; // µm -> m

/// Constant fluid properties (water near 25 °C by default).
struct FluidProps {
    double density = 997.0;                 // kg/m³
    double dynamic_viscosity = 8.8871e-4;   // Pa·s
    double kinematic_viscosity = 8.93e-7;   // m²/s

    /// ν and µ/ρ are quoted independently; accept up to 0.5% disagreement.
    void validate() const {
        if (density <= 0 || dynamic_viscosity <= 0 || kinematic_viscosity <= 0)
            throw std::invalid_argument("fluid properties must be positive");
        const double nu = dynamic_viscosity / density;
        if (std::abs(nu - kinematic_viscosity) > 0.005 * kinematic_viscosity)
            throw std::invalid_argument("kinematic viscosity inconsistent with mu/rho by more than 0.5%");
    }
};

} // namespace porescope
