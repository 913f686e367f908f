#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "porescope/distance.hpp"
#include "porescope/fluid.hpp"
#include "porescope/poreseg.hpp"

namespace porescope {

struct NetworkPore {
    std::uint32_t id = 0;          // 1-based, contiguous
    Eigen::Vector3d centroid_um = Eigen::Vector3d::Zero();
    double radius_um = 0;          // max inscribed radius of the label
};

struct Throat {
    std::uint32_t a = 0, b = 0;    // pore ids
    double radius_um = 0;          // max distance-map value on the shared boundary
    double length_um = 0;          // centroid gap minus both radii, >= 1 voxel
    double conductance = 0;        // m³/(Pa·s), filled by assign_conductances
};

struct PoreNetwork {
    std::vector<NetworkPore> pores;
    std::vector<Throat> throats;
    std::vector<std::uint32_t> inlet_pores;   // touch z = 0
    std::vector<std::uint32_t> outlet_pores;  // touch z = nz-1
    Eigen::Vector3d domain_um = Eigen::Vector3d::Zero(); // physical extents
    double voxel_size_um = 0;

    double sample_area_m2() const { return domain_um.x() * domain_um.y() * kMicron * kMicron; }
    double sample_length_m() const { return domain_um.z() * kMicron; }
};

/// One network pore per label, one throat per 26-neighbour adjacency pair.
/// Throws NoSpanningPath when no inlet pore reaches an outlet pore.
PoreNetwork extract_network(const LabeledPoreSpace& lps, const DistanceMap& dmap);

/// Hagen–Poiseuille: g = pi r^4 / (8 mu L), inputs in µm, result in m³/(Pa·s).
/// shape_factor scales g for non-circular channels (1 = circular).
double throat_conductance(double radius_um, double length_um, const FluidProps& props,
                          double shape_factor = 1.0);

void assign_conductances(PoreNetwork& net, const FluidProps& props, double shape_factor = 1.0);

struct PressureSolution {
    std::vector<double> pore_pressure;  // Pa, per pore id order
    std::vector<double> throat_flux;    // m³/s, signed a -> b
    std::vector<double> boundary_flux;  // m³/s injected (+) or drained (-) per pore
    double total_flux = 0;              // m³/s through the sample
    double residual = 0;                // max pore imbalance / max |throat flux|
    int iterations = 0;
};

/// Flux conservation at every interior pore with Dirichlet boundary pores,
/// solved iteratively to relative residual 1e-10 (or 10·P iterations).
/// When a pore touches both faces (single-label channels), the sample faces
/// are introduced as virtual pressure nodes tied to each boundary pore by a
/// throat of the pore's own radius over the centroid-to-face gap.
PressureSolution solve_pressure(const PoreNetwork& net, double p_in, double p_out,
                                const FluidProps& props);

struct PermeabilityResult {
    double k_m2 = 0;
    double k_darcy = 0;
};

/// Darcy: k = Q mu L / (A dP).
PermeabilityResult permeability(const PressureSolution& sol, double area_m2, double length_m,
                                const FluidProps& props, double dp_pa);

struct TortuosityDistribution {
    std::vector<double> samples;   // one per completed particle
    double mean = 0, sd = 0;
    int trapped = 0;               // particles with no outgoing flux, excluded
    std::vector<double> bin_edges; // histogram over samples
    std::vector<int> counts;
};

/// Flux-weighted random walk of virtual particles from inlet to outlet.
/// Inlet pore choice is proportional to injected flux; each hop takes an
/// outgoing (positive-flux) throat with probability proportional to its flux.
/// Per-particle RNG streams are derived from (seed, particle index), so the
/// result is independent of evaluation order.
TortuosityDistribution particle_tortuosity(const PoreNetwork& net, const PressureSolution& sol,
                                           int n_particles, std::uint64_t seed);

// JSON round-trip: {pores:[{id,x,y,z,r}], throats:[{a,b,r,l,g}], ...}
void save_network(const PoreNetwork& net, const std::filesystem::path& path);
PoreNetwork load_network(const std::filesystem::path& path);

} // namespace porescope
