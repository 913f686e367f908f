#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "porescope/fluid.hpp"
#include "porescope/poreseg.hpp"
#include "porescope/voxel.hpp"

namespace porescope {

/// One exported CFD node. Positions are kept in µm internally; the CSV
/// interchange format is SI (metres).
struct FlowSample {
    double x_um = 0, y_um = 0;
    double u = 0, v = 0, w = 0; // m/s
    double p = 0;               // Pa
};

struct FlowPlane {
    double z_um = 0;
    std::vector<FlowSample> points;
};

/// Scattered nodal data bucketed into constant-z planes, sorted ascending.
struct NodalField {
    std::vector<FlowPlane> planes;
};

/// Velocity/pressure resampled onto the voxel lattice of a mask.
/// Velocity is zero on solid voxels.
struct VoxelField {
    Dims dims;
    double voxel_size_um = 0;
    std::vector<double> vx, vy, vz; // m/s
    std::vector<double> p;          // Pa

    double speed(std::size_t i) const {
        return std::sqrt(vx[i] * vx[i] + vy[i] * vy[i] + vz[i] * vz[i]);
    }
};

/// Header must be exactly `x,y,z,u,v,w,p`; units m, m/s, Pa. Points are
/// grouped into planes when their z values agree within z_tol_um; groups that
/// smear wider than the tolerance cannot be separated into distinct planes
/// and raise NonMonotonePlanes.
NodalField import_nodal_csv(const std::filesystem::path& path, double z_tol_um = 0.625);

/// Writes every z_stride-th slice of the field as nodal rows (SI units).
/// include_solid keeps the zero-velocity solid samples so planes form a
/// complete rectangular grid.
void export_nodal_csv(const VoxelField& field, const BinaryPoreMask& mask,
                      const std::filesystem::path& path, int z_stride = 3,
                      bool include_solid = true);

/// In-plane interpolation to voxel centres, then linear blending between
/// planes. Planes that form a full rectangular grid (as produced by
/// export_nodal_csv) are interpolated bilinearly, which is exact on affine
/// fields; scattered planes fall back to inverse-distance weighting over the
/// 8 nearest samples (power 2, exact on coincident points).
VoxelField interpolate_to_voxels(const NodalField& field, const BinaryPoreMask& mask);

/// One labelled channel cross-section with its flow numbers.
struct ChannelSection {
    int plane = 0;
    double z_um = 0;
    std::uint32_t label = 0;
    double area_um2 = 0;
    double dhyd_um = 0;   // sqrt(4A/pi)
    double u_mean = 0;    // mean speed, m/s
    double re = 0;        // u_mean * dhyd / nu
};

std::vector<ChannelSection> channel_re(const VoxelField& field, const LabeledPoreSpace& lps,
                                       const FluidProps& props);

struct SectionFlowStats {
    int section = 0;
    double z_min_um = 0, z_max_um = 0;
    double mean_re = 0;
    double mean_velocity = 0; // m/s
    std::size_t n_elements = 0;
};

/// Uniformly weighted averages of the channel elements falling in each
/// z-section.
std::vector<SectionFlowStats> sectional_flow_stats(const std::vector<ChannelSection>& sections,
                                                   const SectionPartition& partition);

} // namespace porescope
