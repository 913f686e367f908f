#pragma once

#include <vector>

#include "porescope/voxel.hpp"

namespace porescope {

/// Exact Euclidean distance to the nearest solid voxel centre, in µm.
/// Zero on solid voxels. If the mask has no solid at all, pore distances are
/// the lattice diagonal (nothing to be inscribed against).
struct DistanceMap {
    Dims dims;
    double voxel_size_um = 0;
    std::vector<double> distance_um;

    double at(int x, int y, int z) const { return distance_um[dims.idx(x, y, z)]; }
};

/// Exact EDT via the per-axis parabolic lower-envelope scan on squared
/// distances, O(N) per axis. Not a chamfer approximation.
DistanceMap distance_transform(const BinaryPoreMask& mask);

} // namespace porescope
