#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

#include "porescope/distance.hpp"
#include "porescope/voxel.hpp"

namespace porescope {

/// Sphere centred at a pore voxel, inscribed in the pore space.
/// The exact EDT yields integer squared radii in voxel units, so containment
/// and overlap tests are carried out in exact integer arithmetic.
struct InscribedSphere {
    int x = 0, y = 0, z = 0;   // voxel coordinates of the centre
    double radius_um = 0;      // distance-map value at the centre
    long long r2_vox = 0;      // squared radius in voxel units, exact
};

/// Exact predicates on lattice spheres (squared lengths only, no rounding):
/// contains: dist(c1,c2) + r2 <= r1; overlaps: dist(c1,c2) < r1 + r2.
bool sphere_contains(const InscribedSphere& outer, const InscribedSphere& inner);
bool spheres_overlap(const InscribedSphere& a, const InscribedSphere& b);

/// Spheres covering the whole pore space with pairwise containment removed:
/// no returned sphere lies wholly inside another (dist(c1,c2)+r2 <= r1).
/// Processed largest-radius first with (z,y,x) tie-break, so the result is
/// deterministic.
std::vector<InscribedSphere> maximal_inscribed_spheres(const DistanceMap& dmap);

struct PoreRecord {
    std::uint32_t id = 0;
    std::array<double, 3> centroid_um = {0, 0, 0};
    double max_inscribed_radius_um = 0;
    std::size_t voxel_count = 0;
};

/// Per-voxel pore labels (0 = solid) plus per-pore records and adjacency.
struct LabeledPoreSpace {
    Dims dims;
    double voxel_size_um = 0;
    std::vector<std::uint32_t> labels;
    std::vector<PoreRecord> pores;                       // ids contiguous 1..P
    std::set<std::pair<std::uint32_t, std::uint32_t>> adjacency; // a < b

    std::uint32_t label_at(int x, int y, int z) const { return labels[dims.idx(x, y, z)]; }
    std::size_t pore_voxels() const;
};

/// Hierarchical sphere clustering followed by an expanding-distance-map grow.
///
/// Spheres are visited by descending radius (ties broken by (z,y,x) of the
/// centre). A sphere overlapped by an already-visited sphere joins that
/// sphere's family (largest seed radius wins, then lexicographic seed); an
/// unoverlapped sphere seeds a new family. Voxels not covered by a sphere
/// centre are then labelled level by level from the highest distance value
/// down: every unlabelled pore voxel at or above the sweep level that touches
/// a family (26-neighbour) joins it, whole waves at a time so the outcome is
/// independent of visit order.
LabeledPoreSpace segment_pores(const DistanceMap& dmap,
                               const std::vector<InscribedSphere>& spheres);

/// Fills lps.adjacency by the 26-neighbour test and returns per-pore
/// coordination numbers indexed by pore id (entry 0 unused).
std::vector<int> pore_connectivity(LabeledPoreSpace& lps);

/// One labelled cross-section on one image plane.
struct ChannelSlice {
    int plane = 0;            // z slice index
    std::uint32_t label = 0;
    std::size_t pixel_count = 0;
    double area_um2 = 0;
    double diameter_um = 0;   // equivalent circle: sqrt(4A/pi)
};

struct SectionStats {
    int section = 0;
    double z_min_um = 0, z_max_um = 0;
    double porosity = 0;
    double channel_diameter_mean_um = 0, channel_diameter_sd_um = 0;
    double connectivity_mean = 0, connectivity_sd = 0;
    std::size_t n_channels = 0; // per-plane labelled cross-sections in the section
    std::size_t n_pores = 0;    // pores whose centroid falls in the section
};

struct StatsReport {
    std::vector<ChannelSlice> channels;      // full per-plane distribution
    std::vector<int> coordination;           // per pore id, entry 0 unused
    std::vector<SectionStats> sections;
    SectionStats sample;                     // whole-volume row (section = -1)
};

/// Per-plane channel diameters from the 3D labels, per-section means and SDs,
/// porosity and pore coordination statistics.
StatsReport architectural_stats(LabeledPoreSpace& lps, const BinaryPoreMask& mask,
                                double section_length_um);

/// Label volume I/O: raw u32 little-endian plus JSON sidecar.
void save_labels(const LabeledPoreSpace& lps, const std::filesystem::path& path_stem);
LabeledPoreSpace load_labels(const std::filesystem::path& path_stem);

} // namespace porescope
