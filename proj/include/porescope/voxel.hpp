#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "porescope/errors.hpp"

namespace porescope {

/// Volume dimensions plus flat indexing. Data is z-major slice order:
/// index = x + nx*(y + ny*z).
struct Dims {
    int nx = 0, ny = 0, nz = 0;

    std::size_t size() const { return std::size_t(nx) * ny * nz; }
    std::size_t idx(int x, int y, int z) const {
        return std::size_t(x) + std::size_t(nx) * (std::size_t(y) + std::size_t(ny) * z);
    }
    bool inside(int x, int y, int z) const {
        return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
    }
    bool operator==(const Dims&) const = default;
};

/// 3D 8-bit grayscale image with physical voxel size.
struct VoxelGrid {
    Dims dims;
    double voxel_size_um = 6.25;
    std::vector<std::uint8_t> data;

    std::uint8_t at(int x, int y, int z) const { return data[dims.idx(x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return data[dims.idx(x, y, z)]; }
};

/// Pore/solid mask on the same lattice (true = void/fluid).
struct BinaryPoreMask {
    Dims dims;
    double voxel_size_um = 6.25;
    std::vector<std::uint8_t> pore; // 0 solid, 1 pore

    bool is_pore(int x, int y, int z) const { return pore[dims.idx(x, y, z)] != 0; }
    std::size_t pore_count() const;
    double porosity() const;
};

enum class VolumeFormat { RawSidecar, PgmStack };

/// Reads `<name>.raw` + `<name>.json` sidecar, or a directory of binary P5
/// `slice_%04d.pgm` files. Raw data is little-endian u8 so byte order is moot;
/// the sidecar carries dims and voxel size.
VoxelGrid load_volume(const std::filesystem::path& path, VolumeFormat format);

/// Writes the raw+sidecar pair next to each other (`path` without extension).
void save_volume(const VoxelGrid& grid, const std::filesystem::path& path_stem);

/// Writes a PGM (P5) slice stack into `dir` as slice_0000.pgm, slice_0001.pgm, ...
void save_pgm_stack(const VoxelGrid& grid, const std::filesystem::path& dir);

/// Threshold segmentation. Pore iff gray < threshold (void is dark in µCT);
/// set invert to flip the comparison for bright-pore data.
BinaryPoreMask binarise(const VoxelGrid& grid, int threshold, bool invert = false);

/// Renders a mask back to an 8-bit grid, pore = 0 and solid = 255, so that
/// binarise(render, t) reproduces the mask for any threshold in (0,255].
VoxelGrid render_mask(const BinaryPoreMask& mask);

struct CleanResult {
    BinaryPoreMask mask;
    int components_removed = 0;
    std::size_t voxels_removed = 0;
};

/// Removes pore components smaller than min_component_voxels and components
/// that do not reach both the inlet (z=0) and outlet (z=nz-1) faces.
/// Throws EmptyPoreSpace when nothing spans inlet to outlet.
CleanResult clean_pore_space(const BinaryPoreMask& mask, std::size_t min_component_voxels,
                             int connectivity = 26);

/// Z-axis partition into sections of equal slice count; the last section
/// absorbs the remainder. Section thickness is floor(section_length/voxel) slices.
struct SectionPartition {
    int nz = 0;
    double voxel_size_um = 0;
    std::vector<int> z_begin; // slice index where each section starts
    std::vector<int> z_end;   // one past the last slice of each section

    int count() const { return int(z_begin.size()); }
    int section_of_slice(int z) const;
    double z_min_um(int s) const { return z_begin[s] * voxel_size_um; }
    double z_max_um(int s) const { return z_end[s] * voxel_size_um; }
};

SectionPartition make_sections(int nz, double voxel_size_um, double section_length_um);

struct SectionPorosity {
    int section = 0;
    double z_min_um = 0, z_max_um = 0;
    double porosity = 0;
};

std::vector<SectionPorosity> sectional_porosity(const BinaryPoreMask& mask,
                                                double section_length_um);

} // namespace porescope
