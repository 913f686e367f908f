#include "porescope/voxel.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace porescope {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t BinaryPoreMask::pore_count() const {
    return std::size_t(std::count_if(pore.begin(), pore.end(), [](std::uint8_t v) { return v != 0; }));
}

double BinaryPoreMask::porosity() const {
    return dims.size() == 0 ? 0.0 : double(pore_count()) / double(dims.size());
}

// ---------------------------------------------------------------------------
// volume I/O

static VoxelGrid load_raw_sidecar(const fs::path& path) {
    fs::path raw = path;
    fs::path sidecar = path;
    if (raw.extension() == ".raw") {
        sidecar.replace_extension(".json");
    } else if (raw.extension() == ".json") {
        raw.replace_extension(".raw");
    } else {
        raw += ".raw";
        sidecar += ".json";
    }
    if (!fs::exists(sidecar))
        throw MissingSidecar("missing sidecar: " + sidecar.string());
    std::ifstream sj(sidecar);
    json meta;
    try {
        sj >> meta;
    } catch (const json::exception& e) {
        throw MissingSidecar("unreadable sidecar " + sidecar.string() + ": " + e.what());
    }
    if (!meta.contains("dims") || !meta["dims"].is_array() || meta["dims"].size() != 3)
        throw MissingSidecar("sidecar " + sidecar.string() + ": field 'dims' must be a 3-element array");
    if (!meta.contains("voxel_size_um"))
        throw MissingSidecar("sidecar " + sidecar.string() + ": field 'voxel_size_um' is required");

    VoxelGrid grid;
    grid.dims = {meta["dims"][0].get<int>(), meta["dims"][1].get<int>(), meta["dims"][2].get<int>()};
    grid.voxel_size_um = meta["voxel_size_um"].get<double>();
    if (grid.dims.nx < 1 || grid.dims.ny < 1 || grid.dims.nz < 1)
        throw MissingSidecar("sidecar " + sidecar.string() + ": field 'dims' entries must be >= 1");
    if (grid.voxel_size_um <= 0)
        throw MissingSidecar("sidecar " + sidecar.string() + ": field 'voxel_size_um' must be > 0");

    std::ifstream f(raw, std::ios::binary);
    if (!f)
        throw InputError("cannot open raw volume: " + raw.string());
    f.seekg(0, std::ios::end);
    const auto bytes = std::size_t(f.tellg());
    if (bytes != grid.dims.size())
        throw SizeMismatch("raw volume " + raw.string() + ": " + std::to_string(bytes) +
                           " bytes, sidecar dims imply " + std::to_string(grid.dims.size()));
    f.seekg(0);
    grid.data.resize(bytes);
    f.read(reinterpret_cast<char*>(grid.data.data()), std::streamsize(bytes));
    return grid;
}

// Binary P5 header: "P5\n<w> <h>\n<maxval>\n" with optional '#' comments.
static bool read_pgm(const fs::path& p, int& w, int& h, std::vector<std::uint8_t>& px) {
    std::ifstream f(p, std::ios::binary);
    if (!f) return false;
    std::string magic;
    f >> magic;
    if (magic != "P5") throw InconsistentSlices(p.string() + ": not a binary P5 PGM");
    auto next_int = [&f, &p]() {
        for (;;) {
            int c = f.peek();
            if (c == '#') {
                std::string line;
                std::getline(f, line);
            } else if (std::isspace(c)) {
                f.get();
            } else {
                break;
            }
        }
        long v = -1;
        f >> v;
        if (!f) throw InconsistentSlices(p.string() + ": truncated PGM header");
        return v;
    };
    w = int(next_int());
    h = int(next_int());
    long maxval = next_int();
    if (maxval != 255) throw InconsistentSlices(p.string() + ": PGM maxval must be 255");
    f.get(); // single whitespace after maxval
    px.resize(std::size_t(w) * h);
    f.read(reinterpret_cast<char*>(px.data()), std::streamsize(px.size()));
    if (!f) throw InconsistentSlices(p.string() + ": truncated PGM pixel data");
    return true;
}

static VoxelGrid load_pgm_stack(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw InputError("PGM stack path is not a directory: " + dir.string());
    std::vector<fs::path> slices;
    char name[32];
    for (int i = 0;; ++i) {
        std::snprintf(name, sizeof name, "slice_%04d.pgm", i);
        fs::path p = dir / name;
        if (!fs::exists(p)) break;
        slices.push_back(p);
    }
    if (slices.empty())
        throw InputError("no slice_0000.pgm found in " + dir.string());
    // contiguity check: any further slice_* files beyond the contiguous run are a gap
    std::size_t total = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string n = e.path().filename().string();
        if (n.rfind("slice_", 0) == 0 && e.path().extension() == ".pgm") ++total;
    }
    if (total != slices.size())
        throw InconsistentSlices(dir.string() + ": slice indices are not contiguous from 0");

    VoxelGrid grid;
    std::vector<std::uint8_t> px;
    for (std::size_t k = 0; k < slices.size(); ++k) {
        int w = 0, h = 0;
        read_pgm(slices[k], w, h, px);
        if (k == 0) {
            grid.dims = {w, h, int(slices.size())};
            grid.data.resize(grid.dims.size());
        } else if (w != grid.dims.nx || h != grid.dims.ny) {
            throw InconsistentSlices(slices[k].string() + ": slice size differs from slice_0000");
        }
        std::copy(px.begin(), px.end(), grid.data.begin() + std::ptrdiff_t(k * px.size()));
    }
    return grid;
}

VoxelGrid load_volume(const fs::path& path, VolumeFormat format) {
    return format == VolumeFormat::RawSidecar ? load_raw_sidecar(path) : load_pgm_stack(path);
}

void save_volume(const VoxelGrid& grid, const fs::path& path_stem) {
    fs::path raw = path_stem;
    raw += ".raw";
    fs::path sidecar = path_stem;
    sidecar += ".json";
    std::ofstream f(raw, std::ios::binary);
    if (!f) throw InputError("cannot write " + raw.string());
    f.write(reinterpret_cast<const char*>(grid.data.data()), std::streamsize(grid.data.size()));
    json meta = {{"dims", {grid.dims.nx, grid.dims.ny, grid.dims.nz}},
                 {"voxel_size_um", grid.voxel_size_um}};
    std::ofstream sj(sidecar);
    sj << meta.dump(2) << "\n";
}

void save_pgm_stack(const VoxelGrid& grid, const fs::path& dir) {
    fs::create_directories(dir);
    char name[32];
    const std::size_t slice_px = std::size_t(grid.dims.nx) * grid.dims.ny;
    for (int z = 0; z < grid.dims.nz; ++z) {
        std::snprintf(name, sizeof name, "slice_%04d.pgm", z);
        std::ofstream f(dir / name, std::ios::binary);
        f << "P5\n" << grid.dims.nx << " " << grid.dims.ny << "\n255\n";
        f.write(reinterpret_cast<const char*>(grid.data.data() + slice_px * z),
                std::streamsize(slice_px));
    }
}

// ---------------------------------------------------------------------------
// binarisation and cleaning

BinaryPoreMask binarise(const VoxelGrid& grid, int threshold, bool invert) {
    BinaryPoreMask mask;
    mask.dims = grid.dims;
    mask.voxel_size_um = grid.voxel_size_um;
    mask.pore.resize(grid.data.size());
    for (std::size_t i = 0; i < grid.data.size(); ++i) {
        const bool below = grid.data[i] < threshold;
        mask.pore[i] = (below != invert) ? 1 : 0;
    }
    return mask;
}

VoxelGrid render_mask(const BinaryPoreMask& mask) {
    VoxelGrid grid;
    grid.dims = mask.dims;
    grid.voxel_size_um = mask.voxel_size_um;
    grid.data.resize(mask.pore.size());
    for (std::size_t i = 0; i < mask.pore.size(); ++i)
        grid.data[i] = mask.pore[i] ? 0 : 255;
    return grid;
}

// 26- or 6-neighbour offsets.
static std::vector<std::array<int, 3>> neighbour_offsets(int connectivity) {
    std::vector<std::array<int, 3>> offs;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                if (connectivity == 6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1) continue;
                offs.push_back({dx, dy, dz});
            }
    return offs;
}

CleanResult clean_pore_space(const BinaryPoreMask& mask, std::size_t min_component_voxels,
                             int connectivity) {
    if (connectivity != 6 && connectivity != 26)
        throw InputError("connectivity must be 6 or 26");
    const Dims& d = mask.dims;
    const auto offs = neighbour_offsets(connectivity);

    std::vector<std::int32_t> comp(d.size(), 0);
    struct CompInfo {
        std::size_t voxels = 0;
        bool touches_inlet = false, touches_outlet = false;
    };
    std::vector<CompInfo> info(1); // index 0 unused

    std::deque<std::size_t> queue;
    std::int32_t next = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i0 = d.idx(x, y, z);
                if (!mask.pore[i0] || comp[i0]) continue;
                ++next;
                info.emplace_back();
                comp[i0] = next;
                queue.push_back(i0);
                while (!queue.empty()) {
                    const std::size_t i = queue.front();
                    queue.pop_front();
                    const int cz = int(i / (std::size_t(d.nx) * d.ny));
                    const int cy = int((i / d.nx) % d.ny);
                    const int cx = int(i % d.nx);
                    auto& ci = info[std::size_t(next)];
                    ci.voxels++;
                    ci.touches_inlet |= (cz == 0);
                    ci.touches_outlet |= (cz == d.nz - 1);
                    for (const auto& o : offs) {
                        const int nx2 = cx + o[0], ny2 = cy + o[1], nz2 = cz + o[2];
                        if (!d.inside(nx2, ny2, nz2)) continue;
                        const std::size_t j = d.idx(nx2, ny2, nz2);
                        if (mask.pore[j] && !comp[j]) {
                            comp[j] = next;
                            queue.push_back(j);
                        }
                    }
                }
            }

    std::vector<std::uint8_t> keep(info.size(), 0);
    bool any_spanning = false;
    for (std::size_t c = 1; c < info.size(); ++c) {
        const bool spanning = info[c].touches_inlet && info[c].touches_outlet;
        any_spanning |= spanning;
        keep[c] = (spanning && info[c].voxels >= min_component_voxels) ? 1 : 0;
    }
    if (!any_spanning)
        throw EmptyPoreSpace("no pore component connects the inlet (z=0) and outlet faces");
    // A spanning component below the size floor still gets removed; if that
    // empties the mask the data is unusable.
    if (std::none_of(keep.begin() + 1, keep.end(), [](std::uint8_t k) { return k != 0; }))
        throw EmptyPoreSpace("all spanning components fall below min_component_voxels");

    CleanResult res;
    res.mask.dims = d;
    res.mask.voxel_size_um = mask.voxel_size_um;
    res.mask.pore.assign(d.size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (comp[i] && keep[std::size_t(comp[i])]) res.mask.pore[i] = 1;
    for (std::size_t c = 1; c < info.size(); ++c)
        if (!keep[c]) {
            res.components_removed++;
            res.voxels_removed += info[c].voxels;
        }
    return res;
}

// ---------------------------------------------------------------------------
// sectioning

SectionPartition make_sections(int nz, double voxel_size_um, double section_length_um) {
    if (section_length_um < voxel_size_um)
        throw SectionTooThin("section length " + std::to_string(section_length_um) +
                             " um is thinner than one voxel (" + std::to_string(voxel_size_um) + " um)");
    const int per = std::max(1, int(section_length_um / voxel_size_um));
    const int n = std::max(1, nz / per);
    SectionPartition p;
    p.nz = nz;
    p.voxel_size_um = voxel_size_um;
    p.z_begin.resize(std::size_t(n));
    p.z_end.resize(std::size_t(n));
    for (int s = 0; s < n; ++s) {
        p.z_begin[std::size_t(s)] = s * per;
        p.z_end[std::size_t(s)] = (s == n - 1) ? nz : (s + 1) * per;
    }
    return p;
}

int SectionPartition::section_of_slice(int z) const {
    for (int s = count() - 1; s >= 0; --s)
        if (z >= z_begin[std::size_t(s)]) return s;
    return 0;
}

std::vector<SectionPorosity> sectional_porosity(const BinaryPoreMask& mask,
                                                double section_length_um) {
    const auto part = make_sections(mask.dims.nz, mask.voxel_size_um, section_length_um);
    const std::size_t slice_px = std::size_t(mask.dims.nx) * mask.dims.ny;
    std::vector<SectionPorosity> out(std::size_t(part.count()));
    for (int s = 0; s < part.count(); ++s) {
        std::size_t pores = 0;
        for (int z = part.z_begin[std::size_t(s)]; z < part.z_end[std::size_t(s)]; ++z) {
            const auto* row = mask.pore.data() + slice_px * std::size_t(z);
            for (std::size_t i = 0; i < slice_px; ++i) pores += row[i];
        }
        const auto slices = std::size_t(part.z_end[std::size_t(s)] - part.z_begin[std::size_t(s)]);
        out[std::size_t(s)] = {s, part.z_min_um(s), part.z_max_um(s),
                               double(pores) / double(slices * slice_px)};
    }
    return out;
}

} // namespace porescope
