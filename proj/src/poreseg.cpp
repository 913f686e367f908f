#include "porescope/poreseg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace porescope {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t LabeledPoreSpace::pore_voxels() const {
    return std::size_t(std::count_if(labels.begin(), labels.end(),
                                     [](std::uint32_t l) { return l != 0; }));
}

namespace {

// Sort key shared by the MIS filter and the family clustering: big spheres
// first, (z,y,x) of the centre as the deterministic tie-break.
bool sphere_before(const InscribedSphere& a, const InscribedSphere& b) {
    if (a.r2_vox != b.r2_vox) return a.r2_vox > b.r2_vox;
    if (a.z != b.z) return a.z < b.z;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
}

long long dist2_vox(const InscribedSphere& a, const InscribedSphere& b) {
    const long long dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// squared radius back in voxel units; EDT distances are sqrt(integer)*voxel
long long r2_from_um(double radius_um, double voxel_um) {
    const double r = radius_um / voxel_um;
    return std::llround(r * r);
}

// Uniform bucket grid over sphere centres for containment/overlap queries.
class SphereGrid {
public:
    SphereGrid(const Dims& d, int cell_vox)
        : cell_(std::max(1, cell_vox)),
          gx_(d.nx / cell_ + 1),
          gy_(d.ny / cell_ + 1),
          gz_(d.nz / cell_ + 1),
          cells_(std::size_t(gx_) * gy_ * gz_) {}

    void insert(int idx, const InscribedSphere& s) {
        cells_[cell_index(s.x, s.y, s.z)].push_back(idx);
    }

    // Visits every stored sphere whose centre can lie within reach_vox of c.
    template <typename Fn>
    void for_near(const InscribedSphere& c, double reach_vox, Fn&& fn) const {
        const int r = int(reach_vox / cell_) + 1;
        const int cx = c.x / cell_, cy = c.y / cell_, cz = c.z / cell_;
        for (int z = std::max(0, cz - r); z <= std::min(gz_ - 1, cz + r); ++z)
            for (int y = std::max(0, cy - r); y <= std::min(gy_ - 1, cy + r); ++y)
                for (int x = std::max(0, cx - r); x <= std::min(gx_ - 1, cx + r); ++x)
                    for (int idx : cells_[(std::size_t(z) * gy_ + y) * gx_ + x]) fn(idx);
    }

private:
    std::size_t cell_index(int x, int y, int z) const {
        return (std::size_t(z / cell_) * gy_ + std::size_t(y / cell_)) * gx_ + std::size_t(x / cell_);
    }
    int cell_, gx_, gy_, gz_;
    std::vector<std::vector<int>> cells_;
};

const std::array<std::array<int, 3>, 26>& offsets26() {
    static const auto offs = [] {
        std::array<std::array<int, 3>, 26> o{};
        int n = 0;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx || dy || dz) o[std::size_t(n++)] = {dx, dy, dz};
        return o;
    }();
    return offs;
}

} // namespace

// sqrt(D) + sqrt(b) <= sqrt(a), decided by squaring twice over integers
bool sphere_contains(const InscribedSphere& outer, const InscribedSphere& inner) {
    const long long a = outer.r2_vox, b = inner.r2_vox, D = dist2_vox(outer, inner);
    const long long t = a - D - b;
    if (t < 0) return false;
    return 4 * D * b <= t * t;
}

// sqrt(D) < sqrt(a) + sqrt(b)
bool spheres_overlap(const InscribedSphere& a, const InscribedSphere& b) {
    const long long ra = a.r2_vox, rb = b.r2_vox, D = dist2_vox(a, b);
    const long long t = D - ra - rb;
    if (t <= 0) return true;
    return t * t < 4 * ra * rb;
}

std::vector<InscribedSphere> maximal_inscribed_spheres(const DistanceMap& dmap) {
    const Dims& d = dmap.dims;
    const double v = dmap.voxel_size_um;

    std::vector<InscribedSphere> all;
    long long r2_max = 0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const double r = dmap.at(x, y, z);
                if (r <= 0) continue;
                InscribedSphere s{x, y, z, r, r2_from_um(r, v)};
                r2_max = std::max(r2_max, s.r2_vox);
                all.push_back(s);
            }
    std::sort(all.begin(), all.end(), sphere_before);

    // Keep the maximal elements of the containment order. Processing large to
    // small, a candidate contained in any sphere is (transitively) contained
    // in a kept one, so testing against kept spheres suffices.
    const double r_max = std::sqrt(double(r2_max));
    SphereGrid grid(d, int(r_max) + 1);
    std::vector<InscribedSphere> kept;
    for (const auto& s : all) {
        bool contained = false;
        grid.for_near(s, r_max, [&](int k) {
            if (!contained && sphere_contains(kept[std::size_t(k)], s)) contained = true;
        });
        if (contained) continue;
        grid.insert(int(kept.size()), s);
        kept.push_back(s);
    }
    return kept;
}

LabeledPoreSpace segment_pores(const DistanceMap& dmap,
                               const std::vector<InscribedSphere>& spheres) {
    const Dims& d = dmap.dims;
    const double v = dmap.voxel_size_um;

    LabeledPoreSpace lps;
    lps.dims = d;
    lps.voxel_size_um = v;
    lps.labels.assign(d.size(), 0);
    if (spheres.empty()) return lps;

    std::vector<InscribedSphere> sorted = spheres;
    std::sort(sorted.begin(), sorted.end(), sphere_before);

    // --- hierarchical clustering of spheres into pore families ---
    // Watershed on the ball-overlap graph with the water level descending
    // through the distinct radii. Balls at the current level join the family
    // of an overlapping assigned ball (all of which are at least this big),
    // sweeping the level until nothing changes so plateau chains propagate;
    // level balls no family can reach seed new families. Saddles (a neck
    // between two wider bulbs) therefore never merge the bulbs: the neck
    // balls split between them by the seed tie-break.
    long long r2_max = 0;
    for (const auto& s : sorted) r2_max = std::max(r2_max, s.r2_vox);
    const double r_max = std::sqrt(double(r2_max));
    SphereGrid grid(d, int(r_max) + 1);
    for (int i = 0; i < int(sorted.size()); ++i) grid.insert(i, sorted[std::size_t(i)]);

    std::vector<std::uint32_t> family(sorted.size(), 0);
    std::vector<int> seed_of_family; // sphere index of each family's master
    seed_of_family.push_back(-1);    // family ids start at 1

    auto absorb = [&](int i) {
        const auto& s = sorted[std::size_t(i)];
        int best = -1; // assigned sphere whose family wins
        grid.for_near(s, std::sqrt(double(s.r2_vox)) + r_max, [&](int j) {
            if (j == i || family[std::size_t(j)] == 0) return;
            const auto& t = sorted[std::size_t(j)];
            if (!spheres_overlap(s, t)) return;
            if (best < 0) {
                best = j;
                return;
            }
            const auto& bs = sorted[std::size_t(seed_of_family[family[std::size_t(best)]])];
            const auto& ts = sorted[std::size_t(seed_of_family[family[std::size_t(j)]])];
            if (sphere_before(ts, bs)) best = j;
        });
        if (best < 0) return false;
        family[std::size_t(i)] = family[std::size_t(best)];
        return true;
    };

    for (std::size_t lv_begin = 0; lv_begin < sorted.size();) {
        std::size_t lv_end = lv_begin;
        while (lv_end < sorted.size() && sorted[lv_end].r2_vox == sorted[lv_begin].r2_vox) ++lv_end;

        for (;;) {
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t i = lv_begin; i < lv_end; ++i)
                    if (family[i] == 0 && absorb(int(i))) changed = true;
            }
            std::size_t leftover = lv_end;
            for (std::size_t i = lv_begin; i < lv_end; ++i)
                if (family[i] == 0) {
                    leftover = i;
                    break;
                }
            if (leftover == lv_end) break;
            seed_of_family.push_back(int(leftover));
            family[leftover] = std::uint32_t(seed_of_family.size() - 1);
        }
        lv_begin = lv_end;
    }
    const auto n_families = std::uint32_t(seed_of_family.size() - 1);

    // sphere centres carry their family label into the grow phase
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& s = sorted[i];
        lps.labels[d.idx(s.x, s.y, s.z)] = family[i];
    }

    // --- expanding distance map: level sweep from widest to narrowest ---
    std::vector<long long> d2(d.size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i)
        if (dmap.distance_um[i] > 0) d2[i] = r2_from_um(dmap.distance_um[i], v);

    std::vector<long long> levels;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d2[i] > 0) levels.push_back(d2[i]);
    std::sort(levels.begin(), levels.end(), std::greater<>());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    std::vector<int> level_of(d.size(), -1);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d2[i] <= 0) continue;
        const auto it = std::lower_bound(levels.begin(), levels.end(), d2[i], std::greater<>());
        level_of[i] = int(it - levels.begin());
    }

    const auto& offs = offsets26();
    std::vector<std::vector<std::size_t>> waiting(levels.size());
    std::vector<std::uint8_t> queued(d.size(), 0);

    auto coords = [&d](std::size_t i, int& x, int& y, int& z) {
        x = int(i % d.nx);
        y = int((i / d.nx) % d.ny);
        z = int(i / (std::size_t(d.nx) * d.ny));
    };

    // discovered voxels enter the running wave once the sweep reaches their
    // own distance level (or immediately if it already has)
    auto push_neighbours = [&](std::size_t i, int current_level, std::vector<std::size_t>& wave) {
        int x, y, z;
        coords(i, x, y, z);
        for (const auto& o : offs) {
            const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
            if (!d.inside(nx, ny, nz)) continue;
            const std::size_t j = d.idx(nx, ny, nz);
            if (lps.labels[j] || queued[j] || level_of[j] < 0) continue;
            queued[j] = 1;
            if (level_of[j] <= current_level)
                wave.push_back(j);
            else
                waiting[std::size_t(level_of[j])].push_back(j);
        }
    };

    {
        std::vector<std::size_t> none;
        for (const auto& s : sorted) push_neighbours(d.idx(s.x, s.y, s.z), -1, none);
    }

    std::vector<std::size_t> wave, next_wave;
    std::vector<std::pair<std::size_t, std::uint32_t>> assign;
    for (int L = 0; L < int(levels.size()); ++L) {
        wave.swap(waiting[std::size_t(L)]);
        while (!wave.empty()) {
            assign.clear();
            for (std::size_t i : wave) {
                int x, y, z;
                coords(i, x, y, z);
                std::uint32_t best = 0;
                for (const auto& o : offs) {
                    const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (!d.inside(nx, ny, nz)) continue;
                    const std::uint32_t lab = lps.labels[d.idx(nx, ny, nz)];
                    if (!lab || lab == best) continue;
                    if (best == 0) {
                        best = lab;
                    } else {
                        const auto& bs = sorted[std::size_t(seed_of_family[best])];
                        const auto& cs = sorted[std::size_t(seed_of_family[lab])];
                        if (sphere_before(cs, bs)) best = lab;
                    }
                }
                assign.emplace_back(i, best); // waves only hold voxels with a labelled neighbour
            }
            for (const auto& [i, lab] : assign) lps.labels[i] = lab;
            next_wave.clear();
            for (const auto& [i, lab] : assign) push_neighbours(i, L, next_wave);
            wave.swap(next_wave);
        }
    }

    for (std::size_t i = 0; i < d.size(); ++i)
        if (level_of[i] >= 0 && lps.labels[i] == 0)
            throw std::logic_error("segment_pores: pore voxel left unlabelled");

    // --- per-pore records ---
    lps.pores.assign(n_families, PoreRecord{});
    for (std::uint32_t p = 0; p < n_families; ++p) lps.pores[p].id = p + 1;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::uint32_t lab = lps.labels[d.idx(x, y, z)];
                if (!lab) continue;
                auto& rec = lps.pores[lab - 1];
                rec.voxel_count++;
                rec.centroid_um[0] += (x + 0.5) * v;
                rec.centroid_um[1] += (y + 0.5) * v;
                rec.centroid_um[2] += (z + 0.5) * v;
                rec.max_inscribed_radius_um =
                    std::max(rec.max_inscribed_radius_um, dmap.at(x, y, z));
            }
    for (auto& rec : lps.pores)
        for (auto& c : rec.centroid_um) c /= double(rec.voxel_count);
    return lps;
}

std::vector<int> pore_connectivity(LabeledPoreSpace& lps) {
    const Dims& d = lps.dims;
    lps.adjacency.clear();
    // half neighbourhood; (i,j) and (j,i) meet at the shared boundary anyway
    static const std::array<std::array<int, 3>, 13> half = {{{1, 0, 0},
                                                             {-1, 1, 0},
                                                             {0, 1, 0},
                                                             {1, 1, 0},
                                                             {-1, -1, 1},
                                                             {0, -1, 1},
                                                             {1, -1, 1},
                                                             {-1, 0, 1},
                                                             {0, 0, 1},
                                                             {1, 0, 1},
                                                             {-1, 1, 1},
                                                             {0, 1, 1},
                                                             {1, 1, 1}}};
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::uint32_t a = lps.labels[d.idx(x, y, z)];
                if (!a) continue;
                for (const auto& o : half) {
                    const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (!d.inside(nx, ny, nz)) continue;
                    const std::uint32_t b = lps.labels[d.idx(nx, ny, nz)];
                    if (b && b != a)
                        lps.adjacency.emplace(std::min(a, b), std::max(a, b));
                }
            }
    std::vector<int> coordination(lps.pores.size() + 1, 0);
    for (const auto& [a, b] : lps.adjacency) {
        coordination[a]++;
        coordination[b]++;
    }
    return coordination;
}

namespace {

struct MeanSd {
    double mean = 0, sd = 0;
    std::size_t n = 0;
};

template <typename It, typename Get>
MeanSd mean_sd(It begin, It end, Get get) {
    MeanSd r;
    for (It it = begin; it != end; ++it) {
        r.mean += get(*it);
        r.n++;
    }
    if (r.n == 0) return r;
    r.mean /= double(r.n);
    if (r.n < 2) return r;
    double ss = 0;
    for (It it = begin; it != end; ++it) {
        const double dv = get(*it) - r.mean;
        ss += dv * dv;
    }
    r.sd = std::sqrt(ss / double(r.n - 1));
    return r;
}

} // namespace

StatsReport architectural_stats(LabeledPoreSpace& lps, const BinaryPoreMask& mask,
                                double section_length_um) {
    if (!(lps.dims == mask.dims))
        throw InputError("architectural_stats: label volume and mask dims differ");
    const Dims& d = lps.dims;
    const double v = lps.voxel_size_um;

    StatsReport rep;
    rep.coordination = pore_connectivity(lps);

    // per-plane labelled cross-sections
    const std::size_t slice_px = std::size_t(d.nx) * d.ny;
    for (int z = 0; z < d.nz; ++z) {
        std::unordered_map<std::uint32_t, std::size_t> counts;
        const auto* base = lps.labels.data() + slice_px * std::size_t(z);
        for (std::size_t i = 0; i < slice_px; ++i)
            if (base[i]) counts[base[i]]++;
        std::vector<std::pair<std::uint32_t, std::size_t>> ordered(counts.begin(), counts.end());
        std::sort(ordered.begin(), ordered.end());
        for (const auto& [lab, n] : ordered) {
            ChannelSlice ch;
            ch.plane = z;
            ch.label = lab;
            ch.pixel_count = n;
            ch.area_um2 = double(n) * v * v;
            ch.diameter_um = std::sqrt(4.0 * ch.area_um2 / M_PI);
            rep.channels.push_back(ch);
        }
    }

    const auto part = make_sections(d.nz, v, section_length_um);
    const auto porosities = sectional_porosity(mask, section_length_um);

    // pore centroids binned into sections
    std::vector<std::vector<int>> pores_in_section(std::size_t(part.count()));
    for (const auto& p : lps.pores) {
        const int z = std::min(d.nz - 1, std::max(0, int(p.centroid_um[2] / v)));
        pores_in_section[std::size_t(part.section_of_slice(z))].push_back(int(p.id));
    }

    for (int s = 0; s < part.count(); ++s) {
        SectionStats st;
        st.section = s;
        st.z_min_um = part.z_min_um(s);
        st.z_max_um = part.z_max_um(s);
        st.porosity = porosities[std::size_t(s)].porosity;

        std::vector<double> diams;
        for (const auto& ch : rep.channels)
            if (part.section_of_slice(ch.plane) == s) diams.push_back(ch.diameter_um);
        auto dm = mean_sd(diams.begin(), diams.end(), [](double x) { return x; });
        st.channel_diameter_mean_um = dm.mean;
        st.channel_diameter_sd_um = dm.sd;
        st.n_channels = dm.n;

        const auto& ids = pores_in_section[std::size_t(s)];
        auto cm = mean_sd(ids.begin(), ids.end(),
                          [&](int id) { return double(rep.coordination[std::size_t(id)]); });
        st.connectivity_mean = cm.mean;
        st.connectivity_sd = cm.sd;
        st.n_pores = cm.n;
        rep.sections.push_back(st);
    }

    SectionStats whole;
    whole.section = -1;
    whole.z_min_um = 0;
    whole.z_max_um = d.nz * v;
    whole.porosity = mask.porosity();
    auto dm = mean_sd(rep.channels.begin(), rep.channels.end(),
                      [](const ChannelSlice& c) { return c.diameter_um; });
    whole.channel_diameter_mean_um = dm.mean;
    whole.channel_diameter_sd_um = dm.sd;
    whole.n_channels = dm.n;
    auto cm = mean_sd(lps.pores.begin(), lps.pores.end(), [&](const PoreRecord& p) {
        return double(rep.coordination[p.id]);
    });
    whole.connectivity_mean = cm.mean;
    whole.connectivity_sd = cm.sd;
    whole.n_pores = cm.n;
    rep.sample = whole;
    return rep;
}

void save_labels(const LabeledPoreSpace& lps, const fs::path& path_stem) {
    fs::path raw = path_stem;
    raw += ".raw";
    std::ofstream f(raw, std::ios::binary);
    if (!f) throw InputError("cannot write " + raw.string());
    // u32 little-endian; this codebase targets little-endian hosts
    f.write(reinterpret_cast<const char*>(lps.labels.data()),
            std::streamsize(lps.labels.size() * 4));

    json pores = json::array();
    for (const auto& p : lps.pores)
        pores.push_back({{"id", p.id},
                         {"x", p.centroid_um[0]},
                         {"y", p.centroid_um[1]},
                         {"z", p.centroid_um[2]},
                         {"r", p.max_inscribed_radius_um},
                         {"voxels", p.voxel_count}});
    json adj = json::array();
    for (const auto& [a, b] : lps.adjacency) adj.push_back({a, b});
    json meta = {{"dims", {lps.dims.nx, lps.dims.ny, lps.dims.nz}},
                 {"voxel_size_um", lps.voxel_size_um},
                 {"dtype", "u32le"},
                 {"pores", pores},
                 {"adjacency", adj}};
    fs::path sidecar = path_stem;
    sidecar += ".json";
    std::ofstream sj(sidecar);
    sj << meta.dump(2) << "\n";
}

LabeledPoreSpace load_labels(const fs::path& path_stem) {
    fs::path sidecar = path_stem;
    sidecar += ".json";
    if (!fs::exists(sidecar)) throw MissingSidecar("missing sidecar: " + sidecar.string());
    json meta;
    std::ifstream sj(sidecar);
    sj >> meta;

    LabeledPoreSpace lps;
    lps.dims = {meta["dims"][0].get<int>(), meta["dims"][1].get<int>(), meta["dims"][2].get<int>()};
    lps.voxel_size_um = meta["voxel_size_um"].get<double>();

    fs::path raw = path_stem;
    raw += ".raw";
    std::ifstream f(raw, std::ios::binary);
    if (!f) throw InputError("cannot open " + raw.string());
    f.seekg(0, std::ios::end);
    if (std::size_t(f.tellg()) != lps.dims.size() * 4)
        throw SizeMismatch("label volume " + raw.string() + " does not match sidecar dims");
    f.seekg(0);
    lps.labels.resize(lps.dims.size());
    f.read(reinterpret_cast<char*>(lps.labels.data()), std::streamsize(lps.labels.size() * 4));

    for (const auto& p : meta["pores"]) {
        PoreRecord rec;
        rec.id = p["id"].get<std::uint32_t>();
        rec.centroid_um = {p["x"].get<double>(), p["y"].get<double>(), p["z"].get<double>()};
        rec.max_inscribed_radius_um = p["r"].get<double>();
        rec.voxel_count = p["voxels"].get<std::size_t>();
        lps.pores.push_back(rec);
    }
    for (const auto& ab : meta["adjacency"])
        lps.adjacency.emplace(ab[0].get<std::uint32_t>(), ab[1].get<std::uint32_t>());
    return lps;
}

} // namespace porescope
