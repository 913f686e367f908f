#include "porescope/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "porescope/parallel.hpp"

namespace porescope {

namespace fs = std::filesystem;

NodalField import_nodal_csv(const fs::path& path, double z_tol_um) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open nodal CSV: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw MalformedHeader(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y,z,u,v,w,p")
        throw MalformedHeader(path.string() + ": header must be exactly 'x,y,z,u,v,w,p', got '" +
                              line + "'");

    struct Row {
        double z_um;
        FlowSample s;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        double c[7];
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &c[0], &c[1], &c[2], &c[3],
                        &c[4], &c[5], &c[6]) != 7)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 7 numeric fields");
        Row r;
        r.s.x_um = c[0] / kMicron;
        r.s.y_um = c[1] / kMicron;
        r.z_um = c[2] / kMicron;
        r.s.u = c[3];
        r.s.v = c[4];
        r.s.w = c[5];
        r.s.p = c[6];
        rows.push_back(r);
    }
    if (rows.empty()) throw InputError(path.string() + ": no data rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.z_um < b.z_um; });

    NodalField field;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= rows.size(); ++i) {
        if (i == rows.size() || rows[i].z_um - rows[i - 1].z_um > z_tol_um) {
            if (rows[i - 1].z_um - rows[begin].z_um > z_tol_um)
                throw NonMonotonePlanes(path.string() +
                                        ": z values smear over more than the plane tolerance near z=" +
                                        std::to_string(rows[begin].z_um * kMicron));
            FlowPlane plane;
            double zsum = 0;
            for (std::size_t j = begin; j < i; ++j) {
                zsum += rows[j].z_um;
                plane.points.push_back(rows[j].s);
            }
            plane.z_um = zsum / double(i - begin);
            field.planes.push_back(std::move(plane));
            begin = i;
        }
    }
    return field;
}

void export_nodal_csv(const VoxelField& field, const BinaryPoreMask& mask, const fs::path& path,
                      int z_stride, bool include_solid) {
    if (z_stride < 1) throw InputError("export_nodal_csv: z_stride must be >= 1");
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    f << "x,y,z,u,v,w,p\n";
    const Dims& d = field.dims;
    const double vs = field.voxel_size_um;
    char buf[256];
    for (int z = 0; z < d.nz; z += z_stride)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = d.idx(x, y, z);
                if (!include_solid && !mask.pore[i]) continue;
                std::snprintf(buf, sizeof buf,
                              "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              (x + 0.5) * vs * kMicron, (y + 0.5) * vs * kMicron,
                              (z + 0.5) * vs * kMicron, field.vx[i], field.vy[i], field.vz[i],
                              field.p[i]);
                f << buf;
            }
}

namespace {

// Per-plane interpolator: bilinear when the samples form a complete
// rectangular grid, inverse-distance weighting otherwise.
class PlaneInterp {
public:
    explicit PlaneInterp(const FlowPlane& plane) : plane_(plane) {
        detect_grid();
        if (!grid_) build_buckets();
    }

    // interpolated (u,v,w,p) at a point
    std::array<double, 4> at(double x, double y) const {
        return grid_ ? bilinear(x, y) : idw(x, y);
    }

private:
    static constexpr double kCoincident = 1e-9; // µm

    void detect_grid() {
        std::map<double, int> xs, ys;
        for (const auto& s : plane_.points) {
            xs.emplace(s.x_um, 0);
            ys.emplace(s.y_um, 0);
        }
        if (xs.size() < 2 || ys.size() < 2) return;
        if (xs.size() * ys.size() != plane_.points.size()) return;
        int i = 0;
        for (auto& [k, idx] : xs) idx = i++;
        i = 0;
        for (auto& [k, idx] : ys) idx = i++;
        grid_values_.assign(xs.size() * ys.size(), {0, 0, 0, 0});
        std::vector<std::uint8_t> filled(grid_values_.size(), 0);
        for (const auto& s : plane_.points) {
            const auto ix = std::size_t(xs.find(s.x_um)->second);
            const auto iy = std::size_t(ys.find(s.y_um)->second);
            const std::size_t cell = iy * xs.size() + ix;
            if (filled[cell]) return; // duplicate sample, not a clean grid
            filled[cell] = 1;
            grid_values_[cell] = {s.u, s.v, s.w, s.p};
        }
        if (!std::all_of(filled.begin(), filled.end(), [](std::uint8_t v) { return v != 0; }))
            return;
        gx_.reserve(xs.size());
        gy_.reserve(ys.size());
        for (const auto& [k, idx] : xs) gx_.push_back(k);
        for (const auto& [k, idx] : ys) gy_.push_back(k);
        grid_ = true;
    }

    std::array<double, 4> bilinear(double x, double y) const {
        const auto locate = [](const std::vector<double>& g, double q, std::size_t& i0, double& t) {
            if (q <= g.front()) {
                i0 = 0;
                t = 0;
                return;
            }
            if (q >= g.back()) {
                i0 = g.size() - 2;
                t = 1;
                return;
            }
            const auto it = std::upper_bound(g.begin(), g.end(), q);
            i0 = std::size_t(it - g.begin()) - 1;
            t = (q - g[i0]) / (g[i0 + 1] - g[i0]);
        };
        std::size_t ix, iy;
        double tx, ty;
        locate(gx_, x, ix, tx);
        locate(gy_, y, iy, ty);
        std::array<double, 4> out{};
        for (int c = 0; c < 4; ++c) {
            const auto at = [&](std::size_t jx, std::size_t jy) {
                return grid_values_[jy * gx_.size() + jx][std::size_t(c)];
            };
            const double lo = at(ix, iy) + tx * (at(ix + 1, iy) - at(ix, iy));
            const double hi = at(ix, iy + 1) + tx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
            out[std::size_t(c)] = lo + ty * (hi - lo);
        }
        return out;
    }

    void build_buckets() {
        double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
        for (const auto& s : plane_.points) {
            x0 = std::min(x0, s.x_um);
            x1 = std::max(x1, s.x_um);
            y0 = std::min(y0, s.y_um);
            y1 = std::max(y1, s.y_um);
        }
        bx0_ = x0;
        by0_ = y0;
        const double span = std::max({x1 - x0, y1 - y0, 1e-9});
        const int target = std::max(1, int(std::sqrt(double(plane_.points.size()) / 2.0)));
        cell_ = span / target;
        nbx_ = int((x1 - x0) / cell_) + 1;
        nby_ = int((y1 - y0) / cell_) + 1;
        buckets_.assign(std::size_t(nbx_) * nby_, {});
        for (std::size_t i = 0; i < plane_.points.size(); ++i)
            buckets_[bucket_of(plane_.points[i].x_um, plane_.points[i].y_um)].push_back(int(i));
    }

    std::size_t bucket_of(double x, double y) const {
        const int bx = std::clamp(int((x - bx0_) / cell_), 0, nbx_ - 1);
        const int by = std::clamp(int((y - by0_) / cell_), 0, nby_ - 1);
        return std::size_t(by) * nbx_ + bx;
    }

    std::array<double, 4> idw(double x, double y) const {
        constexpr int k = 8;
        // expanding ring search for the k nearest samples
        std::vector<std::pair<double, int>> cand; // (distance², index)
        const int cbx = std::clamp(int((x - bx0_) / cell_), 0, nbx_ - 1);
        const int cby = std::clamp(int((y - by0_) / cell_), 0, nby_ - 1);
        for (int ring = 0; ring < std::max(nbx_, nby_); ++ring) {
            const std::size_t before = cand.size();
            for (int by = cby - ring; by <= cby + ring; ++by)
                for (int bx = cbx - ring; bx <= cbx + ring; ++bx) {
                    if (bx < 0 || bx >= nbx_ || by < 0 || by >= nby_) continue;
                    if (ring > 0 && std::abs(bx - cbx) != ring && std::abs(by - cby) != ring)
                        continue; // ring shell only
                    for (int i : buckets_[std::size_t(by) * nbx_ + bx]) {
                        const auto& s = plane_.points[std::size_t(i)];
                        const double dx = s.x_um - x, dy = s.y_um - y;
                        cand.emplace_back(dx * dx + dy * dy, i);
                    }
                }
            if (cand.size() >= k && cand.size() == before) break;
            if (cand.size() >= k) {
                // one more ring so the shell cannot hide closer points
                std::sort(cand.begin(), cand.end());
                const double worst = cand[std::size_t(k) - 1].first;
                if (std::sqrt(worst) <= ring * cell_) break;
            }
        }
        std::sort(cand.begin(), cand.end());
        const std::size_t use = std::min<std::size_t>(k, cand.size());
        if (use == 0) return {0, 0, 0, 0};
        if (cand[0].first < kCoincident * kCoincident) {
            const auto& s = plane_.points[std::size_t(cand[0].second)];
            return {s.u, s.v, s.w, s.p};
        }
        double wsum = 0;
        std::array<double, 4> out{};
        for (std::size_t i = 0; i < use; ++i) {
            const double w = 1.0 / cand[i].first; // power-2 weights
            const auto& s = plane_.points[std::size_t(cand[i].second)];
            out[0] += w * s.u;
            out[1] += w * s.v;
            out[2] += w * s.w;
            out[3] += w * s.p;
            wsum += w;
        }
        for (auto& c : out) c /= wsum;
        return out;
    }

    const FlowPlane& plane_;
    bool grid_ = false;
    std::vector<double> gx_, gy_;
    std::vector<std::array<double, 4>> grid_values_;
    double bx0_ = 0, by0_ = 0, cell_ = 1;
    int nbx_ = 1, nby_ = 1;
    std::vector<std::vector<int>> buckets_;
};

} // namespace

VoxelField interpolate_to_voxels(const NodalField& field, const BinaryPoreMask& mask) {
    if (field.planes.size() < 2)
        throw InsufficientPlanes("interpolation needs at least two planes, got " +
                                 std::to_string(field.planes.size()));
    for (std::size_t i = 1; i < field.planes.size(); ++i)
        if (field.planes[i].z_um - field.planes[i - 1].z_um < mask.voxel_size_um)
            throw InsufficientPlanes("plane spacing below one voxel near z=" +
                                     std::to_string(field.planes[i].z_um));

    const Dims& d = mask.dims;
    VoxelField out;
    out.dims = d;
    out.voxel_size_um = mask.voxel_size_um;
    out.vx.assign(d.size(), 0.0);
    out.vy.assign(d.size(), 0.0);
    out.vz.assign(d.size(), 0.0);
    out.p.assign(d.size(), 0.0);

    std::vector<PlaneInterp> interp;
    interp.reserve(field.planes.size());
    for (const auto& pl : field.planes) interp.emplace_back(pl);

    std::vector<double> plane_z(field.planes.size());
    for (std::size_t i = 0; i < field.planes.size(); ++i) plane_z[i] = field.planes[i].z_um;

    parallel_for(0, d.nz, [&](int z) {
        const double zc = (z + 0.5) * mask.voxel_size_um;
        // bracketing planes, clamped to the sampled range
        std::size_t i1 = std::size_t(
            std::upper_bound(plane_z.begin(), plane_z.end(), zc) - plane_z.begin());
        double t;
        std::size_t i0;
        if (i1 == 0) {
            i0 = i1 = 0;
            t = 0;
        } else if (i1 == plane_z.size()) {
            i0 = i1 = plane_z.size() - 1;
            t = 0;
        } else {
            i0 = i1 - 1;
            t = (zc - plane_z[i0]) / (plane_z[i1] - plane_z[i0]);
        }
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::size_t i = d.idx(x, y, z);
                if (!mask.pore[i]) continue;
                const double xc = (x + 0.5) * mask.voxel_size_um;
                const double yc = (y + 0.5) * mask.voxel_size_um;
                const auto lo = interp[i0].at(xc, yc);
                std::array<double, 4> val = lo;
                if (i1 != i0) {
                    const auto hi = interp[i1].at(xc, yc);
                    for (int c = 0; c < 4; ++c)
                        val[std::size_t(c)] = lo[std::size_t(c)] +
                                              t * (hi[std::size_t(c)] - lo[std::size_t(c)]);
                }
                out.vx[i] = val[0];
                out.vy[i] = val[1];
                out.vz[i] = val[2];
                out.p[i] = val[3];
            }
    });
    return out;
}

std::vector<ChannelSection> channel_re(const VoxelField& field, const LabeledPoreSpace& lps,
                                       const FluidProps& props) {
    if (!(field.dims == lps.dims))
        throw InputError("channel_re: field and label dims differ");
    const Dims& d = field.dims;
    const double vs = field.voxel_size_um;
    const std::size_t slice_px = std::size_t(d.nx) * d.ny;

    std::vector<ChannelSection> out;
    for (int z = 0; z < d.nz; ++z) {
        std::map<std::uint32_t, std::pair<std::size_t, double>> acc; // label -> (pixels, speed sum)
        const auto* base = lps.labels.data() + slice_px * std::size_t(z);
        for (std::size_t i = 0; i < slice_px; ++i) {
            if (!base[i]) continue;
            auto& a = acc[base[i]];
            a.first++;
            a.second += field.speed(slice_px * std::size_t(z) + i);
        }
        for (const auto& [label, a] : acc) {
            ChannelSection cs;
            cs.plane = z;
            cs.z_um = (z + 0.5) * vs;
            cs.label = label;
            cs.area_um2 = double(a.first) * vs * vs;
            cs.dhyd_um = std::sqrt(4.0 * cs.area_um2 / M_PI);
            cs.u_mean = a.second / double(a.first);
            cs.re = cs.u_mean * (cs.dhyd_um * kMicron) / props.kinematic_viscosity;
            out.push_back(cs);
        }
    }
    return out;
}

std::vector<SectionFlowStats> sectional_flow_stats(const std::vector<ChannelSection>& sections,
                                                   const SectionPartition& partition) {
    std::vector<SectionFlowStats> out(std::size_t(partition.count()));
    for (int s = 0; s < partition.count(); ++s) {
        out[std::size_t(s)].section = s;
        out[std::size_t(s)].z_min_um = partition.z_min_um(s);
        out[std::size_t(s)].z_max_um = partition.z_max_um(s);
    }
    for (const auto& cs : sections) {
        auto& st = out[std::size_t(partition.section_of_slice(cs.plane))];
        st.mean_re += cs.re;
        st.mean_velocity += cs.u_mean;
        st.n_elements++;
    }
    for (auto& st : out)
        if (st.n_elements > 0) {
            st.mean_re /= double(st.n_elements);
            st.mean_velocity /= double(st.n_elements);
        }
    return out;
}

} // namespace porescope
