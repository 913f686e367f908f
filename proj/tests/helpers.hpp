#pragma once

// Shared phantom geometries, independent oracles and small utilities for the
// test suites. Oracles here deliberately use the dumbest correct algorithm
// (flood fill, all-pairs scans, dense solves, rejection sampling) so they do
// not share code paths with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "porescope/pnm.hpp"
#include "porescope/poreseg.hpp"
#include "porescope/voxel.hpp"

namespace testutil {

using namespace porescope;

inline BinaryPoreMask empty_mask(int nx, int ny, int nz, double voxel_um = 6.25) {
    BinaryPoreMask m;
    m.dims = {nx, ny, nz};
    m.voxel_size_um = voxel_um;
    m.pore.assign(m.dims.size(), 0);
    return m;
}

/// Axial circular channel through the full z extent, centre on voxel (cx,cy).
inline BinaryPoreMask cylinder_mask(int n, double radius_vox, int cx = -1, int cy = -1,
                                    double voxel_um = 6.25) {
    auto m = empty_mask(n, n, n, voxel_um);
    if (cx < 0) cx = n / 2;
    if (cy < 0) cy = n / 2;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy <= radius_vox * radius_vox)
                    m.pore[m.dims.idx(x, y, z)] = 1;
            }
    return m;
}

inline void add_ball(BinaryPoreMask& m, int cx, int cy, int cz, double r_vox) {
    for (int z = 0; z < m.dims.nz; ++z)
        for (int y = 0; y < m.dims.ny; ++y)
            for (int x = 0; x < m.dims.nx; ++x) {
                const double dx = x - cx, dy = y - cy, dz = z - cz;
                if (dx * dx + dy * dy + dz * dz <= r_vox * r_vox)
                    m.pore[m.dims.idx(x, y, z)] = 1;
            }
}

/// Cylinder along z between two slices (inclusive begin, exclusive end).
inline void add_zchannel(BinaryPoreMask& m, int cx, int cy, double r_vox, int z0, int z1) {
    for (int z = z0; z < z1; ++z)
        for (int y = 0; y < m.dims.ny; ++y)
            for (int x = 0; x < m.dims.nx; ++x) {
                const double dx = x - cx, dy = y - cy;
                if (dx * dx + dy * dy <= r_vox * r_vox) m.pore[m.dims.idx(x, y, z)] = 1;
            }
}

/// Two bulbs joined by a thin neck, with stubs to both z faces so the
/// phantom spans the sample.
inline BinaryPoreMask dumbbell_mask(int n = 64, double bulb_r = 8, double neck_r = 2,
                                    double voxel_um = 6.25) {
    auto m = empty_mask(n, n, n, voxel_um);
    const int c = n / 2;
    const int z1 = n / 2 - 12, z2 = n / 2 + 12;
    add_ball(m, c, c, z1, bulb_r);
    add_ball(m, c, c, z2, bulb_r);
    add_zchannel(m, c, c, neck_r, z1, z2);        // neck between bulbs
    add_zchannel(m, c, c, 3.0, 0, z1);            // inlet stub
    add_zchannel(m, c, c, 3.0, z2, n);            // outlet stub
    return m;
}

// ---------------------------------------------------------------------------
// oracles

/// Flood-fill connected components; returns per-voxel component id (0 = solid).
inline std::vector<int> oracle_components(const BinaryPoreMask& m, int connectivity) {
    const Dims& d = m.dims;
    std::vector<int> comp(d.size(), 0);
    int next = 0;
    std::deque<std::size_t> q;
    for (std::size_t i0 = 0; i0 < d.size(); ++i0) {
        if (!m.pore[i0] || comp[i0]) continue;
        comp[i0] = ++next;
        q.push_back(i0);
        while (!q.empty()) {
            const std::size_t i = q.front();
            q.pop_front();
            const int x = int(i % d.nx), y = int((i / d.nx) % d.ny),
                      z = int(i / (std::size_t(d.nx) * d.ny));
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy && !dz) continue;
                        if (connectivity == 6 && std::abs(dx) + std::abs(dy) + std::abs(dz) != 1)
                            continue;
                        const int nx = x + dx, ny = y + dy, nz = z + dz;
                        if (!d.inside(nx, ny, nz)) continue;
                        const std::size_t j = d.idx(nx, ny, nz);
                        if (m.pore[j] && !comp[j]) {
                            comp[j] = next;
                            q.push_back(j);
                        }
                    }
        }
    }
    return comp;
}

/// All-pairs 26-neighbour label adjacency, the exhaustive way.
inline std::set<std::pair<std::uint32_t, std::uint32_t>>
oracle_adjacency(const LabeledPoreSpace& lps) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> adj;
    const Dims& d = lps.dims;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const std::uint32_t a = lps.labels[d.idx(x, y, z)];
                if (!a) continue;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (!dx && !dy && !dz) continue;
                            const int nx = x + dx, ny = y + dy, nz = z + dz;
                            if (!d.inside(nx, ny, nz)) continue;
                            const std::uint32_t b = lps.labels[d.idx(nx, ny, nz)];
                            if (b && b != a) adj.emplace(std::min(a, b), std::max(a, b));
                        }
            }
    return adj;
}

/// Brute-force exact EDT: min distance to any solid voxel centre.
inline double oracle_edt_at(const BinaryPoreMask& m, int px, int py, int pz) {
    const Dims& d = m.dims;
    double best = std::numeric_limits<double>::infinity();
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (m.pore[d.idx(x, y, z)]) continue;
                const double dx = x - px, dy = y - py, dz = z - pz;
                best = std::min(best, dx * dx + dy * dy + dz * dz);
            }
    return std::sqrt(best) * m.voxel_size_um;
}

/// Dense direct solve of the network pressure system (Dirichlet on both face
/// sets), for comparing against the sparse iterative path.
inline std::vector<double> oracle_dense_pressures(const PoreNetwork& net, double p_in,
                                                  double p_out) {
    const auto P = net.pores.size();
    std::vector<int> unknown_of(P + 1, -1);
    std::vector<double> fixed(P + 1, 0.0);
    std::set<std::uint32_t> in(net.inlet_pores.begin(), net.inlet_pores.end());
    std::set<std::uint32_t> out(net.outlet_pores.begin(), net.outlet_pores.end());
    int k = 0;
    for (std::size_t i = 1; i <= P; ++i) {
        if (in.count(std::uint32_t(i)))
            fixed[i] = p_in;
        else if (out.count(std::uint32_t(i)))
            fixed[i] = p_out;
        else
            unknown_of[i] = k++;
    }
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    for (const auto& t : net.throats) {
        const int ua = unknown_of[t.a], ub = unknown_of[t.b];
        if (ua >= 0) {
            A(ua, ua) += t.conductance;
            if (ub >= 0)
                A(ua, ub) -= t.conductance;
            else
                rhs(ua) += t.conductance * fixed[t.b];
        }
        if (ub >= 0) {
            A(ub, ub) += t.conductance;
            if (ua >= 0)
                A(ub, ua) -= t.conductance;
            else
                rhs(ub) += t.conductance * fixed[t.a];
        }
    }
    const Eigen::VectorXd x = A.fullPivLu().solve(rhs);
    std::vector<double> pressures(P);
    for (std::size_t i = 1; i <= P; ++i)
        pressures[i - 1] = unknown_of[i] >= 0 ? x(unknown_of[i]) : fixed[i];
    return pressures;
}

/// Von Mises rejection sampler (Best & Fisher wrapped-Cauchy envelope).
class VonMisesSampler {
public:
    VonMisesSampler(double mu_deg, double kappa, std::uint64_t seed)
        : mu_(mu_deg * M_PI / 180.0), kappa_(kappa), rng_(seed) {
        const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa_ * kappa_);
        const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa_);
        r_ = (1.0 + rho * rho) / (2.0 * rho);
    }

    double next_deg() {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (;;) {
            const double u1 = uni(rng_), u2 = uni(rng_), u3 = uni(rng_);
            const double zz = std::cos(M_PI * u1);
            const double f = (1.0 + r_ * zz) / (r_ + zz);
            const double c = kappa_ * (r_ - f);
            if (c * (2.0 - c) - u2 > 0 || std::log(c / u2) + 1.0 - c >= 0) {
                const double theta = mu_ + (u3 > 0.5 ? 1.0 : -1.0) * std::acos(f);
                double deg = theta * 180.0 / M_PI;
                deg = std::fmod(deg, 360.0);
                return deg < 0 ? deg + 360.0 : deg;
            }
        }
    }

private:
    double mu_, kappa_, r_;
    std::mt19937_64 rng_;
};

/// Unique scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("porescope_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

/// Rotates a mask 90° about the z axis (x,y,z) -> (y, nx-1-x, z).
inline BinaryPoreMask rotate90_z(const BinaryPoreMask& m) {
    BinaryPoreMask r;
    r.dims = {m.dims.ny, m.dims.nx, m.dims.nz};
    r.voxel_size_um = m.voxel_size_um;
    r.pore.assign(r.dims.size(), 0);
    for (int z = 0; z < m.dims.nz; ++z)
        for (int y = 0; y < m.dims.ny; ++y)
            for (int x = 0; x < m.dims.nx; ++x)
                r.pore[r.dims.idx(y, m.dims.nx - 1 - x, z)] = m.pore[m.dims.idx(x, y, z)];
    return r;
}

} // namespace testutil
