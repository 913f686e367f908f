#include "porescope/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "porescope/parallel.hpp"

namespace porescope {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared-distance transform of f along a line (Felzenszwalb–Huttenlocher).
// v/z are scratch arrays of length n and n+1.
void edt_1d(const double* f, double* out, int* v, double* z, int n) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (f[v[0]] == kInf && k == 0) {
            v[0] = q;
            continue;
        }
        double s;
        for (;;) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        if (f[v[0]] == kInf) {
            out[q] = kInf;
            continue;
        }
        while (z[k + 1] < q) ++k;
        const int p = v[k];
        out[q] = double(q - p) * (q - p) + f[p];
    }
}

} // namespace

DistanceMap distance_transform(const BinaryPoreMask& mask) {
    const Dims& d = mask.dims;
    DistanceMap dm;
    dm.dims = d;
    dm.voxel_size_um = mask.voxel_size_um;

    // squared distance in voxel units; sites are solid voxels
    std::vector<double> sq(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) sq[i] = mask.pore[i] ? kInf : 0.0;

    const std::size_t slice = std::size_t(d.nx) * d.ny;

    // x pass
    parallel_for(0, d.nz, [&](int z) {
        std::vector<double> f(std::size_t(d.nx)), out(std::size_t(d.nx)), zz(std::size_t(d.nx) + 1);
        std::vector<int> v(std::size_t(d.nx));
        for (int y = 0; y < d.ny; ++y) {
            double* row = sq.data() + slice * std::size_t(z) + std::size_t(d.nx) * y;
            std::copy(row, row + d.nx, f.begin());
            edt_1d(f.data(), out.data(), v.data(), zz.data(), d.nx);
            std::copy(out.begin(), out.end(), row);
        }
    });
    // y pass
    parallel_for(0, d.nz, [&](int z) {
        std::vector<double> f(std::size_t(d.ny)), out(std::size_t(d.ny)), zz(std::size_t(d.ny) + 1);
        std::vector<int> v(std::size_t(d.ny));
        for (int x = 0; x < d.nx; ++x) {
            double* base = sq.data() + slice * std::size_t(z) + x;
            for (int y = 0; y < d.ny; ++y) f[std::size_t(y)] = base[std::size_t(d.nx) * y];
            edt_1d(f.data(), out.data(), v.data(), zz.data(), d.ny);
            for (int y = 0; y < d.ny; ++y) base[std::size_t(d.nx) * y] = out[std::size_t(y)];
        }
    });
    // z pass
    parallel_for(0, d.ny, [&](int y) {
        std::vector<double> f(std::size_t(d.nz)), out(std::size_t(d.nz)), zz(std::size_t(d.nz) + 1);
        std::vector<int> v(std::size_t(d.nz));
        for (int x = 0; x < d.nx; ++x) {
            double* base = sq.data() + std::size_t(d.nx) * y + x;
            for (int z = 0; z < d.nz; ++z) f[std::size_t(z)] = base[slice * std::size_t(z)];
            edt_1d(f.data(), out.data(), v.data(), zz.data(), d.nz);
            for (int z = 0; z < d.nz; ++z) base[slice * std::size_t(z)] = out[std::size_t(z)];
        }
    });

    const double diag = std::sqrt(double(d.nx) * d.nx + double(d.ny) * d.ny + double(d.nz) * d.nz);
    dm.distance_um.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double dv = sq[i] == kInf ? diag : std::sqrt(sq[i]);
        dm.distance_um[i] = dv * mask.voxel_size_um;
    }
    return dm;
}

} // namespace porescope
