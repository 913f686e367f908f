#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "porescope/flowfield.hpp"

using namespace porescope;
using namespace testutil;

namespace {

// all-pore mask for interpolation tests where walls would only get in the way
BinaryPoreMask open_mask(int nx, int ny, int nz) {
    auto m = testutil::empty_mask(nx, ny, nz);
    std::fill(m.pore.begin(), m.pore.end(), std::uint8_t(1));
    return m;
}

} // namespace

TEST_CASE("nodal import buckets points into planes") {
    const auto dir = scratch_dir("ff_import");
    {
        std::ofstream f(dir / "nodes.csv");
        f << "x,y,z,u,v,w,p\n";
        for (int pl = 0; pl < 2; ++pl)
            for (int i = 0; i < 4; ++i)
                f << i * 1e-5 << "," << i * 2e-5 << "," << pl * 1.875e-5 << ",0,0,1,5\n";
    }
    const auto field = import_nodal_csv(dir / "nodes.csv");
    REQUIRE(field.planes.size() == 2);
    CHECK(field.planes[0].points.size() == 4);
    CHECK(field.planes[1].points.size() == 4);
    CHECK(field.planes[0].z_um == doctest::Approx(0.0));
    CHECK(field.planes[1].z_um == doctest::Approx(18.75));
}

TEST_CASE("nodal import rejects a wrong header") {
    const auto dir = scratch_dir("ff_header");
    {
        std::ofstream f(dir / "bad.csv");
        f << "x,y,z,u,v,p\n0,0,0,0,0,0\n";
    }
    CHECK_THROWS_AS(import_nodal_csv(dir / "bad.csv"), MalformedHeader);
}

TEST_CASE("nodal import rejects smeared plane z values") {
    const auto dir = scratch_dir("ff_smear");
    {
        std::ofstream f(dir / "smear.csv");
        f << "x,y,z,u,v,w,p\n";
        // z drifts in steps below the tolerance: no plane decomposition exists
        for (int i = 0; i < 40; ++i) f << "0,0," << i * 0.4e-6 << ",0,0,1,0\n";
    }
    CHECK_THROWS_AS(import_nodal_csv(dir / "smear.csv", 0.625), NonMonotonePlanes);
}

TEST_CASE("voxelised field round-trips through the nodal CSV within 1e-12") {
    const auto dir = scratch_dir("ff_roundtrip");
    const auto mask = open_mask(6, 5, 7);
    VoxelField vf;
    vf.dims = mask.dims;
    vf.voxel_size_um = mask.voxel_size_um;
    vf.vx.resize(mask.dims.size());
    vf.vy.resize(mask.dims.size());
    vf.vz.resize(mask.dims.size());
    vf.p.resize(mask.dims.size());
    for (std::size_t i = 0; i < mask.dims.size(); ++i) {
        vf.vx[i] = 0.1 * double(i % 13);
        vf.vy[i] = -0.05 * double(i % 7);
        vf.vz[i] = 1.0 + 0.01 * double(i % 5);
        vf.p[i] = 101325.0 + double(i);
    }
    export_nodal_csv(vf, mask, dir / "nodes.csv", 1, true);
    const auto nodal = import_nodal_csv(dir / "nodes.csv", 0.625);
    REQUIRE(nodal.planes.size() == 7);
    const auto back = interpolate_to_voxels(nodal, mask);
    for (std::size_t i = 0; i < mask.dims.size(); ++i) {
        CHECK(back.vx[i] == doctest::Approx(vf.vx[i]).epsilon(1e-12));
        CHECK(back.vz[i] == doctest::Approx(vf.vz[i]).epsilon(1e-12));
        CHECK(back.p[i] == doctest::Approx(vf.p[i]).epsilon(1e-12));
    }
}

TEST_CASE("uniform field interpolates to the uniform value on pore voxels") {
    const auto mask = cylinder_mask(12, 4.0);
    NodalField nodal;
    for (int pl = 0; pl < 4; ++pl) {
        FlowPlane plane;
        plane.z_um = pl * 3 * 6.25;
        for (int gy = 0; gy < 12; ++gy)
            for (int gx = 0; gx < 12; ++gx)
                plane.points.push_back({gx * 6.25, gy * 6.25, 0, 0, 1.0, 5.0});
        nodal.planes.push_back(plane);
    }
    const auto vf = interpolate_to_voxels(nodal, mask);
    for (int z = 0; z < 12; ++z)
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                const std::size_t i = mask.dims.idx(x, y, z);
                if (mask.pore[i]) {
                    CHECK(vf.vz[i] == doctest::Approx(1.0).epsilon(1e-12));
                    CHECK(vf.vx[i] == doctest::Approx(0.0));
                } else {
                    CHECK(vf.vz[i] == 0.0); // solid forced to zero
                }
            }
}

TEST_CASE("interpolation is exact on fields affine in x, y and z") {
    const auto mask = open_mask(9, 8, 10);
    NodalField nodal;
    auto affine = [](double x_um, double y_um, double z_um) {
        return 0.3 + 2e-3 * x_um - 1e-3 * y_um + 5e-4 * z_um;
    };
    for (int pl = 0; pl < 10; pl += 3) {
        FlowPlane plane;
        plane.z_um = (pl + 0.5) * 6.25;
        for (int gy = 0; gy < 10; ++gy)
            for (int gx = 0; gx < 11; ++gx) {
                const double x = gx * 5.0, y = gy * 5.5;
                plane.points.push_back({x, y, affine(x, y, plane.z_um), 0, 0, 0});
            }
        nodal.planes.push_back(plane);
    }
    const auto vf = interpolate_to_voxels(nodal, mask);
    for (int z = 0; z < 10; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 9; ++x) {
                const double zc = std::clamp((z + 0.5) * 6.25, nodal.planes.front().z_um,
                                             nodal.planes.back().z_um);
                const double expect = affine((x + 0.5) * 6.25, (y + 0.5) * 6.25, zc);
                CHECK(vf.vx[mask.dims.idx(x, y, z)] == doctest::Approx(expect).epsilon(1e-10));
            }
}

TEST_CASE("linear-in-z field is reproduced exactly between planes") {
    const auto mask = open_mask(4, 4, 12);
    NodalField nodal;
    for (int pl = 0; pl < 12; pl += 3) {
        FlowPlane plane;
        plane.z_um = (pl + 0.5) * 6.25;
        for (int gy = 0; gy < 5; ++gy)
            for (int gx = 0; gx < 5; ++gx)
                plane.points.push_back({gx * 6.25, gy * 6.25, 0, 0, plane.z_um * 1e-3, 0});
        nodal.planes.push_back(plane);
    }
    const auto vf = interpolate_to_voxels(nodal, mask);
    for (int z = 1; z < 9; ++z) { // inside the sampled z range
        const double expect = (z + 0.5) * 6.25 * 1e-3;
        CHECK(vf.vz[mask.dims.idx(2, 2, z)] == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("Poiseuille disc profile interpolates within 5% of peak") {
    const int n = 24;
    const double R_vox = 10.0, peak = 2.0;
    const auto mask = cylinder_mask(n, R_vox, 12, 12);
    const double R_um = R_vox * 6.25;
    auto profile = [&](double x_um, double y_um) {
        const double dx = x_um - 12.5 * 6.25 + 6.25 * 0.5; // centre voxel (12,12) centre
        const double dy = y_um - 12.5 * 6.25 + 6.25 * 0.5;
        const double r2 = (dx * dx + dy * dy) / (R_um * R_um);
        return r2 >= 1.0 ? 0.0 : peak * (1.0 - r2);
    };
    NodalField nodal;
    for (int pl = 0; pl < n; pl += 3) {
        FlowPlane plane;
        plane.z_um = (pl + 0.5) * 6.25;
        for (int gy = 0; gy < n; gy += 2)
            for (int gx = 0; gx < n; gx += 2) {
                const double x = (gx + 0.5) * 6.25, y = (gy + 0.5) * 6.25;
                plane.points.push_back({x, y, 0, 0, profile(x, y), 0});
            }
        nodal.planes.push_back(plane);
    }
    const auto vf = interpolate_to_voxels(nodal, mask);
    double worst = 0;
    for (int z = 2; z < n - 2; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const std::size_t i = mask.dims.idx(x, y, z);
                if (!mask.pore[i]) continue;
                const double dx = x - 12.0, dy = y - 12.0;
                if (dx * dx + dy * dy > 8.0 * 8.0) continue; // compare inside r <= 8 voxels
                const double expect = profile((x + 0.5) * 6.25, (y + 0.5) * 6.25);
                worst = std::max(worst, std::abs(vf.vz[i] - expect));
            }
    CHECK(worst <= 0.05 * peak);
}

TEST_CASE("channel sections report Eq.2/Eq.3 numbers") {
    // one plane, one label of exactly 100 pixels, uniform speed 1 m/s
    LabeledPoreSpace lps;
    lps.dims = {20, 20, 1};
    lps.voxel_size_um = 6.25;
    lps.labels.assign(lps.dims.size(), 0);
    VoxelField vf;
    vf.dims = lps.dims;
    vf.voxel_size_um = 6.25;
    vf.vx.assign(lps.dims.size(), 0.0);
    vf.vy.assign(lps.dims.size(), 0.0);
    vf.vz.assign(lps.dims.size(), 0.0);
    vf.p.assign(lps.dims.size(), 0.0);
    int placed = 0;
    for (int y = 0; y < 10 && placed < 100; ++y)
        for (int x = 0; x < 10 && placed < 100; ++x) {
            lps.labels[lps.dims.idx(x, y, 0)] = 1;
            vf.vz[lps.dims.idx(x, y, 0)] = 1.0;
            ++placed;
        }
    lps.pores.resize(1);
    lps.pores[0].id = 1;

    const auto sections = channel_re(vf, lps, FluidProps{});
    REQUIRE(sections.size() == 1);
    CHECK(sections[0].area_um2 == doctest::Approx(3906.25));
    CHECK(sections[0].dhyd_um == doctest::Approx(70.52369794346954).epsilon(1e-12));
    CHECK(sections[0].u_mean == doctest::Approx(1.0));
    // direct evaluation of u*D/nu
    CHECK(sections[0].re == doctest::Approx(78.97390587174641).epsilon(1e-12));

    SUBCASE("Re is linear in speed") {
        for (auto& v : vf.vz) v *= 2.0;
        const auto doubled = channel_re(vf, lps, FluidProps{});
        CHECK(doubled[0].re == doctest::Approx(2.0 * sections[0].re).epsilon(1e-12));
    }
}

TEST_CASE("channel areas per plane sum to the plane pore area") {
    const auto m = dumbbell_mask(48, 6, 2);
    const auto dm = distance_transform(m);
    auto lps = segment_pores(dm, maximal_inscribed_spheres(dm));
    VoxelField vf;
    vf.dims = m.dims;
    vf.voxel_size_um = m.voxel_size_um;
    vf.vx.assign(m.dims.size(), 0.0);
    vf.vy.assign(m.dims.size(), 0.0);
    vf.vz.assign(m.dims.size(), 0.5);
    vf.p.assign(m.dims.size(), 0.0);
    const auto secs = channel_re(vf, lps, FluidProps{});
    const std::size_t slice_px = std::size_t(m.dims.nx) * m.dims.ny;
    std::vector<double> area(std::size_t(m.dims.nz), 0.0);
    for (const auto& s : secs) area[std::size_t(s.plane)] += s.area_um2;
    for (int z = 0; z < m.dims.nz; ++z) {
        std::size_t pore = 0;
        for (std::size_t i = 0; i < slice_px; ++i) pore += m.pore[slice_px * std::size_t(z) + i];
        CHECK(area[std::size_t(z)] == doctest::Approx(double(pore) * 6.25 * 6.25));
    }
}

TEST_CASE("sectional flow stats average uniformly and scale with speed") {
    std::vector<ChannelSection> elems;
    for (int plane = 0; plane < 20; ++plane) {
        ChannelSection c;
        c.plane = plane;
        c.z_um = (plane + 0.5) * 6.25;
        c.label = 1;
        c.u_mean = plane < 10 ? 1.0 : 2.0; // doubled speed in the second half
        c.dhyd_um = 50.0;
        c.re = c.u_mean * 50.0e-6 / 8.93e-7;
        elems.push_back(c);
    }
    const auto part = make_sections(20, 6.25, 62.5); // two sections of 10 slices
    const auto stats = sectional_flow_stats(elems, part);
    REQUIRE(stats.size() == 2);
    CHECK(stats[0].n_elements == 10);
    CHECK(stats[1].mean_re == doctest::Approx(2.0 * stats[0].mean_re).epsilon(1e-12));
    CHECK(stats[1].mean_velocity == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("zero field gives zero Reynolds everywhere") {
    LabeledPoreSpace lps;
    lps.dims = {4, 4, 2};
    lps.voxel_size_um = 6.25;
    lps.labels.assign(lps.dims.size(), 1);
    lps.pores.resize(1);
    lps.pores[0].id = 1;
    VoxelField vf;
    vf.dims = lps.dims;
    vf.voxel_size_um = 6.25;
    vf.vx.assign(lps.dims.size(), 0.0);
    vf.vy.assign(lps.dims.size(), 0.0);
    vf.vz.assign(lps.dims.size(), 0.0);
    vf.p.assign(lps.dims.size(), 0.0);
    for (const auto& s : channel_re(vf, lps, FluidProps{})) CHECK(s.re == 0.0);
}
