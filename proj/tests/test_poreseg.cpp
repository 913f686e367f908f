#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "porescope/poreseg.hpp"

using namespace porescope;
using namespace testutil;

namespace {

LabeledPoreSpace segment_mask(const BinaryPoreMask& m) {
    const auto dm = distance_transform(m);
    return segment_pores(dm, maximal_inscribed_spheres(dm));
}

} // namespace

TEST_CASE("single isolated pore voxel yields one unit sphere") {
    auto m = empty_mask(5, 5, 5);
    m.pore[m.dims.idx(2, 2, 2)] = 1;
    const auto dm = distance_transform(m);
    const auto mis = maximal_inscribed_spheres(dm);
    REQUIRE(mis.size() == 1);
    CHECK(mis[0].radius_um == doctest::Approx(6.25));
    CHECK(mis[0].x == 2);
}

TEST_CASE("spherical pore is dominated by one near-R sphere") {
    const double R = 8.0;
    auto m = empty_mask(24, 24, 24);
    add_ball(m, 12, 12, 12, R);
    const auto dm = distance_transform(m);
    const auto mis = maximal_inscribed_spheres(dm);
    REQUIRE(!mis.empty());
    double r_top = 0;
    for (const auto& s : mis) r_top = std::max(r_top, s.radius_um);
    CHECK(std::abs(r_top - R * 6.25) <= 6.25);
}

TEST_CASE("MIS postconditions: coverage and pairwise non-containment") {
    std::mt19937 rng(41);
    auto m = empty_mask(14, 13, 12);
    for (auto& p : m.pore) p = (rng() % 3 != 0) ? 1 : 0;
    m.pore[0] = 0;
    const auto dm = distance_transform(m);
    const auto mis = maximal_inscribed_spheres(dm);

    // pairwise non-containment, brute force over all kept pairs
    for (std::size_t i = 0; i < mis.size(); ++i)
        for (std::size_t j = 0; j < mis.size(); ++j)
            if (i != j) CHECK(!sphere_contains(mis[i], mis[j]));

    // every pore voxel covered by at least one sphere
    const Dims& d = m.dims;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                if (!m.is_pore(x, y, z)) continue;
                bool covered = false;
                for (const auto& s : mis) {
                    const double dx = s.x - x, dy = s.y - y, dz = s.z - z;
                    if (std::sqrt(dx * dx + dy * dy + dz * dz) * 6.25 <= s.radius_um + 1e-9) {
                        covered = true;
                        break;
                    }
                }
                CHECK(covered);
            }
}

TEST_CASE("kept spheres equal the maximal elements of the containment order") {
    std::mt19937 rng(43);
    auto m = empty_mask(10, 10, 10);
    for (auto& p : m.pore) p = (rng() % 2) ? 1 : 0;
    m.pore[1] = 0;
    const auto dm = distance_transform(m);
    const auto mis = maximal_inscribed_spheres(dm);

    // oracle: enumerate every pore-voxel sphere; maximal = contained in no other
    std::vector<InscribedSphere> all;
    for (int z = 0; z < 10; ++z)
        for (int y = 0; y < 10; ++y)
            for (int x = 0; x < 10; ++x)
                if (dm.at(x, y, z) > 0) {
                    const double r = dm.at(x, y, z) / 6.25;
                    all.push_back({x, y, z, dm.at(x, y, z), std::llround(r * r)});
                }
    std::set<std::array<int, 3>> expected;
    for (const auto& s : all) {
        bool contained = false;
        for (const auto& t : all)
            if ((t.x != s.x || t.y != s.y || t.z != s.z) && sphere_contains(t, s)) {
                contained = true;
                break;
            }
        if (!contained) expected.insert({s.x, s.y, s.z});
    }
    std::set<std::array<int, 3>> got;
    for (const auto& s : mis) got.insert({s.x, s.y, s.z});
    CHECK(got == expected);
}

TEST_CASE("two disjoint spherical pores keep two dominant spheres") {
    auto m = empty_mask(28, 14, 14);
    add_ball(m, 7, 7, 7, 4.0);
    add_ball(m, 20, 7, 7, 4.0);
    const auto dm = distance_transform(m);
    const auto mis = maximal_inscribed_spheres(dm);
    // count spheres at the top radius: one per ball
    double r_top = 0;
    for (const auto& s : mis) r_top = std::max(r_top, s.radius_um);
    int at_top = 0;
    for (const auto& s : mis)
        if (s.radius_um == r_top) ++at_top;
    CHECK(at_top == 2);

    const auto lps = segment_pores(dm, mis);
    CHECK(lps.pores.size() == 2);
}

TEST_CASE("single spherical pore segments into one family") {
    auto m = empty_mask(20, 20, 20);
    add_ball(m, 10, 10, 10, 6.0);
    const auto lps = segment_mask(m);
    CHECK(lps.pores.size() == 1);
    CHECK(lps.pores[0].voxel_count == m.pore_count());
}

TEST_CASE("straight channel stays one family") {
    const auto m = cylinder_mask(24, 5.0, 12, 12);
    const auto lps = segment_mask(m);
    CHECK(lps.pores.size() == 1);
    CHECK(lps.pore_voxels() == m.pore_count());
}

TEST_CASE("dumbbell splits into exactly two families at the neck") {
    const auto m = dumbbell_mask();
    const auto lps = segment_mask(m);
    REQUIRE(lps.pores.size() == 2);
    // label partition covers the whole pore space
    CHECK(lps.pores[0].voxel_count + lps.pores[1].voxel_count == m.pore_count());
    // the two families meet: exactly one adjacency pair
    auto copy = lps;
    pore_connectivity(copy);
    CHECK(copy.adjacency.size() == 1);
}

TEST_CASE("two separate channels have zero connectivity") {
    auto m = empty_mask(32, 32, 16);
    add_zchannel(m, 8, 8, 3.0, 0, 16);
    add_zchannel(m, 24, 24, 3.0, 0, 16);
    auto lps = segment_mask(m);
    REQUIRE(lps.pores.size() == 2);
    const auto coord = pore_connectivity(lps);
    CHECK(coord[1] == 0);
    CHECK(coord[2] == 0);
}

TEST_CASE("segmentation is invariant to sphere list order") {
    const auto m = dumbbell_mask(48, 6, 2);
    const auto dm = distance_transform(m);
    auto mis = maximal_inscribed_spheres(dm);
    const auto a = segment_pores(dm, mis);
    std::mt19937 rng(47);
    std::shuffle(mis.begin(), mis.end(), rng);
    const auto b = segment_pores(dm, mis);
    CHECK(a.labels == b.labels);
}

TEST_CASE("max_inscribed_radius matches the distance map maximum per pore") {
    const auto m = dumbbell_mask();
    const auto dm = distance_transform(m);
    const auto lps = segment_pores(dm, maximal_inscribed_spheres(dm));
    std::vector<double> max_d(lps.pores.size() + 1, 0.0);
    for (int z = 0; z < m.dims.nz; ++z)
        for (int y = 0; y < m.dims.ny; ++y)
            for (int x = 0; x < m.dims.nx; ++x) {
                const auto l = lps.label_at(x, y, z);
                if (l) max_d[l] = std::max(max_d[l], dm.at(x, y, z));
            }
    for (const auto& p : lps.pores)
        CHECK(p.max_inscribed_radius_um == doctest::Approx(max_d[p.id]).epsilon(1e-12));
}

TEST_CASE("connectivity equals the exhaustive 26-neighbour oracle on random labels") {
    std::mt19937 rng(53);
    for (int trial = 0; trial < 4; ++trial) {
        LabeledPoreSpace lps;
        lps.dims = {16, 16, 16};
        lps.voxel_size_um = 6.25;
        lps.labels.resize(lps.dims.size());
        const std::uint32_t n_labels = 5;
        for (auto& l : lps.labels) l = rng() % (n_labels + 1); // 0 = solid
        lps.pores.resize(n_labels);
        for (std::uint32_t i = 0; i < n_labels; ++i) lps.pores[i].id = i + 1;

        const auto coord = pore_connectivity(lps);
        const auto expected = oracle_adjacency(lps);
        CHECK(lps.adjacency == expected);
        std::vector<int> expected_coord(n_labels + 1, 0);
        for (const auto& [a, b] : expected) {
            expected_coord[a]++;
            expected_coord[b]++;
        }
        CHECK(coord == expected_coord);
    }
}

TEST_CASE("one-pore coordination is zero; face-sharing pair is one each") {
    LabeledPoreSpace lps;
    lps.dims = {4, 4, 4};
    lps.voxel_size_um = 6.25;
    lps.labels.assign(lps.dims.size(), 0);
    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 2; ++x) lps.labels[lps.dims.idx(x, y, z)] = 1;
    lps.pores.resize(1);
    lps.pores[0].id = 1;
    auto coord = pore_connectivity(lps);
    CHECK(coord[1] == 0);

    for (int z = 0; z < 4; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 2; x < 4; ++x) lps.labels[lps.dims.idx(x, y, z)] = 2;
    lps.pores.resize(2);
    lps.pores[1].id = 2;
    coord = pore_connectivity(lps);
    CHECK(coord[1] == 1);
    CHECK(coord[2] == 1);
}

TEST_CASE("architectural stats recover the channel diameter of a cylinder") {
    const double r = 6.0;
    const auto m = cylinder_mask(32, r, 16, 16);
    auto lps = segment_mask(m);
    const auto rep = architectural_stats(lps, m, 6.25 * 8);

    // every plane holds one channel whose equivalent diameter tracks 2r
    const double expected = 2.0 * r * 6.25;
    REQUIRE(rep.sections.size() == 4);
    for (const auto& s : rep.sections) {
        CHECK(std::abs(s.channel_diameter_mean_um - expected) <= 6.25);
        CHECK(s.porosity == doctest::Approx(m.porosity()));
    }
    CHECK(rep.sample.n_channels == 32);
}

TEST_CASE("per-plane label areas sum to the plane pore area") {
    const auto m = dumbbell_mask();
    auto lps = segment_mask(m);
    const auto rep = architectural_stats(lps, m, 100.0);
    const std::size_t slice_px = std::size_t(m.dims.nx) * m.dims.ny;
    std::vector<std::size_t> plane_pore(std::size_t(m.dims.nz), 0);
    for (int z = 0; z < m.dims.nz; ++z)
        for (std::size_t i = 0; i < slice_px; ++i)
            plane_pore[std::size_t(z)] += m.pore[slice_px * std::size_t(z) + i];
    std::vector<std::size_t> plane_label(std::size_t(m.dims.nz), 0);
    for (const auto& ch : rep.channels) plane_label[std::size_t(ch.plane)] += ch.pixel_count;
    CHECK(plane_label == plane_pore);
}

TEST_CASE("label partition preserves the pore voxel count") {
    const auto m = dumbbell_mask(48, 6, 2);
    const auto lps = segment_mask(m);
    std::size_t total = 0;
    for (const auto& p : lps.pores) total += p.voxel_count;
    CHECK(total == m.pore_count());
    CHECK(lps.pore_voxels() == m.pore_count());
}

TEST_CASE("labels round-trip through raw + sidecar") {
    const auto dir = scratch_dir("labels_io");
    const auto m = dumbbell_mask(48, 6, 2);
    auto lps = segment_mask(m);
    pore_connectivity(lps);
    save_labels(lps, dir / "labels");
    const auto r = load_labels(dir / "labels");
    CHECK(r.labels == lps.labels);
    CHECK(r.adjacency == lps.adjacency);
    REQUIRE(r.pores.size() == lps.pores.size());
    for (std::size_t i = 0; i < r.pores.size(); ++i) {
        CHECK(r.pores[i].voxel_count == lps.pores[i].voxel_count);
        CHECK(r.pores[i].max_inscribed_radius_um ==
              doctest::Approx(lps.pores[i].max_inscribed_radius_um));
    }
}
