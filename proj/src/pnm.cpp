#include "porescope/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <nlohmann/json.hpp>

namespace porescope {

namespace fs = std::filesystem;
using nlohmann::json;

PoreNetwork extract_network(const LabeledPoreSpace& lps, const DistanceMap& dmap) {
    const Dims& d = lps.dims;
    const double v = lps.voxel_size_um;

    PoreNetwork net;
    net.voxel_size_um = v;
    net.domain_um = Eigen::Vector3d(d.nx * v, d.ny * v, d.nz * v);
    net.pores.reserve(lps.pores.size());
    for (const auto& p : lps.pores) {
        NetworkPore np;
        np.id = p.id;
        np.centroid_um = Eigen::Vector3d(p.centroid_um[0], p.centroid_um[1], p.centroid_um[2]);
        np.radius_um = p.max_inscribed_radius_um;
        net.pores.push_back(np);
    }

    // throat radius: widest distance-map value among voxels on either side of
    // the shared label boundary
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> throat_r;
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
                            if (!b || b == a) continue;
                            auto key = std::minmax(a, b);
                            double& r = throat_r[{key.first, key.second}];
                            r = std::max(r, dmap.at(x, y, z));
                        }
            }

    for (const auto& [key, r] : throat_r) {
        const auto& pa = net.pores[key.first - 1];
        const auto& pb = net.pores[key.second - 1];
        Throat t;
        t.a = key.first;
        t.b = key.second;
        t.radius_um = r;
        const double gap = (pa.centroid_um - pb.centroid_um).norm() - pa.radius_um - pb.radius_um;
        t.length_um = std::max(gap, v);
        net.throats.push_back(t);
    }

    // face contact from the label volume
    std::set<std::uint32_t> inlet, outlet;
    for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x) {
            if (auto l = lps.labels[d.idx(x, y, 0)]) inlet.insert(l);
            if (auto l = lps.labels[d.idx(x, y, d.nz - 1)]) outlet.insert(l);
        }
    net.inlet_pores.assign(inlet.begin(), inlet.end());
    net.outlet_pores.assign(outlet.begin(), outlet.end());

    if (net.inlet_pores.empty() || net.outlet_pores.empty())
        throw NoSpanningPath("pore network does not touch both z faces");

    // BFS over throats from the inlet set
    std::vector<std::vector<std::uint32_t>> adj(net.pores.size() + 1);
    for (const auto& t : net.throats) {
        adj[t.a].push_back(t.b);
        adj[t.b].push_back(t.a);
    }
    std::vector<std::uint8_t> seen(net.pores.size() + 1, 0);
    std::deque<std::uint32_t> q(net.inlet_pores.begin(), net.inlet_pores.end());
    for (auto i : net.inlet_pores) seen[i] = 1;
    while (!q.empty()) {
        const auto u = q.front();
        q.pop_front();
        for (auto w : adj[u])
            if (!seen[w]) {
                seen[w] = 1;
                q.push_back(w);
            }
    }
    if (std::none_of(net.outlet_pores.begin(), net.outlet_pores.end(),
                     [&](std::uint32_t o) { return seen[o]; }))
        throw NoSpanningPath("no inlet-to-outlet path in the pore network");
    return net;
}

double throat_conductance(double radius_um, double length_um, const FluidProps& props,
                          double shape_factor) {
    if (radius_um <= 0 || length_um <= 0)
        throw InputError("throat_conductance: radius and length must be positive");
    const double r = radius_um * kMicron;
    const double l = length_um * kMicron;
    return shape_factor * M_PI * r * r * r * r / (8.0 * props.dynamic_viscosity * l);
}

void assign_conductances(PoreNetwork& net, const FluidProps& props, double shape_factor) {
    for (auto& t : net.throats)
        t.conductance = throat_conductance(t.radius_um, t.length_um, props, shape_factor);
}

namespace {

struct BoundaryThroat {
    std::uint32_t pore = 0;
    double conductance = 0;
    bool is_inlet = false;
};

// Virtual face nodes are needed whenever a pore would sit on both Dirichlet
// faces at once.
bool needs_virtual_faces(const PoreNetwork& net) {
    std::set<std::uint32_t> in(net.inlet_pores.begin(), net.inlet_pores.end());
    return std::any_of(net.outlet_pores.begin(), net.outlet_pores.end(),
                       [&](std::uint32_t o) { return in.count(o) != 0; });
}

std::vector<BoundaryThroat> make_boundary_throats(const PoreNetwork& net,
                                                  const FluidProps& props) {
    std::vector<BoundaryThroat> bts;
    const double v = net.voxel_size_um;
    for (auto id : net.inlet_pores) {
        const auto& p = net.pores[id - 1];
        const double len = std::max(p.centroid_um.z(), v);
        bts.push_back({id, throat_conductance(p.radius_um, len, props), true});
    }
    for (auto id : net.outlet_pores) {
        const auto& p = net.pores[id - 1];
        const double len = std::max(net.domain_um.z() - p.centroid_um.z(), v);
        bts.push_back({id, throat_conductance(p.radius_um, len, props), false});
    }
    return bts;
}

} // namespace

PressureSolution solve_pressure(const PoreNetwork& net, double p_in, double p_out,
                                const FluidProps& props) {
    if (p_in == p_out) throw InputError("solve_pressure: P_in must differ from P_out");
    const auto P = net.pores.size();
    if (P == 0) throw DisconnectedNetwork("empty network");
    for (const auto& t : net.throats)
        if (t.conductance <= 0)
            throw InputError("solve_pressure: conductances not assigned");

    const bool virt = needs_virtual_faces(net);
    std::vector<BoundaryThroat> boundary;
    std::vector<int> unknown_of(P + 1, -1);
    std::vector<double> pressure(P + 1, 0.0);
    std::vector<std::uint8_t> dirichlet(P + 1, 0);

    if (virt) {
        boundary = make_boundary_throats(net, props);
        for (std::size_t i = 1; i <= P; ++i) unknown_of[i] = int(i) - 1;
    } else {
        for (auto i : net.inlet_pores) {
            dirichlet[i] = 1;
            pressure[i] = p_in;
        }
        for (auto i : net.outlet_pores) {
            dirichlet[i] = 1;
            pressure[i] = p_out;
        }
        int k = 0;
        for (std::size_t i = 1; i <= P; ++i)
            if (!dirichlet[i]) unknown_of[i] = k++;
    }
    const int n_unknown = int(std::count_if(unknown_of.begin() + 1, unknown_of.end(),
                                            [](int u) { return u >= 0; }));

    // every unknown pore must reach a Dirichlet condition through the graph
    {
        std::vector<std::vector<std::uint32_t>> adj(P + 1);
        for (const auto& t : net.throats) {
            adj[t.a].push_back(t.b);
            adj[t.b].push_back(t.a);
        }
        std::vector<std::uint8_t> seen(P + 1, 0);
        std::deque<std::uint32_t> q;
        if (virt) {
            for (const auto& bt : boundary)
                if (!seen[bt.pore]) {
                    seen[bt.pore] = 1;
                    q.push_back(bt.pore);
                }
        } else {
            for (std::size_t i = 1; i <= P; ++i)
                if (dirichlet[i]) {
                    seen[i] = 1;
                    q.push_back(std::uint32_t(i));
                }
        }
        while (!q.empty()) {
            const auto u = q.front();
            q.pop_front();
            for (auto w : adj[u])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push_back(w);
                }
        }
        for (std::size_t i = 1; i <= P; ++i)
            if (!seen[i])
                throw DisconnectedNetwork("pore " + std::to_string(i) +
                                          " has no path to a pressure boundary");
    }

    PressureSolution sol;
    sol.pore_pressure.assign(P, 0.0);
    sol.boundary_flux.assign(P, 0.0);

    if (n_unknown > 0) {
        Eigen::SparseMatrix<double> A(n_unknown, n_unknown);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(net.throats.size() * 4 + 16);

        auto add = [&](std::uint32_t a, std::uint32_t b, double g) {
            const int ua = unknown_of[a], ub = b ? unknown_of[b] : -1;
            if (ua >= 0) {
                trip.emplace_back(ua, ua, g);
                if (ub >= 0)
                    trip.emplace_back(ua, ub, -g);
                else
                    rhs[ua] += g * pressure[b];
            }
        };
        for (const auto& t : net.throats) {
            add(t.a, t.b, t.conductance);
            add(t.b, t.a, t.conductance);
        }
        if (virt) {
            for (const auto& bt : boundary) {
                const int u = unknown_of[bt.pore];
                trip.emplace_back(u, u, bt.conductance);
                rhs[u] += bt.conductance * (bt.is_inlet ? p_in : p_out);
            }
        }
        A.setFromTriplets(trip.begin(), trip.end());

        const int max_iter = std::max(100, 10 * int(P));
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                                 Eigen::DiagonalPreconditioner<double>>
            cg;
        cg.setTolerance(1e-12);
        cg.setMaxIterations(max_iter);
        cg.compute(A);
        Eigen::VectorXd x = cg.solve(rhs);
        sol.iterations = int(cg.iterations());
        if (!(cg.error() <= 1e-10)) {
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> bicg;
            bicg.setTolerance(1e-12);
            bicg.setMaxIterations(max_iter);
            bicg.compute(A);
            x = bicg.solve(rhs);
            sol.iterations += int(bicg.iterations());
            if (!(bicg.error() <= 1e-10))
                throw SolverDiverged("pressure solve stalled at relative residual " +
                                     std::to_string(bicg.error()));
        }
        for (std::size_t i = 1; i <= P; ++i)
            if (unknown_of[i] >= 0) pressure[i] = x[unknown_of[i]];
    }

    for (std::size_t i = 1; i <= P; ++i) sol.pore_pressure[i - 1] = pressure[i];

    sol.throat_flux.resize(net.throats.size());
    double max_abs_flux = 0;
    for (std::size_t t = 0; t < net.throats.size(); ++t) {
        const auto& th = net.throats[t];
        sol.throat_flux[t] = th.conductance * (pressure[th.a] - pressure[th.b]);
        max_abs_flux = std::max(max_abs_flux, std::abs(sol.throat_flux[t]));
    }

    double q_in = 0, q_out = 0;
    if (virt) {
        for (const auto& bt : boundary) {
            const double q = bt.conductance * ((bt.is_inlet ? p_in : p_out) - pressure[bt.pore]);
            sol.boundary_flux[bt.pore - 1] += q;
            max_abs_flux = std::max(max_abs_flux, std::abs(q));
            if (bt.is_inlet)
                q_in += q;
            else
                q_out -= q; // q is into the pore; outflow is its negative
        }
    } else {
        std::set<std::uint32_t> in(net.inlet_pores.begin(), net.inlet_pores.end());
        std::set<std::uint32_t> out(net.outlet_pores.begin(), net.outlet_pores.end());
        for (std::size_t t = 0; t < net.throats.size(); ++t) {
            const auto& th = net.throats[t];
            const double q = sol.throat_flux[t];
            if (in.count(th.a) && !in.count(th.b)) q_in += q;
            if (in.count(th.b) && !in.count(th.a)) q_in -= q;
            if (out.count(th.b) && !out.count(th.a)) q_out += q;
            if (out.count(th.a) && !out.count(th.b)) q_out -= q;
        }
        // Dirichlet pores absorb their imbalance
        for (std::size_t t = 0; t < net.throats.size(); ++t) {
            const auto& th = net.throats[t];
            if (dirichlet[th.a]) sol.boundary_flux[th.a - 1] += sol.throat_flux[t];
            if (dirichlet[th.b]) sol.boundary_flux[th.b - 1] -= sol.throat_flux[t];
        }
    }
    sol.total_flux = (p_in > p_out) ? q_in : q_out;

    // interior imbalance, scaled by the largest flux in the system
    double worst = 0;
    {
        std::vector<double> balance(P + 1, 0.0);
        for (std::size_t t = 0; t < net.throats.size(); ++t) {
            const auto& th = net.throats[t];
            balance[th.a] -= sol.throat_flux[t];
            balance[th.b] += sol.throat_flux[t];
        }
        if (virt)
            for (std::size_t i = 1; i <= P; ++i) balance[i] += sol.boundary_flux[i - 1];
        for (std::size_t i = 1; i <= P; ++i) {
            if (!virt && dirichlet[i]) continue;
            worst = std::max(worst, std::abs(balance[i]));
        }
    }
    sol.residual = max_abs_flux > 0 ? worst / max_abs_flux : 0.0;
    return sol;
}

PermeabilityResult permeability(const PressureSolution& sol, double area_m2, double length_m,
                                const FluidProps& props, double dp_pa) {
    if (dp_pa <= 0) throw InputError("permeability: dP must be positive");
    PermeabilityResult r;
    r.k_m2 = sol.total_flux * props.dynamic_viscosity * length_m / (area_m2 * dp_pa);
    r.k_darcy = m2_to_darcy(r.k_m2);
    return r;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

} // namespace

TortuosityDistribution particle_tortuosity(const PoreNetwork& net, const PressureSolution& sol,
                                           int n_particles, std::uint64_t seed) {
    if (n_particles < 1) throw InputError("particle_tortuosity: need at least one particle");
    const auto P = net.pores.size();

    // outgoing (positive-flux) throats per pore
    struct Out {
        std::uint32_t to;
        double flux;
    };
    std::vector<std::vector<Out>> outgoing(P + 1);
    for (std::size_t t = 0; t < net.throats.size(); ++t) {
        const auto& th = net.throats[t];
        const double q = sol.throat_flux[t];
        if (q > 0)
            outgoing[th.a].push_back({th.b, q});
        else if (q < 0)
            outgoing[th.b].push_back({th.a, -q});
    }
    for (auto& v : outgoing)
        std::sort(v.begin(), v.end(), [](const Out& a, const Out& b) { return a.to < b.to; });

    std::set<std::uint32_t> outlet(net.outlet_pores.begin(), net.outlet_pores.end());

    // inlet weights: injected flux (virtual mode) or net outflow (Dirichlet mode)
    std::vector<double> weights;
    std::vector<std::uint32_t> starts;
    for (auto id : net.inlet_pores) {
        double w = sol.boundary_flux[id - 1];
        if (w <= 0) {
            w = 0;
            for (const auto& o : outgoing[id]) w += o.flux;
        }
        if (w > 0) {
            starts.push_back(id);
            weights.push_back(w);
        }
    }
    if (starts.empty()) throw DisconnectedNetwork("no inlet pore carries positive flux");
    std::vector<double> cumw(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumw.begin());

    TortuosityDistribution dist;
    const int max_steps = 4 * int(P) + 8;
    for (int i = 0; i < n_particles; ++i) {
        std::mt19937_64 rng(splitmix64(seed + 0x51CD00B5ull * std::uint64_t(i + 1)));
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        const double pick = uni(rng) * cumw.back();
        const auto si = std::size_t(std::lower_bound(cumw.begin(), cumw.end(), pick) - cumw.begin());
        std::uint32_t cur = starts[std::min(si, starts.size() - 1)];

        const Eigen::Vector3d start = net.pores[cur - 1].centroid_um;
        double path = 0;
        bool done = outlet.count(cur) != 0;
        bool trapped = false;
        for (int step = 0; !done && step < max_steps; ++step) {
            const auto& outs = outgoing[cur];
            if (outs.empty()) {
                trapped = true;
                break;
            }
            double total = 0;
            for (const auto& o : outs) total += o.flux;
            const double r = uni(rng) * total;
            double acc = 0;
            std::uint32_t next = outs.back().to;
            for (const auto& o : outs) {
                acc += o.flux;
                if (r <= acc) {
                    next = o.to;
                    break;
                }
            }
            path += (net.pores[next - 1].centroid_um - net.pores[cur - 1].centroid_um).norm();
            cur = next;
            done = outlet.count(cur) != 0;
        }
        if (!done) trapped = true;
        if (trapped) {
            dist.trapped++;
            continue;
        }
        const double chord = (net.pores[cur - 1].centroid_um - start).norm();
        dist.samples.push_back((chord > 0 && path > 0) ? path / chord : 1.0);
    }

    if (!dist.samples.empty()) {
        double mean = 0;
        for (double t : dist.samples) mean += t;
        mean /= double(dist.samples.size());
        double ss = 0;
        for (double t : dist.samples) ss += (t - mean) * (t - mean);
        dist.mean = mean;
        dist.sd = dist.samples.size() > 1 ? std::sqrt(ss / double(dist.samples.size() - 1)) : 0.0;

        const double lo = 1.0;
        const double hi = *std::max_element(dist.samples.begin(), dist.samples.end());
        const int nbins = 40;
        const double width = std::max((hi - lo) / nbins, 1e-12);
        dist.bin_edges.resize(nbins + 1);
        for (int b = 0; b <= nbins; ++b) dist.bin_edges[std::size_t(b)] = lo + b * width;
        dist.counts.assign(nbins, 0);
        for (double t : dist.samples) {
            int b = int((t - lo) / width);
            b = std::clamp(b, 0, nbins - 1);
            dist.counts[std::size_t(b)]++;
        }
    }
    return dist;
}

void save_network(const PoreNetwork& net, const fs::path& path) {
    json pores = json::array();
    for (const auto& p : net.pores)
        pores.push_back({{"id", p.id},
                         {"x", p.centroid_um.x()},
                         {"y", p.centroid_um.y()},
                         {"z", p.centroid_um.z()},
                         {"r", p.radius_um}});
    json throats = json::array();
    for (const auto& t : net.throats)
        throats.push_back(
            {{"a", t.a}, {"b", t.b}, {"r", t.radius_um}, {"l", t.length_um}, {"g", t.conductance}});
    json doc = {{"pores", pores},
                {"throats", throats},
                {"inlet", net.inlet_pores},
                {"outlet", net.outlet_pores},
                {"domain_um", {net.domain_um.x(), net.domain_um.y(), net.domain_um.z()}},
                {"voxel_size_um", net.voxel_size_um}};
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path.string());
    f << doc.dump(2) << "\n";
}

PoreNetwork load_network(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path.string());
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw InputError("malformed network JSON " + path.string() + ": " + e.what());
    }
    PoreNetwork net;
    for (const auto& p : doc.at("pores")) {
        NetworkPore np;
        np.id = p.at("id").get<std::uint32_t>();
        np.centroid_um =
            Eigen::Vector3d(p.at("x").get<double>(), p.at("y").get<double>(), p.at("z").get<double>());
        np.radius_um = p.at("r").get<double>();
        net.pores.push_back(np);
    }
    for (const auto& t : doc.at("throats")) {
        Throat th;
        th.a = t.at("a").get<std::uint32_t>();
        th.b = t.at("b").get<std::uint32_t>();
        th.radius_um = t.at("r").get<double>();
        th.length_um = t.at("l").get<double>();
        th.conductance = t.value("g", 0.0);
        net.throats.push_back(th);
    }
    if (doc.contains("inlet")) net.inlet_pores = doc["inlet"].get<std::vector<std::uint32_t>>();
    if (doc.contains("outlet")) net.outlet_pores = doc["outlet"].get<std::vector<std::uint32_t>>();
    if (doc.contains("domain_um"))
        net.domain_um = Eigen::Vector3d(doc["domain_um"][0].get<double>(),
                                        doc["domain_um"][1].get<double>(),
                                        doc["domain_um"][2].get<double>());
    net.voxel_size_um = doc.value("voxel_size_um", 0.0);
    for (const auto& t : net.throats)
        if (t.a == t.b || t.a == 0 || t.b == 0 || t.a > net.pores.size() || t.b > net.pores.size())
            throw InputError("network JSON has a throat with invalid endpoints");
    return net;
}

} // namespace porescope
