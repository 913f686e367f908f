#include "porescope/streamline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace porescope {

namespace fs = std::filesystem;

namespace {

constexpr double kDegenerate = 1e-9; // µm
constexpr double kKappaCap = 1e4;

double wrap_deg(double a, double period) {
    a = std::fmod(a, period);
    return a < 0 ? a + period : a;
}

} // namespace

double stream_tortuosity(const Streamline& s) {
    if (s.size() < 2) throw InputError("stream_tortuosity: need at least two points");
    double length = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        length += (s.points_um[i] - s.points_um[i - 1]).norm();
    const double chord = (s.points_um.back() - s.points_um.front()).norm();
    if (chord < kDegenerate)
        throw ClosedPath("stream " + std::to_string(s.id) + " starts and ends at the same point");
    return length / chord;
}

double stream_orientation_xy(const Streamline& s, bool axial) {
    if (s.size() < 2) throw InputError("stream_orientation_xy: need at least two points");
    const double dx = s.points_um.back().x() - s.points_um.front().x();
    const double dy = s.points_um.back().y() - s.points_um.front().y();
    if (std::hypot(dx, dy) < kDegenerate)
        throw DegenerateXY("stream " + std::to_string(s.id) + " has no net XY displacement");
    const double deg = std::atan2(dy, dx) * 180.0 / M_PI;
    return axial ? wrap_deg(deg, 180.0) : wrap_deg(deg, 360.0);
}

double bessel_ratio_a(double kappa) {
    if (kappa < 1e-8) return kappa / 2.0;
    if (kappa > 300.0) {
        // large-argument expansions of I1 and I0 to 1/kappa^3, then divide
        const double k1 = 1.0 / kappa;
        const double s1 = 1.0 - 0.375 * k1 - 0.1171875 * k1 * k1 - 0.1025390625 * k1 * k1 * k1;
        const double s0 = 1.0 + 0.125 * k1 + 0.0703125 * k1 * k1 + 0.0732421875 * k1 * k1 * k1;
        return s1 / s0;
    }
    // power series for I0 and I1, both converge fast for kappa <= 300
    const double q = kappa * kappa / 4.0;
    double term = 1.0, i0 = 1.0;
    double term1 = 1.0, i1acc = 1.0; // I1 = (kappa/2) * sum q^k/(k!(k+1)!)
    for (int k = 1; k < 400; ++k) {
        term *= q / (double(k) * k);
        i0 += term;
        term1 *= q / (double(k) * (k + 1));
        i1acc += term1;
        if (term < 1e-17 * i0 && term1 < 1e-17 * i1acc) break;
    }
    return (kappa / 2.0) * i1acc / i0;
}

VonMisesFit fit_von_mises(const std::vector<double>& angles_deg, bool axial) {
    if (angles_deg.size() < 5)
        throw TooFewSamples("fit_von_mises: need at least 5 angles, got " +
                            std::to_string(angles_deg.size()));
    const double fold = axial ? 2.0 : 1.0;
    double c = 0, s = 0;
    for (double a : angles_deg) {
        const double rad = fold * a * M_PI / 180.0;
        c += std::cos(rad);
        s += std::sin(rad);
    }
    const double n = double(angles_deg.size());
    const double rbar = std::sqrt(c * c + s * s) / n;
    double mu = std::atan2(s, c) * 180.0 / M_PI / fold;

    VonMisesFit fit;
    fit.n = angles_deg.size();
    fit.mu_deg = wrap_deg(mu, axial ? 180.0 : 360.0);

    if (rbar >= 1.0 - 1e-12) {
        fit.kappa = kKappaCap;
        return fit;
    }
    if (rbar < 1e-12) {
        fit.kappa = 0.0;
        return fit;
    }
    // Fisher's approximation, then Newton on A(kappa) = rbar
    double kappa = rbar * (2.0 - rbar * rbar) / (1.0 - rbar * rbar);
    kappa = std::clamp(kappa, 1e-12, kKappaCap);
    for (int it = 0; it < 100; ++it) {
        const double a = bessel_ratio_a(kappa);
        if (std::abs(a - rbar) <= 1e-8) break;
        const double da = 1.0 - a / kappa - a * a; // A'(kappa)
        if (da <= 0) break;
        kappa -= (a - rbar) / da;
        if (kappa >= kKappaCap) {
            kappa = kKappaCap;
            break;
        }
        if (kappa < 1e-12) kappa = 1e-12;
    }
    fit.kappa = kappa;
    return fit;
}

PolarHistogram polar_histogram(const std::vector<double>& angles_deg, int n_bins, bool axial) {
    if (n_bins < 1) throw InputError("polar_histogram: need at least one bin");
    const double period = axial ? 180.0 : 360.0;
    PolarHistogram h;
    h.bin_edges_deg.resize(std::size_t(n_bins) + 1);
    for (int b = 0; b <= n_bins; ++b)
        h.bin_edges_deg[std::size_t(b)] = period * double(b) / n_bins;
    h.counts.assign(std::size_t(n_bins), 0);
    for (double a : angles_deg) {
        const double w = wrap_deg(a, period);
        int b = int(w / period * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        h.counts[std::size_t(b)]++;
    }
    return h;
}

namespace {

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

} // namespace

StreamSummary stream_aggregate(const Streamline& s, bool axial) {
    if (s.speed.empty())
        throw MissingSamples("stream " + std::to_string(s.id) + " carries no speed samples");
    if (s.speed.size() != s.size())
        throw InputError("stream " + std::to_string(s.id) + ": sample count differs from points");

    StreamSummary sum;
    sum.id = s.id;
    sum.n_points = s.size();
    sum.mean_speed = *mean_of(s.speed);
    sum.mean_re = mean_of(s.re);
    sum.mean_dhyd_um = mean_of(s.dhyd_um);
    sum.mean_pressure = mean_of(s.pressure);
    try {
        sum.t_hyd = stream_tortuosity(s);
    } catch (const ClosedPath&) {
    }
    try {
        sum.orientation_deg = stream_orientation_xy(s, axial);
    } catch (const DegenerateXY&) {
    }
    return sum;
}

std::vector<TracePoint> stream_trace(const Streamline& s) {
    std::vector<TracePoint> trace(s.size());
    double arc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i > 0) arc += (s.points_um[i] - s.points_um[i - 1]).norm();
        trace[i].arc_um = arc;
        trace[i].speed = i < s.speed.size() ? s.speed[i] : 0.0;
        if (i < s.re.size()) trace[i].re = s.re[i];
        if (i < s.dhyd_um.size()) trace[i].dhyd_um = s.dhyd_um[i];
        if (i < s.pressure.size()) trace[i].pressure = s.pressure[i];
    }
    return trace;
}

RegressionResult regress(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InputError("regress: x and y lengths differ");
    const std::size_t n = x.size();
    if (n < 2) throw ZeroVariance("regress: need at least two points");
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < n; ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= double(n);
    ym /= double(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    if (sxx == 0) throw ZeroVariance("regress: x has zero variance");

    RegressionResult r;
    r.n = n;
    r.slope = sxy / sxx;
    r.intercept = ym - r.slope * xm;
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (r.slope * x[i] + r.intercept);
        ss_res += e * e;
    }
    r.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return r;
}

std::vector<Streamline> load_streamlines_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open streamline CSV: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw MalformedHeader(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    static const std::vector<std::string> allowed = {
        "stream_id,point_index,x,y,z",
        "stream_id,point_index,x,y,z,speed",
        "stream_id,point_index,x,y,z,speed,p",
        "stream_id,point_index,x,y,z,speed,p,dhyd",
        "stream_id,point_index,x,y,z,speed,p,dhyd,re",
    };
    const auto it = std::find(allowed.begin(), allowed.end(), line);
    if (it == allowed.end())
        throw MalformedHeader(path.string() +
                              ": header must be 'stream_id,point_index,x,y,z[,speed,p,dhyd,re]'");
    const int ncols = 5 + int(it - allowed.begin());

    struct Row {
        int id;
        long idx;
        double c[7];
        int nc;
    };
    std::map<int, std::vector<Row>> by_stream;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        Row r{};
        double vals[9];
        const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &vals[0],
                                    &vals[1], &vals[2], &vals[3], &vals[4], &vals[5], &vals[6],
                                    &vals[7], &vals[8]);
        if (got != ncols)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(ncols) + " fields");
        r.id = int(vals[0]);
        r.idx = long(vals[1]);
        r.nc = ncols - 2;
        for (int c = 0; c < r.nc; ++c) r.c[c] = vals[c + 2];
        by_stream[r.id].push_back(r);
    }

    std::vector<Streamline> out;
    for (auto& [id, rows] : by_stream) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.idx < b.idx; });
        Streamline s;
        s.id = id;
        for (const auto& r : rows) {
            s.points_um.emplace_back(r.c[0], r.c[1], r.c[2]);
            if (r.nc > 3) s.speed.push_back(r.c[3]);
            if (r.nc > 4) s.pressure.push_back(r.c[4]);
            if (r.nc > 5) s.dhyd_um.push_back(r.c[5]);
            if (r.nc > 6) s.re.push_back(r.c[6]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace porescope
