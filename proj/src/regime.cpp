#include "porescope/regime.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <Eigen/Dense>

namespace porescope {

namespace fs = std::filesystem;

void RegimeCurve::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].velocity_mps <= 0)
            throw InputError("regime curve '" + section + "': velocities must be positive");
        if (points[i].dp_per_length_pa_m <= 0)
            throw InputError("regime curve '" + section + "': pressure drops must be positive");
        if (i > 0 && points[i].velocity_mps <= points[i - 1].velocity_mps)
            throw InputError("regime curve '" + section + "': velocities must be strictly increasing");
    }
}

DarcyFit fit_darcy(const RegimeCurve& curve, const FluidProps& props, double v_max) {
    curve.validate();
    double sxx = 0, sxy = 0, syy = 0;
    std::size_t n = 0;
    for (const auto& p : curve.points) {
        if (p.velocity_mps > v_max) break;
        sxx += p.velocity_mps * p.velocity_mps;
        sxy += p.velocity_mps * p.dp_per_length_pa_m;
        syy += p.dp_per_length_pa_m * p.dp_per_length_pa_m;
        ++n;
    }
    if (n < 2)
        throw InsufficientPoints("Darcy fit needs at least 2 points with v <= " +
                                 std::to_string(v_max) + ", got " + std::to_string(n));
    DarcyFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.k_m2 = props.dynamic_viscosity / fit.slope;
    fit.k_darcy = m2_to_darcy(fit.k_m2);
    double ss_res = 0;
    for (const auto& p : curve.points) {
        if (p.velocity_mps > v_max) break;
        const double e = p.dp_per_length_pa_m - fit.slope * p.velocity_mps;
        ss_res += e * e;
    }
    fit.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

ForchheimerFit fit_forchheimer(const RegimeCurve& curve, const FluidProps& props) {
    curve.validate();
    if (curve.points.size() < 3)
        throw InsufficientPoints("Forchheimer fit needs at least 3 points");

    // normal equations for y = a v + b v²
    Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    double syy = 0;
    for (const auto& p : curve.points) {
        const double v = p.velocity_mps, v2 = v * v;
        m(0, 0) += v2;
        m(0, 1) += v * v2;
        m(1, 1) += v2 * v2;
        rhs[0] += v * p.dp_per_length_pa_m;
        rhs[1] += v2 * p.dp_per_length_pa_m;
        syy += p.dp_per_length_pa_m * p.dp_per_length_pa_m;
    }
    m(1, 0) = m(0, 1);

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
    const double lo = es.eigenvalues()[0], hi = es.eigenvalues()[1];
    ForchheimerFit fit;
    fit.condition = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0) || fit.condition > 1e14)
        throw IllConditioned("Forchheimer normal system condition " +
                             std::to_string(fit.condition));

    const Eigen::Vector2d coef = m.ldlt().solve(rhs);
    const double a = coef[0], b = coef[1];
    if (a <= 0)
        throw IllConditioned("Forchheimer fit produced non-positive viscous slope (k diverges)");
    fit.k_m2 = props.dynamic_viscosity / a;
    fit.k_darcy = m2_to_darcy(fit.k_m2);
    fit.beta_per_m = b / props.density;

    double ss_res = 0;
    for (const auto& p : curve.points) {
        const double e = p.dp_per_length_pa_m -
                         (a * p.velocity_mps + b * p.velocity_mps * p.velocity_mps);
        ss_res += e * e;
    }
    fit.r_squared = syy > 0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

std::optional<double> detect_transition(const RegimeCurve& curve, double deviation_tol) {
    curve.validate();
    if (curve.points.size() < 4)
        throw InputError("detect_transition needs at least 4 points");
    if (deviation_tol < 0) throw InputError("deviation_tol must be non-negative");

    // Darcy line from the two lowest velocities; the prefix ends at the first
    // point that departs from this prediction by more than the tolerance.
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < 2; ++i) {
        sxx += curve.points[i].velocity_mps * curve.points[i].velocity_mps;
        sxy += curve.points[i].velocity_mps * curve.points[i].dp_per_length_pa_m;
    }
    const double slope = sxy / sxx;
    for (std::size_t i = 2; i < curve.points.size(); ++i) {
        const double predicted = slope * curve.points[i].velocity_mps;
        const double deviation = std::abs(curve.points[i].dp_per_length_pa_m - predicted) / predicted;
        if (deviation > deviation_tol) return curve.points[i].velocity_mps;
    }
    return std::nullopt;
}

std::vector<PressureDropRow> pressure_drop_report(const std::vector<RegimeCurve>& curves) {
    std::vector<PressureDropRow> rows;
    std::map<double, std::pair<double, int>> by_velocity; // v -> (sum, count)
    for (const auto& c : curves) {
        c.validate();
        for (const auto& p : c.points) {
            rows.push_back({c.section, p.velocity_mps, p.dp_per_length_pa_m * 1e-6});
            auto& acc = by_velocity[p.velocity_mps];
            acc.first += p.dp_per_length_pa_m;
            acc.second++;
        }
    }
    for (const auto& [v, acc] : by_velocity)
        rows.push_back({"average", v, acc.first / acc.second * 1e-6});
    return rows;
}

std::vector<RegimeCurve> load_regime_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open regime CSV: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw MalformedHeader(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "section,inlet_velocity_mps,dp_per_length_pa_per_m")
        throw MalformedHeader(path.string() +
                              ": header must be 'section,inlet_velocity_mps,dp_per_length_pa_per_m'");

    std::map<std::string, RegimeCurve> by_section;
    std::vector<std::string> order;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
        const std::string section = line.substr(0, c1);
        RegimePoint p;
        try {
            p.velocity_mps = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
            p.dp_per_length_pa_m = std::stod(line.substr(c2 + 1));
        } catch (const std::exception&) {
            throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
        }
        if (!by_section.count(section)) order.push_back(section);
        auto& curve = by_section[section];
        curve.section = section;
        curve.points.push_back(p);
    }
    if (order.empty()) throw InputError(path.string() + ": no data rows");

    std::vector<RegimeCurve> out;
    for (const auto& s : order) {
        auto& c = by_section[s];
        std::stable_sort(c.points.begin(), c.points.end(),
                         [](const RegimePoint& a, const RegimePoint& b) {
                             return a.velocity_mps < b.velocity_mps;
                         });
        c.validate();
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace porescope
