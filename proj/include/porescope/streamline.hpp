#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "porescope/errors.hpp"

namespace porescope {

/// Ordered particle path with optional per-point flow samples (parallel
/// vectors, either empty or one entry per point).
struct Streamline {
    int id = 0;
    std::vector<Eigen::Vector3d> points_um;
    std::vector<double> speed;   // m/s
    std::vector<double> pressure; // Pa
    std::vector<double> dhyd_um;
    std::vector<double> re;

    std::size_t size() const { return points_um.size(); }
};

/// Polyline length over end-to-end chord. Always >= 1; throws ClosedPath when
/// the chord vanishes.
double stream_tortuosity(const Streamline& s);

/// Direction of the net XY displacement in degrees. Axial data is folded to
/// [0,180) since the sign of travel along a channel is arbitrary; the
/// full-circle mode reports [0,360). Throws DegenerateXY for pure-z streams.
double stream_orientation_xy(const Streamline& s, bool axial = true);

struct VonMisesFit {
    double mu_deg = 0;  // preferential direction, [0,360) or [0,180) axial
    double kappa = 0;   // concentration, capped at 1e4
    std::size_t n = 0;
};

/// Circular-mean direction plus concentration from the mean resultant length,
/// refined by Newton iterations on A(kappa) = I1/I0 to 1e-8. Axial samples
/// are doubled before fitting and the mean halved afterwards.
VonMisesFit fit_von_mises(const std::vector<double>& angles_deg, bool axial);

/// Ratio of modified Bessel functions I1(kappa)/I0(kappa).
double bessel_ratio_a(double kappa);

struct PolarHistogram {
    std::vector<double> bin_edges_deg;
    std::vector<int> counts;
};

PolarHistogram polar_histogram(const std::vector<double>& angles_deg, int n_bins, bool axial);

struct StreamSummary {
    int id = 0;
    std::size_t n_points = 0;
    std::optional<double> t_hyd;            // empty for closed paths
    std::optional<double> orientation_deg;  // empty for pure-z streams
    double mean_speed = 0;
    std::optional<double> mean_re;
    std::optional<double> mean_dhyd_um;
    std::optional<double> mean_pressure;
};

/// Arithmetic means over the per-point samples plus path geometry. Requires
/// speed samples (MissingSamples otherwise); degenerate geometry is reported
/// as empty optionals rather than thrown so batches can count exclusions.
StreamSummary stream_aggregate(const Streamline& s, bool axial = true);

struct TracePoint {
    double arc_um = 0;
    double speed = 0;
    std::optional<double> re;
    std::optional<double> dhyd_um;
    std::optional<double> pressure;
};

/// Per-point trace against cumulative arc length, for along-channel plots.
std::vector<TracePoint> stream_trace(const Streamline& s);

struct RegressionResult {
    double slope = 0;
    double intercept = 0;
    double r_squared = 0;
    std::size_t n = 0;
};

/// Ordinary least squares y = slope*x + intercept with R² = 1 - SSres/SStot.
RegressionResult regress(std::span<const double> x, std::span<const double> y);

/// CSV: stream_id,point_index,x,y,z[,speed,p,dhyd,re]; positions in µm.
std::vector<Streamline> load_streamlines_csv(const std::filesystem::path& path);

} // namespace porescope
