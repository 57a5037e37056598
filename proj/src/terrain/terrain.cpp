#include "itmstab/terrain/terrain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "itmstab/common/splitmix.hpp"

namespace itmstab::terrain {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Vec3 = std::array<double, 3>;

Vec3 unit_vector(double lat_deg, double lon_deg) {
    const double la = lat_deg * kDeg;
    const double lo = lon_deg * kDeg;
    return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
}

double central_angle(const Vec3& u, const Vec3& v) {
    const Vec3 x{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    const double cross = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    const double dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    return std::atan2(cross, dot);
}

void require_inside(const ElevationGrid& grid, double lat, double lon) {
    if (!grid.contains(lat, lon)) {
        throw BoundsError("point (" + std::to_string(lat) + ", " + std::to_string(lon) + ") is outside the grid");
    }
}

}  // namespace

double elevation_at(const ElevationGrid& grid, double lat, double lon) {
    require_inside(grid, lat, lon);
    const double r = std::clamp((grid.origin_lat - lat) / grid.cell_size, 0.0, grid.rows - 1.0);
    const double c = std::clamp((lon - grid.origin_lon) / grid.cell_size, 0.0, grid.cols - 1.0);
    const int r0 = std::min(static_cast<int>(r), grid.rows - 2);
    const int c0 = std::min(static_cast<int>(c), grid.cols - 2);
    const double fr = r - r0;
    const double fc = c - c0;
    const double z00 = grid.at(r0, c0), z01 = grid.at(r0, c0 + 1);
    const double z10 = grid.at(r0 + 1, c0), z11 = grid.at(r0 + 1, c0 + 1);
    auto check = [&](double z, double w) {
        if (w != 0.0 && grid.is_nodata(z)) {
            throw NoDataError("no data near (" + std::to_string(lat) + ", " + std::to_string(lon) + ")");
        }
    };
    check(z00, (1 - fr) * (1 - fc));
    check(z01, (1 - fr) * fc);
    check(z10, fr * (1 - fc));
    check(z11, fr * fc);
    auto clean = [&](double z) { return grid.is_nodata(z) ? 0.0 : z; };
    const double north = (1 - fc) * clean(z00) + fc * clean(z01);
    const double south = (1 - fc) * clean(z10) + fc * clean(z11);
    return (1 - fr) * north + fr * south;
}

double great_circle_distance_m(const GeoPoint& a, const GeoPoint& b) {
    return kEarthRadiusM * central_angle(unit_vector(a.lat, a.lon), unit_vector(b.lat, b.lon));
}

double default_spacing_m(const ElevationGrid& grid, const GeoPoint& a, const GeoPoint& b) {
    const double ns = grid.cell_size * kDeg * kEarthRadiusM;
    const double ew = ns * std::cos(0.5 * (a.lat + b.lat) * kDeg);
    return std::max(std::min(ns, ew), great_circle_distance_m(a, b) / 2000.0);
}

itm::TerrainProfile extract_profile(const ElevationGrid& grid, const GeoPoint& a, const GeoPoint& b,
                                    double spacing_m) {
    a.validate();
    b.validate();
    require_inside(grid, a.lat, a.lon);
    require_inside(grid, b.lat, b.lon);
    // Sample in a canonical endpoint order so that swapping the endpoints
    // gives exactly the reversed profile.
    const bool swap = std::make_pair(a.lat, a.lon) > std::make_pair(b.lat, b.lon);
    const GeoPoint& p = swap ? b : a;
    const GeoPoint& q = swap ? a : b;
    const Vec3 u = unit_vector(p.lat, p.lon);
    const Vec3 v = unit_vector(q.lat, q.lon);
    const double omega = central_angle(u, v);
    const double length = kEarthRadiusM * omega;
    if (!(length > 0.0)) throw std::invalid_argument("profile endpoints coincide");
    if (!(spacing_m > 0.0)) spacing_m = default_spacing_m(grid, a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(length / spacing_m - 1e-9)));

    itm::TerrainProfile prof;
    prof.spacing_m = length / n;
    prof.elevations_m.resize(static_cast<std::size_t>(n) + 1);
    const double s = std::sin(omega);
    for (int i = 0; i <= n; ++i) {
        double lat, lon;
        if (i == 0) {
            lat = p.lat;
            lon = p.lon;
        } else if (i == n) {
            lat = q.lat;
            lon = q.lon;
        } else {
            const double t = static_cast<double>(i) / n;
            const double wa = std::sin((1 - t) * omega) / s;
            const double wb = std::sin(t * omega) / s;
            const Vec3 x{wa * u[0] + wb * v[0], wa * u[1] + wb * v[1], wa * u[2] + wb * v[2]};
            lat = std::atan2(x[2], std::hypot(x[0], x[1])) / kDeg;
            lon = std::atan2(x[1], x[0]) / kDeg;
        }
        prof.elevations_m[static_cast<std::size_t>(i)] = elevation_at(grid, lat, lon);
    }
    if (swap) std::reverse(prof.elevations_m.begin(), prof.elevations_m.end());
    return prof;
}

ElevationGrid synth_grid(SynthKind kind, const SynthParams& sp, std::uint64_t seed) {
    ElevationGrid g;
    g.rows = sp.rows;
    g.cols = sp.cols;
    g.origin_lat = sp.origin_lat;
    g.origin_lon = sp.origin_lon;
    g.cell_size = sp.cell_size;
    if (g.rows < 2 || g.cols < 2 || !(g.cell_size > 0.0)) throw std::invalid_argument("bad synthetic grid shape");
    if (!std::isfinite(sp.low) || !std::isfinite(sp.high)) throw std::invalid_argument("heights must be finite");
    g.samples.assign(static_cast<std::size_t>(g.rows) * g.cols, sp.low);
    switch (kind) {
        case SynthKind::flat:
            break;
        case SynthKind::ramp:
            for (int r = 0; r < g.rows; ++r) {
                const double z = sp.low + (sp.high - sp.low) * (g.rows - 1 - r) / (g.rows - 1);
                for (int c = 0; c < g.cols; ++c) g.at(r, c) = z;
            }
            break;
        case SynthKind::knife_edge:
            for (int r = 0; r < g.rows; ++r) g.at(r, g.cols / 2) = sp.high;
            break;
        case SynthKind::random_hills: {
            SplitMix64 rng(seed);
            struct Hill {
                double r, c, sigma2, amp;
            };
            std::vector<Hill> hills;
            const double span = std::max(g.rows, g.cols);
            for (int k = 0; k < std::max(1, sp.hills); ++k) {
                Hill h;
                h.r = rng.uniform(0.0, g.rows - 1.0);
                h.c = rng.uniform(0.0, g.cols - 1.0);
                const double sigma = rng.uniform(0.02, 0.2) * span;
                h.sigma2 = 2.0 * sigma * sigma;
                h.amp = rng.uniform(0.1, 1.0);
                hills.push_back(h);
            }
            double lo = INFINITY, hi = -INFINITY;
            for (int r = 0; r < g.rows; ++r) {
                for (int c = 0; c < g.cols; ++c) {
                    double z = 0.0;
                    for (const Hill& h : hills) {
                        const double d2 = (r - h.r) * (r - h.r) + (c - h.c) * (c - h.c);
                        z += h.amp * std::exp(-d2 / h.sigma2);
                    }
                    g.at(r, c) = z;
                    lo = std::min(lo, z);
                    hi = std::max(hi, z);
                }
            }
            const double scale = hi > lo ? (sp.high - sp.low) / (hi - lo) : 0.0;
            for (double& z : g.samples) z = z == hi ? sp.high : std::min(sp.high, sp.low + (z - lo) * scale);
            break;
        }
    }
    return g;
}

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "flat") return SynthKind::flat;
    if (name == "ramp") return SynthKind::ramp;
    if (name == "knife_edge") return SynthKind::knife_edge;
    if (name == "random_hills") return SynthKind::random_hills;
    throw std::invalid_argument("unknown terrain kind '" + name + "'");
}

}  // namespace itmstab::terrain
