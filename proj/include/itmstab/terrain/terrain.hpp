#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "itmstab/itm/itm.hpp"

namespace itmstab::terrain {

inline constexpr double kEarthRadiusM = 6371000.0;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class NoDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
    double height_agl = 0.0;

    void validate() const;
};

/// Node-registered raster: sample (0, 0) sits exactly at the north-west
/// origin, rows run south and columns run east, `cell_size` degrees apart.
struct ElevationGrid {
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double cell_size = 0.0;
    int rows = 0;
    int cols = 0;
    std::vector<double> samples;
    double nodata = -9999.0;

    double at(int row, int col) const { return samples[static_cast<std::size_t>(row) * cols + col]; }
    double& at(int row, int col) { return samples[static_cast<std::size_t>(row) * cols + col]; }
    bool is_nodata(double v) const { return v == nodata; }

    double south_lat() const { return origin_lat - (rows - 1) * cell_size; }
    double east_lon() const { return origin_lon + (cols - 1) * cell_size; }
    bool contains(double lat, double lon) const;

    void validate() const;
};

/// Reads an ESRI ASCII grid or an SRTM-style .hgt tile, chosen by content
/// and file name.
ElevationGrid load_grid(const std::filesystem::path& path);
ElevationGrid read_esri_ascii(std::istream& in);
/// `tile_name` carries the georeference, e.g. "N40W106".
ElevationGrid read_srtm(const std::vector<unsigned char>& bytes, const std::string& tile_name);

/// Writes xllcenter/yllcenter headers, so a reload reproduces the node
/// positions.
void write_esri_ascii(const ElevationGrid& grid, std::ostream& out);
void save_esri_ascii(const ElevationGrid& grid, const std::filesystem::path& path);

/// Bilinear interpolation between the four surrounding nodes.
double elevation_at(const ElevationGrid& grid, double lat, double lon);

double great_circle_distance_m(const GeoPoint& a, const GeoPoint& b);

/// max(grid resolution in meters at the path latitude, length / 2000).
double default_spacing_m(const ElevationGrid& grid, const GeoPoint& a, const GeoPoint& b);

/// Samples at uniform arc-length steps along the great circle from a to b.
/// spacing_m <= 0 selects default_spacing_m.
itm::TerrainProfile extract_profile(const ElevationGrid& grid, const GeoPoint& a, const GeoPoint& b,
                                    double spacing_m = 0.0);

enum class SynthKind { flat, ramp, knife_edge, random_hills };

struct SynthParams {
    int rows = 201;
    int cols = 201;
    double origin_lat = 40.0;
    double origin_lon = -105.3;
    double cell_size = 1.0 / 1200.0;
    /// flat level, ramp south edge, knife-edge base, hills minimum.
    double low = 1600.0;
    /// ramp north edge, ridge crest, hills maximum.
    double high = 1800.0;
    int hills = 40;
};

/// Deterministic for a given seed. The ridge runs north-south along the
/// middle column; the ramp rises linearly from the south row to the north row.
ElevationGrid synth_grid(SynthKind kind, const SynthParams& params, std::uint64_t seed = 0);

SynthKind parse_synth_kind(const std::string& name);

}  // namespace itmstab::terrain
