#pragma once

#include <array>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "itmstab/itm/trace.hpp"
#include "itmstab/mpnum/mpfloat.hpp"

/// Longley-Rice Irregular Terrain Model, point-to-point mode.
///
/// Every entry point takes a Precision: Precision::native() evaluates in IEEE
/// double; any width of 11 bits or more evaluates every arithmetic step, every
/// elementary function and every comparison on values of that width. Inputs
/// given as doubles are rounded to the working width on entry; outputs are
/// narrowed to double on exit.
namespace itmstab::itm {

using mpnum::MPFloat;
using mpnum::Precision;

/// Smallest non-native width accepted by the model.
inline constexpr int kMinModelBits = 11;

class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class Polarization { horizontal = 0, vertical = 1 };

/// Numeric values match the model's `mdvar` codes.
enum class VariabilityMode { single_message = 0, individual = 1, mobile = 2, broadcast = 3 };

struct PropagationParams {
    double frequency_mhz = 900.0;
    double tx_height_m = 10.0;
    double rx_height_m = 10.0;
    double permittivity = 15.0;
    double conductivity = 0.005;
    int climate = 5;
    double surface_refractivity = 301.0;
    Polarization polarization = Polarization::vertical;
    double reliability = 0.5;
    double confidence = 0.5;
    VariabilityMode variability_mode = VariabilityMode::broadcast;

    /// Structural checks only. Values outside the model's nominal ranges are
    /// reported through the kwx warning code instead.
    void validate() const;
};

/// Elevations at uniform spacing from the transmitter to the receiver.
struct TerrainProfile {
    double spacing_m = 0.0;
    std::vector<double> elevations_m;

    double distance_m() const {
        return elevations_m.size() < 2 ? 0.0 : spacing_m * static_cast<double>(elevations_m.size() - 1);
    }
    void validate() const;
};

enum class Mode { line_of_sight, diffraction, scatter };

std::string_view to_string(Mode mode);

/// Path parameters derived from a profile. Values are held exactly at the
/// width they were computed in (53 bits for the native path).
struct PathGeometry {
    Precision precision;
    MPFloat distance_m;
    /// Surface refractivity after the elevation adjustment, N-units.
    MPFloat surface_refractivity;
    MPFloat effective_curvature;
    MPFloat delta_h_m;
    std::array<MPFloat, 2> horizon_distance_m;
    std::array<MPFloat, 2> horizon_angle_rad;
    std::array<MPFloat, 2> effective_height_m;
    /// Horizon distances found by the terrain scan, before the smooth-earth
    /// substitution that line-of-sight paths receive.
    std::array<double, 2> terrain_horizon_distance_m{};
    bool line_of_sight = false;
};

struct Attenuation {
    double db = 0.0;
    Mode mode = Mode::line_of_sight;
    int kwx = 0;
};

struct Variability {
    /// Attenuation relative to free space after the variability adjustment.
    double attenuation_db = 0.0;
    /// attenuation_db minus the reference attenuation.
    double adjustment_db = 0.0;
    int kwx = 0;
};

struct PredictionResult {
    double total_loss_db = 0.0;
    double free_space_loss_db = 0.0;
    double reference_attenuation_db = 0.0;
    double variability_db = 0.0;
    Mode mode = Mode::line_of_sight;
    int kwx = 0;
    BranchTrace trace;
};

/// Horizon search, terrain irregularity and effective heights.
PathGeometry prepare_path(const TerrainProfile& profile, const PropagationParams& params, Precision p,
                          BranchTrace* trace = nullptr);

/// Median attenuation relative to free space at `distance_m`, before
/// variability. Warnings raise kwx; they never fail the call.
Attenuation reference_attenuation(double distance_m, const PathGeometry& geom,
                                  const PropagationParams& params, Precision p,
                                  BranchTrace* trace = nullptr);

/// Variability adjustment for the given standard-normal deviates (time,
/// location, confidence), applied to the reference attenuation of `geom`.
Variability avar(double time_deviate, double location_deviate, double confidence_deviate,
                 const PathGeometry& geom, const PropagationParams& params, Precision p,
                 BranchTrace* trace = nullptr);

/// Full prediction: prepare_path, reference_attenuation, then avar at the
/// requested reliability and confidence.
PredictionResult point_to_point(const TerrainProfile& profile, const PropagationParams& params,
                                Precision p, bool record_trace = false);

// Individual approximation routines, exposed for testing and analysis.

/// Knife-edge diffraction loss for squared Fresnel parameter v2 >= 0.
double aknfe(double v2, Precision p, BranchTrace* trace = nullptr);
/// Smooth-earth height-gain term for normalized distance x > 0.
double fht(double x, double pk, Precision p, BranchTrace* trace = nullptr);
/// Troposcatter frequency-gain function.
double h0f(double r, double et, Precision p, BranchTrace* trace = nullptr);
/// Troposcatter distance function.
double ahd(double td, Precision p, BranchTrace* trace = nullptr);
/// Inverse complementary standard normal, 0 < q < 1.
double qerfi(double q, Precision p, BranchTrace* trace = nullptr);
/// 32.45 + 20 log10(f) + 20 log10(d).
double free_space_loss(double frequency_mhz, double distance_km, Precision p);

}  // namespace itmstab::itm
