#include "itmstab/itm/itm.hpp"

#include <cmath>
#include <string>

#include "engine.hpp"

namespace itmstab::itm {
namespace {

using detail::Engine;
using detail::Num;

void check_precision(Precision p) {
    if (!p.is_native() && p.bits() < kMinModelBits) {
        throw InvalidInput("precision must be native or at least " + std::to_string(kMinModelBits) +
                           " bits, got " + std::to_string(p.bits()));
    }
}

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidInput(what);
}

void require_domain(bool ok, const char* fn, const char* what) {
    if (!ok) throw DomainError(std::string(fn) + ": " + what);
}

template <class Real>
std::vector<Real> make_pfl(const TerrainProfile& profile, const Num<Real>& c) {
    const std::size_t n = profile.elevations_m.size();
    std::vector<Real> pfl;
    pfl.reserve(n + 2);
    pfl.push_back(c(static_cast<double>(n - 1)));
    pfl.push_back(c(profile.spacing_m));
    for (double z : profile.elevations_m) pfl.push_back(c(z));
    return pfl;
}

// Mean elevation over the central window used for the refractivity
// adjustment. The window bounds index the raw profile array, header
// included, exactly as the reference does.
template <class Real>
Real system_elevation(const std::vector<Real>& pfl, const Num<Real>& c, BranchTrace* trace) {
    const long np = detail::trunc_to_long(pfl[0]);
    const long ja = detail::trunc_to_long(3.0 + 0.1 * pfl[0]);
    const long jb = np - ja + 6;
    if (trace) trace->record("p2p.zsys_window", static_cast<int>(ja));
    Real zsys = c(0.0);
    for (long i = ja - 1; i < jb; ++i) zsys += pfl[static_cast<std::size_t>(i)];
    zsys /= static_cast<double>(jb - ja + 1);
    return zsys;
}

template <class Real>
void setup(Engine<Real>& e, const PropagationParams& params, const Real& zsys) {
    auto& c = e.c;
    e.prop.hg = {c(params.tx_height_m), c(params.rx_height_m)};
    e.propv.klim = params.climate;
    e.prop.kwx = 0;
    e.propv.lvar = 5;
    e.prop.mdp = -1;
    e.propv.mdvar = static_cast<int>(params.variability_mode);
    e.qlrps(c(params.frequency_mhz), zsys, c(params.surface_refractivity),
            static_cast<int>(params.polarization), c(params.permittivity), c(params.conductivity));
}

template <class Real>
PathGeometry store_geometry(const Engine<Real>& e, Precision p) {
    auto st = [&](const Real& v) { return Num<Real>::to_store(v); };
    PathGeometry g;
    g.precision = p;
    g.distance_m = st(e.prop.dist);
    g.surface_refractivity = st(e.prop.ens);
    g.effective_curvature = st(e.prop.gme);
    g.delta_h_m = st(e.prop.dh);
    for (int j = 0; j < 2; ++j) {
        g.horizon_distance_m[j] = st(e.prop.dl[j]);
        g.horizon_angle_rad[j] = st(e.prop.the[j]);
        g.effective_height_m[j] = st(e.prop.he[j]);
    }
    g.terrain_horizon_distance_m = e.terrain_horizon;
    g.line_of_sight = detail::trunc_to_long(e.prop.dist - e.propa.dla) < 0;
    return g;
}

// Rebuilds the model state of a prepared path and runs the preparatory
// lrprop pass at the geometry's distance.
template <class Real>
void restore(Engine<Real>& e, const PathGeometry& g, const PropagationParams& params) {
    if (g.distance_m.empty()) throw InvalidInput("path geometry is empty");
    auto ld = [&](const MPFloat& v) { return e.c.from_store(v); };
    setup(e, params, e.c(0.0));
    e.prop.ens = ld(g.surface_refractivity);
    e.prop.gme = ld(g.effective_curvature);
    e.prop.dh = ld(g.delta_h_m);
    for (int j = 0; j < 2; ++j) {
        e.prop.dl[j] = ld(g.horizon_distance_m[j]);
        e.prop.the[j] = ld(g.horizon_angle_rad[j]);
        e.prop.he[j] = ld(g.effective_height_m[j]);
    }
    e.prop.dist = ld(g.distance_m);
    e.propv.lvar = 5;
    e.prop.mdp = -1;
    e.lrprop(e.c(0.0));
}

template <class Real>
PathGeometry prepare_impl(const TerrainProfile& profile, const PropagationParams& params, Precision p,
                          BranchTrace* trace) {
    Engine<Real> e(p, trace);
    const auto pfl = make_pfl(profile, e.c);
    setup(e, params, system_elevation(pfl, e.c, trace));
    e.qlrpfl(pfl, e.propv.klim, e.propv.mdvar);
    return store_geometry(e, p);
}

template <class Real>
Attenuation aref_impl(double distance, const PathGeometry& g, const PropagationParams& params, Precision p,
                      BranchTrace* trace) {
    Engine<Real> e(p, trace);
    restore(e, g, params);
    e.prop.dist = e.c(distance);
    e.lrprop(e.c(distance));
    Attenuation a;
    a.db = detail::to_native(e.prop.aref);
    a.mode = e.classify();
    a.kwx = e.prop.kwx;
    return a;
}

template <class Real>
Variability avar_impl(double zt, double zl, double zc, const PathGeometry& g, const PropagationParams& params,
                      Precision p, BranchTrace* trace) {
    Engine<Real> e(p, trace);
    restore(e, g, params);
    const Real v = e.avar(e.c(zt), e.c(zl), e.c(zc));
    Variability out;
    out.attenuation_db = detail::to_native(v);
    out.adjustment_db = detail::to_native(v - e.prop.aref);
    out.kwx = e.prop.kwx;
    return out;
}

template <class Real>
PredictionResult p2p_impl(const TerrainProfile& profile, const PropagationParams& params, Precision p,
                          bool record_trace) {
    PredictionResult r;
    BranchTrace* trace = record_trace ? &r.trace : nullptr;
    Engine<Real> e(p, trace);
    const Real zc = e.qerfi(e.c(params.confidence));
    const Real zr = e.qerfi(e.c(params.reliability));
    const auto pfl = make_pfl(profile, e.c);
    setup(e, params, system_elevation(pfl, e.c, trace));
    e.qlrpfl(pfl, e.propv.klim, e.propv.mdvar);
    const Real fs = e.free_space(e.c(params.frequency_mhz), e.prop.dist / 1000.0);
    r.mode = e.classify();
    const Real aref = e.prop.aref;
    const Real v = e.avar(zr, e.c(0.0), zc);
    const Real total = v + fs;
    r.total_loss_db = detail::to_native(total);
    if (!std::isfinite(r.total_loss_db)) throw DomainError("point_to_point: loss is not finite");
    r.free_space_loss_db = detail::to_native(fs);
    r.reference_attenuation_db = detail::to_native(aref);
    r.variability_db = detail::to_native(v - aref);
    r.kwx = e.prop.kwx;
    return r;
}

template <class F>
auto dispatch(Precision p, F&& f) {
    check_precision(p);
    if (p.is_native()) return f(double{});
    return f(MPFloat{});
}

}  // namespace

void PropagationParams::validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(frequency_mhz) && frequency_mhz > 0.0, "frequency must be positive");
    require(finite(tx_height_m) && tx_height_m >= 0.0, "transmitter height must be nonnegative");
    require(finite(rx_height_m) && rx_height_m >= 0.0, "receiver height must be nonnegative");
    require(finite(permittivity) && permittivity > 0.0, "permittivity must be positive");
    require(finite(conductivity) && conductivity > 0.0, "conductivity must be positive");
    require(climate >= 1 && climate <= 7, "climate code " + std::to_string(climate) + " is outside 1..7");
    require(finite(surface_refractivity) && surface_refractivity > 0.0, "surface refractivity must be positive");
    require(polarization == Polarization::horizontal || polarization == Polarization::vertical,
            "unknown polarization");
    require(reliability > 0.0 && reliability < 1.0, "reliability must lie in (0, 1)");
    require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    const int mdvar = static_cast<int>(variability_mode);
    require(mdvar >= 0 && mdvar <= 3, "unknown variability mode");
}

void TerrainProfile::validate() const {
    require(elevations_m.size() >= 2, "terrain profile needs at least 2 points");
    require(std::isfinite(spacing_m) && spacing_m > 0.0, "profile spacing must be positive");
    for (double z : elevations_m) require(std::isfinite(z), "profile elevation is not finite");
}

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::line_of_sight:
            return "line_of_sight";
        case Mode::diffraction:
            return "diffraction";
        case Mode::scatter:
            return "scatter";
    }
    return "unknown";
}

PathGeometry prepare_path(const TerrainProfile& profile, const PropagationParams& params, Precision p,
                          BranchTrace* trace) {
    profile.validate();
    params.validate();
    return dispatch(p, [&]<class Real>(Real) { return prepare_impl<Real>(profile, params, p, trace); });
}

Attenuation reference_attenuation(double distance_m, const PathGeometry& geom, const PropagationParams& params,
                                  Precision p, BranchTrace* trace) {
    params.validate();
    require(std::isfinite(distance_m) && distance_m > 0.0, "distance must be positive");
    return dispatch(p, [&]<class Real>(Real) { return aref_impl<Real>(distance_m, geom, params, p, trace); });
}

Variability avar(double time_deviate, double location_deviate, double confidence_deviate, const PathGeometry& geom,
                 const PropagationParams& params, Precision p, BranchTrace* trace) {
    params.validate();
    require(std::isfinite(time_deviate) && std::isfinite(location_deviate) && std::isfinite(confidence_deviate),
            "deviates must be finite");
    return dispatch(p, [&]<class Real>(Real) {
        return avar_impl<Real>(time_deviate, location_deviate, confidence_deviate, geom, params, p, trace);
    });
}

PredictionResult point_to_point(const TerrainProfile& profile, const PropagationParams& params, Precision p,
                                bool record_trace) {
    profile.validate();
    params.validate();
    return dispatch(p, [&]<class Real>(Real) { return p2p_impl<Real>(profile, params, p, record_trace); });
}

double aknfe(double v2, Precision p, BranchTrace* trace) {
    require_domain(v2 >= 0.0, "aknfe", "squared Fresnel parameter must be nonnegative");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, trace);
        return detail::to_native(e.aknfe(e.c(v2)));
    });
}

double fht(double x, double pk, Precision p, BranchTrace* trace) {
    require_domain(x > 0.0, "fht", "normalized distance must be positive");
    require_domain(pk > 0.0, "fht", "ground parameter must be positive");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, trace);
        return detail::to_native(e.fht(e.c(x), e.c(pk)));
    });
}

double h0f(double r, double et, Precision p, BranchTrace* trace) {
    require_domain(r > 0.0, "h0f", "r must be positive");
    require_domain(std::isfinite(et), "h0f", "et must be finite");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, trace);
        return detail::to_native(e.h0f(e.c(r), e.c(et)));
    });
}

double ahd(double td, Precision p, BranchTrace* trace) {
    require_domain(td > 0.0 && std::isfinite(td), "ahd", "distance must be positive");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, trace);
        return detail::to_native(e.ahd(e.c(td)));
    });
}

double qerfi(double q, Precision p, BranchTrace* trace) {
    require_domain(q > 0.0 && q < 1.0, "qerfi", "q must lie in (0, 1)");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, trace);
        return detail::to_native(e.qerfi(e.c(q)));
    });
}

double free_space_loss(double frequency_mhz, double distance_km, Precision p) {
    require_domain(frequency_mhz > 0.0 && distance_km > 0.0, "free_space_loss",
                   "frequency and distance must be positive");
    return dispatch(p, [&]<class Real>(Real) {
        Engine<Real> e(p, nullptr);
        return detail::to_native(e.free_space(e.c(frequency_mhz), e.c(distance_km)));
    });
}

}  // namespace itmstab::itm
