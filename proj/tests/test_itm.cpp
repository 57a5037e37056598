#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "itmstab/itm/itm.hpp"
#include "oracle/itm_reference.hpp"

using namespace itmstab::itm;

namespace {

const Precision kNative = Precision::native();
const Precision k53{53};

TerrainProfile flat_profile(double length_m, int intervals, double elevation = 0.0) {
    TerrainProfile t;
    t.spacing_m = length_m / intervals;
    t.elevations_m.assign(static_cast<std::size_t>(intervals) + 1, elevation);
    return t;
}

TerrainProfile ridge_profile(double length_m, int intervals, double base, double ridge) {
    TerrainProfile t = flat_profile(length_m, intervals, base);
    const int mid = intervals / 2;
    for (int i = 0; i <= intervals; ++i) {
        const double w = 1.0 - std::abs(i - mid) / static_cast<double>(mid);
        t.elevations_m[static_cast<std::size_t>(i)] = base + (ridge - base) * std::max(0.0, w);
    }
    return t;
}

TerrainProfile rugged_profile(std::uint64_t seed, double length_m, int intervals) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    struct Wave {
        double amp, freq, phase;
    };
    std::vector<Wave> waves;
    for (int k = 0; k < 6; ++k) waves.push_back({20.0 + 180.0 * u(rng), 0.5 + 12.0 * u(rng), 6.28 * u(rng)});
    const double base = 1600.0 + 600.0 * u(rng);
    TerrainProfile t;
    t.spacing_m = length_m / intervals;
    for (int i = 0; i <= intervals; ++i) {
        const double x = static_cast<double>(i) / intervals;
        double z = base;
        for (const Wave& w : waves) z += w.amp * std::sin(w.freq * x * 6.283185307179586 + w.phase);
        t.elevations_m.push_back(z);
    }
    return t;
}

std::vector<double> to_pfl(const TerrainProfile& t) {
    std::vector<double> pfl{static_cast<double>(t.elevations_m.size() - 1), t.spacing_m};
    pfl.insert(pfl.end(), t.elevations_m.begin(), t.elevations_m.end());
    return pfl;
}

itm_reference::Snapshot oracle(const TerrainProfile& t, const PropagationParams& p) {
    std::vector<double> pfl = to_pfl(t);
    return itm_reference::point_to_point_state(pfl.data(), p.tx_height_m, p.rx_height_m, p.permittivity,
                                               p.conductivity, p.surface_refractivity, p.frequency_mhz,
                                               p.climate, static_cast<int>(p.polarization), p.confidence,
                                               p.reliability, static_cast<int>(p.variability_mode));
}

PropagationParams random_params(std::mt19937_64& rng) {
    static const double freqs[] = {80.0, 900.0, 1900.0, 2400.0, 5280.0};
    static const double grounds[][2] = {{5, 0.001}, {13, 0.002}, {15, 0.005}, {25, 0.02}, {80, 5.0}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PropagationParams p;
    p.frequency_mhz = freqs[rng() % 5];
    const auto& g = grounds[rng() % 5];
    p.permittivity = g[0];
    p.conductivity = g[1];
    p.climate = static_cast<int>(rng() % 7) + 1;
    p.tx_height_m = 1.0 + 34.0 * u(rng);
    p.rx_height_m = 1.0 + 34.0 * u(rng);
    p.reliability = 0.05 + 0.9 * u(rng);
    p.confidence = 0.05 + 0.9 * u(rng);
    p.polarization = (rng() & 1) ? Polarization::vertical : Polarization::horizontal;
    return p;
}

}  // namespace

TEST_CASE("formula spot checks") {
    CHECK(fht(2000.0, 0.1, k53) == doctest::Approx(82.009280618208732541).epsilon(1e-14));
    CHECK(std::abs(fht(2000.0, 0.1, Precision(256)) - 82.009280618208732541) < 1e-12);
    CHECK(fht(4000.0, 0.1, k53) == doctest::Approx(194.0189424130368861).epsilon(1e-14));
    CHECK(aknfe(0.0, k53) == 6.02);
    CHECK(aknfe(0.0, kNative) == 6.02);
    CHECK(free_space_loss(900.0, 10.0, k53) == doctest::Approx(111.53485018878650033).epsilon(1e-14));
    CHECK(free_space_loss(1.0, 1.0, Precision(64)) == doctest::Approx(32.45).epsilon(1e-15));
    CHECK(free_space_loss(900.0, 20.0, k53) - free_space_loss(900.0, 10.0, k53) ==
          doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
    for (Precision p : {kNative, Precision(11), Precision(24), k53, Precision(1024)}) {
        CHECK(qerfi(0.5, p) == 0.0);
    }
}

TEST_CASE("aknfe branch continuity and monotonicity") {
    const double v2 = 5.76;
    const double small = 6.02 + 9.11 * std::sqrt(v2) - 1.27 * v2;
    const double large = 12.953 + 4.343 * std::log(v2);
    CHECK(std::abs(small - large) < 0.02);
    CHECK(std::abs(aknfe(std::nextafter(v2, 0.0), k53) - aknfe(v2, k53)) < 0.02);
    CHECK(aknfe(10.0, k53) > aknfe(1.0, k53));
    CHECK(aknfe(v2, k53) == doctest::Approx(large).epsilon(1e-14));
    CHECK_THROWS_AS(aknfe(-1.0, k53), DomainError);
}

TEST_CASE("qerfi approximates the inverse normal") {
    CHECK(std::abs(qerfi(0.1, k53) - 1.2815515655446004) < 0.001);
    for (double q : {0.01, 0.05, 0.1, 0.2, 0.3, 0.45}) {
        CHECK(std::abs(qerfi(q, k53) + qerfi(1.0 - q, k53)) <= 0.002);
    }
    CHECK_THROWS_AS(qerfi(0.0, k53), DomainError);
    CHECK_THROWS_AS(qerfi(1.0, k53), DomainError);
}

TEST_CASE("scalar routines match the reference at native and 53 bits") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double r = 0.05 + 20.0 * u(rng);
        const double et = 6.0 * u(rng);
        const double td = 1e3 + 200e3 * u(rng);
        CHECK(std::abs(h0f(r, et, k53) - itm_reference::h0f(r, et)) < 1e-9);
        CHECK(std::abs(ahd(td, k53) - itm_reference::ahd(td)) < 1e-9);
        CHECK(h0f(r, et, kNative) == itm_reference::h0f(r, et));
        CHECK(ahd(td, kNative) == itm_reference::ahd(td));
        const double x = 3000.0 * u(rng) + 1e-3;
        const double pk = 1e-6 + u(rng);
        CHECK(std::abs(fht(x, pk, k53) - itm_reference::fht(x, pk)) < 1e-9);
        const double q = 0.01 + 0.98 * u(rng);
        CHECK(std::abs(qerfi(q, k53) - itm_reference::qerfi(q)) < 1e-12);
    }
}

TEST_CASE("ahd is continuous across its breakpoints") {
    for (double b : {10e3, 70e3}) {
        CHECK(std::abs(ahd(b, k53) - ahd(std::nextafter(b, 1e9), k53)) < 0.5);
    }
}

TEST_CASE("h0f clamps its table index") {
    BranchTrace t;
    CHECK(std::isfinite(h0f(2.0, 12.0, k53, &t)));
    CHECK(std::isfinite(h0f(2.0, -3.0, k53, &t)));
    CHECK(std::isfinite(h0f(2.0, 5.0, k53, &t)));
    int low = 0, high = 0;
    for (const auto& e : t.events()) {
        if (e.site == "h0f.low" && e.outcome == 1) ++low;
        if (e.site == "h0f.high" && e.outcome == 1) ++high;
    }
    CHECK(low == 1);
    CHECK(high == 2);
}

TEST_CASE("prepare_path on flat and ridge terrain") {
    PropagationParams params;
    const PathGeometry flat = prepare_path(flat_profile(5000.0, 100, 100.0), params, k53);
    CHECK(flat.line_of_sight);
    CHECK(std::abs(flat.delta_h_m.to_native()) < 1e-6);

    params.tx_height_m = params.rx_height_m = 5.0;
    const PathGeometry ridge = prepare_path(ridge_profile(10000.0, 200, 100.0, 300.0), params, k53);
    CHECK_FALSE(ridge.line_of_sight);
    CHECK(ridge.terrain_horizon_distance_m[0] == doctest::Approx(5000.0).epsilon(0.02));
    CHECK(ridge.terrain_horizon_distance_m[1] == doctest::Approx(5000.0).epsilon(0.02));
    CHECK(ridge.horizon_distance_m[0].to_native() == doctest::Approx(5000.0).epsilon(0.02));
    CHECK(ridge.delta_h_m.to_native() >= 0.0);
}

TEST_CASE("prepare_path matches reference internals") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 10; ++i) {
        const TerrainProfile t = rugged_profile(100 + i, 5000.0 + 2000.0 * i, 150 + 10 * i);
        const PropagationParams params = random_params(rng);
        const auto ref = oracle(t, params);
        for (Precision p : {kNative, k53}) {
            const PathGeometry g = prepare_path(t, params, p);
            CHECK(g.distance_m.to_native() == ref.dist);
            CHECK(g.surface_refractivity.to_native() == doctest::Approx(ref.ens).epsilon(1e-13));
            CHECK(g.effective_curvature.to_native() == doctest::Approx(ref.gme).epsilon(1e-13));
            CHECK(g.delta_h_m.to_native() == doctest::Approx(ref.dh).epsilon(1e-11));
            for (int j = 0; j < 2; ++j) {
                CHECK(g.horizon_distance_m[j].to_native() == doctest::Approx(ref.dl[j]).epsilon(1e-11));
                CHECK(g.horizon_angle_rad[j].to_native() == doctest::Approx(ref.the[j]).epsilon(1e-11));
                CHECK(g.effective_height_m[j].to_native() == doctest::Approx(ref.he[j]).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("reference_attenuation regimes") {
    PropagationParams params;
    const TerrainProfile short_flat = flat_profile(1000.0, 50);
    const PathGeometry g = prepare_path(short_flat, params, k53);
    const Attenuation los = reference_attenuation(1000.0, g, params, k53);
    CHECK(std::abs(los.db) < 10.0);
    CHECK(los.mode == Mode::line_of_sight);

    params.tx_height_m = params.rx_height_m = 5.0;
    const TerrainProfile ridge = ridge_profile(10000.0, 200, 100.0, 300.0);
    const PathGeometry rg = prepare_path(ridge, params, k53);
    const Attenuation diff = reference_attenuation(10000.0, rg, params, k53);
    CHECK(diff.mode == Mode::diffraction);
    CHECK(diff.db > 0.0);

    params.tx_height_m = params.rx_height_m = 3.0;
    const TerrainProfile far = flat_profile(100e3, 500);
    const PathGeometry fg = prepare_path(far, params, k53);
    const Attenuation beyond = reference_attenuation(100e3, fg, params, k53);
    CHECK(beyond.mode != Mode::line_of_sight);
    CHECK(beyond.db > 20.0);
    CHECK(beyond.db == doctest::Approx(oracle(far, params).aref).epsilon(1e-9));
}

TEST_CASE("point_to_point agrees with the reference") {
    PropagationParams params;
    const TerrainProfile flat = flat_profile(10000.0, 100, 1600.0);
    const auto ref = oracle(flat, params);
    CHECK(std::abs(point_to_point(flat, params, k53).total_loss_db - ref.loss) < 0.5);

    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const TerrainProfile t = rugged_profile(500 + i, 3000.0 + 1500.0 * i, 200);
        const PropagationParams pp = random_params(rng);
        const auto r = oracle(t, pp);
        const PredictionResult native = point_to_point(t, pp, kNative);
        const PredictionResult p53 = point_to_point(t, pp, k53);
        CHECK(native.total_loss_db == doctest::Approx(r.loss).epsilon(1e-12));
        CHECK(native.kwx == r.kwx);
        CHECK(static_cast<int>(native.mode) == r.mode);
        CHECK(std::abs(p53.total_loss_db - r.loss) < 1e-9);
        CHECK(p53.free_space_loss_db == doctest::Approx(r.fs).epsilon(1e-13));
        CHECK(p53.reference_attenuation_db == doctest::Approx(r.aref).epsilon(1e-10));
        CHECK(p53.total_loss_db ==
              doctest::Approx(p53.free_space_loss_db + p53.reference_attenuation_db + p53.variability_db)
                  .epsilon(1e-12));
    }
}

TEST_CASE("extreme frequencies agree with the reference") {
    // At 0.148 MHz the attenuation can come out NaN before its clamp to zero.
    std::mt19937_64 rng(148);
    for (int i = 0; i < 40; ++i) {
        const TerrainProfile t = rugged_profile(900 + i, 2000.0 + 700.0 * i, 150);
        PropagationParams pp = random_params(rng);
        pp.frequency_mhz = i % 2 ? 60000.0 : 0.148;
        const auto r = oracle(t, pp);
        for (Precision p : {kNative, k53}) {
            const PredictionResult ours = point_to_point(t, pp, p);
            CHECK(std::isfinite(ours.total_loss_db));
            CHECK(std::abs(ours.total_loss_db - r.loss) < 1e-9);
            CHECK(ours.kwx == r.kwx);
        }
    }
}

TEST_CASE("avar matches point_to_point composition and the reference") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 20; ++i) {
        const TerrainProfile t = rugged_profile(900 + i, 4000.0 + 1000.0 * i, 180);
        const PropagationParams pp = random_params(rng);
        const PathGeometry g = prepare_path(t, pp, k53);
        const double zr = qerfi(pp.reliability, k53);
        const double zc = qerfi(pp.confidence, k53);
        const Variability v = avar(zr, 0.0, zc, g, pp, k53);
        const auto r = oracle(t, pp);
        CHECK(std::abs(v.attenuation_db + r.fs - r.loss) < 1e-9);
        const PredictionResult full = point_to_point(t, pp, k53);
        CHECK(std::abs(v.adjustment_db - full.variability_db) < 1e-9);
    }
}

TEST_CASE("loss is monotone in confidence") {
    const TerrainProfile t = rugged_profile(42, 20000.0, 300);
    PropagationParams pp;
    double prev = -1e9;
    for (double conf : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        pp.confidence = conf;
        const double loss = point_to_point(t, pp, k53).total_loss_db;
        CHECK(loss >= prev);
        prev = loss;
    }
}

TEST_CASE("climate codes and input validation") {
    const TerrainProfile t = flat_profile(10000.0, 100);
    PropagationParams pp;
    for (int c = 1; c <= 7; ++c) {
        pp.climate = c;
        CHECK(std::isfinite(point_to_point(t, pp, k53).total_loss_db));
    }
    pp.climate = 8;
    CHECK_THROWS_AS(point_to_point(t, pp, k53), InvalidInput);
    pp.climate = 0;
    CHECK_THROWS_AS(point_to_point(t, pp, k53), InvalidInput);
    pp.climate = 5;
    CHECK_THROWS_AS(point_to_point(t, pp, Precision(10)), InvalidInput);
    TerrainProfile one;
    one.spacing_m = 10.0;
    one.elevations_m = {1.0};
    CHECK_THROWS_AS(prepare_path(one, pp, k53), InvalidInput);
    pp.frequency_mhz = 0.0;
    CHECK_THROWS_AS(point_to_point(t, pp, k53), InvalidInput);
}

TEST_CASE("out-of-range frequencies warn but still predict") {
    const TerrainProfile t = flat_profile(10000.0, 100, 1600.0);
    PropagationParams pp;
    for (double f : {0.148, 60000.0}) {
        pp.frequency_mhz = f;
        for (Precision p : {kNative, k53, Precision(128)}) {
            const PredictionResult r = point_to_point(t, pp, p);
            CHECK(r.kwx >= 1);
            CHECK(r.kwx <= 4);
            CHECK(std::isfinite(r.total_loss_db));
        }
    }
}

TEST_CASE("kwx does not decrease moving away from the nominal frequency range") {
    const TerrainProfile t = flat_profile(10000.0, 100, 100.0);
    PropagationParams pp;
    int prev = 0;
    for (double f : {900.0, 100.0, 30.0, 15.0, 5.0, 1.0, 0.148}) {
        pp.frequency_mhz = f;
        const int kwx = point_to_point(t, pp, k53).kwx;
        CHECK(kwx >= prev);
        prev = kwx;
    }
    prev = 0;
    for (double f : {900.0, 5000.0, 10000.0, 15000.0, 20000.0, 60000.0}) {
        pp.frequency_mhz = f;
        const int kwx = point_to_point(t, pp, k53).kwx;
        CHECK(kwx >= prev);
        prev = kwx;
    }
}

TEST_CASE("determinism and traces") {
    const TerrainProfile t = rugged_profile(77, 15000.0, 250);
    PropagationParams pp;
    const PredictionResult a = point_to_point(t, pp, Precision(128), true);
    const PredictionResult b = point_to_point(t, pp, Precision(128), true);
    CHECK(a.total_loss_db == b.total_loss_db);
    CHECK(a.trace == b.trace);
    CHECK(a.trace.hash() == b.trace.hash());
    CHECK_FALSE(a.trace.empty());
    CHECK_FALSE(a.trace.first_divergence(b.trace).has_value());
    CHECK(BranchTrace::decode(a.trace.encode()) == a.trace);
    CHECK(point_to_point(t, pp, Precision(128)).trace.empty());

    BranchTrace shorter = a.trace;
    BranchTrace altered;
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        const auto& e = a.trace.events()[i];
        altered.record(e.site, i == 5 ? e.outcome + 1 : e.outcome);
    }
    CHECK(a.trace.first_divergence(altered) == 5u);
    CHECK(a.trace.hash() != altered.hash());
    shorter.clear();
    CHECK(a.trace.first_divergence(shorter) == 0u);
}

TEST_CASE("diffraction trace includes the knife-edge sites") {
    PropagationParams pp;
    pp.tx_height_m = pp.rx_height_m = 5.0;
    const PredictionResult r = point_to_point(ridge_profile(10000.0, 200, 100.0, 300.0), pp, k53, true);
    bool seen = false;
    for (const auto& e : r.trace.events()) seen |= e.site == "aknfe.small_v2";
    CHECK(seen);
}

TEST_CASE("raising the ridge increases loss once obstructed") {
    PropagationParams pp;
    pp.tx_height_m = pp.rx_height_m = 10.0;
    double prev = 0.0;
    bool obstructed = false;
    for (double h = 120.0; h <= 400.0; h += 20.0) {
        const TerrainProfile t = ridge_profile(10000.0, 200, 100.0, h);
        const PathGeometry g = prepare_path(t, pp, k53);
        const double loss = point_to_point(t, pp, k53).total_loss_db;
        if (obstructed) CHECK(loss > prev);
        obstructed = obstructed || !g.line_of_sight;
        prev = loss;
    }
    CHECK(obstructed);
}

TEST_CASE("flat terrain at short range stays close to free space") {
    PropagationParams pp;
    for (double d = 1000.0; d <= 5000.0; d += 1000.0) {
        const PredictionResult r = point_to_point(flat_profile(d, 100, 1600.0), pp, k53);
        CHECK(r.mode == Mode::line_of_sight);
        CHECK(std::abs(r.reference_attenuation_db) < 15.0);
    }
}

TEST_CASE("low precision runs and high precision converges") {
    const TerrainProfile t = rugged_profile(5, 12000.0, 240);
    PropagationParams pp;
    CHECK(std::isfinite(point_to_point(t, pp, Precision(11)).total_loss_db));
    const PredictionResult base = point_to_point(t, pp, kNative, true);
    for (int bits : {53, 64, 256}) {
        const PredictionResult r = point_to_point(t, pp, Precision(bits), true);
        // Any larger difference has to come with a different branch decision.
        if (std::abs(r.total_loss_db - base.total_loss_db) >= 0.01) {
            CHECK(r.trace.first_divergence(base.trace).has_value());
        }
    }
    CHECK(point_to_point(t, pp, k53, true).trace == base.trace);
    CHECK(std::abs(point_to_point(t, pp, Precision(24)).total_loss_db - base.total_loss_db) < 3.0);
}
