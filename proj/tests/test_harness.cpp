#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "itmstab/harness/config_json.hpp"
#include "itmstab/harness/harness.hpp"

using namespace itmstab;
using namespace itmstab::harness;

namespace {

terrain::ElevationGrid box_grid(terrain::SynthKind kind = terrain::SynthKind::random_hills) {
    terrain::SynthParams sp;
    sp.origin_lat = 40.08;
    sp.origin_lon = -105.33;
    sp.cell_size = 1.0 / 1200.0;
    sp.rows = 169;
    sp.cols = 193;
    sp.low = 1562.15;
    sp.high = 2550.28;
    return terrain::synth_grid(kind, sp, 1);
}

SweepConfig small_config() {
    SweepConfig c;
    c.n_links = 3;
    c.frequencies = {900.0, 2400.0};
    c.climates = {5};
    c.grounds = {{15.0, 0.005}};
    c.precisions = {53, 24};
    return c;
}

std::vector<Case> small_cases(const SweepConfig& c) {
    return build_cases(gen_links(c.seed, c.n_links, c.bbox, c.height_min, c.height_max, c.min_link_distance), c);
}

PredictionRecord rec(long id, int bits, double loss) {
    PredictionRecord r;
    r.case_id = id;
    r.precision_bits = bits;
    r.loss_db = loss;
    r.kwx = std::isnan(loss) ? -1 : 0;
    return r;
}

std::string csv_without_times(std::vector<PredictionRecord> records) {
    for (auto& r : records) r.wall_time_s = 0.0;
    std::ostringstream out;
    write_records_csv(out, records);
    return out.str();
}

}  // namespace

TEST_CASE("links are seeded, inside the box and far enough apart") {
    const BBox box;
    const auto a = gen_links(7, 200, box, 0.0, 35.0, 1000.0);
    const auto b = gen_links(7, 200, box, 0.0, 35.0, 1000.0);
    const auto c = gen_links(8, 200, box, 0.0, 35.0, 1000.0);
    REQUIRE(a.size() == 200);
    CHECK(a[17].tx.lat == b[17].tx.lat);
    CHECK(a[199].rx.height_agl == b[199].rx.height_agl);
    CHECK(a[0].tx.lat != c[0].tx.lat);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Link& l = a[i];
        CHECK(l.link_id == static_cast<int>(i));
        for (const GeoPoint& p : {l.tx, l.rx}) {
            CHECK(p.lat >= box.lat_min);
            CHECK(p.lat <= box.lat_max);
            CHECK(p.lon >= box.lon_min);
            CHECK(p.lon <= box.lon_max);
            CHECK(p.height_agl >= 0.0);
            CHECK(p.height_agl <= 35.0);
        }
        CHECK(terrain::great_circle_distance_m(l.tx, l.rx) >= 1000.0);
    }
    // A prefix of a longer run is the shorter run.
    const auto shorter = gen_links(7, 50, box, 0.0, 35.0, 1000.0);
    CHECK(shorter.back().rx.lon == a[49].rx.lon);

    BBox tiny{40.0, 40.0001, -105.0, -105.0001 + 0.0001};
    CHECK_THROWS_AS(gen_links(1, 1, tiny, 0.0, 35.0, 1000.0), ConfigError);
}

TEST_CASE("default experiment size") {
    const SweepConfig c;
    c.validate();
    const auto links = gen_links(c.seed, c.n_links, c.bbox, c.height_min, c.height_max, c.min_link_distance);
    const auto cases = build_cases(links, c);
    CHECK(cases.size() == 122500);
    CHECK(planned_predictions(cases.size(), c) == 1102500);
    CHECK(c.sweep_precisions().size() == 8);
}

TEST_CASE("cases follow link, frequency, climate, ground order") {
    SweepConfig c = small_config();
    c.climates = {1, 4};
    c.grounds = {{5.0, 0.001}, {80.0, 5.0}, {15.0, 0.005}};
    const auto cases = small_cases(c);
    REQUIRE(cases.size() == 3 * 2 * 2 * 3);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Case& k = cases[i];
        CHECK(k.case_id == static_cast<long>(i));
        const std::size_t g = i % 3, cl = (i / 3) % 2, f = (i / 6) % 2, l = i / 12;
        CHECK(k.link_id == static_cast<int>(l));
        CHECK(k.frequency_mhz == c.frequencies[f]);
        CHECK(k.climate == c.climates[cl]);
        CHECK(k.ground == c.grounds[g]);
    }
}

TEST_CASE("sweep records come out in canonical order") {
    SweepConfig c = small_config();
    c.n_links = 1;
    c.precisions = {53, 11, 53};
    const auto cases = small_cases(c);
    REQUIRE(cases.size() == 2);
    const auto records = run_sweep(cases, box_grid(), c, {4, false});
    REQUIRE(records.size() == 6);
    const int bits[] = {0, 11, 53};
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].case_id == static_cast<long>(i / 3));
        CHECK(records[i].precision_bits == bits[i % 3]);
        CHECK(records[i].frequency_mhz == cases[i / 3].frequency_mhz);
    }
    CHECK_FALSE(records[0].failed());
    CHECK(std::abs(records[2].loss_db - records[0].loss_db) < 1e-9);
    CHECK(records[2].trace_hash == records[0].trace_hash);
}

TEST_CASE("sweeps are deterministic across reruns and worker counts") {
    SweepConfig c = small_config();
    c.n_links = 4;
    const auto cases = small_cases(c);
    const auto grid = box_grid();
    const auto one = csv_without_times(run_sweep(cases, grid, c, {1, false}));
    CHECK(one == csv_without_times(run_sweep(cases, grid, c, {1, false})));
    CHECK(one == csv_without_times(run_sweep(cases, grid, c, {3, false})));
    CHECK(one == csv_without_times(run_sweep(cases, grid, c, {8, true})));
}

TEST_CASE("cases off the grid become failed records") {
    SweepConfig c = small_config();
    c.n_links = 1;
    auto cases = small_cases(c);
    cases[1].rx.lat = 45.0;
    const auto records = run_sweep(cases, box_grid(), c);
    REQUIRE(records.size() == 6);
    CHECK_FALSE(records[0].failed());
    for (std::size_t i = 3; i < 6; ++i) {
        CHECK(records[i].failed());
        CHECK(std::isnan(records[i].loss_db));
        CHECK_FALSE(records[i].error.empty());
    }
    // Failures stay out of the statistics.
    for (const auto& s : error_stats(records)) CHECK(s.count == 1);
}

TEST_CASE("quartiles use hinges") {
    const Quartiles q = quartiles({1.0, -1.0, 0.0});
    CHECK(q.min == -1.0);
    CHECK(q.q1 == -0.5);
    CHECK(q.median == 0.0);
    CHECK(q.q3 == 0.5);
    CHECK(q.max == 1.0);
    const Quartiles e = quartiles({4.0, 1.0, 3.0, 2.0});
    CHECK(e.q1 == 1.5);
    CHECK(e.median == 2.5);
    CHECK(e.q3 == 3.5);
    CHECK(std::isnan(quartiles({}).median));
}

TEST_CASE("error statistics") {
    std::vector<PredictionRecord> r{rec(0, 0, 100.0), rec(0, 24, 99.0), rec(1, 0, 120.0), rec(1, 24, 120.0),
                                    rec(2, 0, 130.0), rec(2, 24, 134.5)};
    const auto s = error_stats(r);
    REQUIRE(s.size() == 2);
    CHECK(s[0].precision_bits == 0);
    CHECK(s[0].count == 3);
    CHECK(s[0].max_abs_eps == 0.0);
    CHECK(s[0].q3 == 0.0);
    CHECK(s[1].count == 3);
    CHECK(s[1].min == -1.0);
    CHECK(s[1].median == 0.0);
    CHECK(s[1].max == 4.5);
    CHECK(s[1].n_outliers_3db == 1);
    CHECK(s[1].max_abs_eps == 4.5);

    std::vector<PredictionRecord> same{rec(0, 0, 90.0), rec(0, 64, 90.0), rec(1, 0, 91.0), rec(1, 64, 91.0)};
    for (const auto& x : error_stats(same)) {
        CHECK(x.min == 0.0);
        CHECK(x.max == 0.0);
        CHECK(x.n_outliers_3db == 0);
    }

    std::vector<PredictionRecord> missing{rec(0, 0, 1.0), rec(0, 24, 1.0), rec(5, 24, 2.0), rec(9, 53, 2.0)};
    try {
        error_stats(missing);
        FAIL("expected AnalysisError");
    } catch (const AnalysisError& e) {
        CHECK(e.case_ids == std::vector<long>{5, 9});
        CHECK(std::string(e.what()).find("5 9") != std::string::npos);
    }
    CHECK_THROWS_AS(find_outliers(missing), AnalysisError);
}

TEST_CASE("outlier thresholds") {
    std::vector<PredictionRecord> r{rec(0, 0, 100.0), rec(0, 24, 103.5), rec(0, 53, 100.0),
                                    rec(1, 0, 100.0), rec(1, 24, 97.0),  rec(1, 53, 100.25)};
    const auto o3 = find_outliers(r);
    REQUIRE(o3.size() == 1);
    CHECK(o3[0].case_id == 0);
    CHECK(o3[0].eps == 3.5);
    CHECK(o3[0].site == "no-divergence");
    CHECK(find_outliers(r, 0.1).size() == 3);
    // Exactly at the threshold is not an outlier.
    CHECK(find_outliers(r, 0.25).size() == 2);
    CHECK(find_outliers(r, 0.0).size() == 3);
    CHECK(find_outliers(r, 10.0).empty());
    r[1].trace_hash = 42;
    CHECK(find_outliers(r)[0].site == "unknown");
}

TEST_CASE("a branch straddle is traced to the knife edge") {
    auto ridge = [](double h) {
        itm::TerrainProfile p;
        p.spacing_m = 50.0;
        p.elevations_m.assign(201, 1600.0);
        p.elevations_m[100] = 1600.0 + h;
        return p;
    };
    itm::PropagationParams pp;
    pp.frequency_mhz = 900.0;
    auto signature = [&](double h, int bits) {
        std::string s;
        for (const auto& e : itm::point_to_point(ridge(h), pp, itm::Precision(bits), true).trace.events())
            if (e.site == "aknfe.small_v2") s += static_cast<char>('0' + e.outcome);
        return s;
    };
    // Locate where each width switches branch, then sit between the two.
    auto flip = [&](int bits) {
        double lo = 60.0, hi = 61.0;
        const std::string s0 = signature(lo, bits);
        REQUIRE(signature(hi, bits) != s0);
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (lo + hi);
            (signature(m, bits) == s0 ? lo : hi) = m;
        }
        return lo;
    };
    const double h = 0.5 * (flip(0) + flip(24));
    std::vector<PredictionRecord> records;
    for (int bits : {0, 24}) {
        auto res = itm::point_to_point(ridge(h), pp, itm::Precision(bits), true);
        PredictionRecord r = rec(0, bits, res.total_loss_db);
        r.trace_hash = res.trace.hash();
        r.trace = res.trace;
        records.push_back(r);
    }
    CHECK(signature(h, 0) != signature(h, 24));
    const auto out = find_outliers(records, 0.0);
    REQUIRE(out.size() == 1);
    CHECK(out[0].site == "aknfe.small_v2");
    REQUIRE(out[0].event_index);
    CHECK(records[0].trace->events()[*out[0].event_index].site == "aknfe.small_v2");
}

TEST_CASE("timing report") {
    std::vector<PredictionRecord> r{rec(0, 0, 1.0), rec(1, 0, 1.0), rec(2, 0, 1.0), rec(0, 64, 1.0)};
    r[0].wall_time_s = 1e-4;
    r[1].wall_time_s = 3e-4;
    r[2].wall_time_s = 2e-4;
    r[3].wall_time_s = 5e-3;
    const auto t = timing_report(r);
    REQUIRE(t.size() == 2);
    CHECK(t[0].count == 3);
    CHECK(t[0].median == 2e-4);
    CHECK(t[0].max == 3e-4);
    CHECK(t[1].precision_bits == 64);
    CHECK(t[1].median == 5e-3);
}

TEST_CASE("records CSV round trip") {
    SweepConfig c = small_config();
    c.n_links = 2;
    auto cases = small_cases(c);
    cases[3].tx.lat = 10.0;
    auto records = run_sweep(cases, box_grid(), c, {2, true});
    std::stringstream ss;
    write_records_csv(ss, records);
    const auto back = read_records_csv(ss);
    REQUIRE(back.size() == records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].case_id == records[i].case_id);
        CHECK(back[i].tx.lat == records[i].tx.lat);
        CHECK(back[i].rx.height_agl == records[i].rx.height_agl);
        CHECK(back[i].frequency_mhz == records[i].frequency_mhz);
        CHECK(back[i].ground == records[i].ground);
        CHECK(back[i].kwx == records[i].kwx);
        CHECK(back[i].trace_hash == records[i].trace_hash);
        if (records[i].failed()) {
            CHECK(std::isnan(back[i].loss_db));
        } else {
            CHECK(std::abs(back[i].loss_db - records[i].loss_db) <= 1e-9 * std::abs(records[i].loss_db));
        }
    }

    std::stringstream traces;
    write_traces_csv(traces, records);
    auto with_traces = back;
    read_traces_csv(traces, with_traces);
    REQUIRE(with_traces[1].trace);
    CHECK(*with_traces[1].trace == *records[1].trace);
    CHECK(with_traces[1].trace->hash() == records[1].trace_hash);
}

TEST_CASE("records CSV errors carry the line number") {
    const std::string header = std::string(kRecordsHeader) + "\n";
    const std::string good = "0,0,900,5,15,0.005,40,-105.2,10,40.01,-105.2,10,0,120.5,0,00000000000000ab,0.0001\n";
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_records_csv(in);
    };
    CHECK(parse(header + good).size() == 1);
    auto line_of = [&](const std::string& text) {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return e.line;
        }
        return 0L;
    };
    CHECK(line_of(header + good + "0,0,900\n") == 3);
    CHECK(line_of(header + good + good + "0,0,900,5,15,0.005,40,-105.2,10,40.01,-105.2,10,0,abc,0,0,0\n") == 4);
    CHECK(line_of(header + "0,0,900,5,15,0.005,40,-105.2,10,40.01,-105.2,10,0,nan,0,0,0\n") == 2);
    CHECK(line_of(header + "0,0,900,5,15,0.005,40,-105.2,10,40.01,-105.2,10,0,1,7,0,0\n") == 2);
    CHECK(line_of("case_id,oops\n" + good) == 1);
    CHECK(line_of("") == 1);
}

TEST_CASE("summary and plot output") {
    std::vector<PredictionRecord> r{rec(0, 0, 100.0), rec(0, 24, 99.0)};
    std::ostringstream s, b, o;
    write_summary_csv(s, error_stats(r));
    CHECK(s.str().rfind(std::string(kSummaryHeader) + "\n0,1,0,0,0,0,0,0,0\n24,1,-1,-1,-1,-1,-1,0,1\n", 0) == 0);
    write_boxplot(b, error_stats(r));
    CHECK(b.str() == "# precision min q1 median q3 max\n0 0 0 0 0 0\n24 -1 -1 -1 -1 -1\n");
    write_outliers_csv(o, find_outliers(r, 0.5));
    CHECK(o.str() == "case_id,precision_bits,eps_db,first_divergent_site,event_index\n0,24,-1,no-divergence,\n");
}

TEST_CASE("config JSON") {
    SweepConfig c;
    c.n_links = 12;
    c.seed = 18446744073709551557ull;
    c.grounds = {{4.0, 0.001}};
    c.variability_mode = itm::VariabilityMode::mobile;
    c.polarization = itm::Polarization::horizontal;
    const SweepConfig back = config_from_json(config_to_json(c));
    CHECK(back.n_links == 12);
    CHECK(back.seed == c.seed);
    CHECK(back.grounds == c.grounds);
    CHECK(back.frequencies == c.frequencies);
    CHECK(back.variability_mode == itm::VariabilityMode::mobile);
    CHECK(back.polarization == itm::Polarization::horizontal);
    CHECK(config_to_json(back) == config_to_json(c));

    const auto partial = config_from_json(nlohmann::json::parse(R"({"n_links": 5, "grounds": [[10, 0.01]]})"));
    CHECK(partial.n_links == 5);
    CHECK(partial.grounds == std::vector<Ground>{{10.0, 0.01}});
    CHECK(partial.climates.size() == 7);

    auto error_of = [](const char* text) {
        try {
            config_from_json(nlohmann::json::parse(text)).validate();
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(error_of(R"({"grounds": [{"permittivity": 15, "conductivity": "x"}]})").find("grounds[0].conductivity") !=
          std::string::npos);
    CHECK(error_of(R"({"climates": [1, 9]})").find("climates[1]") != std::string::npos);
    CHECK(error_of(R"({"bogus": 1})").find("bogus") != std::string::npos);
    CHECK(error_of(R"({"precisions": [53, 8]})").find("precisions[1]") != std::string::npos);
    CHECK(error_of(R"({"height_range": [10, 5]})").find("height_range") != std::string::npos);
    CHECK(error_of(R"({"variability_mode": "sometimes"})").find("variability_mode") != std::string::npos);
    CHECK(error_of(R"({"n_links": 4})").empty());
}
