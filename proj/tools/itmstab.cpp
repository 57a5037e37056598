#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "itmstab/harness/config_json.hpp"
#include "itmstab/harness/harness.hpp"

using namespace itmstab;
using nlohmann::json;

namespace {

#ifndef ITMSTAB_VERSION
#define ITMSTAB_VERSION "0.0.0"
#endif

// exit 1: bad input, exit 2: the run itself failed.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void input_error(const std::string& flag, const std::string& what) { throw Failure{1, flag + ": " + what}; }

terrain::GeoPoint parse_point(const std::string& flag, const std::string& text, bool need_height) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            input_error(flag, "bad number '" + item + "'");
        }
    }
    if (v.size() != 3 && (need_height || v.size() != 2)) {
        input_error(flag, need_height ? "expected lat,lon,height" : "expected lat,lon[,height]");
    }
    terrain::GeoPoint p{v[0], v[1], v.size() == 3 ? v[2] : 0.0};
    try {
        p.validate();
    } catch (const std::exception& e) {
        input_error(flag, e.what());
    }
    return p;
}

terrain::ElevationGrid load_dem(const std::string& path, int code) {
    try {
        return terrain::load_grid(path);
    } catch (const std::exception& e) {
        throw Failure{code, "--dem: " + std::string(e.what())};
    }
}

std::ofstream open_out(const std::string& flag, const std::string& path) {
    std::ofstream out(path);
    if (!out) input_error(flag, "cannot write '" + path + "'");
    return out;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Failure{2, "cannot write '" + path + "'"};
    out << j.dump(2) << '\n';
}

json trace_json(const itm::BranchTrace& t) {
    json a = json::array();
    for (const auto& e : t.events()) a.push_back({{"site", std::string(e.site)}, {"outcome", e.outcome}});
    return a;
}

// predict

struct PredictArgs {
    std::string dem;
    std::optional<double> flat;
    std::string tx, rx;
    double freq = 0.0;
    int climate = 5;
    double eps = 15.0, sgm = 0.005;
    double refractivity = 301.0;
    std::string polarization = "vertical";
    double reliability = 0.5, confidence = 0.5;
    int precision = 0;
    double spacing = 0.0;
    bool trace = false;
};

int run_predict(const PredictArgs& a) {
    const auto tx = parse_point("--tx", a.tx, true);
    const auto rx = parse_point("--rx", a.rx, true);
    if (!(a.freq > 0.0) || !std::isfinite(a.freq)) input_error("--freq", "must be positive");
    if (a.climate < 1 || a.climate > 7) input_error("--climate", "must be 1..7");
    if (!(a.eps > 0.0)) input_error("--eps", "must be positive");
    if (!(a.sgm > 0.0)) input_error("--sgm", "must be positive");
    if (!(a.refractivity > 0.0)) input_error("--refractivity", "must be positive");
    if (!(a.reliability > 0.0 && a.reliability < 1.0)) input_error("--reliability", "must lie in (0, 1)");
    if (!(a.confidence > 0.0 && a.confidence < 1.0)) input_error("--confidence", "must lie in (0, 1)");
    if (a.precision != 0 && a.precision < itm::kMinModelBits) {
        input_error("--precision", "must be 0 (native) or at least " + std::to_string(itm::kMinModelBits));
    }
    if (a.spacing < 0.0) input_error("--spacing", "must be nonnegative");

    itm::TerrainProfile profile;
    if (a.flat) {
        const double length = terrain::great_circle_distance_m(tx, rx);
        if (!(length > 0.0)) input_error("--rx", "coincides with --tx");
        const double step = a.spacing > 0.0 ? a.spacing : 30.0;
        const int n = std::max(1, static_cast<int>(std::ceil(length / step - 1e-9)));
        profile.spacing_m = length / n;
        profile.elevations_m.assign(static_cast<std::size_t>(n) + 1, *a.flat);
    } else {
        const auto grid = load_dem(a.dem, 1);
        if (!grid.contains(tx.lat, tx.lon)) input_error("--tx", "outside the terrain grid");
        if (!grid.contains(rx.lat, rx.lon)) input_error("--rx", "outside the terrain grid");
        try {
            profile = terrain::extract_profile(grid, tx, rx, a.spacing);
        } catch (const std::exception& e) {
            throw Failure{2, e.what()};
        }
    }

    itm::PropagationParams p;
    p.frequency_mhz = a.freq;
    p.tx_height_m = tx.height_agl;
    p.rx_height_m = rx.height_agl;
    p.permittivity = a.eps;
    p.conductivity = a.sgm;
    p.climate = a.climate;
    p.surface_refractivity = a.refractivity;
    p.polarization = a.polarization == "horizontal" ? itm::Polarization::horizontal : itm::Polarization::vertical;
    p.reliability = a.reliability;
    p.confidence = a.confidence;

    itm::PredictionResult r;
    try {
        r = itm::point_to_point(profile, p, itm::Precision(a.precision), a.trace);
    } catch (const itm::InvalidInput& e) {
        throw Failure{1, e.what()};
    } catch (const std::exception& e) {
        throw Failure{2, e.what()};
    }
    json out = {
        {"loss_db", r.total_loss_db},
        {"free_space_loss_db", r.free_space_loss_db},
        {"reference_attenuation_db", r.reference_attenuation_db},
        {"variability_db", r.variability_db},
        {"mode", std::string(itm::to_string(r.mode))},
        {"kwx", r.kwx},
        {"precision_bits", a.precision},
        {"distance_m", profile.distance_m()},
        {"profile_points", profile.elevations_m.size()},
        {"params",
         {{"freq_mhz", a.freq},
          {"climate", a.climate},
          {"eps_r", a.eps},
          {"sigma", a.sgm},
          {"tx", {tx.lat, tx.lon, tx.height_agl}},
          {"rx", {rx.lat, rx.lon, rx.height_agl}},
          {"surface_refractivity", a.refractivity},
          {"polarization", a.polarization},
          {"reliability", a.reliability},
          {"confidence", a.confidence},
          {"variability_mode", harness::to_string(p.variability_mode)},
          {"terrain", a.flat ? json{{"flat_m", *a.flat}} : json{{"dem", a.dem}}},
          {"spacing_m", profile.spacing_m}}},
    };
    if (a.trace) out["trace"] = trace_json(r.trace);
    std::cout << out.dump(2) << '\n';
    return 0;
}

// profile

struct ProfileArgs {
    std::string dem;
    std::string synth;
    std::uint64_t synth_seed = 1;
    double cell_arcsec = 0.3;
    std::string tx, rx;
    double spacing = 0.0;
    std::string out;
};

int run_profile(const ProfileArgs& a) {
    const auto tx = parse_point("--tx", a.tx, false);
    const auto rx = parse_point("--rx", a.rx, false);
    if (a.spacing < 0.0) input_error("--spacing", "must be nonnegative");
    terrain::ElevationGrid grid;
    if (!a.dem.empty()) {
        grid = load_dem(a.dem, 1);
    } else {
        harness::BBox box{std::min(tx.lat, rx.lat), std::max(tx.lat, rx.lat), std::min(tx.lon, rx.lon),
                          std::max(tx.lon, rx.lon)};
        try {
            grid = harness::synth_grid_for(box, terrain::parse_synth_kind(a.synth), a.synth_seed, a.cell_arcsec);
        } catch (const std::exception& e) {
            input_error("--synth", e.what());
        }
    }
    if (!grid.contains(tx.lat, tx.lon)) input_error("--tx", "outside the terrain grid");
    if (!grid.contains(rx.lat, rx.lon)) input_error("--rx", "outside the terrain grid");
    itm::TerrainProfile p;
    try {
        p = terrain::extract_profile(grid, tx, rx, a.spacing);
    } catch (const std::exception& e) {
        throw Failure{2, e.what()};
    }
    std::ofstream file;
    if (!a.out.empty()) file = open_out("--out", a.out);
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "# spacing_m=" << harness::format_double(p.spacing_m) << " points=" << p.elevations_m.size() << '\n';
    out << "distance_m,elevation_m\n";
    for (std::size_t i = 0; i < p.elevations_m.size(); ++i) {
        out << harness::format_double(p.spacing_m * static_cast<double>(i)) << ','
            << harness::format_double(p.elevations_m[i]) << '\n';
    }
    return 0;
}

// sweep

struct SweepArgs {
    std::string config;
    std::string dem;
    std::string synth;
    std::uint64_t synth_seed = 1;
    double cell_arcsec = 0.3;
    std::string out;
    int workers = 1;
    std::string traces;
};

int run_sweep(const SweepArgs& a) {
    harness::SweepConfig config;
    json raw = json::object();
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) input_error("--config", "cannot read '" + a.config + "'");
        try {
            raw = json::parse(in);
        } catch (const json::exception& e) {
            input_error("--config", e.what());
        }
    }
    try {
        config = harness::config_from_json(raw);
        config.validate();
    } catch (const harness::ConfigError& e) {
        throw Failure{1, std::string("config: ") + e.what()};
    }
    if (a.workers < 1) input_error("--workers", "must be at least 1");

    std::vector<harness::Case> cases;
    try {
        cases = harness::build_cases(harness::gen_links(config.seed, config.n_links, config.bbox, config.height_min,
                                                        config.height_max, config.min_link_distance),
                                     config);
    } catch (const harness::ConfigError& e) {
        throw Failure{1, std::string("config: ") + e.what()};
    }

    terrain::ElevationGrid grid;
    json terrain_meta;
    if (!a.dem.empty()) {
        grid = load_dem(a.dem, 2);
        terrain_meta = {{"dem", a.dem}};
    } else {
        try {
            grid = harness::synth_grid_for(config.bbox, terrain::parse_synth_kind(a.synth), a.synth_seed,
                                           a.cell_arcsec);
        } catch (const std::exception& e) {
            input_error("--synth", e.what());
        }
        terrain_meta = {{"synth", a.synth}, {"synth_seed", a.synth_seed}, {"cell_arcsec", a.cell_arcsec}};
    }
    terrain_meta["rows"] = grid.rows;
    terrain_meta["cols"] = grid.cols;
    terrain_meta["origin_lat"] = grid.origin_lat;
    terrain_meta["origin_lon"] = grid.origin_lon;
    terrain_meta["cell_size_deg"] = grid.cell_size;
    for (const auto& c : cases) {
        for (const auto* p : {&c.tx, &c.rx}) {
            if (!grid.contains(p->lat, p->lon)) {
                throw Failure{2, "terrain does not cover link " + std::to_string(c.link_id) + " at (" +
                                     std::to_string(p->lat) + ", " + std::to_string(p->lon) + ")"};
            }
        }
    }

    const auto records = harness::run_sweep(cases, grid, config, {a.workers, !a.traces.empty()});
    auto out = open_out("--out", a.out);
    harness::write_records_csv(out, records);
    out.close();
    if (!out) throw Failure{2, "failed writing '" + a.out + "'"};
    if (!a.traces.empty()) {
        auto t = open_out("--traces", a.traces);
        harness::write_traces_csv(t, records);
    }
    std::size_t failed = 0;
    for (const auto& r : records) failed += r.failed();
    write_json(a.out + ".meta.json", {{"version", ITMSTAB_VERSION},
                                      {"command", "sweep"},
                                      {"config", harness::config_to_json(config)},
                                      {"defaults", harness::config_to_json(harness::SweepConfig{})},
                                      {"terrain", terrain_meta},
                                      {"workers", a.workers},
                                      {"cases", cases.size()},
                                      {"records", records.size()},
                                      {"failed_records", failed}});
    std::cerr << "wrote " << records.size() << " records (" << failed << " failed) to " << a.out << '\n';
    return 0;
}

// report

struct ReportArgs {
    std::string in;
    std::string out;
    std::string outliers;
    double threshold = 3.0;
    std::string boxplot;
    std::string traces;
    std::string timing;
};

int run_report(const ReportArgs& a) {
    std::ifstream in(a.in);
    if (!in) input_error("--in", "cannot read '" + a.in + "'");
    if (a.threshold < 0.0) input_error("--threshold", "must be nonnegative");
    std::vector<harness::PredictionRecord> records;
    try {
        records = harness::read_records_csv(in);
        if (!a.traces.empty()) {
            std::ifstream t(a.traces);
            if (!t) input_error("--traces", "cannot read '" + a.traces + "'");
            harness::read_traces_csv(t, records);
        }
    } catch (const harness::ParseError& e) {
        throw Failure{1, a.in + ": " + e.what()};
    }
    std::vector<harness::ErrorSummary> summary;
    std::vector<harness::Outlier> outliers;
    try {
        summary = harness::error_stats(records);
        if (!a.outliers.empty()) outliers = harness::find_outliers(records, a.threshold);
    } catch (const harness::AnalysisError& e) {
        throw Failure{1, e.what()};
    }
    {
        auto out = open_out("--out", a.out);
        harness::write_summary_csv(out, summary);
    }
    if (!a.outliers.empty()) {
        auto out = open_out("--outliers", a.outliers);
        harness::write_outliers_csv(out, outliers);
    }
    if (!a.boxplot.empty()) {
        auto out = open_out("--boxplot", a.boxplot);
        harness::write_boxplot(out, summary);
    }
    if (!a.timing.empty()) {
        auto out = open_out("--timing", a.timing);
        harness::write_timing_csv(out, harness::timing_report(records));
    }
    json sweep_meta;
    if (std::ifstream m(a.in + ".meta.json"); m) {
        try {
            sweep_meta = json::parse(m);
        } catch (const json::exception&) {
        }
    }
    write_json(a.out + ".meta.json", {{"version", ITMSTAB_VERSION},
                                      {"command", "report"},
                                      {"input", a.in},
                                      {"records", records.size()},
                                      {"outlier_threshold_db", a.threshold},
                                      {"sweep", sweep_meta}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longley-Rice predictions at configurable floating-point precision", "itmstab"};
    app.set_version_flag("--version", ITMSTAB_VERSION);
    app.require_subcommand(1);

    PredictArgs pa;
    auto* predict = app.add_subcommand("predict", "Single point-to-point prediction, printed as JSON");
    auto* dem = predict->add_option("--dem", pa.dem, "Elevation raster (ESRI ASCII grid or .hgt tile)");
    auto* flat = predict->add_option("--flat", pa.flat, "Flat terrain at this elevation in meters");
    dem->excludes(flat);
    predict->add_option("--tx", pa.tx, "Transmitter lat,lon,height")->required();
    predict->add_option("--rx", pa.rx, "Receiver lat,lon,height")->required();
    predict->add_option("--freq", pa.freq, "Frequency in MHz")->required();
    predict->add_option("--climate", pa.climate, "Radio climate code 1..7")->capture_default_str();
    predict->add_option("--eps", pa.eps, "Ground relative permittivity")->capture_default_str();
    predict->add_option("--sgm", pa.sgm, "Ground conductivity in S/m")->capture_default_str();
    predict->add_option("--refractivity", pa.refractivity, "Surface refractivity in N-units")->capture_default_str();
    predict->add_option("--polarization", pa.polarization)
        ->check(CLI::IsMember({"vertical", "horizontal"}))
        ->capture_default_str();
    predict->add_option("--reliability", pa.reliability)->capture_default_str();
    predict->add_option("--confidence", pa.confidence)->capture_default_str();
    predict->add_option("--precision", pa.precision, "Significand bits, 0 for native double")->capture_default_str();
    predict->add_option("--spacing", pa.spacing, "Profile spacing in meters, 0 for the default");
    predict->add_flag("--trace", pa.trace, "Include the branch trace");

    ProfileArgs pr;
    auto* profile = app.add_subcommand("profile", "Terrain profile between two points, as CSV");
    auto* pdem = profile->add_option("--dem", pr.dem, "Elevation raster");
    auto* psynth = profile->add_option("--synth", pr.synth, "Synthetic terrain: flat, ramp, knife_edge, random_hills");
    pdem->excludes(psynth);
    profile->add_option("--synth-seed", pr.synth_seed)->capture_default_str();
    profile->add_option("--cell-arcsec", pr.cell_arcsec, "Synthetic grid resolution")->capture_default_str();
    profile->add_option("--tx", pr.tx, "lat,lon[,height]")->required();
    profile->add_option("--rx", pr.rx, "lat,lon[,height]")->required();
    profile->add_option("--spacing", pr.spacing, "Sample spacing in meters, 0 for the default");
    profile->add_option("--out", pr.out, "Output file (default stdout)");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "Run a precision sweep and write the records CSV");
    sweep->add_option("--config", sa.config, "JSON config; omitted fields take their defaults");
    auto* sdem = sweep->add_option("--dem", sa.dem, "Elevation raster covering the bounding box");
    auto* ssynth = sweep->add_option("--synth", sa.synth, "Synthetic terrain covering the bounding box");
    sdem->excludes(ssynth);
    sweep->add_option("--synth-seed", sa.synth_seed)->capture_default_str();
    sweep->add_option("--cell-arcsec", sa.cell_arcsec)->capture_default_str();
    sweep->add_option("--out", sa.out, "Records CSV")->required();
    sweep->add_option("--workers", sa.workers)->capture_default_str();
    sweep->add_option("--traces", sa.traces, "Also write full branch traces here");

    ReportArgs ra;
    auto* report = app.add_subcommand("report", "Error summary, outliers and box-plot data from records");
    report->add_option("--in", ra.in, "Records CSV")->required();
    report->add_option("--out", ra.out, "Summary CSV")->required();
    report->add_option("--outliers", ra.outliers, "Outlier listing CSV");
    report->add_option("--threshold", ra.threshold, "Outlier threshold in dB")->capture_default_str();
    report->add_option("--boxplot", ra.boxplot, "Box-plot data file");
    report->add_option("--traces", ra.traces, "Trace sidecar written by sweep --traces");
    report->add_option("--timing", ra.timing, "Per-precision timing CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*predict) {
            if (!*dem && !*flat) input_error("--dem", "one of --dem or --flat is required");
            return run_predict(pa);
        }
        if (*profile) {
            if (!*pdem && !*psynth) input_error("--dem", "one of --dem or --synth is required");
            return run_profile(pr);
        }
        if (*sweep) {
            if (!*sdem && !*ssynth) input_error("--dem", "one of --dem or --synth is required");
            return run_sweep(sa);
        }
        return run_report(ra);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << '\n';
        return f.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
