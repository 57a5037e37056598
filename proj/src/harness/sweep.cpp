#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "itmstab/common/splitmix.hpp"
#include "itmstab/harness/harness.hpp"

namespace itmstab::harness {
namespace {

template <class T>
void require(bool ok, const std::string& field, const T& detail) {
    if (!ok) throw ConfigError(field + ": " + detail);
}

}  // namespace

void SweepConfig::validate() const {
    require(bbox.lat_min <= bbox.lat_max, "bbox", "lat_min must not exceed lat_max");
    require(bbox.lon_min <= bbox.lon_max, "bbox", "lon_min must not exceed lon_max");
    require(bbox.lat_min >= -90.0 && bbox.lat_max <= 90.0, "bbox", "latitude outside [-90, 90]");
    require(bbox.lon_min >= -180.0 && bbox.lon_max <= 180.0, "bbox", "longitude outside [-180, 180]");
    require(n_links >= 1, "n_links", "must be at least 1");
    require(!frequencies.empty(), "frequencies", "must not be empty");
    for (std::size_t i = 0; i < frequencies.size(); ++i)
        require(std::isfinite(frequencies[i]) && frequencies[i] > 0.0, "frequencies[" + std::to_string(i) + "]",
                "must be positive");
    require(!climates.empty(), "climates", "must not be empty");
    for (std::size_t i = 0; i < climates.size(); ++i)
        require(climates[i] >= 1 && climates[i] <= 7, "climates[" + std::to_string(i) + "]", "must be 1..7");
    require(!grounds.empty(), "grounds", "must not be empty");
    for (std::size_t i = 0; i < grounds.size(); ++i) {
        require(grounds[i].permittivity > 0.0 && grounds[i].conductivity > 0.0, "grounds[" + std::to_string(i) + "]",
                "permittivity and conductivity must be positive");
    }
    require(height_min >= 0.0 && height_min <= height_max && std::isfinite(height_max), "height_range",
            "need 0 <= min <= max");
    require(!precisions.empty(), "precisions", "must not be empty");
    for (std::size_t i = 0; i < precisions.size(); ++i)
        require(precisions[i] >= itm::kMinModelBits, "precisions[" + std::to_string(i) + "]",
                "must be at least " + std::to_string(itm::kMinModelBits));
    require(min_link_distance >= 0.0, "min_link_distance", "must be nonnegative");
    require(profile_spacing >= 0.0, "profile_spacing", "must be nonnegative");
    require(surface_refractivity > 0.0, "surface_refractivity", "must be positive");
    require(reliability > 0.0 && reliability < 1.0, "reliability", "must lie in (0, 1)");
    require(confidence > 0.0 && confidence < 1.0, "confidence", "must lie in (0, 1)");
}

std::vector<int> SweepConfig::sweep_precisions() const {
    std::vector<int> p(precisions.begin(), precisions.end());
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

std::vector<Link> gen_links(std::uint64_t seed, int n, const BBox& bbox, double height_min, double height_max,
                            double min_distance) {
    if (n < 1) throw ConfigError("n_links: must be at least 1");
    auto stream = [&](Stream s) { return SplitMix64::stream(seed, static_cast<std::uint64_t>(s)); };
    SplitMix64 tx_lat = stream(Stream::tx_lat), tx_lon = stream(Stream::tx_lon);
    SplitMix64 rx_lat = stream(Stream::rx_lat), rx_lon = stream(Stream::rx_lon);
    SplitMix64 tx_h = stream(Stream::tx_height), rx_h = stream(Stream::rx_height);
    std::vector<Link> links;
    links.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Link l;
        l.link_id = i;
        int tries = 0;
        while (true) {
            l.tx.lat = tx_lat.uniform(bbox.lat_min, bbox.lat_max);
            l.tx.lon = tx_lon.uniform(bbox.lon_min, bbox.lon_max);
            l.rx.lat = rx_lat.uniform(bbox.lat_min, bbox.lat_max);
            l.rx.lon = rx_lon.uniform(bbox.lon_min, bbox.lon_max);
            const double d = terrain::great_circle_distance_m(l.tx, l.rx);
            if (d >= min_distance && d > 0.0) break;
            if (++tries >= kMaxRedraws) {
                throw ConfigError("bbox: cannot place a link of at least " + std::to_string(min_distance) +
                                  " m after " + std::to_string(kMaxRedraws) + " draws");
            }
        }
        l.tx.height_agl = tx_h.uniform(height_min, height_max);
        l.rx.height_agl = rx_h.uniform(height_min, height_max);
        links.push_back(l);
    }
    return links;
}

terrain::ElevationGrid synth_grid_for(const BBox& box, terrain::SynthKind kind, std::uint64_t seed,
                                      double cell_arcsec, double low, double high) {
    if (!(cell_arcsec > 0.0)) throw ConfigError("cell size must be positive");
    terrain::SynthParams sp;
    sp.cell_size = cell_arcsec / 3600.0;
    sp.origin_lat = box.lat_max + 2 * sp.cell_size;
    sp.origin_lon = box.lon_min - 2 * sp.cell_size;
    sp.rows = static_cast<int>(std::ceil((box.lat_max - box.lat_min) / sp.cell_size)) + 5;
    sp.cols = static_cast<int>(std::ceil((box.lon_max - box.lon_min) / sp.cell_size)) + 5;
    sp.low = low;
    sp.high = high;
    return terrain::synth_grid(kind, sp, seed);
}

std::vector<Case> build_cases(const std::vector<Link>& links, const SweepConfig& config) {
    std::vector<Case> cases;
    cases.reserve(links.size() * config.frequencies.size() * config.climates.size() * config.grounds.size());
    long id = 0;
    for (const Link& l : links)
        for (double f : config.frequencies)
            for (int climate : config.climates)
                for (const Ground& g : config.grounds) {
                    Case c;
                    c.case_id = id++;
                    c.link_id = l.link_id;
                    c.frequency_mhz = f;
                    c.climate = climate;
                    c.ground = g;
                    c.tx = l.tx;
                    c.rx = l.rx;
                    cases.push_back(c);
                }
    return cases;
}

std::size_t planned_predictions(std::size_t n_cases, const SweepConfig& config) {
    return n_cases * (config.sweep_precisions().size() + 1);
}

itm::PropagationParams case_params(const Case& c, const SweepConfig& config) {
    itm::PropagationParams p;
    p.frequency_mhz = c.frequency_mhz;
    p.tx_height_m = c.tx.height_agl;
    p.rx_height_m = c.rx.height_agl;
    p.permittivity = c.ground.permittivity;
    p.conductivity = c.ground.conductivity;
    p.climate = c.climate;
    p.surface_refractivity = config.surface_refractivity;
    p.polarization = config.polarization;
    p.reliability = config.reliability;
    p.confidence = config.confidence;
    p.variability_mode = config.variability_mode;
    return p;
}

std::vector<PredictionRecord> run_sweep(const std::vector<Case>& cases, const terrain::ElevationGrid& grid,
                                        const SweepConfig& config, const SweepOptions& options) {
    config.validate();
    std::vector<int> precisions{0};
    for (int p : config.sweep_precisions()) precisions.push_back(p);
    const std::size_t np = precisions.size();

    // One profile per pair of endpoints, shared by all of its cases.
    struct LinkProfile {
        itm::TerrainProfile profile;
        std::string error;
    };
    using Endpoints = std::array<double, 4>;
    auto endpoints = [](const Case& c) { return Endpoints{c.tx.lat, c.tx.lon, c.rx.lat, c.rx.lon}; };
    std::map<Endpoints, LinkProfile> profiles;
    for (const Case& c : cases) {
        if (profiles.count(endpoints(c))) continue;
        LinkProfile lp;
        try {
            lp.profile = terrain::extract_profile(grid, c.tx, c.rx, config.profile_spacing);
        } catch (const std::exception& e) {
            lp.error = e.what();
        }
        profiles.emplace(endpoints(c), std::move(lp));
    }

    std::vector<PredictionRecord> records(cases.size() * np);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= records.size()) break;
            const Case& c = cases[k / np];
            const int bits = precisions[k % np];
            PredictionRecord& r = records[k];
            r.case_id = c.case_id;
            r.link_id = c.link_id;
            r.frequency_mhz = c.frequency_mhz;
            r.climate = c.climate;
            r.ground = c.ground;
            r.tx = c.tx;
            r.rx = c.rx;
            r.precision_bits = bits;
            const LinkProfile& lp = profiles.at(endpoints(c));
            const auto t0 = std::chrono::steady_clock::now();
            try {
                if (!lp.error.empty()) throw terrain::BoundsError(lp.error);
                itm::PredictionResult res =
                    itm::point_to_point(lp.profile, case_params(c, config), itm::Precision(bits), true);
                r.loss_db = res.total_loss_db;
                r.kwx = res.kwx;
                r.trace_hash = res.trace.hash();
                if (options.keep_traces) r.trace = std::move(res.trace);
            } catch (const std::exception& e) {
                r.loss_db = NAN;
                r.kwx = -1;
                r.trace_hash = 0;
                r.error = e.what();
            }
            r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        mpnum::release_thread_caches();
    };
    const int workers = std::max(1, options.workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return records;
}

Quartiles quartiles(std::vector<double> v) {
    if (v.empty()) return {NAN, NAN, NAN, NAN, NAN};
    std::sort(v.begin(), v.end());
    auto median = [](const double* b, std::size_t n) { return n % 2 ? b[n / 2] : 0.5 * (b[n / 2 - 1] + b[n / 2]); };
    const std::size_t n = v.size();
    const std::size_t half = (n + 1) / 2;
    return {v.front(), median(v.data(), half), median(v.data(), n), median(v.data() + (n - half), half), v.back()};
}

namespace {

// Baseline record of each case; throws when some case has none.
std::map<long, const PredictionRecord*> baselines(const std::vector<PredictionRecord>& records) {
    std::map<long, const PredictionRecord*> base;
    std::set<long> all;
    for (const auto& r : records) {
        all.insert(r.case_id);
        if (r.precision_bits == 0) base[r.case_id] = &r;
    }
    std::vector<long> missing;
    for (long id : all)
        if (!base.count(id)) missing.push_back(id);
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? " " : "") + std::to_string(missing[i]);
        if (missing.size() > 20) list += " ...";
        throw AnalysisError("missing baseline for case_ids: " + list, missing);
    }
    return base;
}

}  // namespace

std::vector<ErrorSummary> error_stats(const std::vector<PredictionRecord>& records) {
    const auto base = baselines(records);
    std::map<int, std::vector<double>> eps;
    for (const auto& r : records) {
        const PredictionRecord& b = *base.at(r.case_id);
        eps[r.precision_bits];
        if (r.failed() || b.failed()) continue;
        eps[r.precision_bits].push_back(r.loss_db - b.loss_db);
    }
    std::vector<ErrorSummary> out;
    for (auto& [bits, v] : eps) {
        ErrorSummary s;
        s.precision_bits = bits;
        s.count = v.size();
        if (!v.empty()) {
            const Quartiles q = quartiles(v);
            s.min = q.min;
            s.q1 = q.q1;
            s.median = q.median;
            s.q3 = q.q3;
            s.max = q.max;
        }
        for (double e : v) {
            s.max_abs_eps = std::max(s.max_abs_eps, std::abs(e));
            if (std::abs(e) > 3.0) ++s.n_outliers_3db;
        }
        out.push_back(s);
    }
    return out;
}

std::vector<Outlier> find_outliers(const std::vector<PredictionRecord>& records, double threshold_db) {
    const auto base = baselines(records);
    std::vector<Outlier> out;
    for (const auto& r : records) {
        const PredictionRecord& b = *base.at(r.case_id);
        if (r.precision_bits == 0 || r.failed() || b.failed()) continue;
        const double e = r.loss_db - b.loss_db;
        if (!(std::abs(e) > threshold_db)) continue;
        Outlier o;
        o.case_id = r.case_id;
        o.precision_bits = r.precision_bits;
        o.eps = e;
        if (r.trace && b.trace) {
            o.event_index = r.trace->first_divergence(*b.trace);
            if (!o.event_index) {
                o.site = "no-divergence";
            } else {
                const auto& ev = *o.event_index < r.trace->size() ? r.trace->events() : b.trace->events();
                o.site = std::string(ev[*o.event_index].site);
            }
        } else {
            o.site = r.trace_hash == b.trace_hash ? "no-divergence" : "unknown";
        }
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<TimingSummary> timing_report(const std::vector<PredictionRecord>& records) {
    std::map<int, std::vector<double>> times;
    for (const auto& r : records) times[r.precision_bits].push_back(r.wall_time_s);
    std::vector<TimingSummary> out;
    for (auto& [bits, v] : times) {
        const Quartiles q = quartiles(v);
        out.push_back({bits, v.size(), q.median, q.q1, q.q3, q.max});
    }
    return out;
}

}  // namespace itmstab::harness
