#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "itmstab/itm/itm.hpp"
#include "itmstab/terrain/terrain.hpp"

namespace itmstab::harness {

using terrain::GeoPoint;

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AnalysisError : public std::runtime_error {
public:
    AnalysisError(const std::string& what, std::vector<long> case_ids)
        : std::runtime_error(what), case_ids(std::move(case_ids)) {}
    std::vector<long> case_ids;
};

class ParseError : public std::runtime_error {
public:
    ParseError(long line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line(line) {}
    long line;
};

struct BBox {
    double lat_min = 39.95324;
    double lat_max = 40.07186;
    double lon_min = -105.31843;
    double lon_max = -105.18602;
};

struct Ground {
    double permittivity = 15.0;
    double conductivity = 0.005;
    friend bool operator==(const Ground&, const Ground&) = default;
};

/// Defaults reproduce the full experiment: 500 links, 7 frequencies,
/// 7 climates, 5 grounds and 8 precisions plus the native baseline.
struct SweepConfig {
    BBox bbox;
    int n_links = 500;
    std::vector<double> frequencies{0.148, 80.0, 900.0, 1900.0, 2400.0, 5280.0, 60000.0};
    std::vector<int> climates{1, 2, 3, 4, 5, 6, 7};
    std::vector<Ground> grounds{{5.0, 0.001}, {13.0, 0.002}, {15.0, 0.005}, {25.0, 0.02}, {80.0, 5.0}};
    double height_min = 0.0;
    double height_max = 35.0;
    std::vector<int> precisions{11, 24, 53, 64, 128, 256, 512, 1024};
    std::uint64_t seed = 1;
    double min_link_distance = 1000.0;
    /// Profile sample spacing in meters; 0 picks the terrain default.
    double profile_spacing = 0.0;
    /// Model settings shared by every case.
    double surface_refractivity = 301.0;
    itm::Polarization polarization = itm::Polarization::vertical;
    itm::VariabilityMode variability_mode = itm::VariabilityMode::broadcast;
    double reliability = 0.5;
    double confidence = 0.5;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Sorted, de-duplicated precisions without the baseline.
    std::vector<int> sweep_precisions() const;
};

struct Link {
    int link_id = 0;
    GeoPoint tx;
    GeoPoint rx;
};

struct Case {
    long case_id = 0;
    int link_id = 0;
    double frequency_mhz = 0.0;
    int climate = 0;
    Ground ground;
    GeoPoint tx;
    GeoPoint rx;
};

struct PredictionRecord {
    long case_id = 0;
    int link_id = 0;
    double frequency_mhz = 0.0;
    int climate = 0;
    Ground ground;
    GeoPoint tx;
    GeoPoint rx;
    /// 0 is the native-double baseline.
    int precision_bits = 0;
    double loss_db = 0.0;
    /// -1 marks a failed case; loss_db is NaN then.
    int kwx = 0;
    std::uint64_t trace_hash = 0;
    double wall_time_s = 0.0;
    std::string error;
    /// Filled when the sweep keeps traces.
    std::optional<itm::BranchTrace> trace;

    bool failed() const { return kwx < 0; }
};

struct ErrorSummary {
    int precision_bits = 0;
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    std::size_t n_outliers_3db = 0;
    double max_abs_eps = 0;
};

struct Outlier {
    long case_id = 0;
    int precision_bits = 0;
    double eps = 0.0;
    /// Site of the first differing branch event, "no-divergence" when the
    /// traces agree, or "unknown" when only the hashes are available and
    /// they differ.
    std::string site;
    std::optional<std::size_t> event_index;
};

struct TimingSummary {
    int precision_bits = 0;
    std::size_t count = 0;
    double median = 0, q1 = 0, q3 = 0, max = 0;
};

struct Quartiles {
    double min, q1, median, q3, max;
};

/// Hinges (median of each half, the middle value shared by both halves
/// when the count is odd). Input need not be sorted.
Quartiles quartiles(std::vector<double> values);

/// Random streams used by gen_links, derived from the master seed.
enum class Stream : std::uint64_t { tx_lat = 0, tx_lon = 1, rx_lat = 2, rx_lon = 3, tx_height = 4, rx_height = 5 };

inline constexpr int kMaxRedraws = 10000;

std::vector<Link> gen_links(std::uint64_t seed, int n, const BBox& bbox, double height_min, double height_max,
                            double min_distance);

/// Synthetic terrain at `cell_arcsec` resolution covering `box` plus a
/// two-cell margin. The default heights span 1562.15 to 2550.28 m.
terrain::ElevationGrid synth_grid_for(const BBox& box, terrain::SynthKind kind, std::uint64_t seed,
                                      double cell_arcsec = 0.3, double low = 1562.15, double high = 2550.28);

/// Cartesian product in canonical order: link, frequency, climate, ground.
std::vector<Case> build_cases(const std::vector<Link>& links, const SweepConfig& config);

/// |cases| x (|precisions| + 1).
std::size_t planned_predictions(std::size_t n_cases, const SweepConfig& config);

itm::PropagationParams case_params(const Case& c, const SweepConfig& config);

struct SweepOptions {
    int workers = 1;
    bool keep_traces = false;
};

/// One record per (case, precision) plus the baseline, ordered by case_id
/// and then precision whatever the schedule.
std::vector<PredictionRecord> run_sweep(const std::vector<Case>& cases, const terrain::ElevationGrid& grid,
                                        const SweepConfig& config, const SweepOptions& options = {});

std::vector<ErrorSummary> error_stats(const std::vector<PredictionRecord>& records);

std::vector<Outlier> find_outliers(const std::vector<PredictionRecord>& records, double threshold_db = 3.0);

std::vector<TimingSummary> timing_report(const std::vector<PredictionRecord>& records);

// File formats.

inline constexpr const char* kRecordsHeader =
    "case_id,link_id,freq_mhz,climate,eps_r,sigma,tx_lat,tx_lon,tx_h,rx_lat,rx_lon,rx_h,precision_bits,loss_db,kwx,"
    "trace_hash,wall_time_s";
inline constexpr const char* kSummaryHeader = "precision_bits,count,min,q1,median,q3,max,n_outliers_3db,max_abs_eps";

void write_records_csv(std::ostream& out, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_records_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<ErrorSummary>& summaries);
/// precision min q1 median q3 max, whitespace separated with a comment header.
void write_boxplot(std::ostream& out, const std::vector<ErrorSummary>& summaries);
void write_outliers_csv(std::ostream& out, const std::vector<Outlier>& outliers);
void write_timing_csv(std::ostream& out, const std::vector<TimingSummary>& timing);

/// Trace sidecar: "case_id,precision_bits,trace" with the encoded trace.
void write_traces_csv(std::ostream& out, const std::vector<PredictionRecord>& records);
/// Attaches traces to the matching records.
void read_traces_csv(std::istream& in, std::vector<PredictionRecord>& records);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace itmstab::harness
