#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "itmstab/harness/harness.hpp"

namespace itmstab::harness {
namespace {

std::string printf_double(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, long line, const char* field) {
    if (s == "nan") return NAN;
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError(line, std::string("bad ") + field + " '" + s + "'");
    }
    return v;
}

template <class Int>
Int to_int(const std::string& s, long line, const char* field, int base = 10) {
    Int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
        throw ParseError(line, std::string("bad ") + field + " '" + s + "'");
    }
    return v;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

void write_records_csv(std::ostream& out, const std::vector<PredictionRecord>& records) {
    out << kRecordsHeader << '\n';
    char hash[20];
    for (const auto& r : records) {
        std::snprintf(hash, sizeof hash, "%016" PRIx64, r.trace_hash);
        out << r.case_id << ',' << r.link_id << ',' << format_double(r.frequency_mhz) << ',' << r.climate << ','
            << format_double(r.ground.permittivity) << ',' << format_double(r.ground.conductivity) << ','
            << format_double(r.tx.lat) << ',' << format_double(r.tx.lon) << ',' << format_double(r.tx.height_agl)
            << ',' << format_double(r.rx.lat) << ',' << format_double(r.rx.lon) << ','
            << format_double(r.rx.height_agl) << ',' << r.precision_bits << ','
            << (std::isnan(r.loss_db) ? std::string("nan") : printf_double("%.12g", r.loss_db)) << ',' << r.kwx
            << ',' << hash << ',' << printf_double("%.6g", r.wall_time_s) << '\n';
    }
}

std::vector<PredictionRecord> read_records_csv(std::istream& in) {
    std::string line;
    long n = 1;
    if (!std::getline(in, line)) throw ParseError(1, "empty records file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRecordsHeader) throw ParseError(1, "unexpected header");
    std::vector<PredictionRecord> records;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line == "\r") continue;
        const auto f = split(line, ',');
        if (f.size() != 17) throw ParseError(n, "expected 17 fields, found " + std::to_string(f.size()));
        PredictionRecord r;
        r.case_id = to_int<long>(f[0], n, "case_id");
        r.link_id = to_int<int>(f[1], n, "link_id");
        r.frequency_mhz = to_double(f[2], n, "freq_mhz");
        r.climate = to_int<int>(f[3], n, "climate");
        r.ground.permittivity = to_double(f[4], n, "eps_r");
        r.ground.conductivity = to_double(f[5], n, "sigma");
        r.tx = {to_double(f[6], n, "tx_lat"), to_double(f[7], n, "tx_lon"), to_double(f[8], n, "tx_h")};
        r.rx = {to_double(f[9], n, "rx_lat"), to_double(f[10], n, "rx_lon"), to_double(f[11], n, "rx_h")};
        r.precision_bits = to_int<int>(f[12], n, "precision_bits");
        r.loss_db = to_double(f[13], n, "loss_db");
        r.kwx = to_int<int>(f[14], n, "kwx");
        r.trace_hash = to_int<std::uint64_t>(f[15], n, "trace_hash", 16);
        r.wall_time_s = to_double(f[16], n, "wall_time_s");
        if (r.precision_bits < 0) throw ParseError(n, "negative precision_bits");
        if (r.kwx < -1 || r.kwx > 4) throw ParseError(n, "kwx outside -1..4");
        if (std::isnan(r.loss_db) != (r.kwx == -1)) throw ParseError(n, "loss_db nan only for failed rows");
        records.push_back(std::move(r));
    }
    return records;
}

void write_summary_csv(std::ostream& out, const std::vector<ErrorSummary>& summaries) {
    out << kSummaryHeader << '\n';
    for (const auto& s : summaries) {
        out << s.precision_bits << ',' << s.count << ',' << printf_double("%.12g", s.min) << ','
            << printf_double("%.12g", s.q1) << ',' << printf_double("%.12g", s.median) << ','
            << printf_double("%.12g", s.q3) << ',' << printf_double("%.12g", s.max) << ',' << s.n_outliers_3db << ','
            << printf_double("%.12g", s.max_abs_eps) << '\n';
    }
}

void write_boxplot(std::ostream& out, const std::vector<ErrorSummary>& summaries) {
    out << "# precision min q1 median q3 max\n";
    for (const auto& s : summaries) {
        out << s.precision_bits << ' ' << printf_double("%.12g", s.min) << ' ' << printf_double("%.12g", s.q1) << ' '
            << printf_double("%.12g", s.median) << ' ' << printf_double("%.12g", s.q3) << ' '
            << printf_double("%.12g", s.max) << '\n';
    }
}

void write_outliers_csv(std::ostream& out, const std::vector<Outlier>& outliers) {
    out << "case_id,precision_bits,eps_db,first_divergent_site,event_index\n";
    for (const auto& o : outliers) {
        out << o.case_id << ',' << o.precision_bits << ',' << printf_double("%.12g", o.eps) << ',' << o.site << ',';
        if (o.event_index) out << *o.event_index;
        out << '\n';
    }
}

void write_timing_csv(std::ostream& out, const std::vector<TimingSummary>& timing) {
    out << "precision_bits,count,median_s,q1_s,q3_s,max_s\n";
    for (const auto& t : timing) {
        out << t.precision_bits << ',' << t.count << ',' << printf_double("%.6g", t.median) << ','
            << printf_double("%.6g", t.q1) << ',' << printf_double("%.6g", t.q3) << ','
            << printf_double("%.6g", t.max) << '\n';
    }
}

void write_traces_csv(std::ostream& out, const std::vector<PredictionRecord>& records) {
    out << "case_id,precision_bits,trace\n";
    for (const auto& r : records) {
        if (!r.trace) continue;
        out << r.case_id << ',' << r.precision_bits << ',' << r.trace->encode() << '\n';
    }
}

void read_traces_csv(std::istream& in, std::vector<PredictionRecord>& records) {
    std::map<std::pair<long, int>, PredictionRecord*> index;
    for (auto& r : records) index[{r.case_id, r.precision_bits}] = &r;
    std::string line;
    long n = 1;
    if (!std::getline(in, line) || line.rfind("case_id,precision_bits,trace", 0) != 0) {
        throw ParseError(1, "unexpected traces header");
    }
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto a = line.find(',');
        const auto b = a == std::string::npos ? a : line.find(',', a + 1);
        if (b == std::string::npos) throw ParseError(n, "expected 3 fields");
        const long id = to_int<long>(line.substr(0, a), n, "case_id");
        const int bits = to_int<int>(line.substr(a + 1, b - a - 1), n, "precision_bits");
        auto it = index.find({id, bits});
        if (it == index.end()) continue;
        try {
            it->second->trace = itm::BranchTrace::decode(line.substr(b + 1));
        } catch (const std::invalid_argument& e) {
            throw ParseError(n, e.what());
        }
    }
}

}  // namespace itmstab::harness
