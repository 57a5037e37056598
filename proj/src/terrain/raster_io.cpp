#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>

#include "itmstab/terrain/terrain.hpp"

namespace itmstab::terrain {
namespace {

struct Token {
    std::string text;
    long line = 0;
};

class Tokenizer {
public:
    explicit Tokenizer(std::istream& in) : in_(in) {}

    std::optional<Token> next() {
        while (pos_ >= words_.size()) {
            std::string line;
            if (!std::getline(in_, line)) return std::nullopt;
            ++line_no_;
            words_.clear();
            pos_ = 0;
            std::istringstream ss(line);
            std::string w;
            while (ss >> w) words_.push_back(w);
        }
        return Token{words_[pos_++], line_no_};
    }

    std::optional<Token> peek() {
        auto t = next();
        if (t) --pos_;
        return t;
    }

private:
    std::istream& in_;
    std::vector<std::string> words_;
    std::size_t pos_ = 0;
    long line_no_ = 0;
};

std::string where(const Token& t) { return "line " + std::to_string(t.line) + ", token '" + t.text + "'"; }

double parse_number(const Token& t) {
    double v = 0.0;
    const char* b = t.text.data();
    const char* e = b + t.text.size();
    if (*b == '+') ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || !std::isfinite(v)) throw FormatError("not a number at " + where(t));
    return v;
}

int parse_count(const Token& t) {
    const double v = parse_number(t);
    if (v < 1 || v != std::floor(v) || v > 1e8) throw FormatError("bad dimension at " + where(t));
    return static_cast<int>(v);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool starts_alpha(const std::string& s) { return !s.empty() && std::isalpha(static_cast<unsigned char>(s[0])); }

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

bool ElevationGrid::contains(double lat, double lon) const {
    const double tol = 1e-9 * cell_size;
    return lat <= origin_lat + tol && lat >= south_lat() - tol && lon >= origin_lon - tol && lon <= east_lon() + tol;
}

void ElevationGrid::validate() const {
    if (rows < 2 || cols < 2) throw FormatError("grid needs at least 2 rows and 2 columns");
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw FormatError("cell size must be positive");
    if (samples.size() != static_cast<std::size_t>(rows) * cols) throw FormatError("sample count mismatch");
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!is_nodata(samples[i]) && !std::isfinite(samples[i])) {
            throw FormatError("non-finite sample at index " + std::to_string(i));
        }
    }
}

void GeoPoint::validate() const {
    if (!(lat >= -90.0 && lat <= 90.0)) throw std::invalid_argument("latitude outside [-90, 90]");
    if (!(lon >= -180.0 && lon <= 180.0)) throw std::invalid_argument("longitude outside [-180, 180]");
    if (!(height_agl >= 0.0) || !std::isfinite(height_agl)) throw std::invalid_argument("height must be >= 0");
}

ElevationGrid read_esri_ascii(std::istream& in) {
    Tokenizer tok(in);
    std::map<std::string, Token> header;
    while (true) {
        auto t = tok.peek();
        if (!t || !starts_alpha(t->text)) break;
        tok.next();
        const std::string key = lower(t->text);
        static const char* known[] = {"ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter",
                                      "cellsize", "nodata_value"};
        if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
            throw FormatError("unknown header key at " + where(*t));
        }
        auto v = tok.next();
        if (!v) throw FormatError("missing value for header key at " + where(*t));
        header[key] = *v;
    }
    for (const char* req : {"ncols", "nrows", "cellsize"}) {
        if (!header.count(req)) throw FormatError(std::string("missing header key ") + req);
    }
    const bool corner = header.count("xllcorner") && header.count("yllcorner");
    const bool center = header.count("xllcenter") && header.count("yllcenter");
    if (corner == center) throw FormatError("header needs xllcorner/yllcorner or xllcenter/yllcenter");

    ElevationGrid g;
    g.cols = parse_count(header["ncols"]);
    g.rows = parse_count(header["nrows"]);
    g.cell_size = parse_number(header["cellsize"]);
    if (!(g.cell_size > 0.0)) throw FormatError("cell size must be positive at " + where(header["cellsize"]));
    if (header.count("nodata_value")) g.nodata = parse_number(header["nodata_value"]);
    if (corner) {
        // Cell-registered: the first node sits half a cell inside the corner.
        g.origin_lon = parse_number(header["xllcorner"]) + 0.5 * g.cell_size;
        g.origin_lat = parse_number(header["yllcorner"]) + (g.rows - 0.5) * g.cell_size;
    } else {
        g.origin_lon = parse_number(header["xllcenter"]);
        g.origin_lat = parse_number(header["yllcenter"]) + (g.rows - 1) * g.cell_size;
    }
    const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols;
    g.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto t = tok.next();
        if (!t) {
            throw FormatError("truncated grid: expected " + std::to_string(n) + " samples, found " +
                              std::to_string(i));
        }
        g.samples.push_back(parse_number(*t));
    }
    if (auto extra = tok.next()) throw FormatError("unexpected data after grid at " + where(*extra));
    g.validate();
    return g;
}

ElevationGrid read_srtm(const std::vector<unsigned char>& bytes, const std::string& tile_name) {
    static const std::regex name_re(R"(([NSns])(\d{2})([EWew])(\d{3}))");
    std::smatch m;
    if (!std::regex_search(tile_name, m, name_re)) {
        throw FormatError("tile name '" + tile_name + "' does not look like N40W106");
    }
    const int lat = std::stoi(m[2]) * (std::toupper(m[1].str()[0]) == 'S' ? -1 : 1);
    const int lon = std::stoi(m[4]) * (std::toupper(m[3].str()[0]) == 'W' ? -1 : 1);
    if (bytes.size() % 2 != 0) throw FormatError("odd byte count " + std::to_string(bytes.size()));
    const std::size_t count = bytes.size() / 2;
    const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
    if (n < 2 || n * n != count) {
        throw FormatError("byte count " + std::to_string(bytes.size()) + " is not a square grid of 16-bit samples");
    }
    ElevationGrid g;
    g.rows = g.cols = static_cast<int>(n);
    g.cell_size = 1.0 / static_cast<double>(n - 1);
    g.origin_lat = lat + 1.0;
    g.origin_lon = lon;
    g.nodata = -32768.0;
    g.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto v = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[2 * i] << 8 | bytes[2 * i + 1]));
        g.samples[i] = v;
    }
    return g;
}

ElevationGrid load_grid(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_bytes(path);
    const std::string ext = lower(path.extension().string());
    if (ext == ".hgt") return read_srtm(bytes, path.filename().string());
    std::size_t i = 0;
    while (i < bytes.size() && std::isspace(bytes[i])) ++i;
    if (i < bytes.size() && std::isalpha(bytes[i])) {
        std::istringstream in(std::string(bytes.begin(), bytes.end()));
        return read_esri_ascii(in);
    }
    return read_srtm(bytes, path.filename().string());
}

void write_esri_ascii(const ElevationGrid& grid, std::ostream& out) {
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "ncols " << grid.cols << "\n";
    out << "nrows " << grid.rows << "\n";
    out << "xllcenter " << num(grid.origin_lon) << "\n";
    out << "yllcenter " << num(grid.south_lat()) << "\n";
    out << "cellsize " << num(grid.cell_size) << "\n";
    out << "NODATA_value " << num(grid.nodata) << "\n";
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (c) out << ' ';
            out << num(grid.at(r, c));
        }
        out << '\n';
    }
}

void save_esri_ascii(const ElevationGrid& grid, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    write_esri_ascii(grid, f);
    if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace itmstab::terrain
