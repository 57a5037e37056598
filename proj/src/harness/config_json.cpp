#include "itmstab/harness/config_json.hpp"

#include <set>

namespace itmstab::harness {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

long long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<long long>();
}

const json& array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
}

std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) fail(path.empty() ? "config" : path, "expected an object");
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) fail(path.empty() ? k : path + "." + k, "unknown field");
    }
}

}  // namespace

std::string to_string(itm::Polarization p) { return p == itm::Polarization::vertical ? "vertical" : "horizontal"; }

std::string to_string(itm::VariabilityMode m) {
    switch (m) {
        case itm::VariabilityMode::single_message:
            return "single_message";
        case itm::VariabilityMode::individual:
            return "individual";
        case itm::VariabilityMode::mobile:
            return "mobile";
        case itm::VariabilityMode::broadcast:
            return "broadcast";
    }
    return "broadcast";
}

SweepConfig config_from_json(const json& j) {
    check_keys(j, "",
               {"bbox", "n_links", "frequencies", "climates", "grounds", "height_range", "precisions", "seed",
                "min_link_distance", "profile_spacing", "surface_refractivity", "polarization", "variability_mode",
                "reliability", "confidence"});
    SweepConfig c;
    if (j.contains("bbox")) {
        const json& b = j["bbox"];
        check_keys(b, "bbox", {"lat_min", "lat_max", "lon_min", "lon_max"});
        if (b.contains("lat_min")) c.bbox.lat_min = number(b["lat_min"], "bbox.lat_min");
        if (b.contains("lat_max")) c.bbox.lat_max = number(b["lat_max"], "bbox.lat_max");
        if (b.contains("lon_min")) c.bbox.lon_min = number(b["lon_min"], "bbox.lon_min");
        if (b.contains("lon_max")) c.bbox.lon_max = number(b["lon_max"], "bbox.lon_max");
    }
    if (j.contains("n_links")) {
        const long long n = integer(j["n_links"], "n_links");
        if (n < 1 || n > 100000000) fail("n_links", "out of range");
        c.n_links = static_cast<int>(n);
    }
    if (j.contains("frequencies")) {
        c.frequencies.clear();
        const json& a = array(j["frequencies"], "frequencies");
        for (std::size_t i = 0; i < a.size(); ++i) c.frequencies.push_back(number(a[i], idx("frequencies", i)));
    }
    if (j.contains("climates")) {
        c.climates.clear();
        const json& a = array(j["climates"], "climates");
        for (std::size_t i = 0; i < a.size(); ++i)
            c.climates.push_back(static_cast<int>(integer(a[i], idx("climates", i))));
    }
    if (j.contains("grounds")) {
        c.grounds.clear();
        const json& a = array(j["grounds"], "grounds");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string p = idx("grounds", i);
            Ground g;
            if (a[i].is_array()) {
                if (a[i].size() != 2) fail(p, "expected [permittivity, conductivity]");
                g.permittivity = number(a[i][0], p + "[0]");
                g.conductivity = number(a[i][1], p + "[1]");
            } else {
                check_keys(a[i], p, {"permittivity", "conductivity"});
                if (!a[i].contains("permittivity") || !a[i].contains("conductivity")) {
                    fail(p, "needs permittivity and conductivity");
                }
                g.permittivity = number(a[i]["permittivity"], p + ".permittivity");
                g.conductivity = number(a[i]["conductivity"], p + ".conductivity");
            }
            c.grounds.push_back(g);
        }
    }
    if (j.contains("height_range")) {
        const json& a = array(j["height_range"], "height_range");
        if (a.size() != 2) fail("height_range", "expected [min, max]");
        c.height_min = number(a[0], "height_range[0]");
        c.height_max = number(a[1], "height_range[1]");
    }
    if (j.contains("precisions")) {
        c.precisions.clear();
        const json& a = array(j["precisions"], "precisions");
        for (std::size_t i = 0; i < a.size(); ++i) {
            const long long b = integer(a[i], idx("precisions", i));
            if (b < 0 || b > 1000000) fail(idx("precisions", i), "out of range");
            c.precisions.push_back(static_cast<int>(b));
        }
    }
    if (j.contains("seed")) {
        const json& s = j["seed"];
        if (s.is_number_unsigned()) {
            c.seed = s.get<std::uint64_t>();
        } else if (s.is_number_integer() && s.get<long long>() >= 0) {
            c.seed = static_cast<std::uint64_t>(s.get<long long>());
        } else {
            fail("seed", "expected a nonnegative integer");
        }
    }
    if (j.contains("min_link_distance")) c.min_link_distance = number(j["min_link_distance"], "min_link_distance");
    if (j.contains("profile_spacing")) c.profile_spacing = number(j["profile_spacing"], "profile_spacing");
    if (j.contains("surface_refractivity"))
        c.surface_refractivity = number(j["surface_refractivity"], "surface_refractivity");
    if (j.contains("polarization")) {
        const json& p = j["polarization"];
        if (p == "vertical")
            c.polarization = itm::Polarization::vertical;
        else if (p == "horizontal")
            c.polarization = itm::Polarization::horizontal;
        else
            fail("polarization", "expected \"vertical\" or \"horizontal\"");
    }
    if (j.contains("variability_mode")) {
        const json& m = j["variability_mode"];
        bool found = false;
        for (auto mode : {itm::VariabilityMode::single_message, itm::VariabilityMode::individual,
                          itm::VariabilityMode::mobile, itm::VariabilityMode::broadcast}) {
            if (m == to_string(mode)) {
                c.variability_mode = mode;
                found = true;
            }
        }
        if (!found) fail("variability_mode", "expected single_message, individual, mobile or broadcast");
    }
    if (j.contains("reliability")) c.reliability = number(j["reliability"], "reliability");
    if (j.contains("confidence")) c.confidence = number(j["confidence"], "confidence");
    c.validate();
    return c;
}

json config_to_json(const SweepConfig& c) {
    json grounds = json::array();
    for (const Ground& g : c.grounds) grounds.push_back({{"permittivity", g.permittivity}, {"conductivity", g.conductivity}});
    return json{
        {"bbox", {{"lat_min", c.bbox.lat_min}, {"lat_max", c.bbox.lat_max}, {"lon_min", c.bbox.lon_min},
                  {"lon_max", c.bbox.lon_max}}},
        {"n_links", c.n_links},
        {"frequencies", c.frequencies},
        {"climates", c.climates},
        {"grounds", grounds},
        {"height_range", {c.height_min, c.height_max}},
        {"precisions", c.precisions},
        {"seed", c.seed},
        {"min_link_distance", c.min_link_distance},
        {"profile_spacing", c.profile_spacing},
        {"surface_refractivity", c.surface_refractivity},
        {"polarization", to_string(c.polarization)},
        {"variability_mode", to_string(c.variability_mode)},
        {"reliability", c.reliability},
        {"confidence", c.confidence},
    };
}

}  // namespace itmstab::harness
