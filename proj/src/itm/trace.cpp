#include "itmstab/itm/trace.hpp"

#include <charconv>
#include <mutex>
#include <set>
#include <stdexcept>

namespace itmstab::itm {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void mix(std::uint64_t& h, unsigned char byte) {
    h ^= byte;
    h *= kFnvPrime;
}

std::string_view intern(std::string_view name) {
    static std::mutex mu;
    static std::set<std::string, std::less<>> names;
    std::lock_guard lock(mu);
    auto it = names.find(name);
    if (it == names.end()) it = names.emplace(name).first;
    return *it;
}

}  // namespace

std::uint64_t BranchTrace::hash() const {
    std::uint64_t h = kFnvOffset;
    for (const BranchEvent& e : events_) {
        for (char c : e.site) mix(h, static_cast<unsigned char>(c));
        mix(h, 0);
        auto v = static_cast<std::uint32_t>(e.outcome);
        for (int i = 0; i < 4; ++i) mix(h, static_cast<unsigned char>(v >> (8 * i)));
    }
    return h;
}

std::optional<std::size_t> BranchTrace::first_divergence(const BranchTrace& other) const {
    const std::size_t n = std::min(events_.size(), other.events_.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (events_[i] != other.events_[i]) return i;
    }
    if (events_.size() != other.events_.size()) return n;
    return std::nullopt;
}

std::string BranchTrace::encode() const {
    std::string out;
    for (const BranchEvent& e : events_) {
        if (!out.empty()) out += ';';
        out += e.site;
        out += '=';
        out += std::to_string(e.outcome);
    }
    return out;
}

BranchTrace BranchTrace::decode(std::string_view text) {
    BranchTrace t;
    while (!text.empty()) {
        const std::size_t end = std::min(text.find(';'), text.size());
        std::string_view item = text.substr(0, end);
        const std::size_t eq = item.rfind('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw std::invalid_argument("malformed trace item '" + std::string(item) + "'");
        }
        int outcome = 0;
        std::string_view num = item.substr(eq + 1);
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), outcome);
        if (ec != std::errc() || ptr != num.data() + num.size()) {
            throw std::invalid_argument("malformed trace outcome '" + std::string(item) + "'");
        }
        t.record(intern(item.substr(0, eq)), outcome);
        text.remove_prefix(end == text.size() ? end : end + 1);
    }
    return t;
}

}  // namespace itmstab::itm
