#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace itmstab::itm {

/// One control-flow decision inside the model. `site` names the decision
/// point; `outcome` is 0/1 for a two-way branch, or the selected index for
/// a discretization step (segment choice, truncated window bound).
struct BranchEvent {
    std::string_view site;
    int outcome = 0;

    friend bool operator==(const BranchEvent&, const BranchEvent&) = default;
};

/// Ordered record of the branch decisions taken during one evaluation.
/// Site names are string literals with static storage.
class BranchTrace {
public:
    void record(std::string_view site, int outcome) { events_.push_back({site, outcome}); }
    void clear() { events_.clear(); }

    const std::vector<BranchEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    /// FNV-1a over (site, outcome) pairs; stable across runs and platforms.
    std::uint64_t hash() const;

    /// Index of the first event that differs, counting a length mismatch
    /// as a difference at the shorter length; nullopt when identical.
    std::optional<std::size_t> first_divergence(const BranchTrace& other) const;

    /// Compact text form "site=outcome;site=outcome;...".
    std::string encode() const;
    /// Inverse of encode(). Site names are interned in a process-wide table.
    static BranchTrace decode(std::string_view text);

    friend bool operator==(const BranchTrace&, const BranchTrace&) = default;

private:
    std::vector<BranchEvent> events_;
};

}  // namespace itmstab::itm
