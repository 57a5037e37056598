#pragma once

#include <compare>
#include <string>

namespace itmstab::mpnum {

/// Significand width in bits. Zero is reserved for native IEEE double
/// arithmetic (the machine-precision baseline).
class Precision {
public:
    constexpr Precision() = default;
    constexpr explicit Precision(int bits) : bits_(bits) {}

    static constexpr Precision native() { return Precision(0); }

    constexpr int bits() const { return bits_; }
    constexpr bool is_native() const { return bits_ == 0; }

    friend constexpr auto operator<=>(Precision, Precision) = default;

    std::string to_string() const {
        return is_native() ? std::string("native") : std::to_string(bits_);
    }

private:
    int bits_ = 0;
};

/// Smallest significand width accepted by MPFloat.
inline constexpr int kMinBits = 2;

}  // namespace itmstab::mpnum
