#pragma once

#include <compare>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <mpfr.h>

#include "itmstab/mpnum/precision.hpp"

namespace itmstab::mpnum {

/// Raised by MPFloat::parse on text that is not a signed decimal numeral.
class ParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Binary floating-point value with an explicit significand width.
///
/// Every operation rounds the exact result to nearest, ties to even, at
/// the width of its operands (the wider one when they differ). The
/// exponent range is MPFR's default, which is wide enough to be treated
/// as unbounded; there are no subnormals. Precision is carried by each
/// value, never by process-wide state.
///
/// A default-constructed MPFloat is empty: it can be assigned to, but
/// using it as an operand throws std::logic_error.
class MPFloat {
public:
    MPFloat() noexcept = default;
    MPFloat(double value, Precision p);
    MPFloat(const MPFloat& other);
    MPFloat(MPFloat&& other) noexcept;
    MPFloat& operator=(const MPFloat& other);
    MPFloat& operator=(MPFloat&& other) noexcept;
    ~MPFloat();

    /// Nearest p-bit value to a decimal numeral such as "-1.25e-3".
    static MPFloat parse(std::string_view text, Precision p);
    static MPFloat infinity(int sign, Precision p);
    static MPFloat nan(Precision p);

    Precision precision() const;
    bool empty() const noexcept { return !live_; }

    bool is_nan() const { return mpfr_nan_p(raw()) != 0; }
    bool is_inf() const { return mpfr_inf_p(raw()) != 0; }
    bool is_zero() const { return mpfr_zero_p(raw()) != 0; }
    bool signbit() const { return mpfr_signbit(raw()) != 0; }

    /// Rounded once to the nearest double; overflow gives +-inf.
    double to_native() const;
    /// Truncation toward zero, as a C cast to an integer type would do.
    long trunc_to_long() const;
    /// Same value rounded to another width.
    MPFloat rounded(Precision p) const;
    /// Decimal rendering with `digits` significant digits.
    std::string to_string(int digits = 17) const;

    MPFloat& operator+=(const MPFloat& rhs);
    MPFloat& operator-=(const MPFloat& rhs);
    MPFloat& operator*=(const MPFloat& rhs);
    MPFloat& operator/=(const MPFloat& rhs);
    MPFloat& operator+=(double rhs);
    MPFloat& operator-=(double rhs);
    MPFloat& operator*=(double rhs);
    MPFloat& operator/=(double rhs);

    mpfr_srcptr raw() const;
    mpfr_ptr raw();

    friend void swap(MPFloat& a, MPFloat& b) noexcept;

    /// Allocates storage of width p without assigning a value.
    static MPFloat uninitialized(Precision p);

private:
    mpfr_t v_{};
    bool live_ = false;
};

MPFloat operator-(const MPFloat& a);
MPFloat operator+(const MPFloat& a, const MPFloat& b);
MPFloat operator-(const MPFloat& a, const MPFloat& b);
MPFloat operator*(const MPFloat& a, const MPFloat& b);
MPFloat operator/(const MPFloat& a, const MPFloat& b);
MPFloat operator+(const MPFloat& a, double b);
MPFloat operator-(const MPFloat& a, double b);
MPFloat operator*(const MPFloat& a, double b);
MPFloat operator/(const MPFloat& a, double b);
MPFloat operator+(double a, const MPFloat& b);
MPFloat operator-(double a, const MPFloat& b);
MPFloat operator*(double a, const MPFloat& b);
MPFloat operator/(double a, const MPFloat& b);

bool operator==(const MPFloat& a, const MPFloat& b);
std::partial_ordering operator<=>(const MPFloat& a, const MPFloat& b);
bool operator==(const MPFloat& a, double b);
std::partial_ordering operator<=>(const MPFloat& a, double b);

/// Bitwise identity: same width, same sign, and same value, with all NaNs
/// considered identical.
bool identical(const MPFloat& a, const MPFloat& b);

MPFloat sqrt(const MPFloat& a);
MPFloat exp(const MPFloat& a);
MPFloat log(const MPFloat& a);
MPFloat log10(const MPFloat& a);
MPFloat pow(const MPFloat& base, const MPFloat& exponent);
MPFloat pow(const MPFloat& base, double exponent);
MPFloat sin(const MPFloat& a);
MPFloat cos(const MPFloat& a);
MPFloat atan2(const MPFloat& y, const MPFloat& x);
MPFloat abs(const MPFloat& a);
MPFloat fabs(const MPFloat& a);
MPFloat floor(const MPFloat& a);
MPFloat min(const MPFloat& a, const MPFloat& b);
MPFloat max(const MPFloat& a, const MPFloat& b);
MPFloat hypot(const MPFloat& a, const MPFloat& b);

inline double to_native(const MPFloat& x) { return x.to_native(); }
inline long trunc_to_long(const MPFloat& x) { return x.trunc_to_long(); }

// Operation-table entry points with the result width given per call.

enum class ArithOp { add, sub, mul, div };

MPFloat arith(ArithOp op, const MPFloat& a, const MPFloat& b, Precision p);

enum class ElemFn { sqrt, exp, ln, log10, pow, sin, cos, atan2, abs, floor, min, max };

struct ElemResult {
    MPFloat value;
    /// Set when an argument outside the function's real domain produced NaN.
    bool domain_error = false;
};

/// Arity is 2 for pow, atan2 (y, x), min and max; 1 otherwise.
ElemResult elem(ElemFn fn, std::span<const MPFloat> args, Precision p);

/// Nearest p-bit value to a decimal numeral.
inline MPFloat make(std::string_view text, Precision p) { return MPFloat::parse(text, p); }

/// Frees the calling thread's cached constants. Call before a worker exits.
void release_thread_caches();

}  // namespace itmstab::mpnum
