#include "itmstab/mpnum/mpfloat.hpp"

#include <algorithm>
#include <cctype>
#include <string>
#include <utility>

namespace itmstab::mpnum {
namespace {

constexpr mpfr_rnd_t kRound = MPFR_RNDN;

void check_bits(Precision p) {
    if (p.bits() < kMinBits) {
        throw std::invalid_argument("precision must be at least " + std::to_string(kMinBits) +
                                    " bits, got " + std::to_string(p.bits()));
    }
}

Precision wider(const MPFloat& a, const MPFloat& b) {
    return std::max(a.precision(), b.precision());
}

// Accepts [+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?
bool is_decimal_numeral(std::string_view s) {
    std::size_t i = 0;
    auto digits = [&] {
        std::size_t start = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        return i - start;
    };
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t mantissa = digits();
    if (i < s.size() && s[i] == '.') {
        ++i;
        mantissa += digits();
    }
    if (mantissa == 0) return false;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
        if (digits() == 0) return false;
    }
    return i == s.size();
}

// Some MPFR entry points are macros, so they are wrapped rather than passed by address.
#define MPNUM_FN1(fn) [](mpfr_ptr r, mpfr_srcptr x, mpfr_rnd_t m) { fn(r, x, m); }
#define MPNUM_FN2(fn) [](mpfr_ptr r, mpfr_srcptr x, mpfr_srcptr y, mpfr_rnd_t m) { fn(r, x, y, m); }
#define MPNUM_FND(fn) [](mpfr_ptr r, mpfr_srcptr x, double y, mpfr_rnd_t m) { fn(r, x, y, m); }

template <class F>
MPFloat unary(const MPFloat& a, F&& f) {
    MPFloat r = MPFloat::uninitialized(a.precision());
    f(r.raw(), a.raw(), kRound);
    return r;
}

template <class F>
MPFloat binary(const MPFloat& a, const MPFloat& b, F&& f) {
    MPFloat r = MPFloat::uninitialized(wider(a, b));
    f(r.raw(), a.raw(), b.raw(), kRound);
    return r;
}

template <class F>
MPFloat with_double(const MPFloat& a, double b, F&& f) {
    MPFloat r = MPFloat::uninitialized(a.precision());
    f(r.raw(), a.raw(), b, kRound);
    return r;
}

}  // namespace

MPFloat::MPFloat(double value, Precision p) {
    check_bits(p);
    mpfr_init2(v_, p.bits());
    live_ = true;
    mpfr_set_d(v_, value, kRound);
}

MPFloat::MPFloat(const MPFloat& other) {
    if (other.live_) {
        mpfr_init2(v_, mpfr_get_prec(other.v_));
        live_ = true;
        mpfr_set(v_, other.v_, kRound);
    }
}

MPFloat::MPFloat(MPFloat&& other) noexcept {
    if (other.live_) {
        v_[0] = other.v_[0];
        live_ = true;
        other.live_ = false;
    }
}

MPFloat& MPFloat::operator=(const MPFloat& other) {
    if (this == &other) return *this;
    if (!other.live_) {
        MPFloat empty;
        swap(*this, empty);
        return *this;
    }
    if (live_ && mpfr_get_prec(v_) == mpfr_get_prec(other.v_)) {
        mpfr_set(v_, other.v_, kRound);
    } else {
        MPFloat copy(other);
        swap(*this, copy);
    }
    return *this;
}

MPFloat& MPFloat::operator=(MPFloat&& other) noexcept {
    MPFloat tmp(std::move(other));
    swap(*this, tmp);
    return *this;
}

MPFloat::~MPFloat() {
    if (live_) mpfr_clear(v_);
}

void swap(MPFloat& a, MPFloat& b) noexcept {
    std::swap(a.v_[0], b.v_[0]);
    std::swap(a.live_, b.live_);
}

MPFloat MPFloat::uninitialized(Precision p) {
    check_bits(p);
    MPFloat r;
    mpfr_init2(r.v_, p.bits());
    r.live_ = true;
    return r;
}

MPFloat MPFloat::parse(std::string_view text, Precision p) {
    if (!is_decimal_numeral(text)) {
        throw ParseError("not a decimal numeral: '" + std::string(text) + "'");
    }
    MPFloat r = uninitialized(p);
    std::string s(text);
    if (mpfr_set_str(r.v_, s.c_str(), 10, kRound) != 0) {
        throw ParseError("not a decimal numeral: '" + s + "'");
    }
    return r;
}

MPFloat MPFloat::infinity(int sign, Precision p) {
    MPFloat r = uninitialized(p);
    mpfr_set_inf(r.v_, sign < 0 ? -1 : 1);
    return r;
}

MPFloat MPFloat::nan(Precision p) {
    MPFloat r = uninitialized(p);
    mpfr_set_nan(r.v_);
    return r;
}

mpfr_srcptr MPFloat::raw() const {
    if (!live_) throw std::logic_error("use of an empty MPFloat");
    return v_;
}

mpfr_ptr MPFloat::raw() {
    if (!live_) throw std::logic_error("use of an empty MPFloat");
    return v_;
}

Precision MPFloat::precision() const {
    return Precision(static_cast<int>(mpfr_get_prec(raw())));
}

double MPFloat::to_native() const { return mpfr_get_d(raw(), kRound); }

long MPFloat::trunc_to_long() const { return mpfr_get_si(raw(), MPFR_RNDZ); }

MPFloat MPFloat::rounded(Precision p) const {
    MPFloat r = uninitialized(p);
    mpfr_set(r.v_, raw(), kRound);
    return r;
}

std::string MPFloat::to_string(int digits) const {
    char* buf = nullptr;
    mpfr_asprintf(&buf, "%.*Rg", digits, raw());
    std::string out(buf);
    mpfr_free_str(buf);
    return out;
}

MPFloat& MPFloat::operator+=(const MPFloat& rhs) { return *this = *this + rhs; }
MPFloat& MPFloat::operator-=(const MPFloat& rhs) { return *this = *this - rhs; }
MPFloat& MPFloat::operator*=(const MPFloat& rhs) { return *this = *this * rhs; }
MPFloat& MPFloat::operator/=(const MPFloat& rhs) { return *this = *this / rhs; }

MPFloat& MPFloat::operator+=(double rhs) {
    mpfr_add_d(raw(), raw(), rhs, kRound);
    return *this;
}
MPFloat& MPFloat::operator-=(double rhs) {
    mpfr_sub_d(raw(), raw(), rhs, kRound);
    return *this;
}
MPFloat& MPFloat::operator*=(double rhs) {
    mpfr_mul_d(raw(), raw(), rhs, kRound);
    return *this;
}
MPFloat& MPFloat::operator/=(double rhs) {
    mpfr_div_d(raw(), raw(), rhs, kRound);
    return *this;
}

MPFloat operator-(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_neg)); }
MPFloat operator+(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_add)); }
MPFloat operator-(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_sub)); }
MPFloat operator*(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_mul)); }
MPFloat operator/(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_div)); }
MPFloat operator+(const MPFloat& a, double b) { return with_double(a, b, MPNUM_FND(mpfr_add_d)); }
MPFloat operator-(const MPFloat& a, double b) { return with_double(a, b, MPNUM_FND(mpfr_sub_d)); }
MPFloat operator*(const MPFloat& a, double b) { return with_double(a, b, MPNUM_FND(mpfr_mul_d)); }
MPFloat operator/(const MPFloat& a, double b) { return with_double(a, b, MPNUM_FND(mpfr_div_d)); }
MPFloat operator+(double a, const MPFloat& b) { return with_double(b, a, MPNUM_FND(mpfr_add_d)); }
MPFloat operator*(double a, const MPFloat& b) { return with_double(b, a, MPNUM_FND(mpfr_mul_d)); }

MPFloat operator-(double a, const MPFloat& b) {
    MPFloat r = MPFloat::uninitialized(b.precision());
    mpfr_d_sub(r.raw(), a, b.raw(), kRound);
    return r;
}

MPFloat operator/(double a, const MPFloat& b) {
    MPFloat r = MPFloat::uninitialized(b.precision());
    mpfr_d_div(r.raw(), a, b.raw(), kRound);
    return r;
}

bool operator==(const MPFloat& a, const MPFloat& b) {
    return mpfr_equal_p(a.raw(), b.raw()) != 0;
}

std::partial_ordering operator<=>(const MPFloat& a, const MPFloat& b) {
    if (mpfr_unordered_p(a.raw(), b.raw())) return std::partial_ordering::unordered;
    int c = mpfr_cmp(a.raw(), b.raw());
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

bool operator==(const MPFloat& a, double b) {
    return (a <=> b) == std::partial_ordering::equivalent;
}

std::partial_ordering operator<=>(const MPFloat& a, double b) {
    if (a.is_nan() || b != b) return std::partial_ordering::unordered;
    int c = mpfr_cmp_d(a.raw(), b);
    return c < 0 ? std::partial_ordering::less
                 : (c > 0 ? std::partial_ordering::greater : std::partial_ordering::equivalent);
}

bool identical(const MPFloat& a, const MPFloat& b) {
    if (a.precision() != b.precision()) return false;
    if (a.is_nan() || b.is_nan()) return a.is_nan() && b.is_nan();
    return a.signbit() == b.signbit() && a == b;
}

MPFloat sqrt(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_sqrt)); }
MPFloat exp(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_exp)); }
MPFloat log(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_log)); }
MPFloat log10(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_log10)); }
MPFloat sin(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_sin)); }
MPFloat cos(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_cos)); }
MPFloat abs(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_abs)); }
MPFloat fabs(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_abs)); }
MPFloat floor(const MPFloat& a) { return unary(a, MPNUM_FN1(mpfr_rint_floor)); }
MPFloat pow(const MPFloat& base, const MPFloat& exponent) { return binary(base, exponent, MPNUM_FN2(mpfr_pow)); }
MPFloat atan2(const MPFloat& y, const MPFloat& x) { return binary(y, x, MPNUM_FN2(mpfr_atan2)); }
MPFloat min(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_min)); }
MPFloat max(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_max)); }
MPFloat hypot(const MPFloat& a, const MPFloat& b) { return binary(a, b, MPNUM_FN2(mpfr_hypot)); }

MPFloat pow(const MPFloat& base, double exponent) {
    // A double is exact at 53 bits.
    MPFloat e(exponent, Precision(53));
    MPFloat r = MPFloat::uninitialized(base.precision());
    mpfr_pow(r.raw(), base.raw(), e.raw(), kRound);
    return r;
}

MPFloat arith(ArithOp op, const MPFloat& a, const MPFloat& b, Precision p) {
    MPFloat r = MPFloat::uninitialized(p);
    switch (op) {
        case ArithOp::add: mpfr_add(r.raw(), a.raw(), b.raw(), kRound); break;
        case ArithOp::sub: mpfr_sub(r.raw(), a.raw(), b.raw(), kRound); break;
        case ArithOp::mul: mpfr_mul(r.raw(), a.raw(), b.raw(), kRound); break;
        case ArithOp::div: mpfr_div(r.raw(), a.raw(), b.raw(), kRound); break;
    }
    return r;
}

ElemResult elem(ElemFn fn, std::span<const MPFloat> args, Precision p) {
    const bool binary_fn =
        fn == ElemFn::pow || fn == ElemFn::atan2 || fn == ElemFn::min || fn == ElemFn::max;
    const std::size_t arity = binary_fn ? 2 : 1;
    if (args.size() != arity) {
        throw std::invalid_argument("elem: expected " + std::to_string(arity) + " argument(s), got " +
                                    std::to_string(args.size()));
    }
    MPFloat r = MPFloat::uninitialized(p);
    mpfr_ptr out = r.raw();
    mpfr_srcptr x = args[0].raw();
    mpfr_srcptr y = binary_fn ? args[1].raw() : nullptr;
    switch (fn) {
        case ElemFn::sqrt: mpfr_sqrt(out, x, kRound); break;
        case ElemFn::exp: mpfr_exp(out, x, kRound); break;
        case ElemFn::ln: mpfr_log(out, x, kRound); break;
        case ElemFn::log10: mpfr_log10(out, x, kRound); break;
        case ElemFn::pow: mpfr_pow(out, x, y, kRound); break;
        case ElemFn::sin: mpfr_sin(out, x, kRound); break;
        case ElemFn::cos: mpfr_cos(out, x, kRound); break;
        case ElemFn::atan2: mpfr_atan2(out, x, y, kRound); break;
        case ElemFn::abs: mpfr_abs(out, x, kRound); break;
        case ElemFn::floor: mpfr_rint_floor(out, x, kRound); break;
        case ElemFn::min: mpfr_min(out, x, y, kRound); break;
        case ElemFn::max: mpfr_max(out, x, y, kRound); break;
    }
    bool nan_in = false;
    for (const MPFloat& a : args) nan_in = nan_in || a.is_nan();
    const bool domain_error = r.is_nan() && !nan_in;
    return ElemResult{std::move(r), domain_error};
}

void release_thread_caches() { mpfr_free_cache(); }

}  // namespace itmstab::mpnum
