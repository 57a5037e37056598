#include "itmstab/mpnum/mpcomplex.hpp"

#include <utility>

namespace itmstab::mpnum {
namespace {

constexpr mpfr_rnd_t kRound = MPFR_RNDN;
// Extra bits carried through multi-step evaluations before the final rounding.
constexpr int kGuardBits = 16;

MPComplex promote(const MPFloat& x, Precision p) {
    return MPComplex(x.rounded(p), MPFloat(0.0, p));
}

MPComplex promote(double x, Precision p) { return MPComplex(x, 0.0, p); }

Precision same_width(const MPComplex& a, const MPComplex& b) {
    if (a.precision() != b.precision()) {
        throw std::invalid_argument("complex operands have different precisions");
    }
    return a.precision();
}

}  // namespace

MPComplex::MPComplex(MPFloat re, MPFloat im) : re_(std::move(re)), im_(std::move(im)) {
    if (re_.precision() != im_.precision()) {
        throw std::invalid_argument("complex components have different precisions");
    }
}

MPComplex::MPComplex(double re, double im, Precision p) : re_(re, p), im_(im, p) {}

MPComplex operator-(const MPComplex& a) { return MPComplex(-a.real(), -a.imag()); }

MPComplex operator+(const MPComplex& a, const MPComplex& b) {
    same_width(a, b);
    return MPComplex(a.real() + b.real(), a.imag() + b.imag());
}

MPComplex operator-(const MPComplex& a, const MPComplex& b) {
    same_width(a, b);
    return MPComplex(a.real() - b.real(), a.imag() - b.imag());
}

MPComplex operator*(const MPComplex& a, const MPComplex& b) {
    const Precision p = same_width(a, b);
    MPFloat re = MPFloat::uninitialized(p);
    MPFloat im = MPFloat::uninitialized(p);
    mpfr_fmms(re.raw(), a.real().raw(), b.real().raw(), a.imag().raw(), b.imag().raw(), kRound);
    mpfr_fmma(im.raw(), a.real().raw(), b.imag().raw(), a.imag().raw(), b.real().raw(), kRound);
    return MPComplex(std::move(re), std::move(im));
}

MPComplex operator/(const MPComplex& a, const MPComplex& b) {
    const Precision p = same_width(a, b);
    const Precision w(p.bits() + kGuardBits);
    MPFloat num_re = MPFloat::uninitialized(w);
    MPFloat num_im = MPFloat::uninitialized(w);
    MPFloat den = MPFloat::uninitialized(w);
    const MPFloat& ar = a.real();
    const MPFloat& ai = a.imag();
    const MPFloat& br = b.real();
    const MPFloat& bi = b.imag();
    mpfr_fmma(num_re.raw(), ar.raw(), br.raw(), ai.raw(), bi.raw(), kRound);
    mpfr_fmms(num_im.raw(), ai.raw(), br.raw(), ar.raw(), bi.raw(), kRound);
    mpfr_fmma(den.raw(), br.raw(), br.raw(), bi.raw(), bi.raw(), kRound);
    MPFloat re = MPFloat::uninitialized(p);
    MPFloat im = MPFloat::uninitialized(p);
    mpfr_div(re.raw(), num_re.raw(), den.raw(), kRound);
    mpfr_div(im.raw(), num_im.raw(), den.raw(), kRound);
    return MPComplex(std::move(re), std::move(im));
}

MPComplex operator+(const MPComplex& a, const MPFloat& b) { return a + promote(b, a.precision()); }
MPComplex operator-(const MPComplex& a, const MPFloat& b) { return a - promote(b, a.precision()); }
MPComplex operator*(const MPComplex& a, const MPFloat& b) { return a * promote(b, a.precision()); }
MPComplex operator/(const MPComplex& a, const MPFloat& b) { return a / promote(b, a.precision()); }
MPComplex operator+(const MPFloat& a, const MPComplex& b) { return promote(a, b.precision()) + b; }
MPComplex operator-(const MPFloat& a, const MPComplex& b) { return promote(a, b.precision()) - b; }
MPComplex operator*(const MPFloat& a, const MPComplex& b) { return promote(a, b.precision()) * b; }
MPComplex operator/(const MPFloat& a, const MPComplex& b) { return promote(a, b.precision()) / b; }
MPComplex operator+(const MPComplex& a, double b) { return a + promote(b, a.precision()); }
MPComplex operator-(const MPComplex& a, double b) { return a - promote(b, a.precision()); }
MPComplex operator*(const MPComplex& a, double b) { return a * promote(b, a.precision()); }
MPComplex operator/(const MPComplex& a, double b) { return a / promote(b, a.precision()); }

MPFloat abs(const MPComplex& z) { return hypot(z.real(), z.imag()); }

MPComplex sqrt(const MPComplex& z) {
    const Precision p = z.precision();
    const MPFloat& a = z.real();
    const MPFloat& b = z.imag();
    if (a.is_zero() && b.is_zero()) return MPComplex(MPFloat(0.0, p), b);
    if (b.is_inf()) return MPComplex(MPFloat::infinity(1, p), b);

    const Precision w(p.bits() + kGuardBits);
    MPFloat m = MPFloat::uninitialized(w);
    mpfr_hypot(m.raw(), a.raw(), b.raw(), kRound);
    // t = sqrt((|z| + |a|) / 2), then the other component is |b| / (2t).
    MPFloat t = MPFloat::uninitialized(w);
    if (a.signbit()) {
        mpfr_sub(t.raw(), m.raw(), a.raw(), kRound);
    } else {
        mpfr_add(t.raw(), m.raw(), a.raw(), kRound);
    }
    mpfr_div_2ui(t.raw(), t.raw(), 1, kRound);
    mpfr_sqrt(t.raw(), t.raw(), kRound);
    MPFloat other = MPFloat::uninitialized(w);
    mpfr_div(other.raw(), b.raw(), t.raw(), kRound);
    mpfr_div_2ui(other.raw(), other.raw(), 1, kRound);

    MPFloat re = MPFloat::uninitialized(p);
    MPFloat im = MPFloat::uninitialized(p);
    if (!a.signbit()) {
        mpfr_set(re.raw(), t.raw(), kRound);
        mpfr_set(im.raw(), other.raw(), kRound);
    } else {
        mpfr_abs(re.raw(), other.raw(), kRound);
        mpfr_copysign(im.raw(), t.raw(), b.raw(), kRound);
    }
    return MPComplex(std::move(re), std::move(im));
}

ComplexResult cplx(ComplexOp op, const MPComplex& a, const MPComplex* b) {
    auto need_b = [&]() -> const MPComplex& {
        if (b == nullptr) throw std::invalid_argument("complex operation needs two operands");
        return *b;
    };
    switch (op) {
        case ComplexOp::add: return a + need_b();
        case ComplexOp::mul: return a * need_b();
        case ComplexOp::div: return a / need_b();
        case ComplexOp::abs: return abs(a);
        case ComplexOp::sqrt: return sqrt(a);
    }
    throw std::invalid_argument("unknown complex operation");
}

}  // namespace itmstab::mpnum
