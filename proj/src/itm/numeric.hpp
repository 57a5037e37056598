#pragma once

// Numeric policy shared by the double and MPFloat instantiations of the
// model. Generic code spells every operation the same way for both; constants
// that have to become variables go through Num<Real>::operator().

#include <cmath>
#include <complex>
#include <type_traits>

#include "itmstab/mpnum/mpcomplex.hpp"
#include "itmstab/mpnum/mpfloat.hpp"

namespace itmstab::itm::detail {

using mpnum::MPComplex;
using mpnum::MPFloat;
using mpnum::Precision;
using mpnum::to_native;
using mpnum::trunc_to_long;

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::log10;
using std::pow;
using std::sin;
using std::sqrt;

inline double to_native(double x) { return x; }
inline long trunc_to_long(double x) { return static_cast<long>(x); }

template <class Real>
struct Num;

template <>
struct Num<double> {
    using Complex = std::complex<double>;
    explicit Num(Precision) {}
    double operator()(double v) const { return v; }
    Complex complex(double re, double im) const { return {re, im}; }
    static double from_store(const MPFloat& v) { return v.to_native(); }
    static MPFloat to_store(double v) { return MPFloat(v, Precision(53)); }
};

template <>
struct Num<MPFloat> {
    using Complex = MPComplex;
    explicit Num(Precision p) : p(p) {}
    MPFloat operator()(double v) const { return MPFloat(v, p); }
    Complex complex(const MPFloat& re, const MPFloat& im) const { return MPComplex(re, im); }
    MPFloat from_store(const MPFloat& v) const { return v.rounded(p); }
    static MPFloat to_store(const MPFloat& v) { return v; }
    Precision p;
};

inline double like(double, double v) { return v; }

inline MPFloat like(const MPFloat& ref, double v) { return MPFloat(v, ref.precision()); }

// The reference implementation's min/max: `a < b ? a : b`, so a NaN in the
// comparison selects the second operand.
template <class Real>
Real min_of(const Real& a, const Real& b) {
    return a < b ? a : b;
}
template <class Real>
Real max_of(const Real& a, const Real& b) {
    return a > b ? a : b;
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real min_of(double a, const Real& b) {
    return a < b ? like(b, a) : b;
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real min_of(const Real& a, double b) {
    return a < b ? a : like(a, b);
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real max_of(double a, const Real& b) {
    return a > b ? like(b, a) : b;
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real max_of(const Real& a, double b) {
    return a > b ? a : like(a, b);
}

/// x - y when x > y, otherwise zero (Fortran DIM).
template <class Real>
Real dim(const Real& x, const Real& y) {
    return x > y ? Real(x - y) : like(x, 0.0);
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real dim(const Real& x, double y) {
    return x > y ? Real(x - y) : like(x, 0.0);
}
template <class Real>
    requires(!std::is_same_v<Real, double>)
Real dim(double x, const Real& y) {
    return x > y ? Real(x - y) : like(y, 0.0);
}

}  // namespace itmstab::itm::detail
