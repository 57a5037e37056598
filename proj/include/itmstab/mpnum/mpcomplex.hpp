#pragma once

#include <variant>

#include "itmstab/mpnum/mpfloat.hpp"

namespace itmstab::mpnum {

/// Complex value whose two components share one significand width.
///
/// Addition and subtraction are correctly rounded per component. Products
/// are correctly rounded per component (fused a*b +- c*d). Quotients and
/// square roots are evaluated at a guard width and rounded once, which keeps
/// each component within one ulp.
class MPComplex {
public:
    MPComplex() = default;
    /// Throws std::invalid_argument when the component widths differ.
    MPComplex(MPFloat re, MPFloat im);
    MPComplex(double re, double im, Precision p);

    const MPFloat& real() const { return re_; }
    const MPFloat& imag() const { return im_; }
    Precision precision() const { return re_.precision(); }

private:
    MPFloat re_;
    MPFloat im_;
};

MPComplex operator-(const MPComplex& a);
MPComplex operator+(const MPComplex& a, const MPComplex& b);
MPComplex operator-(const MPComplex& a, const MPComplex& b);
MPComplex operator*(const MPComplex& a, const MPComplex& b);
MPComplex operator/(const MPComplex& a, const MPComplex& b);

// Mixed forms treat the real operand as having a zero imaginary part.
MPComplex operator+(const MPComplex& a, const MPFloat& b);
MPComplex operator-(const MPComplex& a, const MPFloat& b);
MPComplex operator*(const MPComplex& a, const MPFloat& b);
MPComplex operator/(const MPComplex& a, const MPFloat& b);
MPComplex operator+(const MPFloat& a, const MPComplex& b);
MPComplex operator-(const MPFloat& a, const MPComplex& b);
MPComplex operator*(const MPFloat& a, const MPComplex& b);
MPComplex operator/(const MPFloat& a, const MPComplex& b);
MPComplex operator+(const MPComplex& a, double b);
MPComplex operator-(const MPComplex& a, double b);
MPComplex operator*(const MPComplex& a, double b);
MPComplex operator/(const MPComplex& a, double b);

/// Magnitude, correctly rounded.
MPFloat abs(const MPComplex& z);
/// Principal square root (branch cut on the negative real axis).
MPComplex sqrt(const MPComplex& z);

enum class ComplexOp { add, mul, div, abs, sqrt };

using ComplexResult = std::variant<MPComplex, MPFloat>;

/// Operation-table entry point. Binary ops require `b`; abs yields an MPFloat.
ComplexResult cplx(ComplexOp op, const MPComplex& a, const MPComplex* b = nullptr);

}  // namespace itmstab::mpnum
