#pragma once

#include <Eigen/Core>

#include <cmath>
#include <iosfwd>

namespace lmr {

// First-order dual number a + eps*b with eps^2 = 0. Plugs into Eigen as a
// custom scalar; used to cross-check the hand-derived energy gradient.
struct Dual {
    double a = 0.0;  // value
    double b = 0.0;  // tangent

    Dual() = default;
    Dual(double value) : a(value) {}  // NOLINT: implicit by design
    Dual(double value, double tangent) : a(value), b(tangent) {}

    Dual& operator+=(const Dual& o) { a += o.a; b += o.b; return *this; }
    Dual& operator-=(const Dual& o) { a -= o.a; b -= o.b; return *this; }
    Dual& operator*=(const Dual& o) { b = b * o.a + a * o.b; a *= o.a; return *this; }
    Dual& operator/=(const Dual& o) { b = (b * o.a - a * o.b) / (o.a * o.a); a /= o.a; return *this; }
};

inline Dual operator+(Dual x, const Dual& y) { return x += y; }
inline Dual operator-(Dual x, const Dual& y) { return x -= y; }
inline Dual operator*(Dual x, const Dual& y) { return x *= y; }
inline Dual operator/(Dual x, const Dual& y) { return x /= y; }
inline Dual operator-(const Dual& x) { return Dual(-x.a, -x.b); }
inline Dual operator+(const Dual& x) { return x; }

inline bool operator==(const Dual& x, const Dual& y) { return x.a == y.a; }
inline bool operator!=(const Dual& x, const Dual& y) { return x.a != y.a; }
inline bool operator<(const Dual& x, const Dual& y) { return x.a < y.a; }
inline bool operator>(const Dual& x, const Dual& y) { return x.a > y.a; }
inline bool operator<=(const Dual& x, const Dual& y) { return x.a <= y.a; }
inline bool operator>=(const Dual& x, const Dual& y) { return x.a >= y.a; }

inline Dual abs(const Dual& x) { return x.a < 0.0 ? -x : x; }
inline Dual sqrt(const Dual& x) {
    double s = std::sqrt(x.a);
    return Dual(s, 0.5 * x.b / s);
}
inline Dual exp(const Dual& x) {
    double e = std::exp(x.a);
    return Dual(e, x.b * e);
}
inline Dual log(const Dual& x) { return Dual(std::log(x.a), x.b / x.a); }
inline double value_of(const Dual& x) { return x.a; }
inline double value_of(double x) { return x; }

template <typename Scalar>
Scalar scalar_cast(double v) { return Scalar(v); }

inline std::ostream& operator<<(std::ostream& os, const Dual& x);

}  // namespace lmr

namespace Eigen {
template <>
struct NumTraits<lmr::Dual> : NumTraits<double> {
    typedef lmr::Dual Real;
    typedef lmr::Dual NonInteger;
    typedef lmr::Dual Nested;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 2,
        AddCost = 4,
        MulCost = 8,
    };
};
}  // namespace Eigen
