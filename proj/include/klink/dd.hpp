#pragma once

// Double-double arithmetic: an unevaluated sum of two doubles giving
// roughly 32 significant decimal digits.  The error-free transformations
// follow the classical Dekker/Knuth/Bailey (QD library) algorithms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <iosfwd>
#include <ostream>

namespace klink {

namespace detail {

inline double two_sum(double a, double b, double& err) {
    double s = a + b;
    double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
    return s;
}

// requires |a| >= |b|
inline double quick_two_sum(double a, double b, double& err) {
    double s = a + b;
    err = b - (s - a);
    return s;
}

inline double two_prod(double a, double b, double& err) {
    double p = a * b;
    err = std::fma(a, b, -p);
    return p;
}

} // namespace detail

struct DdReal {
    double hi = 0.0;
    double lo = 0.0;

    constexpr DdReal() = default;
    constexpr DdReal(double h) : hi(h), lo(0.0) {}
    constexpr DdReal(double h, double l) : hi(h), lo(l) {}
    constexpr DdReal(int v) : hi(v), lo(0.0) {}

    explicit operator double() const { return hi; }
};

inline double to_double(const DdReal& a) { return a.hi + a.lo; }
inline double to_double(double a) { return a; }

inline DdReal operator-(const DdReal& a) { return {-a.hi, -a.lo}; }

inline DdReal operator+(const DdReal& a, const DdReal& b) {
    using namespace detail;
    double e1, e2;
    double s = two_sum(a.hi, b.hi, e1);
    double t = two_sum(a.lo, b.lo, e2);
    e1 += t;
    s = quick_two_sum(s, e1, e1);
    e1 += e2;
    s = quick_two_sum(s, e1, e1);
    return {s, e1};
}

inline DdReal operator-(const DdReal& a, const DdReal& b) { return a + (-b); }

inline DdReal operator*(const DdReal& a, const DdReal& b) {
    using namespace detail;
    double e;
    double p = two_prod(a.hi, b.hi, e);
    e += a.hi * b.lo + a.lo * b.hi;
    p = quick_two_sum(p, e, e);
    return {p, e};
}

inline DdReal operator/(const DdReal& a, const DdReal& b) {
    using namespace detail;
    double q1 = a.hi / b.hi;
    DdReal r = a - b * DdReal(q1);
    double q2 = r.hi / b.hi;
    r = r - b * DdReal(q2);
    double q3 = r.hi / b.hi;
    double e;
    double s = quick_two_sum(q1, q2, e);
    DdReal q = DdReal(s, e) + DdReal(q3);
    return q;
}

inline DdReal& operator+=(DdReal& a, const DdReal& b) { a = a + b; return a; }
inline DdReal& operator-=(DdReal& a, const DdReal& b) { a = a - b; return a; }
inline DdReal& operator*=(DdReal& a, const DdReal& b) { a = a * b; return a; }
inline DdReal& operator/=(DdReal& a, const DdReal& b) { a = a / b; return a; }

inline bool operator==(const DdReal& a, const DdReal& b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(const DdReal& a, const DdReal& b) { return !(a == b); }
inline bool operator<(const DdReal& a, const DdReal& b) {
    return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(const DdReal& a, const DdReal& b) { return b < a; }
inline bool operator<=(const DdReal& a, const DdReal& b) { return !(b < a); }
inline bool operator>=(const DdReal& a, const DdReal& b) { return !(a < b); }

inline DdReal abs(const DdReal& a) { return a.hi < 0.0 ? -a : a; }

inline DdReal sqrt(const DdReal& a) {
    // Karp's trick: one Newton step on 1/sqrt applied in double-double.
    if (a.hi == 0.0 && a.lo == 0.0) return DdReal(0.0);
    double x = 1.0 / std::sqrt(a.hi);
    double ax = a.hi * x;
    DdReal err = a - DdReal(ax) * DdReal(ax);
    return DdReal(ax) + DdReal(err.hi * (x * 0.5));
}

inline DdReal pow_int(DdReal base, int n) {
    if (n < 0) return DdReal(1.0) / pow_int(base, -n);
    DdReal r(1.0);
    while (n > 0) {
        if (n & 1) r *= base;
        base *= base;
        n >>= 1;
    }
    return r;
}

inline bool isfinite(const DdReal& a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }
inline bool isfinite(double a) { return std::isfinite(a); }

inline std::ostream& operator<<(std::ostream& os, const DdReal& a) {
    return os << to_double(a);
}

// sqrt/abs/pow_int overloads so numeric kernels can be instantiated
// with plain double as the working precision.
inline double pow_int(double base, int n) {
    double r = std::pow(base, std::abs(n));
    return n < 0 ? 1.0 / r : r;
}

// Traits shared by the precision-templated kernels.
template <class R> struct num_traits;

template <> struct num_traits<double> {
    static constexpr double eps = 2.22e-16;
    static double from_double(double x) { return x; }
};

template <> struct num_traits<DdReal> {
    static constexpr double eps = 4.93e-32; // 2^-104
    static DdReal from_double(double x) { return DdReal(x); }
};

} // namespace klink
