#pragma once

// Precision-templated polynomial kernels: complex arithmetic, univariate and
// bivariate polynomials, radix-2 DFT/IDFT at roots of unity, dense LU
// determinants and the Aberth-Ehrlich simultaneous root finder.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "klink/dd.hpp"

namespace klink {

template <class R>
struct Cx {
    R re{}, im{};
    Cx() = default;
    Cx(R r) : re(r) {}
    Cx(R r, R i) : re(r), im(i) {}
};

template <class R> Cx<R> operator+(const Cx<R>& a, const Cx<R>& b) { return {a.re + b.re, a.im + b.im}; }
template <class R> Cx<R> operator-(const Cx<R>& a, const Cx<R>& b) { return {a.re - b.re, a.im - b.im}; }
template <class R> Cx<R> operator-(const Cx<R>& a) { return {-a.re, -a.im}; }
template <class R> Cx<R> operator*(const Cx<R>& a, const Cx<R>& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class R> Cx<R> operator*(const R& s, const Cx<R>& a) { return {s * a.re, s * a.im}; }
template <class R> Cx<R> conj(const Cx<R>& a) { return {a.re, -a.im}; }
template <class R> R norm2(const Cx<R>& a) { return a.re * a.re + a.im * a.im; }
template <class R> R abs(const Cx<R>& a) { using std::sqrt; return sqrt(norm2(a)); }
template <class R> Cx<R> operator/(const Cx<R>& a, const Cx<R>& b) {
    R d = norm2(b);
    return {(a.re * b.re + a.im * b.im) / d, (a.im * b.re - a.re * b.im) / d};
}
template <class R> Cx<R>& operator+=(Cx<R>& a, const Cx<R>& b) { a = a + b; return a; }
template <class R> Cx<R>& operator-=(Cx<R>& a, const Cx<R>& b) { a = a - b; return a; }
template <class R> Cx<R>& operator*=(Cx<R>& a, const Cx<R>& b) { a = a * b; return a; }

// principal square root
template <class R> Cx<R> sqrt(const Cx<R>& z) {
    using std::sqrt;
    R m = abs(z);
    if (to_double(m) == 0.0) return Cx<R>(R(0.0));
    R half(0.5);
    // avoid cancellation: compute the larger of u, v directly, the other
    // from u v = |im| / 2
    if (to_double(z.re) >= 0.0) {
        R u = sqrt((m + z.re) * half);
        R v = abs(z.im) * half / u;
        if (to_double(z.im) < 0.0) v = -v;
        return {u, v};
    }
    R v = sqrt((m - z.re) * half);
    R u = abs(z.im) * half / v;
    if (to_double(z.im) < 0.0) v = -v;
    return {u, v};
}

template <class R>
Cx<double> to_cx_double(const Cx<R>& z) { return {to_double(z.re), to_double(z.im)}; }

// ---------------------------------------------------------------------------
// roots of unity
//
// Exact-to-working-precision primitive roots obtained by repeated complex
// square roots starting from i = e^{i pi/2}; avoids needing sin/cos in
// extended precision.
template <class R>
std::vector<Cx<R>> roots_of_unity(int n) {
    if (n < 1 || (n & (n - 1)) != 0)
        throw std::invalid_argument("roots_of_unity: n must be a power of two");
    Cx<R> w(R(1.0));
    if (n == 2) w = Cx<R>(R(-1.0));
    if (n >= 4) {
        w = Cx<R>(R(0.0), R(1.0)); // 4th root
        for (int m = 4; m < n; m *= 2) w = sqrt(w);
    }
    std::vector<Cx<R>> out(n);
    out[0] = Cx<R>(R(1.0));
    for (int k = 1; k < n; ++k) out[k] = out[k - 1] * w;
    return out;
}

// in-place radix-2 FFT over values; sign=+1 forward (evaluation at w^k)
template <class R>
void fft_pow2(std::vector<Cx<R>>& a, int sign) {
    const int n = static_cast<int>(a.size());
    if (n < 2) return;
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    auto w_all = roots_of_unity<R>(n);
    for (int len = 2; len <= n; len <<= 1) {
        int step = n / len;
        for (int i = 0; i < n; i += len) {
            for (int j = 0; j < len / 2; ++j) {
                Cx<R> w = w_all[static_cast<size_t>(j) * step];
                if (sign < 0) w = conj(w);
                Cx<R> u = a[i + j];
                Cx<R> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// univariate polynomial with complex coefficients, coeffs[j] multiplies x^j

template <class R>
struct UnivariatePoly {
    std::vector<Cx<R>> coeffs;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }

    Cx<R> eval(const Cx<R>& x) const {
        Cx<R> acc(R(0.0));
        for (int j = degree(); j >= 0; --j) acc = acc * x + coeffs[j];
        return acc;
    }

    UnivariatePoly derivative() const {
        UnivariatePoly d;
        for (int j = 1; j <= degree(); ++j)
            d.coeffs.push_back(R(static_cast<double>(j)) * coeffs[j]);
        return d;
    }

    double max_coeff_mag() const {
        double m = 0.0;
        for (auto& c : coeffs) m = std::max(m, std::abs(to_double(abs(c))));
        return m;
    }

    // drop near-zero leading coefficients (relative threshold)
    void trim(double rel_tol) {
        double m = max_coeff_mag();
        while (coeffs.size() > 1 &&
               to_double(abs(coeffs.back())) <= rel_tol * m)
            coeffs.pop_back();
    }
};

// Evaluate at the n-th roots of unity via DFT; degree must be < n.
template <class R>
std::vector<Cx<R>> dft_evaluate(const UnivariatePoly<R>& p, int n) {
    if (p.degree() >= n)
        throw std::invalid_argument("dft_evaluate: degree must be < n");
    std::vector<Cx<R>> v(n, Cx<R>(R(0.0)));
    for (size_t j = 0; j < p.coeffs.size(); ++j) v[j] = p.coeffs[j];
    fft_pow2(v, +1);
    return v;
}

// Unique interpolating polynomial of degree < n from values at the n-th
// roots of unity.
template <class R>
UnivariatePoly<R> idft_interpolate(std::vector<Cx<R>> values) {
    const int n = static_cast<int>(values.size());
    fft_pow2(values, -1);
    R inv_n(1.0 / static_cast<double>(n));
    UnivariatePoly<R> p;
    p.coeffs.resize(n);
    for (int j = 0; j < n; ++j) p.coeffs[j] = inv_n * values[j];
    return p;
}

// ---------------------------------------------------------------------------
// dense LU determinant with partial pivoting; also reports pivot growth

template <class R>
struct DetResult {
    Cx<R> det;
    double pivot_growth = 0.0;
};

template <class R>
DetResult<R> lu_determinant(std::vector<Cx<R>> m, int n) {
    Cx<R> det(R(1.0));
    double max0 = 0.0, maxp = 0.0;
    for (int i = 0; i < n * n; ++i) max0 = std::max(max0, to_double(abs(m[i])));
    auto at = [&](int r, int c) -> Cx<R>& { return m[r * n + c]; };
    for (int col = 0; col < n; ++col) {
        int piv = col;
        double best = to_double(norm2(at(col, col)));
        for (int r = col + 1; r < n; ++r) {
            double v = to_double(norm2(at(r, col)));
            if (v > best) { best = v; piv = r; }
        }
        if (best == 0.0) return {Cx<R>(R(0.0)), 0.0};
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(at(piv, c), at(col, c));
            det = -det;
        }
        det *= at(col, col);
        maxp = std::max(maxp, to_double(abs(at(col, col))));
        for (int r = col + 1; r < n; ++r) {
            Cx<R> f = at(r, col) / at(col, col);
            for (int c = col + 1; c < n; ++c) at(r, c) -= f * at(col, c);
        }
    }
    return {det, max0 > 0.0 ? maxp / max0 : 0.0};
}

// ---------------------------------------------------------------------------
// Aberth-Ehrlich simultaneous iteration root finder

template <class R>
struct RootSet {
    std::vector<Cx<R>> roots;
    std::vector<double> error_bounds;
    bool converged = true;
};

namespace detail {

// Initial guesses on circles whose radii come from the upper convex hull of
// (j, log|c_j|) (Bini's starting points).
template <class R>
std::vector<Cx<double>> aberth_start(const UnivariatePoly<R>& p) {
    const int n = p.degree();
    std::vector<double> lg(n + 1);
    for (int j = 0; j <= n; ++j) {
        double a = to_double(abs(p.coeffs[j]));
        lg[j] = a > 0.0 ? std::log(a) : -1e30;
    }
    // upper convex hull indices
    std::vector<int> hull;
    for (int j = 0; j <= n; ++j) {
        while (hull.size() >= 2) {
            int i1 = hull[hull.size() - 2], i2 = hull[hull.size() - 1];
            if ((lg[i2] - lg[i1]) * (j - i2) <= (lg[j] - lg[i2]) * (i2 - i1))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(j);
    }
    std::vector<Cx<double>> z;
    z.reserve(n);
    const double golden = 0.618033988749895;
    int idx = 0;
    for (size_t h = 0; h + 1 < hull.size(); ++h) {
        int j1 = hull[h], j2 = hull[h + 1];
        double r = std::exp((lg[j1] - lg[j2]) / (j2 - j1));
        for (int t = 0; t < j2 - j1; ++t, ++idx) {
            double phase = 2.0 * 3.14159265358979323846 *
                           (static_cast<double>(idx) / n + golden);
            z.push_back({r * std::cos(phase), r * std::sin(phase)});
        }
    }
    while (static_cast<int>(z.size()) < n) z.push_back({1.0, 0.0});
    return z;
}

} // namespace detail

// All complex roots with residual-based error bounds.  Leading and trailing
// near-zero coefficients are trimmed first; trailing ones become exact zero
// roots.
template <class R>
RootSet<R> find_roots(UnivariatePoly<R> p, int max_iter = 400) {
    RootSet<R> out;
    p.trim(num_traits<R>::eps * 64.0);
    // factor out zero roots
    double m = p.max_coeff_mag();
    size_t nz = 0;
    while (nz + 1 < p.coeffs.size() &&
           to_double(abs(p.coeffs[nz])) <= num_traits<R>::eps * 64.0 * m)
        ++nz;
    if (nz > 0) p.coeffs.erase(p.coeffs.begin(), p.coeffs.begin() + nz);
    for (size_t i = 0; i < nz; ++i) {
        out.roots.push_back(Cx<R>(R(0.0)));
        out.error_bounds.push_back(0.0);
    }
    const int n = p.degree();
    if (n < 1) return out;

    UnivariatePoly<R> dp = p.derivative();
    auto zd = detail::aberth_start(p);
    std::vector<Cx<R>> z(n);
    for (int i = 0; i < n; ++i)
        z[i] = Cx<R>(num_traits<R>::from_double(zd[i].re),
                     num_traits<R>::from_double(zd[i].im));
    std::vector<bool> done(n, false);

    // |p| backward-error envelope: s(x) = sum |c_j| |x|^j
    auto backward_env = [&](double ax) {
        double s = 0.0, t = 1.0;
        for (int j = 0; j <= n; ++j) {
            s += to_double(abs(p.coeffs[j])) * t;
            t *= ax;
        }
        return s;
    };

    std::vector<double> last_corr(n, std::numeric_limits<double>::infinity());
    int it = 0;
    for (; it < max_iter; ++it) {
        bool all_done = true;
        for (int i = 0; i < n; ++i) {
            if (done[i]) continue;
            all_done = false;
            Cx<R> pv = p.eval(z[i]);
            double apv = to_double(abs(pv));
            double env = backward_env(to_double(abs(z[i])));
            // at_floor means the computed value is indistinguishable from the
            // evaluation roundoff; that alone must not freeze the iterate,
            // because heavy cancellation can push |p| under the envelope far
            // from any root -- keep stepping until the correction plateaus
            bool at_floor = apv <= 4.0 * num_traits<R>::eps * env * n;
            Cx<R> dv = dp.eval(z[i]);
            Cx<R> w = pv / dv;
            Cx<R> s(R(0.0));
            for (int j = 0; j < n; ++j)
                if (j != i) s += Cx<R>(R(1.0)) / (z[i] - z[j]);
            Cx<R> denom = Cx<R>(R(1.0)) - w * s;
            Cx<R> corr = w / denom;
            double ac = to_double(abs(corr));
            if (!std::isfinite(ac)) {
                // coincident iterates or p' = 0: nudge and retry
                z[i] = z[i] * Cx<R>(num_traits<R>::from_double(1.0),
                                    num_traits<R>::from_double(1e-6));
                last_corr[i] = std::numeric_limits<double>::infinity();
                continue;
            }
            if (at_floor && ac >= 0.5 * last_corr[i]) {
                done[i] = true; // bouncing inside the noise basin
                continue;
            }
            z[i] = z[i] - corr;
            last_corr[i] = ac;
            if (ac <= 2.0 * num_traits<R>::eps * to_double(abs(z[i])))
                done[i] = true;
        }
        if (all_done) break;
    }
    out.converged = (it < max_iter);

    for (int i = 0; i < n; ++i) {
        Cx<R> pv = p.eval(z[i]);
        Cx<R> dv = dp.eval(z[i]);
        double bound;
        double adv = to_double(abs(dv));
        double apv = to_double(abs(pv));
        if (adv > 0.0)
            bound = n * apv / adv;
        else
            bound = std::numeric_limits<double>::infinity();
        out.roots.push_back(z[i]);
        out.error_bounds.push_back(bound);
    }
    return out;
}

// ---------------------------------------------------------------------------
// bivariate polynomial, coeffs(i,j) multiplies x^i y^j

template <class R>
struct BivariatePoly {
    int n1 = 0, n2 = 0; // max exponent in x resp. y
    std::vector<R> c;   // (n1+1)*(n2+1), row-major in i

    BivariatePoly() = default;
    BivariatePoly(int d1, int d2) : n1(d1), n2(d2), c((d1 + 1) * (d2 + 1), R(0.0)) {}

    R& at(int i, int j) { return c[i * (n2 + 1) + j]; }
    const R& at(int i, int j) const { return c[i * (n2 + 1) + j]; }

    R eval(const R& x, const R& y) const {
        // Horner in x of Horner-in-y rows
        R acc(0.0);
        for (int i = n1; i >= 0; --i) {
            R row(0.0);
            for (int j = n2; j >= 0; --j) row = row * y + at(i, j);
            acc = acc * x + row;
        }
        return acc;
    }

    R eval_dx(const R& x, const R& y) const {
        R acc(0.0);
        for (int i = n1; i >= 1; --i) {
            R row(0.0);
            for (int j = n2; j >= 0; --j) row = row * y + at(i, j);
            acc = acc * x + R(static_cast<double>(i)) * row;
        }
        return acc;
    }

    R eval_dy(const R& x, const R& y) const {
        R acc(0.0);
        for (int i = n1; i >= 0; --i) {
            R row(0.0);
            for (int j = n2; j >= 1; --j) row = row * y + R(static_cast<double>(j)) * at(i, j);
            acc = acc * x + row;
        }
        return acc;
    }

    int degree_in_x() const {
        for (int i = n1; i >= 0; --i)
            for (int j = 0; j <= n2; ++j)
                if (to_double(at(i, j)) != 0.0) return i;
        return 0;
    }

    int total_degree(double rel_tol = 0.0) const {
        double m = 0.0;
        for (auto& v : c) m = std::max(m, std::abs(to_double(v)));
        int d = 0;
        for (int i = 0; i <= n1; ++i)
            for (int j = 0; j <= n2; ++j)
                if (std::abs(to_double(at(i, j))) > rel_tol * m) d = std::max(d, i + j);
        return d;
    }

    // degree in y of the coefficient of x^i
    int coeff_degree(int i, double rel_tol = 0.0) const {
        double m = 0.0;
        for (auto& v : c) m = std::max(m, std::abs(to_double(v)));
        for (int j = n2; j >= 0; --j)
            if (std::abs(to_double(at(i, j))) > rel_tol * m) return j;
        return 0;
    }
};

template <class R>
BivariatePoly<R> operator+(const BivariatePoly<R>& a, const BivariatePoly<R>& b) {
    BivariatePoly<R> r(std::max(a.n1, b.n1), std::max(a.n2, b.n2));
    for (int i = 0; i <= a.n1; ++i)
        for (int j = 0; j <= a.n2; ++j) r.at(i, j) += a.at(i, j);
    for (int i = 0; i <= b.n1; ++i)
        for (int j = 0; j <= b.n2; ++j) r.at(i, j) += b.at(i, j);
    return r;
}

template <class R>
BivariatePoly<R> operator-(const BivariatePoly<R>& a, const BivariatePoly<R>& b) {
    BivariatePoly<R> r(std::max(a.n1, b.n1), std::max(a.n2, b.n2));
    for (int i = 0; i <= a.n1; ++i)
        for (int j = 0; j <= a.n2; ++j) r.at(i, j) += a.at(i, j);
    for (int i = 0; i <= b.n1; ++i)
        for (int j = 0; j <= b.n2; ++j) r.at(i, j) -= b.at(i, j);
    return r;
}

template <class R>
BivariatePoly<R> operator*(const BivariatePoly<R>& a, const BivariatePoly<R>& b) {
    BivariatePoly<R> r(a.n1 + b.n1, a.n2 + b.n2);
    for (int i = 0; i <= a.n1; ++i)
        for (int j = 0; j <= a.n2; ++j) {
            if (to_double(a.at(i, j)) == 0.0) continue;
            for (int k = 0; k <= b.n1; ++k)
                for (int l = 0; l <= b.n2; ++l)
                    r.at(i + k, j + l) += a.at(i, j) * b.at(k, l);
        }
    return r;
}

template <class R>
BivariatePoly<R> operator*(const R& s, const BivariatePoly<R>& a) {
    BivariatePoly<R> r = a;
    for (auto& v : r.c) v *= s;
    return r;
}

} // namespace klink
