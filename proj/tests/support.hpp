#pragma once

// Shared helpers for the test programs: literals, seeded samplers and
// brute-force oracles that do not go through the library's normal forms.

#include "k3iso/k3iso.hpp"

#include <random>

namespace k3test {

using namespace k3iso;

inline IntVector iv(std::initializer_list<long> xs)
{
    IntVector v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

inline RatVector rv(std::initializer_list<long> xs)
{
    RatVector v;
    for (long x : xs) v.emplace_back(x);
    return v;
}

inline RatVector rq(const IntVector& v) { return to_rational(v); }

inline Lattice u_plus_u() { return direct_sum(hyperbolic_plane(), hyperbolic_plane()); }

inline Lattice u_plus_a1a1() { return direct_sum(hyperbolic_plane(), direct_sum(a1_negative(), a1_negative())); }

// K3 basis: e1 f1 e2 f2 e3 f3, then the two E8(-1) blocks.
inline IntVector k3_vec(std::initializer_list<std::pair<int, long>> entries)
{
    IntVector v(22, Int(0));
    for (auto [i, x] : entries) v[i] = x;
    return v;
}

inline IntMatrix random_int_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, int lo, int hi)
{
    std::uniform_int_distribution<int> d(lo, hi);
    IntMatrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = d(rng);
    return m;
}

// Random vector with small entries in at most `support` coordinates.
inline IntVector random_vector(std::mt19937_64& rng, std::size_t n, int bound, std::size_t support = 0)
{
    std::uniform_int_distribution<int> d(-bound, bound);
    IntVector v(n, Int(0));
    if (support == 0 || support >= n) {
        for (auto& x : v) x = d(rng);
    } else {
        std::uniform_int_distribution<std::size_t> pos(0, n - 1);
        for (std::size_t k = 0; k < support; ++k) v[pos(rng)] += d(rng);
    }
    return v;
}

// Primitive vector of nonzero square.
inline IntVector random_anisotropic_primitive(std::mt19937_64& rng, const Lattice& l, int bound, std::size_t support = 0)
{
    for (;;) {
        IntVector v = random_vector(rng, l.rank(), bound, support);
        if (content(v) != 1) continue;
        if (l.square(std::span<const Int>(v)) == 0) continue;
        return v;
    }
}

// Product of 1..max_refl random reflections.
inline RatMatrix random_isometry(std::mt19937_64& rng, const Lattice& l, int max_refl, int bound = 2,
                                 std::size_t support = 0)
{
    std::uniform_int_distribution<int> k(1, max_refl);
    RatMatrix m = RatMatrix::identity(l.rank());
    const int count = k(rng);
    for (int i = 0; i < count; ++i)
        m = reflection_matrix(l, to_rational(random_anisotropic_primitive(rng, l, bound, support))) * m;
    return m;
}

// ---------------------------------------------------------------------------
// Oracles

// Laplace expansion.
inline Rat det_laplace(const RatMatrix& a)
{
    const std::size_t n = a.rows();
    if (n == 0) return 1;
    if (n == 1) return a(0, 0);
    Rat s = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (a(0, j) == 0) continue;
        RatMatrix minor(n - 1, n - 1);
        for (std::size_t i = 1; i < n; ++i)
            for (std::size_t k = 0, c = 0; k < n; ++k)
                if (k != j) minor(i - 1, c++) = a(i, k);
        const Rat t = a(0, j) * det_laplace(minor);
        s += (j % 2 == 0) ? t : Rat(-t);
    }
    return s;
}

inline void combinations(std::size_t n, std::size_t k, std::size_t start, std::vector<std::size_t>& cur,
                         std::vector<std::vector<std::size_t>>& out)
{
    if (cur.size() == k) {
        out.push_back(cur);
        return;
    }
    for (std::size_t i = start; i < n; ++i) {
        cur.push_back(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop_back();
    }
}

// Invariant factors from determinantal divisors: d_k = D_k / D_{k-1}, where
// D_k is the gcd of all k x k minors. Zero factors are omitted.
inline IntVector invariant_factors_by_minors(const IntMatrix& a)
{
    IntVector out;
    Int prev = 1;
    const std::size_t kmax = std::min(a.rows(), a.cols());
    for (std::size_t k = 1; k <= kmax; ++k) {
        std::vector<std::vector<std::size_t>> rows, cols;
        std::vector<std::size_t> cur;
        combinations(a.rows(), k, 0, cur, rows);
        combinations(a.cols(), k, 0, cur, cols);
        Int g = 0;
        for (const auto& r : rows)
            for (const auto& c : cols) {
                RatMatrix m(k, k);
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < k; ++j) m(i, j) = a(r[i], c[j]);
                g = gcd(g, det_laplace(m).get_num());
            }
        if (g == 0) break;
        out.push_back(g / prev);
        prev = g;
    }
    return out;
}

// Characteristic polynomial coefficients c_0..c_n of det(tI - A)
// (Faddeev-LeVerrier), highest degree last.
inline RatVector char_poly(const RatMatrix& a)
{
    const std::size_t n = a.rows();
    RatVector c(n + 1, Rat(0));
    c[n] = 1;
    RatMatrix m(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        RatMatrix am = a * m;
        for (std::size_t i = 0; i < n; ++i) am(i, i) += c[n - k + 1];
        m = am;
        const RatMatrix prod = a * m;
        Rat tr = 0;
        for (std::size_t i = 0; i < n; ++i) tr += prod(i, i);
        c[n - k] = -tr / Rat(static_cast<long>(k));
    }
    return c;
}

// Signature of a symmetric matrix from sign changes of its characteristic
// polynomial (all roots are real, so Descartes' rule is exact).
inline std::pair<std::size_t, std::size_t> signature_by_char_poly(const RatMatrix& g)
{
    const RatVector c = char_poly(g);
    auto changes = [](const RatVector& coeffs) {
        std::size_t ch = 0;
        int last = 0;
        for (const Rat& x : coeffs) {
            const int s = sgn(x);
            if (s == 0) continue;
            if (last != 0 && s != last) ++ch;
            last = s;
        }
        return ch;
    };
    RatVector neg = c;
    for (std::size_t i = 0; i < neg.size(); ++i)
        if (i % 2 == 1) neg[i] = -neg[i];
    return {changes(c), changes(neg)};
}

// Calls f on every vector of [-bound, bound]^n.
template <class F>
void for_each_in_box(std::size_t n, int bound, F&& f)
{
    IntVector x(n, Int(-bound));
    for (;;) {
        f(x);
        std::size_t i = 0;
        while (i < n && x[i] == bound) x[i++] = -bound;
        if (i == n) return;
        ++x[i];
    }
}

}  // namespace k3test
