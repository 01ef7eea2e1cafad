#pragma once

// Exact linear algebra over Z and Q: echelon forms, Smith and Hermite
// normal forms, kernels, saturation.

#include "k3iso/matrix.hpp"

#include <optional>

namespace k3iso {

// ---------------------------------------------------------------------------
// Rational elimination

struct RowEchelon {
    RatMatrix reduced;                // reduced row echelon form
    std::vector<std::size_t> pivots;  // pivot column of each nonzero row
};

inline RowEchelon rref(RatMatrix a)
{
    RowEchelon out;
    std::size_t r = 0;
    for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
        std::size_t p = r;
        while (p < a.rows() && a(p, c) == 0) ++p;
        if (p == a.rows()) continue;
        a.swap_rows(p, r);
        const Rat inv = 1 / a(r, c);
        for (std::size_t j = 0; j < a.cols(); ++j) a(r, j) *= inv;
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (i != r && a(i, c) != 0) a.add_row(i, r, Rat(-a(i, c)));
        out.pivots.push_back(c);
        ++r;
    }
    out.reduced = std::move(a);
    return out;
}

inline std::size_t rank(const RatMatrix& a) { return rref(a).pivots.size(); }
inline std::size_t rank(const IntMatrix& a) { return rank(to_rational(a)); }

inline Rat determinant(RatMatrix a)
{
    if (!a.square()) throw std::invalid_argument("determinant of a non-square matrix");
    Rat det = 1;
    const std::size_t n = a.rows();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        while (p < n && a(p, c) == 0) ++p;
        if (p == n) return 0;
        if (p != c) {
            a.swap_rows(p, c);
            det = -det;
        }
        det *= a(c, c);
        for (std::size_t i = c + 1; i < n; ++i)
            if (a(i, c) != 0) a.add_row(i, c, Rat(-a(i, c) / a(c, c)));
    }
    return det;
}

inline Int determinant(const IntMatrix& a) { return determinant(to_rational(a)).get_num(); }

inline RatMatrix inverse(const RatMatrix& a)
{
    if (!a.square()) throw std::invalid_argument("inverse of a non-square matrix");
    const std::size_t n = a.rows();
    RatMatrix aug(n, 2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
        aug(i, n + i) = 1;
    }
    RowEchelon e = rref(std::move(aug));
    if (e.pivots.size() < n || e.pivots[n - 1] != n - 1) throw math_error("matrix is singular");
    return e.reduced.block(0, n, n, n);
}

// Inverse of a unimodular integer matrix.
inline IntMatrix unimodular_inverse(const IntMatrix& a) { return to_integer(inverse(to_rational(a))); }

struct SolveResult {
    std::optional<RatVector> solution;  // particular solution with free variables set to 0
    std::vector<RatVector> kernel;      // basis of the null space, one vector per free column
};

// Solves A x = y (y absent: the homogeneous system) and returns the kernel of A.
inline SolveResult solve_and_kernel(const RatMatrix& a, const std::optional<RatVector>& y = std::nullopt)
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    if (y && y->size() != m) throw std::invalid_argument("right-hand side length mismatch");
    RatMatrix aug(m, n + 1);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) aug(i, j) = a(i, j);
        if (y) aug(i, n) = (*y)[i];
    }
    const RowEchelon e = rref(std::move(aug));

    SolveResult out;
    std::vector<bool> is_pivot(n, false);
    bool consistent = true;
    for (std::size_t r = 0; r < e.pivots.size(); ++r) {
        if (e.pivots[r] == n) consistent = false;
        else is_pivot[e.pivots[r]] = true;
    }
    if (consistent) {
        RatVector x(n, Rat(0));
        for (std::size_t r = 0; r < e.pivots.size(); ++r) x[e.pivots[r]] = e.reduced(r, n);
        out.solution = std::move(x);
    }
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        RatVector k(n, Rat(0));
        k[f] = 1;
        for (std::size_t r = 0; r < e.pivots.size(); ++r)
            if (e.pivots[r] < n) k[e.pivots[r]] = -e.reduced(r, f);
        out.kernel.push_back(std::move(k));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smith normal form

struct SmithForm {
    IntMatrix D;  // diagonal, d_1 | d_2 | ... , nonnegative
    IntMatrix U;  // unimodular, rows x rows
    IntMatrix V;  // unimodular, cols x cols

    // Nonzero diagonal entries in order.
    IntVector invariant_factors() const
    {
        IntVector out;
        for (std::size_t i = 0; i < std::min(D.rows(), D.cols()); ++i)
            if (D(i, i) != 0) out.push_back(D(i, i));
        return out;
    }
};

// U * A * V = D. Pivot: smallest nonzero |entry| in the active block, ties
// broken by leftmost column and then lowest row index.
inline SmithForm snf(const IntMatrix& a)
{
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    IntMatrix d = a;
    IntMatrix u = IntMatrix::identity(m);
    IntMatrix v = IntMatrix::identity(n);

    for (std::size_t t = 0; t < std::min(m, n); ++t) {
        for (;;) {
            std::size_t pi = m, pj = n;
            Int best;
            for (std::size_t j = t; j < n; ++j)
                for (std::size_t i = t; i < m; ++i) {
                    if (d(i, j) == 0) continue;
                    const Int mag = abs_int(d(i, j));
                    if (pi == m || mag < best) {
                        best = mag;
                        pi = i;
                        pj = j;
                    }
                }
            if (pi == m) goto done;  // active block is zero

            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            bool dirty = false;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (d(i, t) == 0) continue;
                const Int q = floor_div(d(i, t), d(t, t));
                d.add_row(i, t, Int(-q));
                u.add_row(i, t, Int(-q));
                dirty = dirty || d(i, t) != 0;
            }
            for (std::size_t j = t + 1; j < n; ++j) {
                if (d(t, j) == 0) continue;
                const Int q = floor_div(d(t, j), d(t, t));
                d.add_col(j, t, Int(-q));
                v.add_col(j, t, Int(-q));
                dirty = dirty || d(t, j) != 0;
            }
            if (dirty) continue;

            bool divisible = true;
            for (std::size_t i = t + 1; i < m && divisible; ++i)
                for (std::size_t j = t + 1; j < n; ++j)
                    if (d(i, j) % d(t, t) != 0) {
                        d.add_row(t, i, Int(1));
                        u.add_row(t, i, Int(1));
                        divisible = false;
                        break;
                    }
            if (divisible) break;
        }
        if (d(t, t) < 0) {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
done:
    return SmithForm{std::move(d), std::move(u), std::move(v)};
}

// ---------------------------------------------------------------------------
// Hermite normal form

// Column-style HNF: a basis H of the Z-span of the columns of A, lower
// echelon, positive pivots, entries left of a pivot reduced into [0, pivot).
// Only the nonzero columns are returned (rows x rank).
inline IntMatrix hnf(const IntMatrix& a)
{
    IntMatrix h = a;
    const std::size_t m = h.rows();
    const std::size_t n = h.cols();
    std::size_t k = 0;
    for (std::size_t i = 0; i < m && k < n; ++i) {
        bool has_pivot = false;
        for (;;) {
            std::size_t best = n;
            for (std::size_t j = k; j < n; ++j)
                if (h(i, j) != 0 && (best == n || abs_int(h(i, j)) < abs_int(h(i, best)))) best = j;
            if (best == n) break;
            has_pivot = true;
            h.swap_cols(k, best);
            bool clean = true;
            for (std::size_t j = k + 1; j < n; ++j) {
                if (h(i, j) == 0) continue;
                h.add_col(j, k, Int(-floor_div(h(i, j), h(i, k))));
                clean = clean && h(i, j) == 0;
            }
            if (clean) break;
        }
        if (!has_pivot) continue;
        if (h(i, k) < 0) h.negate_col(k);
        for (std::size_t j = 0; j < k; ++j)
            if (h(i, j) != 0) h.add_col(j, k, Int(-floor_div(h(i, j), h(i, k))));
        ++k;
    }
    return h.column_block(0, k);
}

// ---------------------------------------------------------------------------
// Saturation and integral kernels

// Basis (HNF) of the saturation (span_Q(gens) ∩ Z^m) of the given columns.
inline IntMatrix saturate(const IntMatrix& gens)
{
    const std::size_t m = gens.rows();
    if (gens.cols() == 0) return IntMatrix(m, 0);
    const SmithForm s = snf(gens);
    const std::size_t r = s.invariant_factors().size();
    const IntMatrix u_inv = unimodular_inverse(s.U);
    return hnf(u_inv.column_block(0, r));
}

inline IntMatrix saturate(std::span<const IntVector> gens, std::size_t ambient_rank)
{
    return saturate(IntMatrix::from_columns(gens, ambient_rank));
}

// Basis of {x in Z^n : A x = 0}.
inline IntMatrix integer_kernel(const RatMatrix& a)
{
    const SolveResult s = solve_and_kernel(a);
    std::vector<IntVector> gens;
    gens.reserve(s.kernel.size());
    for (const RatVector& k : s.kernel) gens.push_back(primitive_multiple(k));
    return saturate(gens, a.cols());
}

// Basis of {x in Z^n : M x in Z^m}; a full-rank sublattice of Z^n.
// Computed as the dual (for the standard dot product) of Z^n + M^T Z^m.
inline IntMatrix integral_preimage(const RatMatrix& mat)
{
    const std::size_t n = mat.cols();
    const std::size_t m = mat.rows();
    Int den = 1;
    for (const Rat& x : mat.data()) den = lcm(den, x.get_den());
    IntMatrix gens(n, n + m);
    for (std::size_t i = 0; i < n; ++i) {
        gens(i, i) = den;
        for (std::size_t j = 0; j < m; ++j) gens(i, n + j) = Rat(den * mat(j, i)).get_num();
    }
    const IntMatrix h = hnf(gens);
    const RatMatrix dual = Rat(den) * inverse(to_rational(h)).transpose();
    return hnf(to_integer(dual));
}

// Coordinates c with basis * c = x, if x lies in the Z-span of the
// (independent) columns of basis.
inline std::optional<IntVector> lattice_coordinates(const IntMatrix& basis, std::span<const Rat> x)
{
    const SolveResult s = solve_and_kernel(to_rational(basis), RatVector(x.begin(), x.end()));
    if (!s.solution || !is_integral(*s.solution)) return std::nullopt;
    return to_integer(*s.solution);
}

inline bool same_column_span(const IntMatrix& a, const IntMatrix& b) { return hnf(a) == hnf(b); }

}  // namespace k3iso
