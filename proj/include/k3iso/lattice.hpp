#pragma once

#include "k3iso/normal_forms.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>

namespace k3iso {

// Free Z-module of finite rank with an integral symmetric bilinear form.
class Lattice {
public:
    Lattice() = default;

    explicit Lattice(IntMatrix gram, std::string label = {}) : gram_(std::move(gram)), label_(std::move(label))
    {
        if (!gram_.square()) throw std::invalid_argument("Gram matrix must be square");
        for (std::size_t i = 0; i < gram_.rows(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                if (gram_(i, j) != gram_(j, i)) throw std::invalid_argument("Gram matrix must be symmetric");
        gram_q_ = to_rational(gram_);
    }

    std::size_t rank() const { return gram_.rows(); }
    const IntMatrix& gram() const { return gram_; }
    const RatMatrix& gram_q() const { return gram_q_; }
    const std::string& label() const { return label_; }

    Rat pair(std::span<const Rat> x, std::span<const Rat> y) const { return bilinear(gram_q_, x, y); }
    Int pair(std::span<const Int> x, std::span<const Int> y) const { return bilinear(gram_, x, y); }
    Rat square(std::span<const Rat> x) const { return pair(x, x); }
    Int square(std::span<const Int> x) const { return pair(x, x); }

    // The linear form y -> (x . y) as a row vector, i.e. G x.
    RatVector dual(std::span<const Rat> x) const { return gram_q_ * x; }

    Int det() const { return rank() == 0 ? Int(1) : determinant(gram_); }
    bool is_nondegenerate() const { return det() != 0; }

    bool is_even() const
    {
        for (std::size_t i = 0; i < rank(); ++i)
            if (gram_(i, i) % 2 != 0) return false;
        return true;
    }

    friend bool operator==(const Lattice& a, const Lattice& b) { return a.gram_ == b.gram_; }

private:
    IntMatrix gram_;
    RatMatrix gram_q_;
    std::string label_;
};

// Coordinates of the hyperbolic plane U: basis (e, f), (e.f) = -1.
inline Lattice twisted_hyperbolic_plane(const Int& n)
{
    if (n == 0) throw math_error("U(n) requires n != 0");
    return Lattice(IntMatrix{{0, Int(-n)}, {Int(-n), 0}}, n == 1 ? "U" : "U(" + n.get_str() + ")");
}

inline Lattice hyperbolic_plane() { return twisted_hyperbolic_plane(1); }

inline Lattice a1_negative() { return Lattice(IntMatrix{{-2}}, "A1(-1)"); }

// Negative of the E8 Cartan matrix. Dynkin diagram: chain 0-1-2-3-4-5-6 with
// node 7 attached to node 4.
inline Lattice e8_negative()
{
    IntMatrix g(8, 8);
    for (std::size_t i = 0; i < 8; ++i) g(i, i) = -2;
    const std::array<std::pair<int, int>, 7> edges{{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {4, 7}}};
    for (auto [a, b] : edges) g(a, b) = g(b, a) = 1;
    return Lattice(std::move(g), "E8(-1)");
}

inline Lattice direct_sum(const Lattice& a, const Lattice& b)
{
    const std::size_t n = a.rank(), m = b.rank();
    IntMatrix g(n + m, n + m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) g(i, j) = a.gram()(i, j);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) g(n + i, n + j) = b.gram()(i, j);
    std::string label;
    if (!a.label().empty() && !b.label().empty()) label = a.label() + "+" + b.label();
    return Lattice(std::move(g), std::move(label));
}

// U^3 + E8(-1)^2. Basis order: e1 f1 e2 f2 e3 f3 (indices 0..5), then the two
// E8(-1) blocks (6..13, 14..21).
inline Lattice k3_lattice()
{
    const Lattice u = hyperbolic_plane();
    Lattice k = direct_sum(direct_sum(direct_sum(u, u), u), direct_sum(e8_negative(), e8_negative()));
    return Lattice(k.gram(), "K3");
}

// Lattice + U with the extra hyperbolic plane last: index rank is e (H^0),
// rank + 1 is f (H^4).
inline Lattice mukai_extension(const Lattice& l)
{
    Lattice m = direct_sum(l, hyperbolic_plane());
    return Lattice(m.gram(), l.label().empty() ? std::string() : l.label() + "+U");
}

inline Lattice mukai_lattice() { return Lattice(mukai_extension(k3_lattice()).gram(), "Mukai"); }

// Accepted names: U, U(n), A1(-1), E8(-1), K3, Mukai.
inline Lattice standard_lattice(const std::string& name)
{
    if (name == "U") return hyperbolic_plane();
    if (name == "A1(-1)") return a1_negative();
    if (name == "E8(-1)") return e8_negative();
    if (name == "K3") return k3_lattice();
    if (name == "Mukai") return mukai_lattice();
    if (name.size() > 3 && name.rfind("U(", 0) == 0 && name.back() == ')') {
        Int n;
        try {
            n = parse_integer(name.substr(2, name.size() - 3));
        } catch (const parse_error&) {
            throw std::invalid_argument("unknown lattice name: " + name);
        }
        return twisted_hyperbolic_plane(n);
    }
    throw std::invalid_argument("unknown lattice name: " + name);
}

// ---------------------------------------------------------------------------
// Signature

struct Inertia {
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::size_t zero = 0;
};

struct CongruenceDiagonalization {
    RatMatrix transform;  // P with P^T G P = diag(d)
    RatVector diagonal;
};

// Exact symmetric elimination: simultaneous row and column operations.
inline CongruenceDiagonalization congruence_diagonalize(const RatMatrix& gram)
{
    RatMatrix a = gram;
    const std::size_t n = a.rows();
    RatMatrix p = RatMatrix::identity(n);
    auto sym_swap = [&](std::size_t i, std::size_t j) {
        a.swap_rows(i, j);
        a.swap_cols(i, j);
        p.swap_cols(i, j);
    };
    auto sym_add = [&](std::size_t dst, std::size_t src, const Rat& k) {
        a.add_row(dst, src, k);
        a.add_col(dst, src, k);
        p.add_col(dst, src, k);
    };
    for (std::size_t k = 0; k < n; ++k) {
        if (a(k, k) == 0) {
            std::size_t j = k + 1;
            while (j < n && a(j, j) == 0) ++j;
            if (j < n) {
                sym_swap(k, j);
            } else {
                j = k + 1;
                while (j < n && a(k, j) == 0) ++j;
                if (j == n) continue;  // row k vanishes on the active block
                sym_add(k, j, Rat(1));
            }
        }
        for (std::size_t i = k + 1; i < n; ++i)
            if (a(i, k) != 0) sym_add(i, k, Rat(-a(i, k) / a(k, k)));
    }
    RatVector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
    return {std::move(p), std::move(d)};
}

inline Inertia inertia(const RatMatrix& gram)
{
    Inertia out;
    for (const Rat& x : congruence_diagonalize(gram).diagonal) {
        if (x > 0) ++out.positive;
        else if (x < 0) ++out.negative;
        else ++out.zero;
    }
    return out;
}

inline std::pair<std::size_t, std::size_t> signature(const Lattice& l)
{
    const Inertia in = inertia(l.gram_q());
    if (in.zero != 0) throw math_error("signature: degenerate Gram matrix");
    return {in.positive, in.negative};
}

// Sylvester's criterion.
inline bool is_positive_definite(const RatMatrix& gram)
{
    for (std::size_t k = 1; k <= gram.rows(); ++k)
        if (determinant(gram.block(0, 0, k, k)) <= 0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Sublattices

struct Sublattice {
    Lattice parent;
    IntMatrix basis;                  // HNF, columns in parent coordinates
    std::optional<Int> index;         // nullopt when rank < parent rank
    IntVector quotient_invariants;    // invariant factors > 1 of parent / span
    std::size_t quotient_free_rank = 0;

    std::size_t rank() const { return basis.cols(); }

    IntMatrix gram() const { return basis.transpose() * parent.gram() * basis; }
    Lattice lattice() const { return Lattice(gram()); }

    bool has_cyclic_quotient() const { return quotient_free_rank == 0 && quotient_invariants.size() <= 1; }

    bool contains(std::span<const Rat> x) const { return lattice_coordinates(basis, x).has_value(); }
    bool contains(std::span<const Int> x) const { return contains(to_rational(x)); }

    std::vector<IntVector> generators() const
    {
        std::vector<IntVector> out;
        for (std::size_t j = 0; j < basis.cols(); ++j) out.push_back(basis.column(j));
        return out;
    }

    friend bool operator==(const Sublattice& a, const Sublattice& b)
    {
        return a.parent == b.parent && a.basis == b.basis;
    }
};

// Generators are the columns of gens (parent coordinates); dependent or
// repeated generators are allowed.
inline Sublattice sublattice_from_generators(const Lattice& l, const IntMatrix& gens)
{
    if (gens.rows() != l.rank()) throw std::invalid_argument("generator length does not match lattice rank");
    Sublattice s;
    s.parent = l;
    s.basis = hnf(gens);
    const IntVector d = s.basis.cols() ? snf(s.basis).invariant_factors() : IntVector{};
    for (const Int& x : d)
        if (x != 1) s.quotient_invariants.push_back(x);
    s.quotient_free_rank = l.rank() - s.basis.cols();
    if (s.quotient_free_rank == 0) {
        Int idx = 1;
        for (const Int& x : d) idx *= x;
        s.index = idx;
    }
    return s;
}

inline Sublattice sublattice_from_generators(const Lattice& l, std::span<const IntVector> gens)
{
    return sublattice_from_generators(l, IntMatrix::from_columns(gens, l.rank()));
}

inline Sublattice full_sublattice(const Lattice& l)
{
    return sublattice_from_generators(l, IntMatrix::identity(l.rank()));
}

// {x in L : (x.s) = 0 for all s in S}; always primitive.
inline Sublattice orthogonal_complement(const Lattice& l, const Sublattice& s)
{
    if (s.rank() == 0) return full_sublattice(l);
    const RatMatrix forms = to_rational(s.basis.transpose() * l.gram());
    return sublattice_from_generators(l, integer_kernel(forms));
}

inline bool is_primitive(const Lattice& l, const Sublattice& s)
{
    (void)l;
    return s.quotient_invariants.empty();
}

// ---------------------------------------------------------------------------
// Discriminant group

struct DiscriminantGroup {
    IntVector invariants;              // invariant factors > 1 of L*/L
    std::vector<RatVector> generators;  // dual vectors in L (x) Q coordinates, one per invariant
    std::vector<Rat> q_values;          // (g.g) reduced into [0, 2)

    Int order() const
    {
        Int o = 1;
        for (const Int& d : invariants) o *= d;
        return o;
    }
};

inline Rat mod2(const Rat& x)
{
    const Rat two = 2;
    Rat q = x / two;
    Int fl;
    mpz_fdiv_q(fl.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return x - Rat(2 * fl);
}

inline DiscriminantGroup discriminant_group(const Lattice& l)
{
    if (!l.is_nondegenerate()) throw math_error("discriminant group of a degenerate lattice");
    DiscriminantGroup out;
    if (l.rank() == 0) return out;
    const SmithForm s = snf(l.gram());
    const RatMatrix u_inv = to_rational(unimodular_inverse(s.U));
    const RatMatrix g_inv = inverse(l.gram_q());
    for (std::size_t i = 0; i < l.rank(); ++i) {
        if (s.D(i, i) == 1) continue;
        out.invariants.push_back(s.D(i, i));
        const RatVector y = u_inv.column(i);
        RatVector x = g_inv * y;
        out.q_values.push_back(mod2(l.square(x)));
        out.generators.push_back(std::move(x));
    }
    return out;
}

// ---------------------------------------------------------------------------
// U(n) recognition (rank-2 special case only)

// If the rank-2 Gram matrix is isometric to U(n) = [[0,-n],[-n,0]] through a
// sign change of the basis, returns T with T^T gram T = Gram(U(n)).
inline std::optional<IntMatrix> match_twisted_hyperbolic(const IntMatrix& gram, const Int& n)
{
    if (gram.rows() != 2 || gram.cols() != 2 || n == 0) return std::nullopt;
    if (gram(0, 0) != 0 || gram(1, 1) != 0 || gram(0, 1) != gram(1, 0)) return std::nullopt;
    if (gram(0, 1) == -n) return IntMatrix::identity(2);
    if (gram(0, 1) == n) return IntMatrix{{1, 0}, {0, -1}};  // f -> -f
    return std::nullopt;
}

}  // namespace k3iso
