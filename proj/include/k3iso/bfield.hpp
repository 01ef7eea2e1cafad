#pragma once

// B-field lifts of reflections to the Mukai extension L + U.
//
// Coordinates on the Mukai extension: the first rank(L) entries are the L
// part z, entry rank(L) is the coefficient r of e (H^0), entry rank(L) + 1 the
// coefficient s of f (H^4); (e.f) = -1, so z + re + sf pairs as
// (z.z') - rs' - r's.

#include "k3iso/isometry.hpp"

#include <cstdint>
#include <sstream>

namespace k3iso {

inline std::string format_vector(std::span<const Rat> v)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    os << ')';
    return os.str();
}

inline std::string format_vector(std::span<const Int> v) { return format_vector(to_rational(v)); }

struct BField {
    IntVector b;  // primitive, (b)^2 = 2n
    Int n;        // nonzero, may be negative
    RatVector B;  // b / n
};

inline BField bfield_from_reflection(const Lattice& l, std::span<const Int> b)
{
    if (b.size() != l.rank()) throw std::invalid_argument("B-field vector has wrong length");
    if (content(b) != 1) throw math_error("B-field: b is not primitive (make it primitive first)");
    const Int sq = l.square(b);
    if (sq == 0) throw math_error("B-field: b is isotropic");
    if (sq % 2 != 0) throw math_error("B-field: (b)^2 is odd");
    BField f;
    f.b.assign(b.begin(), b.end());
    f.n = sq / 2;
    f.B.reserve(b.size());
    for (const Int& x : b) f.B.push_back(Rat(x, f.n));
    for (Rat& x : f.B) x.canonicalize();
    return f;
}

// {x in L : (x.B) in Z}
inline Sublattice lambda_B(const Lattice& l, std::span<const Rat> B)
{
    RatMatrix row(1, l.rank());
    const RatVector gb = l.dual(B);
    for (std::size_t j = 0; j < l.rank(); ++j) row(0, j) = gb[j];
    return sublattice_from_generators(l, integral_preimage(row));
}

// gcd of the pairings (b.x) over x in L.
inline Int divisibility(const Lattice& l, std::span<const Int> b)
{
    Int d = 0;
    for (const Int& x : l.gram() * IntVector(b.begin(), b.end())) d = gcd(d, x);
    return d;
}

// [L : Lambda_B] for B = b/n; equals |n| when L is unimodular.
inline Int expected_lambda_index(const Lattice& l, std::span<const Int> b, const Int& n)
{
    const Int g = gcd(n, divisibility(l, b));
    if (g == 0) throw math_error("Lambda_B index: b and n are both zero");
    return abs_int(n) / g;
}

// x -> x + (B.x) f into the Mukai extension; requires x in Lambda_B.
inline IntVector exp_b_embed(const Lattice& l, std::span<const Rat> B, std::span<const Int> x)
{
    const Rat bx = l.pair(B, to_rational(x));
    if (!is_integral(bx)) throw math_error("exp(B): x is not in Lambda_B, (B.x) = " + bx.get_str());
    IntVector out(x.begin(), x.end());
    out.push_back(0);
    out.push_back(bx.get_num());
    return out;
}

// Rational matrix of x -> x + (B.x) f, (rank + 2) x rank.
inline RatMatrix exp_b_matrix(const Lattice& l, std::span<const Rat> B)
{
    const std::size_t n = l.rank();
    RatMatrix m(n + 2, n);
    const RatVector gb = l.dual(B);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1;
        m(n + 1, i) = gb[i];
    }
    return m;
}

inline Sublattice exp_b_image(const Lattice& l, std::span<const Rat> B)
{
    const Sublattice lb = lambda_B(l, B);
    const Lattice mukai = mukai_extension(l);
    std::vector<IntVector> gens;
    for (const IntVector& x : lb.generators()) gens.push_back(exp_b_embed(l, B, x));
    return sublattice_from_generators(mukai, gens);
}

struct TwistedPlane {
    IntVector first;   // b + n e + f
    IntVector second;  // -f
    IntMatrix gram;    // [[0, n], [n, 0]]
    bool isotropic_pair = false;
    bool pairing_is_n = false;
    bool isomorphic_to_Un = false;
    bool equals_complement = false;  // span equals (exp(B)(Lambda_B))^perp
};

inline TwistedPlane complement_Un(const Lattice& l, const BField& bf)
{
    const std::size_t n = l.rank();
    const Lattice mukai = mukai_extension(l);
    TwistedPlane t;
    t.first = bf.b;
    t.first.push_back(bf.n);
    t.first.push_back(1);
    t.second = IntVector(n + 2, Int(0));
    t.second[n + 1] = -1;
    const std::vector<IntVector> pair{t.first, t.second};
    const IntMatrix basis = IntMatrix::from_columns(pair, n + 2);
    t.gram = basis.transpose() * mukai.gram() * basis;
    t.isotropic_pair = t.gram(0, 0) == 0 && t.gram(1, 1) == 0;
    t.pairing_is_n = t.gram(0, 1) == bf.n;
    t.isomorphic_to_Un = match_twisted_hyperbolic(t.gram, bf.n).has_value();
    const Sublattice perp = orthogonal_complement(mukai, exp_b_image(l, bf.B));
    t.equals_complement = perp.basis == hnf(basis);
    return t;
}

// ---------------------------------------------------------------------------
// Extension to the Mukai lattice

// Two-lattice form: phi: L -> L', b' = -phi(b),
// phi~(r, z, s) = (n((B.z) - r/n - s), phi(z) + ((B.z) - s) b', -s).
inline RatMatrix mukai_extension_matrix(const RationalIsometry& phi, const BField& bf, std::span<const Int> b_target)
{
    const Lattice& l = phi.source;
    const std::size_t n = l.rank();
    if (phi.target.rank() != n || b_target.size() != n) throw std::invalid_argument("lift: rank mismatch");
    const RatVector phib = phi(std::span<const Int>(bf.b));
    for (std::size_t i = 0; i < n; ++i)
        if (phib[i] != -b_target[i]) throw math_error("lift: b' differs from -phi(b)");
    const RatVector gb = l.dual(bf.B);
    RatMatrix m(n + 2, n + 2);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) m(i, j) = phi.matrix(i, j) + gb[j] * b_target[i];
        m(n, j) = bf.n * gb[j];
    }
    m(n, n) = -1;  // e -> -e
    for (std::size_t i = 0; i < n; ++i) m(i, n + 1) = -b_target[i];
    m(n, n + 1) = -bf.n;
    m(n + 1, n + 1) = -1;  // f -> -b' - n e - f
    return m;
}

// Single-lattice form, written out independently:
// phi~(z + re + sf) = phi(z) + ((B.z) - s) b + n((B.z) - r/n - s) e - s f.
inline RatMatrix mukai_extension_matrix_single(const Lattice& l, const BField& bf, const RatMatrix& phi)
{
    const std::size_t n = l.rank();
    const std::size_t e = n, f = n + 1;
    RatMatrix m(n + 2, n + 2);
    auto image = [&](std::span<const Rat> z, const Rat& r, const Rat& s) {
        const Rat bz = l.pair(bf.B, z);
        RatVector out = phi * z;
        for (std::size_t i = 0; i < n; ++i) out[i] += (bz - s) * bf.b[i];
        out.push_back(Rat(bf.n) * (bz - r / Rat(bf.n) - s));
        out.push_back(-s);
        return out;
    };
    for (std::size_t j = 0; j < n; ++j) m.set_column(j, image(unit_vector<Rat>(n, j), 0, 0));
    const RatVector zero(n, Rat(0));
    m.set_column(e, image(zero, 1, 0));
    m.set_column(f, image(zero, 0, 1));
    return m;
}

// id on H^0 and H^4, -id on the L part.
inline RatMatrix orientation_flip(std::size_t lattice_rank)
{
    RatMatrix j = RatMatrix::identity(lattice_rank + 2);
    for (std::size_t i = 0; i < lattice_rank; ++i) j(i, i) = -1;
    return j;
}

// ---------------------------------------------------------------------------
// Orientation of positive directions

using Frame = std::vector<RatVector>;

// Sign of det((g p_i . p_j)) for a positive definite frame p. Returns 0 when
// the frame is not positive definite or the pairing matrix is singular.
inline int orientation_sign_on(const Lattice& l, const RatMatrix& g, const Frame& p)
{
    const std::size_t k = p.size();
    RatMatrix gram(k, k), m(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) gram(i, j) = l.pair(p[i], p[j]);
    if (!is_positive_definite(gram)) return 0;
    for (std::size_t i = 0; i < k; ++i) {
        const RatVector gp = g * p[i];
        for (std::size_t j = 0; j < k; ++j) m(i, j) = l.pair(gp, p[j]);
    }
    return sign(determinant(m));
}

// First usable frame decides; throws if none of them is usable.
inline int orientation_sign(const Lattice& l, const RatMatrix& g, std::span<const Frame> frames)
{
    const std::size_t p = inertia(l.gram_q()).positive;
    for (const Frame& fr : frames) {
        if (fr.size() != p) continue;
        if (const int s = orientation_sign_on(l, g, fr); s != 0) return s;
    }
    throw math_error("orientation: no reference frame spans a maximal positive definite subspace");
}

// Positive definite frames of maximal dimension: the positive part of an exact
// orthogonal basis, followed by pseudo-random perturbations of it.
inline std::vector<Frame> stock_positive_frames(const Lattice& l, std::size_t count, std::uint64_t seed = 1)
{
    const CongruenceDiagonalization cd = congruence_diagonalize(l.gram_q());
    Frame base;
    for (std::size_t i = 0; i < cd.diagonal.size(); ++i)
        if (cd.diagonal[i] > 0) base.push_back(cd.transform.column(i));
    std::vector<Frame> out{base};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coeff(-2, 2);
    const std::size_t n = l.rank();
    int scale = 2;
    while (out.size() < count) {
        Frame fr = base;
        for (RatVector& v : fr)
            for (std::size_t i = 0; i < n; ++i) v[i] += Rat(coeff(rng)) / scale;
        RatMatrix gram(fr.size(), fr.size());
        for (std::size_t i = 0; i < fr.size(); ++i)
            for (std::size_t j = 0; j < fr.size(); ++j) gram(i, j) = l.pair(fr[i], fr[j]);
        if (is_positive_definite(gram)) out.push_back(std::move(fr));
        else ++scale;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lifts

struct BFieldLift {
    RationalIsometry phi;          // L -> L'
    BField source;                 // b, n, B on L
    IntVector b_target;            // b' = -phi(b); negated by an orientation fix
    RatVector B_target;            // B' = b' / n
    Sublattice lambda_source;      // Lambda_B in L
    Sublattice lambda_target;      // Lambda'_{B'} in L'
    RationalIsometry phi_tilde;    // Mukai extension of L -> Mukai extension of L'
    int phi_sign = 1;              // phi~ o exp(B) = exp(B') o (phi_sign phi) on Lambda_B
};

inline BFieldLift extend_to_mukai(const RationalIsometry& phi, const BField& bf, std::span<const Int> b_target)
{
    BFieldLift lift;
    lift.phi = phi;
    lift.source = bf;
    lift.b_target.assign(b_target.begin(), b_target.end());
    lift.B_target.reserve(b_target.size());
    for (const Int& x : b_target) lift.B_target.push_back(Rat(x) / Rat(bf.n));
    lift.lambda_source = lambda_B(phi.source, bf.B);
    lift.lambda_target = lambda_B(phi.target, lift.B_target);
    lift.phi_tilde = RationalIsometry{mukai_extension(phi.source), mukai_extension(phi.target),
                                      mukai_extension_matrix(phi, bf, b_target)};
    return lift;
}

// b' := -phi(b).
inline BFieldLift extend_to_mukai(const RationalIsometry& phi, const BField& bf)
{
    const IntVector b_target = to_integer(-phi(std::span<const Int>(bf.b)));
    return extend_to_mukai(phi, bf, b_target);
}

// If phi~ reverses the orientation of positive directions, compose with
// id + (-id) + id and negate B'. Idempotent.
inline BFieldLift fix_orientation(BFieldLift lift, std::span<const Frame> target_frames)
{
    const Lattice& mukai = lift.phi_tilde.target;
    if (orientation_sign(mukai, lift.phi_tilde.matrix, target_frames) > 0) return lift;
    const RatMatrix flip = orientation_flip(lift.phi.target.rank());
    if (orientation_sign(mukai, flip, target_frames) > 0)
        throw math_error("orientation: id + (-id) + id preserves orientation on this lattice");
    lift.phi_tilde.matrix = flip * lift.phi_tilde.matrix;
    for (Int& x : lift.b_target) x = -x;
    for (Rat& x : lift.B_target) x = -x;
    lift.lambda_target = lambda_B(lift.phi.target, lift.B_target);
    lift.phi_sign = -lift.phi_sign;
    return lift;
}

struct LiftChecks {
    bool isometry = false;
    bool integral = false;             // phi~ and its inverse are integral
    bool diagram_commutes = false;     // on a basis of Lambda_B
    bool swaps_complement = false;     // phi~ exchanges b + ne + f and -f (before a fix)
    bool lambda_index_ok = false;      // [L : Lambda_B] = |n| with cyclic quotient, both sides
    std::string witness;               // first failure, if any

    bool all() const { return isometry && integral && diagram_commutes && swaps_complement && lambda_index_ok; }
};

inline LiftChecks check_lift(const BFieldLift& lift)
{
    LiftChecks c;
    auto fail = [&](const std::string& w) {
        if (c.witness.empty()) c.witness = w;
    };
    const Lattice& src = lift.phi.source;
    const std::size_t n = src.rank();
    const RatMatrix& m = lift.phi_tilde.matrix;

    c.isometry = is_isometry(lift.phi_tilde.source, lift.phi_tilde.target, m);
    if (!c.isometry) fail("phi~ does not preserve the Mukai pairing");

    c.integral = is_integral(m);
    if (c.integral) {
        try {
            c.integral = is_integral(inverse(m));
            if (!c.integral) fail("phi~^{-1} is not integral");
        } catch (const math_error&) {
            c.integral = false;
            fail("phi~ is singular");
        }
    } else {
        for (std::size_t i = 0; i < m.rows() && c.witness.empty(); ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
                if (!is_integral(m(i, j))) {
                    fail("phi~ entry (" + std::to_string(i) + "," + std::to_string(j) + ") = " + m(i, j).get_str() +
                         " is not integral");
                    break;
                }
    }

    c.diagram_commutes = true;
    const Rat sgn = lift.phi_sign;
    for (const IntVector& x : lift.lambda_source.generators()) {
        const RatVector lhs = m * exp_b_matrix(src, lift.source.B) * to_rational(x);
        const RatVector phix = sgn * lift.phi(std::span<const Int>(x));
        const RatVector rhs = exp_b_matrix(lift.phi.target, lift.B_target) * phix;
        if (lhs != rhs) {
            c.diagram_commutes = false;
            fail("diagram does not commute at x = " + format_vector(std::span<const Int>(x)));
            break;
        }
    }

    RatMatrix raw = m;
    IntVector b_raw = lift.b_target;
    if (lift.phi_sign < 0) {
        raw = orientation_flip(lift.phi.target.rank()) * m;
        for (Int& x : b_raw) x = -x;
    }
    RatVector first(n + 2, Rat(0)), second(n + 2, Rat(0)), first_t(n + 2, Rat(0)), second_t(n + 2, Rat(0));
    for (std::size_t i = 0; i < n; ++i) {
        first[i] = lift.source.b[i];
        first_t[i] = b_raw[i];
    }
    first[n] = first_t[n] = lift.source.n;
    first[n + 1] = first_t[n + 1] = 1;
    second[n + 1] = second_t[n + 1] = -1;
    c.swaps_complement = raw * first == second_t && raw * second == first_t;
    if (!c.swaps_complement) fail("phi~ does not exchange b + ne + f and -f");

    const Int abs_n = abs_int(lift.source.n);
    auto index_ok = [&](const Sublattice& s) { return s.index && *s.index == abs_n && s.has_cyclic_quotient(); };
    c.lambda_index_ok = index_ok(lift.lambda_source) && index_ok(lift.lambda_target);
    if (!c.lambda_index_ok) fail("Lambda_B does not have cyclic quotient of order |n|");
    return c;
}

// ---------------------------------------------------------------------------
// Brauer classes

// Smallest m >= 1 with (mB . x) in Z for all x in T.
inline Int brauer_order(const Lattice& l, std::span<const Rat> B, const Sublattice& t)
{
    Int m = 1;
    for (const IntVector& x : t.generators()) m = lcm(m, l.pair(B, to_rational(x)).get_den());
    return m;
}

}  // namespace k3iso
