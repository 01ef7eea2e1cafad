#pragma once

// Marked Hodge data in the exact CM model: the period is
// sigma = u + sqrt(-d) v with u, v rational vectors in L (x) Q and d > 0
// square-free. (sigma.sigma) = 0 and (sigma.sigma-bar) > 0 become
// (u.v) = 0, (u.u) = d (v.v) and (u.u) + d (v.v) > 0.

#include "k3iso/bfield.hpp"

namespace k3iso {

// re + im sqrt(-d)
struct QuadraticNumber {
    Rat re;
    Rat im;
    Int d = 1;

    bool is_zero() const { return re == 0 && im == 0; }

    friend QuadraticNumber operator*(const QuadraticNumber& a, const QuadraticNumber& b)
    {
        if (a.d != b.d) throw std::invalid_argument("QuadraticNumber: different fields");
        return {a.re * b.re - Rat(a.d) * a.im * b.im, a.re * b.im + a.im * b.re, a.d};
    }
    friend bool operator==(const QuadraticNumber& a, const QuadraticNumber& b)
    {
        return a.re == b.re && a.im == b.im && (a.d == b.d || (a.im == 0 && b.im == 0));
    }

    std::string str() const { return re.get_str() + " + " + im.get_str() + "*sqrt(-" + d.get_str() + ")"; }
};

inline bool is_square_free(const Int& d)
{
    if (d <= 0) return false;
    for (Int p = 2; p * p <= d; ++p)
        if (d % (p * p) == 0) return false;
    return true;
}

struct MarkedHodgeData {
    Lattice lattice;
    RatVector u;  // Re sigma
    RatVector v;  // Im sigma / sqrt(d)
    Int d;
};

// Returns the datum or throws math_error naming the failed identity.
inline MarkedHodgeData validate_period(const Lattice& l, RatVector u, RatVector v, const Int& d)
{
    if (u.size() != l.rank() || v.size() != l.rank()) throw math_error("period: vector length does not match lattice rank");
    if (!is_square_free(d)) throw math_error("period: d = " + d.get_str() + " is not a positive square-free integer");
    const Rat uv = l.pair(u, v);
    if (uv != 0) throw math_error("period: (u.v) = 0 fails, (u.v) = " + uv.get_str());
    const Rat uu = l.square(u), vv = l.square(v);
    if (uu != Rat(d) * vv)
        throw math_error("period: (u.u) = d (v.v) fails, " + uu.get_str() + " != " + d.get_str() + " * " + vv.get_str());
    if (uu + Rat(d) * vv <= 0) throw math_error("period: (u.u) + d (v.v) > 0 fails");
    return MarkedHodgeData{l, std::move(u), std::move(v), d};
}

inline MarkedHodgeData transport(const RationalIsometry& phi, const MarkedHodgeData& h)
{
    return validate_period(phi.target, phi(h.u), phi(h.v), h.d);
}

struct HodgeDecomposition {
    Sublattice ns;               // {x : (x.u) = (x.v) = 0}
    Sublattice t;                // ns^perp, primitive
    std::size_t picard_number = 0;
    bool projective = false;     // ns contains a vector of positive square
};

inline HodgeDecomposition hodge_decomposition(const MarkedHodgeData& h)
{
    const Lattice& l = h.lattice;
    RatMatrix forms(2, l.rank());
    const RatVector gu = l.dual(h.u), gv = l.dual(h.v);
    for (std::size_t j = 0; j < l.rank(); ++j) {
        forms(0, j) = gu[j];
        forms(1, j) = gv[j];
    }
    HodgeDecomposition out;
    out.ns = sublattice_from_generators(l, integer_kernel(forms));
    out.t = orthogonal_complement(l, out.ns);
    out.picard_number = out.ns.rank();
    out.projective = out.ns.rank() > 0 && inertia(to_rational(out.ns.gram())).positive > 0;
    return out;
}

// Rational vectors of positive square in NS (x) Q: an orthogonal positive
// vector and pseudo-random perturbations of it. Empty when NS has none.
inline std::vector<RatVector> positive_ns_vectors(const MarkedHodgeData& h, std::size_t count, std::uint64_t seed = 7)
{
    const HodgeDecomposition dec = hodge_decomposition(h);
    std::vector<RatVector> out;
    if (!dec.projective) return out;
    const RatMatrix basis = to_rational(dec.ns.basis);
    const CongruenceDiagonalization cd = congruence_diagonalize(to_rational(dec.ns.gram()));
    std::size_t k = 0;
    while (cd.diagonal[k] <= 0) ++k;
    const RatVector base = cd.transform.column(k);
    out.push_back(basis * base);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> coeff(-2, 2);
    int scale = 2;
    while (out.size() < count) {
        RatVector c = base;
        for (Rat& x : c) x += Rat(coeff(rng)) / scale;
        RatVector w = basis * c;
        if (h.lattice.square(w) > 0) out.push_back(std::move(w));
        else ++scale;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Hodge isometries

enum class HodgeStatus { hodge, not_hodge, out_of_model };

struct HodgeIsometryResult {
    HodgeStatus status = HodgeStatus::not_hodge;
    std::optional<QuadraticNumber> lambda;  // phi(sigma) = lambda sigma'

    bool is_hodge() const { return status == HodgeStatus::hodge; }
};

// Periods over different fields Q(sqrt(-d)) are reported as out of model.
inline HodgeIsometryResult is_hodge_isometry(const RationalIsometry& phi, const MarkedHodgeData& h,
                                             const MarkedHodgeData& h2)
{
    HodgeIsometryResult r;
    if (h.d != h2.d) {
        r.status = HodgeStatus::out_of_model;
        return r;
    }
    const Lattice& l2 = h2.lattice;
    const RatVector pu = phi(h.u), pv = phi(h.v);
    const Rat uu = l2.square(h2.u);
    if (sgn(uu) == 0) throw math_error("period: u' is isotropic");
    const Rat alpha = l2.pair(pu, h2.u) / uu;
    const Rat beta = l2.pair(pv, h2.u) / uu;
    const Rat d = h.d;
    // lambda sigma' = (alpha u' - d beta v') + sqrt(-d) (beta u' + alpha v')
    const RatVector re = alpha * h2.u - Rat(d * beta) * h2.v;
    const RatVector im = beta * h2.u + alpha * h2.v;
    if (re == pu && im == pv) {
        r.status = HodgeStatus::hodge;
        r.lambda = QuadraticNumber{alpha, beta, h.d};
    }
    return r;
}

// ---------------------------------------------------------------------------
// Twisted Hodge structures on the Mukai extension

struct TwistedHodgeData {
    MarkedHodgeData base;
    RatVector B;
    RatVector sigma_re;        // Re part of exp(B)(sigma) = (0, u, (B.u))
    RatVector sigma_im;        // (0, v, (B.v)); sigma_B = sigma_re + sqrt(-d) sigma_im
    QuadraticNumber b_sigma;   // (B.sigma)
    bool isotropic = false;    // (sigma_B . sigma_B) = 0
    bool complement_is_11 = false;  // (exp(B)(Lambda_B))^perp pairs to zero with sigma_B
};

inline TwistedHodgeData twist_hodge(const MarkedHodgeData& h, RatVector B)
{
    const Lattice& l = h.lattice;
    TwistedHodgeData t;
    t.base = h;
    t.b_sigma = QuadraticNumber{l.pair(B, h.u), l.pair(B, h.v), h.d};
    t.sigma_re = h.u;
    t.sigma_re.push_back(0);
    t.sigma_re.push_back(t.b_sigma.re);
    t.sigma_im = h.v;
    t.sigma_im.push_back(0);
    t.sigma_im.push_back(t.b_sigma.im);
    t.B = std::move(B);

    const Lattice mukai = mukai_extension(l);
    t.isotropic = mukai.square(t.sigma_re) == Rat(h.d) * mukai.square(t.sigma_im) &&
                  mukai.pair(t.sigma_re, t.sigma_im) == 0;
    const Sublattice perp = orthogonal_complement(mukai, exp_b_image(l, t.B));
    t.complement_is_11 = true;
    for (const IntVector& x : perp.generators()) {
        const RatVector xq = to_rational(x);
        if (mukai.pair(xq, t.sigma_re) != 0 || mukai.pair(xq, t.sigma_im) != 0) t.complement_is_11 = false;
    }
    return t;
}

// Positive frames of the Mukai extension attached to a twisted period:
// {Re sigma_B, Im sigma_B, Re exp(B + i w), Im exp(B + i w)} for positive w in
// NS, and {Re sigma_B, Im sigma_B, e - f, w} whenever that one is positive
// definite. Falls back to lattice-only frames when NS has no positive vector.
inline std::vector<Frame> hodge_frames(const MarkedHodgeData& h, std::span<const Rat> B, std::size_t count)
{
    const Lattice& l = h.lattice;
    const std::size_t n = l.rank();
    const Lattice mukai = mukai_extension(l);
    std::vector<Frame> out;
    const std::vector<RatVector> omegas = positive_ns_vectors(h, count);
    auto lift = [&](std::span<const Rat> z, const Rat& r, const Rat& s) {
        RatVector v(z.begin(), z.end());
        v.push_back(r);
        v.push_back(s);
        return v;
    };
    const RatVector sre = lift(h.u, 0, l.pair(B, h.u));
    const RatVector sim = lift(h.v, 0, l.pair(B, h.v));
    for (const RatVector& w : omegas) {
        const Rat bb = l.square(B), ww = l.square(w);
        out.push_back({sre, sim, lift(B, 1, (bb - ww) / 2), lift(w, 0, l.pair(B, w))});
        RatVector e_minus_f(n + 2, Rat(0));
        e_minus_f[n] = 1;
        e_minus_f[n + 1] = -1;
        Frame alt{sre, sim, e_minus_f, lift(w, 0, 0)};
        RatMatrix gram(4, 4);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) gram(i, j) = mukai.pair(alt[i], alt[j]);
        if (is_positive_definite(gram)) out.push_back(std::move(alt));
    }
    if (out.size() < count) {
        for (Frame& f : stock_positive_frames(mukai, count - out.size())) out.push_back(std::move(f));
    }
    return out;
}

// H_0 = h, H_i = s_{b_i}(H_{i-1}).
inline std::vector<MarkedHodgeData> chain_hodge_data(const MarkedHodgeData& h, std::span<const ReflectionDatum> steps)
{
    std::vector<MarkedHodgeData> out{h};
    for (const ReflectionDatum& r : steps) {
        const RationalIsometry s = reflection(h.lattice, r);
        try {
            out.push_back(transport(s, out.back()));
        } catch (const math_error& e) {
            throw std::logic_error(std::string("isometric image of a valid period failed validation: ") + e.what());
        }
    }
    return out;
}

}  // namespace k3iso
