#pragma once

#include "k3iso/lattice.hpp"

#include <random>

namespace k3iso {

// A rational matrix between the ambient Q-spaces of two lattices of equal rank
// with M^T G_target M = G_source.
struct RationalIsometry {
    Lattice source;
    Lattice target;
    RatMatrix matrix;

    RatVector operator()(std::span<const Rat> x) const { return matrix * x; }
    RatVector operator()(const RatVector& x) const { return matrix * std::span<const Rat>(x); }
    RatVector operator()(std::span<const Int> x) const { return matrix * to_rational(x); }
};

inline bool is_isometry(const Lattice& source, const Lattice& target, const RatMatrix& m)
{
    if (source.rank() != target.rank() || !m.square() || m.rows() != source.rank())
        throw std::invalid_argument("is_isometry: rank mismatch");
    if (m.transpose() * target.gram_q() * m != source.gram_q()) return false;
    return source.is_nondegenerate() || determinant(m) != 0;
}

inline RationalIsometry make_isometry(const Lattice& source, const Lattice& target, RatMatrix m)
{
    if (!is_isometry(source, target, m)) throw math_error("matrix is not an isometry");
    return RationalIsometry{source, target, std::move(m)};
}

// a o b
inline RationalIsometry compose(const RationalIsometry& a, const RationalIsometry& b)
{
    return RationalIsometry{b.source, a.target, a.matrix * b.matrix};
}

inline RationalIsometry inverse(const RationalIsometry& a)
{
    return RationalIsometry{a.target, a.source, inverse(a.matrix)};
}

// ---------------------------------------------------------------------------
// Reflections

struct ReflectionDatum {
    IntVector b;   // primitive
    Int square;    // (b)^2, nonzero

    friend bool operator==(const ReflectionDatum&, const ReflectionDatum&) = default;
};

// x -> x - 2 (x.b)/(b.b) b, i.e. I - (2/(b.b)) b (G b)^T.
inline RatMatrix reflection_matrix(const Lattice& l, std::span<const Rat> b)
{
    const Rat bb = l.square(b);
    if (bb == 0) throw math_error("reflection in an isotropic vector");
    const RatVector gb = l.dual(b);
    const std::size_t n = l.rank();
    RatMatrix m = RatMatrix::identity(n);
    const Rat c = Rat(2) / bb;
    for (std::size_t i = 0; i < n; ++i) {
        if (b[i] == 0) continue;
        for (std::size_t j = 0; j < n; ++j)
            if (gb[j] != 0) m(i, j) -= c * b[i] * gb[j];
    }
    return m;
}

inline RationalIsometry reflection(const Lattice& l, std::span<const Int> b)
{
    return RationalIsometry{l, l, reflection_matrix(l, to_rational(b))};
}

inline RationalIsometry reflection(const Lattice& l, const ReflectionDatum& d) { return reflection(l, d.b); }

// The primitive integral vector on the ray of v (same reflection).
inline ReflectionDatum make_primitive(const Lattice& l, std::span<const Rat> v)
{
    if (is_zero(v)) throw math_error("make_primitive: zero vector");
    if (l.square(v) == 0) throw math_error("make_primitive: isotropic vector");
    IntVector b = primitive_multiple(v);
    Int sq = l.square(std::span<const Int>(b));
    return ReflectionDatum{std::move(b), std::move(sq)};
}

inline ReflectionDatum make_primitive(const Lattice& l, const RatVector& v)
{
    return make_primitive(l, std::span<const Rat>(v));
}

// s_{b_1} o s_{b_2} o ... o s_{b_k}
inline RatMatrix compose_reflections(const Lattice& l, std::span<const ReflectionDatum> data)
{
    RatMatrix m = RatMatrix::identity(l.rank());
    for (const ReflectionDatum& d : data) m = m * reflection_matrix(l, to_rational(d.b));
    return m;
}

// ---------------------------------------------------------------------------
// Cartan-Dieudonne

namespace detail {

// (psi - 1)^T G (psi - 1); zero iff the image of psi - 1 is totally isotropic.
inline RatMatrix moved_form(const Lattice& l, const RatMatrix& psi)
{
    RatMatrix d = psi - RatMatrix::identity(l.rank());
    return d.transpose() * l.gram_q() * d;
}

// s_w o psi as a rank-one update.
inline RatMatrix reflect_left(const Lattice& l, std::span<const Rat> w, const RatMatrix& psi)
{
    const Rat c = Rat(2) / l.square(w);
    const RatVector gw = l.dual(w);
    RatVector row(psi.cols(), Rat(0));  // (G w)^T psi
    for (std::size_t k = 0; k < psi.rows(); ++k) {
        if (gw[k] == 0) continue;
        for (std::size_t j = 0; j < psi.cols(); ++j)
            if (psi(k, j) != 0) row[j] += gw[k] * psi(k, j);
    }
    RatMatrix out = psi;
    for (std::size_t i = 0; i < psi.rows(); ++i) {
        if (w[i] == 0) continue;
        const Rat cw = c * w[i];
        for (std::size_t j = 0; j < psi.cols(); ++j)
            if (row[j] != 0) out(i, j) -= cw * row[j];
    }
    return out;
}

// Deterministic stream of test vectors: e_i, e_i + e_j, e_i - e_j, then small
// pseudo-random integer vectors.
class CandidateVectors {
public:
    explicit CandidateVectors(std::size_t n) : n_(n), rng_(0x5eed) {}

    RatVector next()
    {
        RatVector v(n_, Rat(0));
        if (stage_ == 0) {
            v[i_] = 1;
            if (++i_ == n_) advance_stage();
        } else if (stage_ == 1 || stage_ == 2) {
            v[i_] = 1;
            v[j_] = stage_ == 1 ? 1 : -1;
            if (++j_ == n_) {
                ++i_;
                j_ = i_ + 1;
                if (j_ >= n_) advance_stage();
            }
        } else {
            std::uniform_int_distribution<int> coeff(-3, 3);
            do {
                for (auto& x : v) x = coeff(rng_);
            } while (is_zero(v));
        }
        return v;
    }

private:
    void advance_stage()
    {
        ++stage_;
        i_ = 0;
        j_ = 1;
        if (stage_ <= 2 && n_ < 2) stage_ = 3;
    }

    std::size_t n_;
    int stage_ = 0;
    std::size_t i_ = 0, j_ = 1;
    std::mt19937_64 rng_;
};

inline constexpr int max_candidate_trials = 20000;

}  // namespace detail

// Factors phi = s_{b_1} o ... o s_{b_k} with primitive anisotropic b_i and
// k <= rank. Each step reflects in w = psi(v) - v for a vector v moved by the
// residual psi, which enlarges the fixed space of the residual by one; v is
// chosen so the next residual does not have a totally isotropic image of
// psi - 1. If the residual itself is in that isotropic case, one auxiliary
// reflection is applied first.
inline std::vector<ReflectionDatum> cartan_dieudonne(const RationalIsometry& phi)
{
    const Lattice& l = phi.source;
    if (!(phi.source == phi.target)) throw std::invalid_argument("cartan_dieudonne: source and target differ");
    if (!is_isometry(phi.source, phi.target, phi.matrix)) throw math_error("cartan_dieudonne: not an isometry");
    if (!l.is_nondegenerate()) throw math_error("cartan_dieudonne: degenerate lattice");

    const std::size_t n = l.rank();
    const RatMatrix id = RatMatrix::identity(n);
    RatMatrix psi = phi.matrix;
    std::vector<ReflectionDatum> out;

    while (psi != id) {
        if (out.size() >= n) throw std::logic_error("cartan_dieudonne: reflection count exceeded the rank");
        const bool isotropic_case = detail::moved_form(l, psi).is_zero();
        detail::CandidateVectors candidates(n);
        bool found = false;
        for (int trial = 0; trial < detail::max_candidate_trials && !found; ++trial) {
            const RatVector v = candidates.next();
            RatVector w = isotropic_case ? v : (psi * v) - v;
            if (is_zero(w) || l.square(w) == 0) continue;
            RatMatrix next = detail::reflect_left(l, w, psi);
            if (next != id && detail::moved_form(l, next).is_zero()) continue;
            out.push_back(make_primitive(l, w));
            psi = std::move(next);
            found = true;
        }
        if (!found) throw std::logic_error("cartan_dieudonne: no admissible reflection found");
    }
    if (compose_reflections(l, out) != phi.matrix) throw std::logic_error("cartan_dieudonne: recomposition failed");
    return out;
}

// ---------------------------------------------------------------------------
// Cyclicity

struct CyclicityReport {
    bool cyclic = false;
    Sublattice preimage;  // L ∩ phi^{-1}(L)
    Sublattice image;     // L ∩ phi(L)
    Int preimage_order;   // [L : preimage]
    Int image_order;      // [L : image]
};

inline CyclicityReport is_cyclic(const RationalIsometry& phi)
{
    if (!(phi.source == phi.target)) throw std::invalid_argument("is_cyclic: source and target differ");
    const Lattice& l = phi.source;
    CyclicityReport r;
    r.preimage = sublattice_from_generators(l, integral_preimage(phi.matrix));
    r.image = sublattice_from_generators(l, integral_preimage(inverse(phi.matrix)));
    r.preimage_order = *r.preimage.index;
    r.image_order = *r.image.index;
    r.cyclic = r.preimage.has_cyclic_quotient() && r.image.has_cyclic_quotient();
    return r;
}

}  // namespace k3iso
