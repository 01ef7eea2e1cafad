#pragma once

// Formal cohomology rings H*(S) = Q + (L (x) Q) + Q of a K3 surface and
// H*(S) (x) H*(S') of a product, in Kunneth coordinates.
//
// "Raw" coordinates of H*(S): index 0 is H^0, 1..N is H^2, N + 1 is H^4.
// A product class is the (N+2) x (N'+2) matrix K with
// K = sum K(a, b) alpha_a (x) beta_b.

#include "k3iso/lattice.hpp"

#include <concepts>

namespace k3iso {

struct GradedClass {
    Rat r;        // H^0
    RatVector c;  // H^2
    Rat s;        // H^4

    friend bool operator==(const GradedClass&, const GradedClass&) = default;
};

struct ProductClass {
    RatMatrix k;

    friend bool operator==(const ProductClass&, const ProductClass&) = default;
};

// A commutative Q-algebra with unit whose augmentation ideal (elements with
// zero scalar part) is nilpotent: a^nilpotency = 0.
template <class A>
concept NilpotentGradedAlgebra = requires(const A& alg, const typename A::element& x, const Rat& q) {
    { alg.one() } -> std::same_as<typename A::element>;
    { alg.mul(x, x) } -> std::same_as<typename A::element>;
    { alg.add(x, x) } -> std::same_as<typename A::element>;
    { alg.scale(q, x) } -> std::same_as<typename A::element>;
    { alg.scalar(x) } -> std::same_as<Rat>;
    { alg.degree2(x) } -> std::same_as<typename A::element>;
    { A::nilpotency } -> std::convertible_to<int>;
};

// ---------------------------------------------------------------------------
// H*(K3)

class K3Cohomology {
public:
    using element = GradedClass;
    static constexpr int nilpotency = 3;

    explicit K3Cohomology(Lattice l) : lattice_(std::move(l)) {}

    const Lattice& lattice() const { return lattice_; }
    std::size_t rank() const { return lattice_.rank(); }

    GradedClass make(Rat r, RatVector c, Rat s) const
    {
        if (c.size() != rank()) throw std::invalid_argument("graded class: H^2 part has wrong length");
        return {std::move(r), std::move(c), std::move(s)};
    }
    GradedClass zero() const { return {0, RatVector(rank(), Rat(0)), 0}; }
    GradedClass one() const { return {1, RatVector(rank(), Rat(0)), 0}; }

    GradedClass mul(const GradedClass& x, const GradedClass& y) const
    {
        return {x.r * y.r, x.r * y.c + y.r * x.c, x.r * y.s + y.r * x.s + lattice_.pair(x.c, y.c)};
    }
    GradedClass add(const GradedClass& x, const GradedClass& y) const { return {x.r + y.r, x.c + y.c, x.s + y.s}; }
    GradedClass scale(const Rat& q, const GradedClass& x) const { return {q * x.r, q * x.c, q * x.s}; }
    Rat scalar(const GradedClass& x) const { return x.r; }
    GradedClass degree2(const GradedClass& x) const { return {0, x.c, 0}; }

    // <(r,c,s),(r',c',s')> = (c.c') - rs' - r's
    Rat mukai_pairing(const GradedClass& x, const GradedClass& y) const
    {
        return lattice_.pair(x.c, y.c) - x.r * y.s - y.r * x.s;
    }

    // Top-degree coefficient.
    Rat integrate(const GradedClass& x) const { return x.s; }

    RatVector to_raw(const GradedClass& x) const
    {
        RatVector v{x.r};
        v.insert(v.end(), x.c.begin(), x.c.end());
        v.push_back(x.s);
        return v;
    }
    GradedClass from_raw(std::span<const Rat> v) const
    {
        return {v[0], RatVector(v.begin() + 1, v.end() - 1), v[v.size() - 1]};
    }

    // Mukai extension coordinates (z, r, s) of the B-field module.
    GradedClass from_mukai_vector(std::span<const Rat> v) const
    {
        const std::size_t n = rank();
        return {v[n], RatVector(v.begin(), v.begin() + n), v[n + 1]};
    }
    RatVector to_mukai_vector(const GradedClass& x) const
    {
        RatVector v = x.c;
        v.push_back(x.r);
        v.push_back(x.s);
        return v;
    }

private:
    Lattice lattice_;
};

// ---------------------------------------------------------------------------
// H*(S) (x) H*(S')

class ProductCohomology {
public:
    using element = ProductClass;
    static constexpr int nilpotency = 5;  // total degree <= 8

    ProductCohomology(Lattice source, Lattice target) : source_(std::move(source)), target_(std::move(target)) {}

    const K3Cohomology& source() const { return source_; }
    const K3Cohomology& target() const { return target_; }
    std::size_t rows() const { return source_.rank() + 2; }
    std::size_t cols() const { return target_.rank() + 2; }

    ProductClass zero() const { return {RatMatrix(rows(), cols())}; }
    ProductClass one() const
    {
        ProductClass p = zero();
        p.k(0, 0) = 1;
        return p;
    }

    // x (x) y
    ProductClass tensor(const GradedClass& x, const GradedClass& y) const
    {
        const RatVector a = source_.to_raw(x), b = target_.to_raw(y);
        ProductClass p = zero();
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < b.size(); ++j) p.k(i, j) = a[i] * b[j];
        return p;
    }

    ProductClass mul(const ProductClass& x, const ProductClass& y) const
    {
        // Split by the H*(S') factor: x = sum_b X_b (x) beta_b. Products of
        // beta's: 1 is the unit, H^2 . H^2 lands in H^4 via G', the rest is 0.
        const std::size_t n2 = target_.rank();
        const std::size_t top = n2 + 1;
        const RatMatrix& g2 = target_.lattice().gram_q();
        auto col = [&](const RatMatrix& m, std::size_t j) { return raw_mul_left(m.column(j)); };
        ProductClass out = zero();
        auto accumulate = [&](std::size_t j, const RatVector& v) {
            for (std::size_t i = 0; i < v.size(); ++i) out.k(i, j) += v[i];
        };
        const RawFactor x0 = col(x.k, 0);
        for (std::size_t j = 0; j < cols(); ++j) accumulate(j, x0(y.k.column(j)));
        const RatVector y0 = y.k.column(0);
        for (std::size_t j = 1; j < cols(); ++j) accumulate(j, col(x.k, j)(y0));
        // H^2 x H^2 -> H^4 on S'
        for (std::size_t a = 1; a <= n2; ++a) {
            RatVector ymix(rows(), Rat(0));
            for (std::size_t b = 1; b <= n2; ++b) {
                const Rat& gab = g2(a - 1, b - 1);
                if (gab == 0) continue;
                for (std::size_t i = 0; i < rows(); ++i)
                    if (y.k(i, b) != 0) ymix[i] += gab * y.k(i, b);
            }
            if (is_zero(ymix)) continue;
            accumulate(top, col(x.k, a)(ymix));
        }
        return out;
    }

    ProductClass add(const ProductClass& x, const ProductClass& y) const { return {x.k + y.k}; }
    ProductClass scale(const Rat& q, const ProductClass& x) const { return {q * x.k}; }
    Rat scalar(const ProductClass& x) const { return x.k(0, 0); }

    // Components of total degree 2: H^2(S) (x) 1 and 1 (x) H^2(S').
    ProductClass degree2(const ProductClass& x) const
    {
        ProductClass p = zero();
        for (std::size_t i = 1; i <= source_.rank(); ++i) p.k(i, 0) = x.k(i, 0);
        for (std::size_t j = 1; j <= target_.rank(); ++j) p.k(0, j) = x.k(0, j);
        return p;
    }

    // b (x) 1 + 1 (x) b'
    ProductClass degree2_class(std::span<const Rat> b, std::span<const Rat> b_target) const
    {
        ProductClass p = zero();
        for (std::size_t i = 0; i < b.size(); ++i) p.k(i + 1, 0) = b[i];
        for (std::size_t j = 0; j < b_target.size(); ++j) p.k(0, j + 1) = b_target[j];
        return p;
    }

    // Poincare pairing on S in raw coordinates: w = P x with
    // w_a = integral of x . alpha_a.
    RatMatrix source_poincare() const
    {
        const std::size_t n = source_.rank();
        RatMatrix p(n + 2, n + 2);
        p(0, n + 1) = 1;
        p(n + 1, 0) = 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p(1 + i, 1 + j) = source_.lattice().gram_q()(i, j);
        return p;
    }

    // Matrix of x -> p_*(q^* x . K) in raw coordinates.
    RatMatrix action_matrix(const ProductClass& kernel) const { return kernel.k.transpose() * source_poincare(); }

    GradedClass correspondence_action(const ProductClass& kernel, const GradedClass& x) const
    {
        return target_.from_raw(action_matrix(kernel) * source_.to_raw(x));
    }

    // The class whose correspondence action is the given raw-coordinate map
    // F: H*(S) -> H*(S'), (N'+2) x (N+2).
    ProductClass from_action(const RatMatrix& f) const
    {
        return {(f * inverse(source_poincare())).transpose()};
    }

    // Kunneth diagonal when S = S'.
    ProductClass diagonal() const { return from_action(RatMatrix::identity(rows())); }

    // (2,2) component read as a map L (x) Q -> L' (x) Q.
    RatMatrix extract_22(const ProductClass& kernel) const
    {
        const std::size_t n = source_.rank(), n2 = target_.rank();
        const RatMatrix k22 = kernel.k.block(1, 1, n, n2);
        return k22.transpose() * source_.lattice().gram_q();
    }

private:
    // Left multiplication by a raw H*(S) class, as a function on raw vectors.
    using RawFactor = std::function<RatVector(const RatVector&)>;
    RawFactor raw_mul_left(RatVector a) const
    {
        return [this, a = std::move(a)](const RatVector& b) {
            const std::size_t n = source_.rank();
            RatVector out(n + 2, Rat(0));
            out[0] = a[0] * b[0];
            for (std::size_t i = 1; i <= n; ++i) out[i] = a[0] * b[i] + b[0] * a[i];
            const std::span<const Rat> ac(a.data() + 1, n), bc(b.data() + 1, n);
            out[n + 1] = a[0] * b[n + 1] + b[0] * a[n + 1] + source_.lattice().pair(ac, bc);
            return out;
        };
    }

    K3Cohomology source_;
    K3Cohomology target_;
};

// Rebuilds a Mukai-extension map (coordinates (z, r, s)) as a raw-coordinate
// map H*(S) -> H*(S').
inline RatMatrix mukai_map_to_raw(const RatMatrix& m)
{
    const std::size_t n = m.cols() - 2, n2 = m.rows() - 2;
    auto src = [&](std::size_t raw) { return raw == 0 ? n : raw == n + 1 ? n + 1 : raw - 1; };
    auto dst = [&](std::size_t raw) { return raw == 0 ? n2 : raw == n2 + 1 ? n2 + 1 : raw - 1; };
    RatMatrix f(n2 + 2, n + 2);
    for (std::size_t i = 0; i < n2 + 2; ++i)
        for (std::size_t j = 0; j < n + 2; ++j) f(i, j) = m(dst(i), src(j));
    return f;
}

// ---------------------------------------------------------------------------
// Generic formal operations

template <NilpotentGradedAlgebra A>
typename A::element power(const A& alg, const typename A::element& x, unsigned n)
{
    typename A::element out = alg.one();
    for (unsigned i = 0; i < n; ++i) out = alg.mul(out, x);
    return out;
}

template <NilpotentGradedAlgebra A>
typename A::element exp_nilpotent(const A& alg, const typename A::element& a)
{
    if (alg.scalar(a) != 0) throw math_error("exp: argument has a nonzero scalar part");
    typename A::element out = alg.one(), term = alg.one();
    for (int k = 1; k < A::nilpotency; ++k) {
        term = alg.scale(Rat(1, k), alg.mul(term, a));
        out = alg.add(out, term);
    }
    return out;
}

template <NilpotentGradedAlgebra A>
typename A::element inverse(const A& alg, const typename A::element& x)
{
    const Rat r = alg.scalar(x);
    if (r == 0) throw math_error("inverse: scalar part is zero");
    // x = r (1 + a), x^{-1} = r^{-1} sum (-a)^k
    const typename A::element a = alg.add(alg.scale(1 / r, x), alg.scale(Rat(-1), alg.one()));
    typename A::element out = alg.one(), term = alg.one();
    for (int k = 1; k < A::nilpotency; ++k) {
        term = alg.scale(Rat(-1), alg.mul(term, a));
        out = alg.add(out, term);
    }
    return alg.scale(1 / r, out);
}

// Rational n-th root with the positive branch for even n.
inline std::optional<Rat> rational_root(const Rat& q, unsigned n)
{
    if (n == 0) return std::nullopt;
    if (q < 0 && n % 2 == 0) return std::nullopt;
    const Rat aq = abs(q);
    Int num, den;
    if (mpz_root(num.get_mpz_t(), aq.get_num_mpz_t(), n) == 0) return std::nullopt;
    if (mpz_root(den.get_mpz_t(), aq.get_den_mpz_t(), n) == 0) return std::nullopt;
    Rat root(num, den);
    root.canonicalize();
    return q < 0 ? Rat(-root) : root;
}

// The n-th root whose scalar part is the positive (even n) or real (odd n)
// rational root of the scalar part of x.
template <NilpotentGradedAlgebra A>
typename A::element nth_root(const A& alg, const typename A::element& x, unsigned n)
{
    if (n == 0) throw std::invalid_argument("nth_root: n must be positive");
    const Rat r = alg.scalar(x);
    if (r == 0) throw math_error("nth_root: scalar part is zero");
    const std::optional<Rat> rho = rational_root(r, n);
    if (!rho) throw math_error("nth_root: scalar part " + r.get_str() + " has no rational root of order " + std::to_string(n));
    // (1 + a)^{1/n} = sum binom(1/n, k) a^k
    const typename A::element a = alg.add(alg.scale(1 / r, x), alg.scale(Rat(-1), alg.one()));
    const Rat e(1, n);
    typename A::element out = alg.one(), term = alg.one();
    Rat binom = 1;
    for (int k = 1; k < A::nilpotency; ++k) {
        binom = binom * (e - (k - 1)) / k;
        term = alg.mul(term, a);
        out = alg.add(out, alg.scale(binom, term));
    }
    out = alg.scale(*rho, out);
    if (!(power(alg, out, n) == x)) throw std::logic_error("nth_root: root does not reproduce its input");
    return out;
}

// The mn-th root of x^m agrees with the n-th root of x.
template <NilpotentGradedAlgebra A>
bool root_compatibility(const A& alg, const typename A::element& x, unsigned n, unsigned m)
{
    return nth_root(alg, power(alg, x, m), m * n) == nth_root(alg, x, n);
}

// Whether x = exp(delta) for its own degree-2 part delta.
template <NilpotentGradedAlgebra A>
bool is_exp_of_degree2(const A& alg, const typename A::element& x)
{
    return alg.scalar(x) == 1 && exp_nilpotent(alg, alg.degree2(x)) == x;
}

// n-th root of exp(-b (x) 1 + 1 (x) b') . gamma, n > 0.
inline ProductClass twisted_chern(const ProductCohomology& alg, const ProductClass& gamma, std::span<const Rat> b,
                                  std::span<const Rat> b_target, unsigned n)
{
    const ProductClass shift = exp_nilpotent(alg, alg.degree2_class(-RatVector(b.begin(), b.end()), b_target));
    return nth_root(alg, alg.mul(shift, gamma), n);
}

template <NilpotentGradedAlgebra A>
struct KappaReport {
    typename A::element kappa;      // n-th root of gamma . exp(-c1)
    typename A::element root;       // n-th root of gamma
    typename A::element ratio;      // kappa / root
    typename A::element c1;         // degree-2 part of gamma / (n r^{n-1})
    bool ratio_is_exponential = false;
    // Whether the ratio equals exp(-deg2(gamma)/n^3); informative only.
    bool cubic_normalization_agrees = false;
};

// gamma models ch(E^{(x)n}) for E of rank r: scalar part r^n.
template <NilpotentGradedAlgebra A>
KappaReport<A> kappa_class(const A& alg, const typename A::element& gamma, unsigned n, const Rat& r)
{
    if (r == 0) throw math_error("kappa: rank must be nonzero");
    Rat rn = 1;
    for (unsigned i = 0; i < n; ++i) rn *= r;
    if (alg.scalar(gamma) != rn) throw math_error("kappa: scalar part is not r^n");
    KappaReport<A> rep;
    rep.c1 = alg.scale(1 / (Rat(n) * rn / r), alg.degree2(gamma));
    rep.kappa = nth_root(alg, alg.mul(gamma, exp_nilpotent(alg, alg.scale(Rat(-1), rep.c1))), n);
    rep.root = nth_root(alg, gamma, n);
    rep.ratio = alg.mul(rep.kappa, inverse(alg, rep.root));
    rep.ratio_is_exponential = is_exp_of_degree2(alg, rep.ratio);
    const Rat n3 = Rat(n) * n * n;
    rep.cubic_normalization_agrees = rep.ratio == exp_nilpotent(alg, alg.scale(Rat(-1) / n3, alg.degree2(gamma)));
    return rep;
}

// Convenience wrappers on H*(K3).
inline GradedClass mul(const K3Cohomology& h, const GradedClass& x, const GradedClass& y) { return h.mul(x, y); }
inline Rat mukai_pairing(const K3Cohomology& h, const GradedClass& x, const GradedClass& y)
{
    return h.mukai_pairing(x, y);
}
inline GradedClass sqrt_td(const K3Cohomology& h) { return h.make(1, RatVector(h.rank(), Rat(0)), 1); }

inline GradedClass correspondence_action(const ProductCohomology& alg, const ProductClass& k, const GradedClass& x)
{
    return alg.correspondence_action(k, x);
}
inline RatMatrix extract_22(const ProductCohomology& alg, const ProductClass& k) { return alg.extract_22(k); }

}  // namespace k3iso
