#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace k3iso {

using Int = mpz_class;
using Rat = mpq_class;

using IntVector = std::vector<Int>;
using RatVector = std::vector<Rat>;

// A mathematical precondition does not hold (isotropic reflection vector,
// non-isometry, invalid period, ...). The CLI maps this to exit code 2.
class math_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed input document or unparsable number. CLI exit code 1.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string to_string(const Int& x) { return x.get_str(); }
inline std::string to_string(const Rat& x) { return x.get_str(); }

// Accepts "p", "-p", "p/q". The result is canonical; q == 0 is rejected.
inline Rat parse_rational(const std::string& s)
{
    if (s.empty()) throw parse_error("empty rational");
    const auto slash = s.find('/');
    auto is_int = [](const std::string& t) {
        if (t.empty()) return false;
        std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (i == t.size()) return false;
        for (; i < t.size(); ++i)
            if (t[i] < '0' || t[i] > '9') return false;
        return true;
    };
    const std::string num = s.substr(0, slash);
    const std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    if (!is_int(num) || !is_int(den) || den[0] == '-' || den[0] == '+')
        throw parse_error("not a rational: '" + s + "'");
    Rat r;
    r.get_num() = Int(num[0] == '+' ? num.substr(1) : num, 10);
    r.get_den() = Int(den, 10);
    if (r.get_den() == 0) throw parse_error("zero denominator: '" + s + "'");
    r.canonicalize();
    return r;
}

inline Int parse_integer(const std::string& s)
{
    const Rat r = parse_rational(s);
    if (r.get_den() != 1) throw parse_error("not an integer: '" + s + "'");
    return r.get_num();
}

inline bool is_integral(const Rat& x) { return x.get_den() == 1; }

inline Int abs_int(const Int& x) { return x < 0 ? Int(-x) : x; }

inline Int gcd(const Int& a, const Int& b)
{
    Int g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

inline Int lcm(const Int& a, const Int& b)
{
    Int l;
    mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return l;
}

// Floor division for arbitrary signs.
inline Int floor_div(const Int& a, const Int& b)
{
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

inline int sign(const Rat& x) { return sgn(x); }

}  // namespace k3iso
