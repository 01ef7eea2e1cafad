#pragma once

// Isogeny certificates: a Hodge isometry phi between two marked CM data is
// factored into reflections s_{b_1}, ..., s_{b_k} (applied in that order), and
// every reflection is lifted to an integral isometry of Mukai extensions.

#include "k3iso/hodge.hpp"
#include "k3iso/mukai.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <functional>

namespace k3iso {

using json = nlohmann::json;

inline constexpr const char* input_format = "k3iso-input/1";
inline constexpr const char* certificate_format = "k3iso-certificate/1";
inline constexpr const char* decomposition_format = "k3iso-decomposition/1";
inline constexpr const char* lift_format = "k3iso-lift/1";
inline constexpr const char* report_format = "k3iso-report/1";

inline constexpr const char* conventions =
    "matrices act on column vectors and are stored as lists of rows; "
    "Mukai extension coordinates (z, r, s) = z + r e + s f with (e.e) = (f.f) = 0, (e.f) = -1; "
    "exp(B)(x) = x + (B.x) f; s_b(x) = x - 2 (x.b)/(b.b) b; "
    "period sigma = u + sqrt(-d) v; "
    "steps are listed in application order, phi = s_{b_k} o ... o s_{b_1}";

inline constexpr std::size_t frames_per_step = 3;

// ---------------------------------------------------------------------------
// JSON encoding

namespace io {

inline json rat(const Rat& x) { return x.get_str(); }
inline json integer(const Int& x) { return x.get_str(); }

template <class T>
json vec(const std::vector<T>& v)
{
    json a = json::array();
    for (const T& x : v) a.push_back(x.get_str());
    return a;
}

template <class T>
json mat(const Matrix<T>& m)
{
    json a = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) a.push_back(vec(m.row(i)));
    return a;
}

[[noreturn]] inline void fail(const std::string& where, const std::string& what)
{
    throw parse_error(where + ": " + what);
}

// In strict mode only the canonical spelling of a rational is accepted.
inline Rat to_rat(const json& j, const std::string& where, bool strict)
{
    if (!j.is_string()) fail(where, "expected a rational string");
    const std::string s = j.get<std::string>();
    Rat r;
    try {
        r = parse_rational(s);
    } catch (const parse_error& e) {
        fail(where, e.what());
    }
    if (strict && r.get_str() != s) fail(where, "non-canonical rational '" + s + "'");
    return r;
}

inline Int to_int(const json& j, const std::string& where, bool strict)
{
    const Rat r = to_rat(j, where, strict);
    if (!is_integral(r)) fail(where, "expected an integer");
    return r.get_num();
}

inline RatVector to_rat_vector(const json& j, const std::string& where, bool strict, std::optional<std::size_t> size = {})
{
    if (!j.is_array()) fail(where, "expected an array");
    if (size && j.size() != *size) fail(where, "expected " + std::to_string(*size) + " entries");
    RatVector v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(to_rat(j[i], where + "[" + std::to_string(i) + "]", strict));
    return v;
}

inline IntVector to_int_vector(const json& j, const std::string& where, bool strict, std::optional<std::size_t> size = {})
{
    const RatVector v = to_rat_vector(j, where, strict, size);
    if (!is_integral(v)) fail(where, "expected integers");
    return to_integer(v);
}

inline RatMatrix to_rat_matrix(const json& j, const std::string& where, bool strict, std::size_t rows, std::size_t cols)
{
    if (!j.is_array() || j.size() != rows) fail(where, "expected " + std::to_string(rows) + " rows");
    RatMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const RatVector r = to_rat_vector(j[i], where + "[" + std::to_string(i) + "]", strict, cols);
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = r[k];
    }
    return m;
}

inline const json& field(const json& obj, const std::string& key, const std::string& where)
{
    if (!obj.is_object()) fail(where, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(where, "missing field '" + key + "'");
    return *it;
}

// Rejects objects whose key set differs from the expected one.
inline void exact_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!obj.is_object()) fail(where, "expected an object");
    for (const char* k : keys)
        if (!obj.contains(k)) fail(where, std::string("missing field '") + k + "'");
    if (obj.size() != keys.size()) {
        for (const auto& [k, v] : obj.items()) {
            bool known = false;
            for (const char* e : keys) known = known || k == e;
            if (!known) fail(where, "unexpected field '" + k + "'");
        }
    }
}

inline bool to_bool(const json& j, const std::string& where)
{
    if (!j.is_boolean()) fail(where, "expected a boolean");
    return j.get<bool>();
}

inline std::size_t to_size(const json& j, const std::string& where)
{
    if (!j.is_number_unsigned()) fail(where, "expected a non-negative integer");
    return j.get<std::size_t>();
}

inline int to_sign(const json& j, const std::string& where)
{
    if (!j.is_number_integer()) fail(where, "expected -1 or 1");
    const auto v = j.get<std::int64_t>();
    if (v != 1 && v != -1) fail(where, "expected -1 or 1");
    return static_cast<int>(v);
}

inline std::string to_str(const json& j, const std::string& where)
{
    if (!j.is_string()) fail(where, "expected a string");
    return j.get<std::string>();
}

inline json parse_document(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what());
    }
}

// Compact, keys sorted; the byte form that digests and canonical checks use.
inline std::string canonical(const json& j) { return j.dump(); }

inline std::string fnv1a64(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

}  // namespace io

// ---------------------------------------------------------------------------
// Input documents

struct PipelineInput {
    Lattice lattice;
    MarkedHodgeData source;
    MarkedHodgeData target;
    RatMatrix phi;
};

inline json period_to_json(const MarkedHodgeData& h)
{
    return json{{"u", io::vec(h.u)}, {"v", io::vec(h.v)}, {"d", io::integer(h.d)}};
}

inline MarkedHodgeData period_from_json(const Lattice& l, const json& j, const std::string& where, bool strict)
{
    if (strict) io::exact_keys(j, {"u", "v", "d"}, where);
    const RatVector u = io::to_rat_vector(io::field(j, "u", where), where + ".u", strict, l.rank());
    const RatVector v = io::to_rat_vector(io::field(j, "v", where), where + ".v", strict, l.rank());
    const Int d = io::to_int(io::field(j, "d", where), where + ".d", strict);
    return validate_period(l, u, v, d);
}

// Periods are parsed without validation; validity is a verification check.
inline MarkedHodgeData raw_period_from_json(const Lattice& l, const json& j, const std::string& where)
{
    io::exact_keys(j, {"u", "v", "d"}, where);
    return MarkedHodgeData{l, io::to_rat_vector(j["u"], where + ".u", true, l.rank()),
                           io::to_rat_vector(j["v"], where + ".v", true, l.rank()), io::to_int(j["d"], where + ".d", true)};
}

inline json lattice_to_json(const Lattice& l) { return json{{"label", l.label()}, {"gram", io::mat(l.gram())}}; }

// {"name": "K3"} or {"gram": [[...]]}, with an optional label.
inline Lattice lattice_from_json(const json& j, const std::string& where, bool strict)
{
    if (strict) io::exact_keys(j, {"label", "gram"}, where);
    if (!j.is_object()) io::fail(where, "expected an object");
    if (j.contains("gram")) {
        const json& g = j["gram"];
        if (!g.is_array() || g.empty()) io::fail(where + ".gram", "expected a non-empty matrix");
        const IntMatrix gram = to_integer(io::to_rat_matrix(g, where + ".gram", strict, g.size(), g.size()));
        if (gram.transpose() != gram) throw math_error(where + ".gram: not symmetric");
        const std::string label = j.contains("label") ? io::to_str(j["label"], where + ".label") : "";
        Lattice l(gram, label);
        if (!l.is_nondegenerate()) throw math_error(where + ".gram: degenerate form");
        return l;
    }
    const std::string name = io::to_str(io::field(j, "name", where), where + ".name");
    try {
        return standard_lattice(name);
    } catch (const std::invalid_argument& e) {
        io::fail(where + ".name", e.what());
    }
}

inline json input_to_json(const PipelineInput& in)
{
    return json{{"format", input_format},
                {"lattice", lattice_to_json(in.lattice)},
                {"source", period_to_json(in.source)},
                {"target", period_to_json(in.target)},
                {"isometry", io::mat(in.phi)}};
}

// The target period may be omitted; it then defaults to phi(source).
inline PipelineInput input_from_json(const json& j, bool strict = false)
{
    const std::string where = "input";
    if (strict) io::exact_keys(j, {"format", "lattice", "source", "target", "isometry"}, where);
    if (io::to_str(io::field(j, "format", where), "input.format") != input_format)
        io::fail("input.format", std::string("expected '") + input_format + "'");
    PipelineInput in;
    in.lattice = lattice_from_json(io::field(j, "lattice", where), "input.lattice", strict);
    const std::size_t n = in.lattice.rank();
    in.phi = io::to_rat_matrix(io::field(j, "isometry", where), "input.isometry", strict, n, n);
    if (strict) {
        // certificates: validity is checked by verification
        in.source = raw_period_from_json(in.lattice, j["source"], "input.source");
        in.target = raw_period_from_json(in.lattice, j["target"], "input.target");
        return in;
    }
    if (!is_isometry(in.lattice, in.lattice, in.phi)) throw math_error("input.isometry: not an isometry of the lattice");
    in.source = period_from_json(in.lattice, io::field(j, "source", where), "input.source", strict);
    if (j.contains("target"))
        in.target = period_from_json(in.lattice, j["target"], "input.target", strict);
    else
        in.target = transport(RationalIsometry{in.lattice, in.lattice, in.phi}, in.source);
    return in;
}

inline std::string input_digest(const PipelineInput& in) { return io::fnv1a64(io::canonical(input_to_json(in))); }

// ---------------------------------------------------------------------------
// Steps

struct CertificateStep {
    std::size_t index = 0;
    ReflectionDatum reflection;
    Int n;
    RatVector B;
    IntVector b_target;
    RatVector B_target;
    Int lambda_index;
    IntVector lambda_invariants;
    Int lambda_target_index;
    IntVector lambda_target_invariants;
    RatMatrix phi_tilde;
    int orientation_before = 0;
    int orientation_after = 0;
    int phi_sign = 1;
    Int brauer_source;
    Int brauer_target;
    RatMatrix extract_22;
    MarkedHodgeData source;
    MarkedHodgeData target;
    std::size_t picard_source = 0;
    std::size_t picard_target = 0;
    bool projective_source = false;
    bool projective_target = false;
    bool b_in_ns = false;
};

// Kunneth class of the correspondence with action phi~ on Mukai extensions,
// untwisted by exp(B) (x) exp(-B'); its action is exp(-B') o phi~ o exp(B).
inline ProductClass untwisted_kernel(const ProductCohomology& alg, const RatMatrix& phi_tilde, std::span<const Rat> B,
                                     std::span<const Rat> B_target)
{
    const ProductClass twisted = alg.from_action(mukai_map_to_raw(phi_tilde));
    const RatVector minus_bt = -RatVector(B_target.begin(), B_target.end());
    return alg.mul(exp_nilpotent(alg, alg.degree2_class(B, minus_bt)), twisted);
}

inline std::vector<Frame> step_frames(const MarkedHodgeData& target, std::span<const Rat> B_target)
{
    return hodge_frames(target, B_target, frames_per_step);
}

inline CertificateStep build_step(const MarkedHodgeData& source, const ReflectionDatum& r, std::size_t index)
{
    const Lattice& l = source.lattice;
    CertificateStep st;
    st.index = index;
    st.reflection = r;
    const BField bf = bfield_from_reflection(l, r.b);
    const RationalIsometry s = reflection(l, r);
    st.source = source;
    st.target = transport(s, source);

    BFieldLift lift = extend_to_mukai(s, bf);
    st.orientation_before = orientation_sign(lift.phi_tilde.target, lift.phi_tilde.matrix,
                                             step_frames(st.target, lift.B_target));
    lift = fix_orientation(std::move(lift), step_frames(st.target, lift.B_target));
    st.orientation_after = orientation_sign(lift.phi_tilde.target, lift.phi_tilde.matrix,
                                            step_frames(st.target, lift.B_target));
    st.n = bf.n;
    st.B = bf.B;
    st.b_target = lift.b_target;
    st.B_target = lift.B_target;
    st.lambda_index = *lift.lambda_source.index;
    st.lambda_invariants = lift.lambda_source.quotient_invariants;
    st.lambda_target_index = *lift.lambda_target.index;
    st.lambda_target_invariants = lift.lambda_target.quotient_invariants;
    st.phi_tilde = lift.phi_tilde.matrix;
    st.phi_sign = lift.phi_sign;

    const HodgeDecomposition ds = hodge_decomposition(st.source), dt = hodge_decomposition(st.target);
    st.brauer_source = brauer_order(l, st.B, ds.t);
    st.brauer_target = brauer_order(l, st.B_target, dt.t);
    st.picard_source = ds.picard_number;
    st.picard_target = dt.picard_number;
    st.projective_source = ds.projective;
    st.projective_target = dt.projective;
    st.b_in_ns = ds.ns.contains(std::span<const Int>(r.b));

    const ProductCohomology alg(l, l);
    st.extract_22 = alg.extract_22(untwisted_kernel(alg, st.phi_tilde, st.B, st.B_target));
    return st;
}

inline json step_to_json(const CertificateStep& st)
{
    return json{{"index", st.index},
                {"b", io::vec(st.reflection.b)},
                {"square", io::integer(st.reflection.square)},
                {"n", io::integer(st.n)},
                {"B", io::vec(st.B)},
                {"b_target", io::vec(st.b_target)},
                {"B_target", io::vec(st.B_target)},
                {"lambda_index", io::integer(st.lambda_index)},
                {"lambda_invariants", io::vec(st.lambda_invariants)},
                {"lambda_target_index", io::integer(st.lambda_target_index)},
                {"lambda_target_invariants", io::vec(st.lambda_target_invariants)},
                {"phi_tilde", io::mat(st.phi_tilde)},
                {"orientation_before", st.orientation_before},
                {"orientation_after", st.orientation_after},
                {"phi_sign", st.phi_sign},
                {"brauer_order_source", io::integer(st.brauer_source)},
                {"brauer_order_target", io::integer(st.brauer_target)},
                {"extract_22", io::mat(st.extract_22)},
                {"source_period", period_to_json(st.source)},
                {"target_period", period_to_json(st.target)},
                {"picard_source", st.picard_source},
                {"picard_target", st.picard_target},
                {"projective_source", st.projective_source},
                {"projective_target", st.projective_target},
                {"b_in_ns", st.b_in_ns}};
}

inline CertificateStep step_from_json(const Lattice& l, const json& j, const std::string& where)
{
    io::exact_keys(j,
                   {"index", "b", "square", "n", "B", "b_target", "B_target", "lambda_index", "lambda_invariants",
                    "lambda_target_index", "lambda_target_invariants", "phi_tilde", "orientation_before",
                    "orientation_after", "phi_sign", "brauer_order_source", "brauer_order_target", "extract_22",
                    "source_period", "target_period", "picard_source", "picard_target", "projective_source",
                    "projective_target", "b_in_ns"},
                   where);
    const std::size_t n = l.rank();
    auto w = [&](const char* k) { return where + "." + k; };
    CertificateStep st;
    st.index = io::to_size(j["index"], w("index"));
    st.reflection.b = io::to_int_vector(j["b"], w("b"), true, n);
    st.reflection.square = io::to_int(j["square"], w("square"), true);
    st.n = io::to_int(j["n"], w("n"), true);
    st.B = io::to_rat_vector(j["B"], w("B"), true, n);
    st.b_target = io::to_int_vector(j["b_target"], w("b_target"), true, n);
    st.B_target = io::to_rat_vector(j["B_target"], w("B_target"), true, n);
    st.lambda_index = io::to_int(j["lambda_index"], w("lambda_index"), true);
    st.lambda_invariants = io::to_int_vector(j["lambda_invariants"], w("lambda_invariants"), true);
    st.lambda_target_index = io::to_int(j["lambda_target_index"], w("lambda_target_index"), true);
    st.lambda_target_invariants = io::to_int_vector(j["lambda_target_invariants"], w("lambda_target_invariants"), true);
    st.phi_tilde = io::to_rat_matrix(j["phi_tilde"], w("phi_tilde"), true, n + 2, n + 2);
    st.orientation_before = io::to_sign(j["orientation_before"], w("orientation_before"));
    st.orientation_after = io::to_sign(j["orientation_after"], w("orientation_after"));
    st.phi_sign = io::to_sign(j["phi_sign"], w("phi_sign"));
    st.brauer_source = io::to_int(j["brauer_order_source"], w("brauer_order_source"), true);
    st.brauer_target = io::to_int(j["brauer_order_target"], w("brauer_order_target"), true);
    st.extract_22 = io::to_rat_matrix(j["extract_22"], w("extract_22"), true, n, n);
    st.source = raw_period_from_json(l, j["source_period"], w("source_period"));
    st.target = raw_period_from_json(l, j["target_period"], w("target_period"));
    st.picard_source = io::to_size(j["picard_source"], w("picard_source"));
    st.picard_target = io::to_size(j["picard_target"], w("picard_target"));
    st.projective_source = io::to_bool(j["projective_source"], w("projective_source"));
    st.projective_target = io::to_bool(j["projective_target"], w("projective_target"));
    st.b_in_ns = io::to_bool(j["b_in_ns"], w("b_in_ns"));
    return st;
}

// ---------------------------------------------------------------------------
// Verification

struct Check {
    std::string name;
    bool pass = false;
    std::string witness;

    friend bool operator==(const Check&, const Check&) = default;
};

struct VerificationReport {
    std::vector<Check> checks;

    bool all_pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
    }
    const Check* first_failure() const
    {
        for (const Check& c : checks)
            if (!c.pass) return &c;
        return nullptr;
    }
    friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

inline json report_to_json(const VerificationReport& r)
{
    json checks = json::array();
    for (const Check& c : r.checks) checks.push_back(json{{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
    return json{{"checks", checks}, {"all_pass", r.all_pass()}};
}

inline VerificationReport report_from_json(const json& j, const std::string& where)
{
    io::exact_keys(j, {"checks", "all_pass"}, where);
    if (!j["checks"].is_array()) io::fail(where + ".checks", "expected an array");
    VerificationReport r;
    for (std::size_t i = 0; i < j["checks"].size(); ++i) {
        const std::string w = where + ".checks[" + std::to_string(i) + "]";
        const json& c = j["checks"][i];
        io::exact_keys(c, {"name", "pass", "witness"}, w);
        r.checks.push_back(Check{io::to_str(c["name"], w + ".name"), io::to_bool(c["pass"], w + ".pass"),
                                 io::to_str(c["witness"], w + ".witness")});
    }
    if (io::to_bool(j["all_pass"], where + ".all_pass") != r.all_pass())
        io::fail(where + ".all_pass", "inconsistent with the listed checks");
    return r;
}

struct Certificate {
    PipelineInput input;
    std::string digest;
    std::vector<CertificateStep> steps;
    VerificationReport report;
};

namespace detail {

class CheckList {
public:
    // Runs f, which returns an empty string on success or a witness on
    // failure. Exceptions count as failures.
    void run(const std::string& name, const std::function<std::string()>& f)
    {
        std::string witness;
        try {
            witness = f();
        } catch (const std::exception& e) {
            witness = std::string("exception: ") + e.what();
        }
        report_.checks.push_back(Check{name, witness.empty(), witness});
    }
    VerificationReport take() { return std::move(report_); }

private:
    VerificationReport report_;
};

inline std::string first_difference(const RatMatrix& a, const RatMatrix& b, const std::string& what)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) return what + ": shape differs";
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != b(i, j))
                return what + " differs at (" + std::to_string(i) + "," + std::to_string(j) + "): " + a(i, j).get_str() +
                       " vs " + b(i, j).get_str();
    return {};
}

inline bool same_period(const MarkedHodgeData& a, const MarkedHodgeData& b)
{
    return a.u == b.u && a.v == b.v && a.d == b.d;
}

inline std::string period_witness(const MarkedHodgeData& h)
{
    return "u = " + format_vector(h.u) + ", v = " + format_vector(h.v) + ", d = " + h.d.get_str();
}

// Returns a witness vector when m^T G~ m != G~.
inline std::string isometry_witness(const Lattice& mukai, const RatMatrix& m)
{
    const RatMatrix lhs = m.transpose() * mukai.gram_q() * m;
    for (std::size_t i = 0; i < lhs.rows(); ++i)
        for (std::size_t j = 0; j < lhs.cols(); ++j)
            if (lhs(i, j) != mukai.gram_q()(i, j))
                return "pairing of phi~(x_" + std::to_string(i) + ") and phi~(x_" + std::to_string(j) + ") is " +
                       lhs(i, j).get_str() + ", expected " + mukai.gram_q()(i, j).get_str();
    if (determinant(m) == 0) return "phi~ is singular";
    return {};
}

inline std::string integrality_witness(const RatMatrix& m)
{
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            if (!is_integral(m(i, j)))
                return "phi~ entry (" + std::to_string(i) + "," + std::to_string(j) + ") = " + m(i, j).get_str();
    const RatMatrix inv = inverse(m);
    for (std::size_t i = 0; i < inv.rows(); ++i)
        for (std::size_t j = 0; j < inv.cols(); ++j)
            if (!is_integral(inv(i, j)))
                return "phi~^{-1} entry (" + std::to_string(i) + "," + std::to_string(j) + ") = " + inv(i, j).get_str();
    return {};
}

template <class T>
std::string compare_field(const T& stored, const T& computed, const std::string& what)
{
    if (stored == computed) return {};
    return what + " does not match the recomputed value";
}

inline void verify_step(CheckList& checks, const Lattice& l, const CertificateStep& st, std::size_t position,
                        const MarkedHodgeData& expected_source)
{
    const std::string p = "step[" + std::to_string(position) + "].";
    const std::size_t n = l.rank();
    const Lattice mukai = mukai_extension(l);

    checks.run(p + "index", [&]() -> std::string {
        if (st.index != position + 1) return "index " + std::to_string(st.index) + " at position " + std::to_string(position + 1);
        return {};
    });
    checks.run(p + "reflection_datum", [&]() -> std::string {
        const IntVector& b = st.reflection.b;
        if (content(b) != 1) return "b = " + format_vector(b) + " is not primitive";
        const Int sq = l.square(std::span<const Int>(b));
        if (sq != st.reflection.square) return "(b.b) = " + sq.get_str() + ", recorded " + st.reflection.square.get_str();
        if (sq == 0) return "b is isotropic";
        const BField bf = bfield_from_reflection(l, b);
        if (bf.n != st.n) return "n = " + bf.n.get_str() + ", recorded " + st.n.get_str();
        if (bf.B != st.B) return "B differs from b/n";
        return {};
    });
    std::optional<RatMatrix> s_b;
    try {
        s_b = reflection_matrix(l, to_rational(st.reflection.b));
    } catch (const std::exception&) {
    }
    auto refl = [&]() -> const RatMatrix& {
        if (!s_b) throw math_error("no reflection for b = " + format_vector(st.reflection.b));
        return *s_b;
    };
    auto need_n = [&] {
        if (st.n == 0) throw math_error("recorded n is zero");
    };
    checks.run(p + "b_target", [&]() -> std::string {
        need_n();
        const RatMatrix& s = refl();
        RatVector expect = s * to_rational(st.reflection.b);
        expect = Rat(-st.phi_sign) * expect;
        if (to_rational(st.b_target) != expect) return "b' = " + format_vector(st.b_target) + ", expected " + format_vector(expect);
        RatVector bt(n);
        for (std::size_t i = 0; i < n; ++i) bt[i] = Rat(st.b_target[i]) / Rat(st.n);
        if (bt != st.B_target) return "B' differs from b'/n";
        return {};
    });
    checks.run(p + "lambda_index", [&]() -> std::string {
        need_n();
        const Sublattice ls = lambda_B(l, st.B), lt = lambda_B(l, st.B_target);
        const Int want = expected_lambda_index(l, st.reflection.b, st.n);
        const Int want_t = expected_lambda_index(l, st.b_target, st.n);
        if (!ls.index || *ls.index != want || !ls.has_cyclic_quotient())
            return "[L : Lambda_B] quotient is not cyclic of order " + want.get_str();
        if (!lt.index || *lt.index != want_t || !lt.has_cyclic_quotient())
            return "[L : Lambda_B'] quotient is not cyclic of order " + want_t.get_str();
        if (st.lambda_index != *ls.index || st.lambda_invariants != ls.quotient_invariants ||
            st.lambda_target_index != *lt.index || st.lambda_target_invariants != lt.quotient_invariants)
            return "recorded index or invariants do not match";
        return {};
    });
    checks.run(p + "phi_tilde_isometry", [&] { return isometry_witness(mukai, st.phi_tilde); });
    checks.run(p + "phi_tilde_integral", [&] { return integrality_witness(st.phi_tilde); });
    checks.run(p + "phi_tilde_formula", [&]() -> std::string {
        need_n();
        const RatMatrix& s = refl();
        BField bf{st.reflection.b, st.n, st.B};
        RatMatrix expect = mukai_extension_matrix_single(l, bf, s);
        if (st.phi_sign < 0) expect = orientation_flip(n) * expect;
        return first_difference(st.phi_tilde, expect, "phi~");
    });
    checks.run(p + "diagram_commutes", [&]() -> std::string {
        const RatMatrix& s = refl();
        const Sublattice ls = lambda_B(l, st.B);
        const RatMatrix left = st.phi_tilde * exp_b_matrix(l, st.B);
        const RatMatrix right = exp_b_matrix(l, st.B_target) * (Rat(st.phi_sign) * s);
        for (const IntVector& x : ls.generators()) {
            const RatVector xq = to_rational(x);
            if (left * xq != right * xq) return "exp(B') o phi != phi~ o exp(B) at x = " + format_vector(x);
        }
        return {};
    });
    checks.run(p + "swaps_complement", [&]() -> std::string {
        const RatMatrix raw = st.phi_sign < 0 ? RatMatrix(orientation_flip(n) * st.phi_tilde) : st.phi_tilde;
        RatVector first(n + 2, Rat(0)), second(n + 2, Rat(0));
        for (std::size_t i = 0; i < n; ++i) first[i] = st.reflection.b[i];
        first[n] = st.n;
        first[n + 1] = 1;
        second[n + 1] = -1;
        // b' before the fix equals b for a reflection
        if (raw * first != second) return "phi~(b + ne + f) = " + format_vector(raw * first) + ", expected -f";
        if (raw * second != first) return "phi~(-f) = " + format_vector(raw * second) + ", expected b + ne + f";
        return {};
    });
    checks.run(p + "orientation", [&]() -> std::string {
        const std::vector<Frame> frames = step_frames(st.target, st.B_target);
        std::optional<int> seen;
        for (const Frame& f : frames) {
            const int sg = orientation_sign_on(mukai, st.phi_tilde, f);
            if (sg == 0) continue;
            if (seen && *seen != sg) return "orientation sign depends on the reference frame";
            seen = sg;
        }
        if (!seen) return "no usable reference frame";
        if (*seen != 1) return "phi~ reverses the orientation of positive directions";
        if (st.orientation_after != 1) return "recorded orientation_after is not +1";
        if (st.orientation_before != st.phi_sign) return "orientation_before and phi_sign disagree";
        const RatMatrix raw = st.phi_sign < 0 ? RatMatrix(orientation_flip(n) * st.phi_tilde) : st.phi_tilde;
        if (orientation_sign(mukai, raw, frames) != st.orientation_before) return "recorded orientation_before is wrong";
        return {};
    });
    checks.run(p + "source_period", [&]() -> std::string {
        if (!same_period(st.source, expected_source)) return "source period does not continue the chain: " + period_witness(st.source);
        validate_period(l, st.source.u, st.source.v, st.source.d);
        return {};
    });
    checks.run(p + "target_period", [&]() -> std::string {
        const RatMatrix& s = refl();
        validate_period(l, st.target.u, st.target.v, st.target.d);
        const RationalIsometry r{l, l, s};
        if (!same_period(st.target, transport(r, st.source))) return "target period is not s_b(source): " + period_witness(st.target);
        return {};
    });
    checks.run(p + "hodge_step", [&]() -> std::string {
        const RatMatrix& s = refl();
        const HodgeIsometryResult h = is_hodge_isometry(RationalIsometry{l, l, s}, st.source, st.target);
        if (!h.is_hodge()) return "s_b is not a Hodge isometry between the recorded periods";
        if (!(*h.lambda == QuadraticNumber{1, 0, st.source.d})) return "lambda = " + h.lambda->str() + ", expected 1";
        return {};
    });
    checks.run(p + "twisted_period", [&]() -> std::string {
        const TwistedHodgeData a = twist_hodge(st.source, st.B), b = twist_hodge(st.target, st.B_target);
        if (!a.isotropic || !b.isotropic) return "twisted period is not isotropic";
        const Rat sg = st.phi_sign;
        if (st.phi_tilde * a.sigma_re != sg * b.sigma_re || st.phi_tilde * a.sigma_im != sg * b.sigma_im)
            return "phi~(sigma_B) != phi_sign sigma'_B'";
        return {};
    });
    checks.run(p + "projective", [&]() -> std::string {
        const HodgeDecomposition ds = hodge_decomposition(st.source), dt = hodge_decomposition(st.target);
        if (!ds.projective || !dt.projective) return "NS has no vector of positive square";
        if (!st.projective_source || !st.projective_target) return "projectivity flag not set";
        if (st.picard_source != ds.picard_number || st.picard_target != dt.picard_number) return "picard number mismatch";
        if (st.b_in_ns != ds.ns.contains(std::span<const Int>(st.reflection.b))) return "b_in_ns mismatch";
        return {};
    });
    checks.run(p + "brauer_order", [&]() -> std::string {
        const HodgeDecomposition ds = hodge_decomposition(st.source), dt = hodge_decomposition(st.target);
        const Int bs = brauer_order(l, st.B, ds.t), bt = brauer_order(l, st.B_target, dt.t);
        if (bs != st.brauer_source) return "source order " + bs.get_str() + ", recorded " + st.brauer_source.get_str();
        if (bt != st.brauer_target) return "target order " + bt.get_str() + ", recorded " + st.brauer_target.get_str();
        return {};
    });
    checks.run(p + "extract_22", [&]() -> std::string {
        const RatMatrix& s = refl();
        const ProductCohomology alg(l, l);
        const ProductClass k = untwisted_kernel(alg, st.phi_tilde, st.B, st.B_target);
        const RatMatrix ext = alg.extract_22(k);
        if (std::string w = first_difference(st.extract_22, ext, "extract_22"); !w.empty()) return w;
        if (ext != Rat(st.phi_sign) * s) return "extract_22 is not phi_sign s_b";
        if (rank(alg.action_matrix(alg.from_action(mukai_map_to_raw(st.phi_tilde)))) != n + 2)
            return "correspondence action is not invertible";
        return {};
    });
}

}  // namespace detail

// Runs every check on a certificate's content. The stored report and the
// byte encoding are checked separately by verify_document.
inline VerificationReport verify_certificate(const Certificate& c)
{
    detail::CheckList checks;
    const Lattice& l = c.input.lattice;
    const RationalIsometry phi{l, l, c.input.phi};

    checks.run("input_digest", [&]() -> std::string {
        const std::string d = input_digest(c.input);
        if (d != c.digest) return "digest " + c.digest + ", recomputed " + d;
        return {};
    });
    checks.run("input_isometry", [&]() -> std::string {
        if (!is_isometry(l, l, c.input.phi)) return "input matrix is not an isometry";
        return {};
    });
    checks.run("input_periods", [&]() -> std::string {
        validate_period(l, c.input.source.u, c.input.source.v, c.input.source.d);
        validate_period(l, c.input.target.u, c.input.target.v, c.input.target.d);
        return {};
    });
    checks.run("hodge_isometry", [&]() -> std::string {
        const HodgeIsometryResult h = is_hodge_isometry(phi, c.input.source, c.input.target);
        if (h.status == HodgeStatus::out_of_model) return "periods use different d";
        if (!h.is_hodge()) return "phi(sigma) is not a multiple of sigma'";
        return {};
    });
    checks.run("step_count", [&]() -> std::string {
        if (c.steps.size() > l.rank())
            return std::to_string(c.steps.size()) + " steps exceed the rank " + std::to_string(l.rank());
        return {};
    });
    checks.run("recomposition", [&]() -> std::string {
        RatMatrix m = RatMatrix::identity(l.rank());
        for (const CertificateStep& st : c.steps) m = reflection_matrix(l, to_rational(st.reflection.b)) * m;
        return detail::first_difference(m, c.input.phi, "s_{b_k} o ... o s_{b_1} vs phi");
    });
    MarkedHodgeData expected = c.input.source;
    for (std::size_t i = 0; i < c.steps.size(); ++i) {
        detail::verify_step(checks, l, c.steps[i], i, expected);
        expected = c.steps[i].target;
    }
    checks.run("chain_endpoint", [&]() -> std::string {
        const HodgeIsometryResult h = is_hodge_isometry(RationalIsometry{l, l, RatMatrix::identity(l.rank())}, expected,
                                                        c.input.target);
        if (!h.is_hodge()) return "last period is not a multiple of the target period: " + detail::period_witness(expected);
        return {};
    });
    return checks.take();
}

inline json certificate_to_json(const Certificate& c)
{
    json steps = json::array();
    for (const CertificateStep& st : c.steps) steps.push_back(step_to_json(st));
    return json{{"format", certificate_format},
                {"conventions", conventions},
                {"input", input_to_json(c.input)},
                {"input_digest", c.digest},
                {"steps", steps},
                {"report", report_to_json(c.report)}};
}

inline std::string certificate_text(const Certificate& c) { return io::canonical(certificate_to_json(c)) + "\n"; }

// ---------------------------------------------------------------------------
// Pipeline

inline std::vector<ReflectionDatum> application_order(std::vector<ReflectionDatum> cd)
{
    std::reverse(cd.begin(), cd.end());
    return cd;
}

inline Certificate run_pipeline(const PipelineInput& in)
{
    const Lattice& l = in.lattice;
    const RationalIsometry phi{l, l, in.phi};
    if (in.source.d != in.target.d)
        throw math_error("model mismatch: source has d = " + in.source.d.get_str() + ", target has d = " +
                         in.target.d.get_str());
    if (!is_hodge_isometry(phi, in.source, in.target).is_hodge())
        throw math_error("hodge isometry: phi(sigma) is not a multiple of sigma' in Q(sqrt(-d))");
    if (!hodge_decomposition(in.source).projective)
        throw math_error("projectivity: NS of the source period has no vector of positive square");

    Certificate c;
    c.input = in;
    c.digest = input_digest(in);
    const std::vector<ReflectionDatum> order = application_order(cartan_dieudonne(phi));
    MarkedHodgeData current = in.source;
    for (std::size_t i = 0; i < order.size(); ++i) {
        CertificateStep st = build_step(current, order[i], i + 1);
        if (!st.projective_source || !st.projective_target)
            throw math_error("projectivity: step " + std::to_string(i + 1) + " has no positive vector in NS");
        current = st.target;
        c.steps.push_back(std::move(st));
    }
    c.report = verify_certificate(c);
    return c;
}

inline Certificate certificate_from_json(const json& j)
{
    io::exact_keys(j, {"format", "conventions", "input", "input_digest", "steps", "report"}, "certificate");
    if (io::to_str(j["format"], "certificate.format") != certificate_format)
        io::fail("certificate.format", std::string("expected '") + certificate_format + "'");
    Certificate c;
    try {
        c.input = input_from_json(j["input"], true);
    } catch (const math_error& e) {
        io::fail("certificate.input", e.what());
    }
    c.digest = io::to_str(j["input_digest"], "certificate.input_digest");
    if (!j["steps"].is_array()) io::fail("certificate.steps", "expected an array");
    for (std::size_t i = 0; i < j["steps"].size(); ++i)
        c.steps.push_back(step_from_json(c.input.lattice, j["steps"][i], "certificate.steps[" + std::to_string(i) + "]"));
    c.report = report_from_json(j["report"], "certificate.report");
    return c;
}

// Verifies a certificate document given as text: parse (parse_error on a
// malformed document), then every content check, then consistency of the
// recorded report and of the canonical byte encoding.
inline VerificationReport verify_document(const std::string& text)
{
    const json j = io::parse_document(text);
    const Certificate c = certificate_from_json(j);
    VerificationReport r = verify_certificate(c);
    detail::CheckList extra;
    extra.run("conventions", [&]() -> std::string {
        if (j["conventions"] != conventions) return "conventions string differs";
        return {};
    });
    extra.run("recorded_report", [&]() -> std::string {
        if (c.report == r) return {};
        for (std::size_t i = 0; i < std::min(c.report.checks.size(), r.checks.size()); ++i)
            if (!(c.report.checks[i] == r.checks[i])) return "recorded check '" + c.report.checks[i].name + "' differs";
        return "recorded report has " + std::to_string(c.report.checks.size()) + " checks, recomputed " +
               std::to_string(r.checks.size());
    });
    extra.run("canonical_encoding", [&]() -> std::string {
        if (io::canonical(j) + "\n" != text) return "document is not in canonical encoding";
        return {};
    });
    for (Check& ch : extra.take().checks) r.checks.push_back(std::move(ch));
    return r;
}

// ---------------------------------------------------------------------------
// Decomposition and single-step reports

inline json decomposition_to_json(const Lattice& l, const RatMatrix& phi, const std::vector<ReflectionDatum>& cd)
{
    json refl = json::array();
    const std::vector<ReflectionDatum> order = application_order(cd);
    for (std::size_t i = 0; i < order.size(); ++i)
        refl.push_back(json{{"index", i + 1}, {"b", io::vec(order[i].b)}, {"square", io::integer(order[i].square)}});
    RatMatrix m = RatMatrix::identity(l.rank());
    for (const ReflectionDatum& r : order) m = reflection_matrix(l, to_rational(r.b)) * m;
    return json{{"format", decomposition_format},
                {"conventions", conventions},
                {"lattice", lattice_to_json(l)},
                {"isometry", io::mat(phi)},
                {"reflections", refl},
                {"recomposes", m == phi}};
}

struct LiftInput {
    MarkedHodgeData source;
    IntVector b;
};

inline LiftInput lift_input_from_json(const json& j)
{
    if (io::to_str(io::field(j, "format", "input"), "input.format") != lift_format)
        io::fail("input.format", std::string("expected '") + lift_format + "'");
    const Lattice l = lattice_from_json(io::field(j, "lattice", "input"), "input.lattice", false);
    LiftInput in{period_from_json(l, io::field(j, "source", "input"), "input.source", false),
                 io::to_int_vector(io::field(j, "b", "input"), "input.b", false, l.rank())};
    return in;
}

inline json lift_input_to_json(const LiftInput& in)
{
    return json{{"format", lift_format},
                {"lattice", lattice_to_json(in.source.lattice)},
                {"source", period_to_json(in.source)},
                {"b", io::vec(in.b)}};
}

// One reflective step with its checks.
inline std::pair<json, VerificationReport> lift_report(const LiftInput& in)
{
    const Lattice& l = in.source.lattice;
    if (content(in.b) != 1) throw math_error("reflection: b = " + format_vector(in.b) + " is not primitive");
    const Int sq = l.square(std::span<const Int>(in.b));
    const CertificateStep st = build_step(in.source, ReflectionDatum{in.b, sq}, 1);
    detail::CheckList checks;
    detail::verify_step(checks, l, st, 0, in.source);
    VerificationReport r = checks.take();
    json out = step_to_json(st);
    out["report"] = report_to_json(r);
    return {out, r};
}

// ---------------------------------------------------------------------------
// Built-in examples

// K3 lattice with u = e2 - f2, v = e3 - f3, d = 1.
inline MarkedHodgeData toy_period()
{
    const Lattice l = k3_lattice();
    RatVector u(22, Rat(0)), v(22, Rat(0));
    u[2] = 1;
    u[3] = -1;
    v[4] = 1;
    v[5] = -1;
    return validate_period(l, u, v, 1);
}

inline PipelineInput toy_input(const RatMatrix& phi)
{
    const MarkedHodgeData h = toy_period();
    PipelineInput in{h.lattice, h, transport(RationalIsometry{h.lattice, h.lattice, phi}, h), phi};
    return in;
}

// phi = s_{e1 - 2 f1}
inline PipelineInput demo_reflection()
{
    const Lattice l = k3_lattice();
    RatVector b(22, Rat(0));
    b[0] = 1;
    b[1] = -2;
    return toy_input(reflection_matrix(l, b));
}

inline PipelineInput demo_minus_id() { return toy_input(-RatMatrix::identity(22)); }

inline PipelineInput demo_identity() { return toy_input(RatMatrix::identity(22)); }

// A product of one to three reflections in short random vectors.
inline PipelineInput demo_random(std::uint64_t seed)
{
    const Lattice l = k3_lattice();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(1, 3), coeff(-2, 2), pos(0, 21);
    RatMatrix phi = RatMatrix::identity(22);
    const int k = count(rng);
    for (int i = 0; i < k;) {
        RatVector b(22, Rat(0));
        for (int t = 0; t < 3; ++t) b[pos(rng)] += coeff(rng);
        if (is_zero(b) || l.square(b) == 0) continue;
        phi = reflection_matrix(l, b) * phi;
        ++i;
    }
    return toy_input(phi);
}

inline std::vector<std::string> demo_names() { return {"identity", "reflection", "minus_id", "random"}; }

inline PipelineInput demo_input(const std::string& name, std::uint64_t seed)
{
    if (name == "identity") return demo_identity();
    if (name == "reflection") return demo_reflection();
    if (name == "minus_id") return demo_minus_id();
    if (name == "random") return demo_random(seed);
    throw parse_error("unknown demo '" + name + "'");
}

}  // namespace k3iso
