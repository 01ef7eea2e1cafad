// Acceptance suite: one PASS/FAIL line per criterion, exact checks only.

#include "support.hpp"

#include <sys/wait.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace k3test;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what)
{
    if (!ok) throw Failure(what);
}

int failures = 0;

void criterion(int id, const std::string& title, const std::function<std::string()>& body)
{
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
        detail = body();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << title << ": " << detail;
    line.precision(2);
    line << std::fixed << " (" << secs << " s)";
    std::cout << line.str() << std::endl;
    if (!ok) ++failures;
}

// Shared samples for criteria 2 to 4.
struct Sample {
    Lattice lattice;
    IntVector b;
};

std::vector<Sample> bfield_samples()
{
    std::mt19937_64 rng(2024);
    std::vector<Sample> out;
    const Lattice uu = u_plus_u(), k3 = k3_lattice();
    for (int t = 0; t < 100; ++t) out.push_back({uu, random_anisotropic_primitive(rng, uu, 4)});
    for (int t = 0; t < 100; ++t) out.push_back({k3, random_anisotropic_primitive(rng, k3, 3, 6)});
    return out;
}

RatVector mukai_vec(const IntVector& z, const Int& r, const Int& s)
{
    RatVector v = to_rational(z);
    v.push_back(Rat(r));
    v.push_back(Rat(s));
    return v;
}

std::string c1_cartan_dieudonne()
{
    std::mt19937_64 rng(1);
    const std::vector<Lattice> small{hyperbolic_plane(), u_plus_u(), u_plus_a1a1()};
    std::size_t count = 0;
    for (const Lattice& l : small)
        for (int t = 0; t < 40; ++t) {
            const RatMatrix m = random_isometry(rng, l, 6, 3);
            const auto cd = cartan_dieudonne(RationalIsometry{l, l, m});
            require(cd.size() <= l.rank(), "more reflections than the rank on " + l.label());
            RatMatrix r = RatMatrix::identity(l.rank());
            for (const ReflectionDatum& d : cd) {
                require(content(d.b) == 1, "non-primitive reflection vector");
                require(l.square(std::span<const Int>(d.b)) == d.square && d.square != 0, "bad reflection datum");
                // s_b(x) = x - 2 (x.b)/(b.b) b, column by column
                RatMatrix s(l.rank(), l.rank());
                for (std::size_t j = 0; j < l.rank(); ++j) {
                    const RatVector x = unit_vector<Rat>(l.rank(), j);
                    const RatVector y = x - Rat(Rat(2) * l.pair(x, to_rational(d.b)) / Rat(d.square)) * to_rational(d.b);
                    for (std::size_t i = 0; i < l.rank(); ++i) s(i, j) = y[i];
                }
                r = r * s;
            }
            require(r == m, "recomposition differs from the input");
            ++count;
        }
    const Lattice k3 = k3_lattice();
    std::size_t big = 0;
    for (int t = 0; t < 6; ++t) {
        const RatMatrix m = random_isometry(rng, k3, 6, 2, 5);
        const auto cd = cartan_dieudonne(RationalIsometry{k3, k3, m});
        require(cd.size() <= 22, "more than 22 reflections on K3");
        require(compose_reflections(k3, cd) == m, "K3 recomposition differs");
        ++big;
    }
    require(cartan_dieudonne(RationalIsometry{k3, k3, -RatMatrix::identity(22)}).size() <= 22, "-id on K3");
    return std::to_string(count) + " small-rank and " + std::to_string(big + 1) + " K3 isometries recomposed";
}

std::string c2_lambda_b(const std::vector<Sample>& samples)
{
    std::size_t brute = 0;
    for (const Sample& s : samples) {
        const Lattice& l = s.lattice;
        const BField bf = bfield_from_reflection(l, s.b);
        const Sublattice lb = lambda_B(l, bf.B);
        require(lb.index && *lb.index == abs_int(bf.n), "index is not |n| for b = " + format_vector(s.b));
        const SmithForm f = snf(lb.basis);
        IntVector nontrivial;
        for (const Int& d : f.invariant_factors())
            if (d != 1) nontrivial.push_back(d);
        if (abs_int(bf.n) == 1) require(nontrivial.empty(), "quotient should be trivial");
        else require(nontrivial == IntVector{abs_int(bf.n)}, "quotient is not cyclic of order |n|");
        if (l.rank() <= 4) {
            for_each_in_box(l.rank(), 5, [&](const IntVector& x) {
                const bool in = is_integral(l.pair(bf.B, to_rational(x)));
                require(in == lb.contains(std::span<const Int>(x)), "membership differs at " + format_vector(x));
            });
            ++brute;
        }
    }
    return std::to_string(samples.size()) + " samples, " + std::to_string(brute) + " checked over [-5,5]^4";
}

std::string c3_exp_b(const std::vector<Sample>& samples)
{
    for (const Sample& s : samples) {
        const Lattice& l = s.lattice;
        const Lattice m = mukai_extension(l);
        const BField bf = bfield_from_reflection(l, s.b);
        const Sublattice image = exp_b_image(l, bf.B);
        require(is_primitive(m, image), "exp(B)(Lambda_B) is not primitive");
        const RatVector first = mukai_vec(bf.b, bf.n, 1), second = mukai_vec(IntVector(l.rank(), Int(0)), 0, -1);
        const Sublattice perp = orthogonal_complement(m, image);
        const Sublattice plane = sublattice_from_generators(
            m, std::vector<IntVector>{to_integer(first), to_integer(second)});
        require(perp == plane, "complement is not span{b + ne + f, -f}");
        const IntMatrix g{{Int(m.square(first)), Int(m.pair(first, second))},
                          {Int(m.pair(second, first)), Int(m.square(second))}};
        require(g == (IntMatrix{{0, bf.n}, {bf.n, 0}}), "complement gram is not [[0,n],[n,0]]");
        require(match_twisted_hyperbolic(g, bf.n).has_value(), "complement is not isometric to U(n)");
    }
    return std::to_string(samples.size()) + " samples";
}

std::string c4_phi_tilde(const std::vector<Sample>& samples)
{
    for (const Sample& s : samples) {
        const Lattice& l = s.lattice;
        const Lattice m = mukai_extension(l);
        const std::size_t n = l.rank();
        const BField bf = bfield_from_reflection(l, s.b);
        const RationalIsometry refl = reflection(l, s.b);
        const BFieldLift lift = extend_to_mukai(refl, bf);
        const RatMatrix& phi = lift.phi_tilde.matrix;
        require(phi.transpose() * m.gram_q() * phi == m.gram_q(), "(a) phi~ is not an isometry");
        require(is_integral(phi) && is_integral(inverse(phi)), "(b) phi~ or its inverse is not integral");
        const Sublattice lb = lambda_B(l, bf.B);
        for (const IntVector& x : lb.generators()) {
            RatVector ex = to_rational(x);
            ex.push_back(0);
            ex.push_back(l.pair(bf.B, to_rational(x)));
            const RatVector y = refl(std::span<const Int>(x));
            RatVector ey = y;
            ey.push_back(0);
            ey.push_back(l.pair(lift.B_target, y));
            require(phi * ex == ey, "(c) diagram does not commute at " + format_vector(x));
        }
        const RatVector first = mukai_vec(bf.b, bf.n, 1), second = mukai_vec(IntVector(n, Int(0)), 0, -1);
        require(phi * first == second && phi * second == first, "(d) b + ne + f and -f are not swapped");
    }
    return std::to_string(samples.size()) + " lifts, (a)-(d) exact";
}

std::string c5_orientation()
{
    const Lattice mukai = mukai_lattice();
    const std::vector<Frame> frames = stock_positive_frames(mukai, 12, 5);
    require(frames.size() >= 10, "fewer than 10 stock planes");
    const RatMatrix id = RatMatrix::identity(24), flip = orientation_flip(22);
    for (const Frame& f : frames) {
        require(orientation_sign_on(mukai, id, f) == 1, "sign(id) != +1");
        require(orientation_sign_on(mukai, flip, f) == -1, "sign(id + (-id) + id) != -1");
    }
    std::mt19937_64 rng(5);
    const Lattice k3 = k3_lattice();
    std::vector<RatMatrix> lifts;
    std::size_t fixed = 0;
    for (int t = 0; t < 12; ++t) {
        const IntVector b = random_anisotropic_primitive(rng, k3, 2, 5);
        BFieldLift lift = extend_to_mukai(reflection(k3, b), bfield_from_reflection(k3, b));
        lifts.push_back(lift.phi_tilde.matrix);
        lift = fix_orientation(std::move(lift), frames);
        require(orientation_sign(mukai, lift.phi_tilde.matrix, frames) == 1, "fix_orientation left sign -1");
        for (const Frame& f : frames)
            require(orientation_sign_on(mukai, lift.phi_tilde.matrix, f) == 1, "fixed sign depends on the plane");
        ++fixed;
    }
    for (std::size_t i = 0; i < lifts.size(); ++i) {
        const int si = orientation_sign_on(mukai, lifts[i], frames[0]);
        for (const Frame& f : frames) require(orientation_sign_on(mukai, lifts[i], f) == si, "sign depends on the plane");
        const RatMatrix& g = lifts[i];
        const RatMatrix& h = lifts[(i + 1) % lifts.size()];
        for (const Frame& f : frames)
            require(orientation_sign_on(mukai, g * h, f) ==
                        orientation_sign_on(mukai, g, f) * orientation_sign_on(mukai, h, f),
                    "sign is not multiplicative");
    }
    return std::to_string(frames.size()) + " planes, " + std::to_string(fixed) + " lifts fixed";
}

MarkedHodgeData random_cm_period(std::mt19937_64& rng)
{
    const Lattice k3 = k3_lattice();
    static const long ds[] = {1, 2, 3, 5, 6, 7};
    std::uniform_int_distribution<int> pick(0, 5), mdist(1, 3);
    const long d = ds[pick(rng)];
    const long m = mdist(rng);
    const MarkedHodgeData h = validate_period(k3, to_rational(k3_vec({{0, 1}, {1, -d * m}})),
                                              to_rational(k3_vec({{2, 1}, {3, -m}})), d);
    const RatMatrix g = random_isometry(rng, k3, 3, 2, 4);
    const MarkedHodgeData moved = transport(RationalIsometry{k3, k3, g}, h);
    validate_period(k3, moved.u, moved.v, moved.d);
    return moved;
}

std::string c6_hodge()
{
    std::mt19937_64 rng(6);
    std::size_t in_ns = 0, out_ns = 0, steps = 0;
    for (int t = 0; t < 20; ++t) {
        const MarkedHodgeData h = random_cm_period(rng);
        const Lattice& l = h.lattice;
        const HodgeDecomposition dec = hodge_decomposition(h);
        // both directions: vectors of NS and random vectors, classified by
        // orthogonality to u and v
        std::vector<IntVector> candidates;
        for (const IntVector& g : dec.ns.generators()) candidates.push_back(g);
        for (int k = 0; k < 4; ++k) candidates.push_back(random_anisotropic_primitive(rng, l, 2, 4));
        for (const IntVector& b : candidates) {
            if (content(b) != 1 || l.square(std::span<const Int>(b)) == 0) continue;
            const bool perp = l.pair(to_rational(b), h.u) == 0 && l.pair(to_rational(b), h.v) == 0;
            require(dec.ns.contains(std::span<const Int>(b)) == perp, "NS membership disagrees with orthogonality");
            const HodgeIsometryResult r = is_hodge_isometry(reflection(l, b), h, h);
            require(r.is_hodge() == perp, "s_b Hodge status disagrees with b in NS for b = " + format_vector(b));
            if (perp) {
                require(*r.lambda == (QuadraticNumber{1, 0, h.d}), "lambda != 1 for b in NS");
                ++in_ns;
            } else {
                ++out_ns;
            }
        }
        std::vector<ReflectionDatum> chain;
        for (int k = 0; k < 3; ++k) {
            const IntVector b = random_anisotropic_primitive(rng, l, 2, 4);
            chain.push_back(ReflectionDatum{b, l.square(std::span<const Int>(b))});
        }
        const auto data = chain_hodge_data(h, chain);
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const HodgeIsometryResult r = is_hodge_isometry(reflection(l, chain[i]), data[i], data[i + 1]);
            require(r.is_hodge() && *r.lambda == (QuadraticNumber{1, 0, h.d}), "chain step is not Hodge with lambda 1");
            require(hodge_decomposition(data[i + 1]).projective, "projectivity flag not set");
            ++steps;
        }
    }
    require(in_ns > 0 && out_ns > 0, "one direction of the equivalence was not exercised");
    return "20 periods, " + std::to_string(in_ns) + " b in NS, " + std::to_string(out_ns) + " outside, " +
           std::to_string(steps) + " chain steps";
}

std::string c7_mukai()
{
    std::mt19937_64 rng(7);
    const Lattice k3 = k3_lattice();
    const K3Cohomology h(k3);
    std::uniform_int_distribution<int> d(-3, 3), den(1, 4), nd(1, 5);
    auto random_class = [&](const Rat& r) {
        RatVector c(22, Rat(0));
        for (int k = 0; k < 5; ++k) c[std::uniform_int_distribution<int>(0, 21)(rng)] += Rat(d(rng)) / den(rng);
        return h.make(r, c, Rat(d(rng)) / den(rng));
    };
    for (int t = 0; t < 100; ++t) {
        const GradedClass x = random_class(1);
        const unsigned n = nd(rng);
        const GradedClass root = nth_root(h, x, n);
        GradedClass p = h.one();
        for (unsigned i = 0; i < n; ++i) p = h.mul(p, root);
        require(p == x, "root^n != input");
        require(root_compatibility(h, x, n, 2), "root compatibility fails");
    }
    const GradedClass td = sqrt_td(h);
    require(td == h.make(1, RatVector(22, Rat(0)), 1), "sqrt td is not (1,0,1)");
    require(h.mul(td, td) == h.make(1, RatVector(22, Rat(0)), 2), "(1,0,1)^2 != (1,0,2)");

    for (int t = 0; t < 50; ++t) {
        const unsigned n = std::uniform_int_distribution<int>(1, 4)(rng);
        const Rat r = std::uniform_int_distribution<int>(1, 3)(rng);
        Rat rn = 1;
        for (unsigned i = 0; i < n; ++i) rn *= r;
        const KappaReport<K3Cohomology> k = kappa_class(h, random_class(rn), n, r);
        require(k.ratio_is_exponential, "kappa / root is not exp of a degree-2 class");
    }

    const Lattice uu = u_plus_u();
    const ProductCohomology small(uu, uu);
    auto random_product = [&] {
        ProductClass p = small.zero();
        for (std::size_t i = 0; i < small.rows(); ++i)
            for (std::size_t j = 0; j < small.cols(); ++j) p.k(i, j) = Rat(d(rng)) / den(rng);
        p.k(0, 0) = 1;
        return p;
    };
    auto random_b = [&] {
        RatVector b(4);
        for (Rat& x : b) x = Rat(d(rng)) / 2;
        return b;
    };
    for (int t = 0; t < 20; ++t) {
        const ProductClass g1 = random_product(), g2 = random_product();
        const RatVector b1 = random_b(), b2 = random_b(), c1 = random_b(), c2 = random_b();
        const unsigned n = std::uniform_int_distribution<int>(1, 3)(rng);
        require(twisted_chern(small, small.mul(g1, g2), b1 + b2, c1 + c2, n) ==
                    small.mul(twisted_chern(small, g1, b1, c1, n), twisted_chern(small, g2, b2, c2, n)),
                "twisted_chern is not multiplicative");
    }

    const ProductCohomology alg(k3, k3);
    require(alg.extract_22(alg.diagonal()) == RatMatrix::identity(22), "extract_22(diagonal) != I");
    std::size_t certified = 0;
    for (const std::string name : {"reflection", "random"}) {
        const Certificate c = run_pipeline(demo_input(name, 3));
        require(c.report.all_pass(), "certificate for " + name + " fails");
        for (const CertificateStep& st : c.steps) {
            const ProductClass k = untwisted_kernel(alg, st.phi_tilde, st.B, st.B_target);
            require(determinant(alg.action_matrix(k)) != 0, "correspondence action is not invertible");
            require(determinant(alg.action_matrix(alg.from_action(mukai_map_to_raw(st.phi_tilde)))) != 0,
                    "twisted correspondence action is not invertible");
            ++certified;
        }
    }
    return "100 roots, 50 kappa classes, 20 twisted products, " + std::to_string(certified) + " certified actions";
}

// ---------------------------------------------------------------------------
// Criterion 8

void leaf_pointers(const json& node, const json::json_pointer& ptr, std::vector<json::json_pointer>& out)
{
    if (node.is_object()) {
        for (const auto& [k, v] : node.items()) leaf_pointers(v, ptr / k, out);
        return;
    }
    if (node.is_array()) {
        for (std::size_t i = 0; i < node.size(); ++i) leaf_pointers(node[i], ptr / i, out);
        return;
    }
    out.push_back(ptr);
}

json changed_leaf(const json& node)
{
    if (node.is_boolean()) return !node.get<bool>();
    if (node.is_number_integer()) return node.get<std::int64_t>() == 1 ? -1 : node.get<std::int64_t>() + 1;
    if (node.is_string()) {
        const std::string s = node.get<std::string>();
        try {
            return Rat(parse_rational(s) + 1).get_str();
        } catch (const parse_error&) {
            return s + "x";
        }
    }
    return nullptr;
}

bool detected(const std::string& text)
{
    try {
        return !verify_document(text).all_pass();
    } catch (const parse_error&) {
        return true;
    } catch (const math_error&) {
        return true;
    }
}

struct Cli {
    fs::path dir;
    int run(const std::string& args) const
    {
        const std::string cmd = std::string("'") + K3ISO_CLI + "' --quiet " + args + " >'" + (dir / "out").string() +
                                "' 2>'" + (dir / "err").string() + "'";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    void write(const std::string& name, const std::string& text) const
    {
        std::ofstream(dir / name, std::ios::binary) << text;
    }
    std::string read(const std::string& name) const
    {
        std::ifstream f(dir / name, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
};

std::string c8_end_to_end()
{
    Cli cli{fs::temp_directory_path() / "k3iso_acceptance"};
    fs::remove_all(cli.dir);
    fs::create_directories(cli.dir);

    std::map<std::string, std::string> certs;
    for (const std::string name : {"reflection", "minus_id"}) {
        require(cli.run("demo " + name + " --output '" + cli.path(name + ".in") + "'") == 0, "demo " + name);
        require(cli.run("chain --input '" + cli.path(name + ".in") + "' --output '" + cli.path(name + ".cert") + "'") == 0,
                "chain " + name + " did not exit 0");
        require(cli.run("verify --input '" + cli.path(name + ".cert") + "'") == 0, "verify " + name + " did not exit 0");
        certs[name] = cli.read(name + ".cert");
    }

    // every leaf of the reflection certificate; a sample of the -id one
    std::size_t leaves = 0;
    for (const auto& [name, text] : certs) {
        const json doc = json::parse(text);
        std::vector<json::json_pointer> ptrs;
        leaf_pointers(doc, json::json_pointer(), ptrs);
        std::size_t stride = name == "reflection" ? 1 : 97;
        for (std::size_t i = 0; i < ptrs.size(); i += stride) {
            json tampered = doc;
            tampered[ptrs[i]] = changed_leaf(doc[ptrs[i]]);
            require(detected(io::canonical(tampered) + "\n"), name + ": tampering " + ptrs[i].to_string() + " undetected");
            ++leaves;
        }
    }

    // single-bit flips anywhere in the byte stream
    std::mt19937_64 rng(8);
    const std::string& text = certs["reflection"];
    std::uniform_int_distribution<std::size_t> pos(0, text.size() - 1);
    std::uniform_int_distribution<int> bit(0, 7);
    std::size_t flips = 0;
    for (int t = 0; t < 300; ++t) {
        std::string copy = text;
        const std::size_t p = pos(rng);
        copy[p] = static_cast<char>(copy[p] ^ (1 << bit(rng)));
        require(detected(copy), "bit flip at byte " + std::to_string(p) + " undetected");
        ++flips;
    }

    // exit codes through the command line
    json j = json::parse(certs["reflection"]);
    j["steps"][0]["phi_tilde"][0][0] = "7";
    cli.write("t1.cert", io::canonical(j) + "\n");
    require(cli.run("verify --input '" + cli.path("t1.cert") + "'") == 3, "tampered entry: exit code != 3");
    cli.write("t2.cert", certs["reflection"].substr(0, certs["reflection"].size() / 3));
    require(cli.run("verify --input '" + cli.path("t2.cert") + "'") == 1, "truncated document: exit code != 1");
    for (int t = 0; t < 10; ++t) {
        std::string copy = text;
        const std::size_t p = pos(rng);
        copy[p] = static_cast<char>(copy[p] ^ (1 << bit(rng)));
        cli.write("flip.cert", copy);
        const int code = cli.run("verify --input '" + cli.path("flip.cert") + "'");
        require(code == 1 || code == 3, "bit flip at byte " + std::to_string(p) + ": exit code " + std::to_string(code));
    }
    json bad = input_to_json(demo_reflection());
    bad["isometry"][0][0] = "3";
    cli.write("bad.in", io::canonical(bad));
    require(cli.run("chain --input '" + cli.path("bad.in") + "'") == 2, "non-isometry input: exit code != 2");
    require(cli.run("nonsense") == 1, "unknown verb: exit code != 1");
    fs::remove_all(cli.dir);
    return "2 certificates verified, " + std::to_string(leaves) + " leaf tampers and " + std::to_string(flips) +
           " bit flips detected, exit codes 0/1/2/3 observed";
}

}  // namespace

int main()
{
    const std::vector<Sample> samples = bfield_samples();
    criterion(1, "Cartan-Dieudonne recomposition", c1_cartan_dieudonne);
    criterion(2, "Lambda_B index and cyclic quotient", [&] { return c2_lambda_b(samples); });
    criterion(3, "exp(B) primitive with U(n) complement", [&] { return c3_exp_b(samples); });
    criterion(4, "phi~ isometry, integrality, commutativity, swap", [&] { return c4_phi_tilde(samples); });
    criterion(5, "orientation signs", c5_orientation);
    criterion(6, "Hodge data on CM periods", c6_hodge);
    criterion(7, "Mukai calculus", c7_mukai);
    criterion(8, "end-to-end chain, verify and tampering", c8_end_to_end);
    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}
