// k3iso command line: decompose, lift, chain, verify, demo.
//
// Exit codes: 0 all checks pass, 1 parse or usage error, 2 mathematical
// precondition failure, 3 verification failure.

#include "k3iso/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace k3iso;

enum Exit { ok = 0, usage = 1, precondition = 2, verification = 3 };

struct Options {
    std::string input;
    std::string output;
    bool decompose_only = false;
    std::uint64_t seed = 1;
    bool quiet = false;
    std::string demo_name;
};

std::string read_input(const std::string& path)
{
    std::ostringstream ss;
    if (path.empty() || path == "-") {
        ss << std::cin.rdbuf();
        return ss.str();
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot open '" + path + "'");
    ss << f.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw parse_error("cannot write '" + path + "'");
    f << text;
}

std::string dump(const json& j) { return io::canonical(j) + "\n"; }

void note(const Options& o, const std::string& msg)
{
    if (!o.quiet) std::cerr << msg << "\n";
}

int report_status(const Options& o, const std::string& verb, const VerificationReport& r)
{
    if (const Check* f = r.first_failure()) {
        std::cerr << verb << ": verification failed: " << f->name << ": " << f->witness << "\n";
        return verification;
    }
    note(o, verb + ": " + std::to_string(r.checks.size()) + " checks pass");
    return ok;
}

int run_decompose(const Options& o)
{
    const json j = io::parse_document(read_input(o.input));
    const Lattice l = lattice_from_json(io::field(j, "lattice", "input"), "input.lattice", false);
    const RatMatrix phi = io::to_rat_matrix(io::field(j, "isometry", "input"), "input.isometry", false, l.rank(), l.rank());
    const std::vector<ReflectionDatum> cd = cartan_dieudonne(RationalIsometry{l, l, phi});
    const json out = decomposition_to_json(l, phi, cd);
    write_output(o.output, dump(out));
    if (!out["recomposes"].get<bool>()) {
        std::cerr << "decompose: verification failed: recomposition\n";
        return verification;
    }
    note(o, "decompose: " + std::to_string(cd.size()) + " reflections");
    return ok;
}

int run_lift(const Options& o)
{
    const LiftInput in = lift_input_from_json(io::parse_document(read_input(o.input)));
    const auto [out, report] = lift_report(in);
    write_output(o.output, dump(out));
    return report_status(o, "lift", report);
}

int run_chain(const Options& o)
{
    if (o.decompose_only) return run_decompose(o);
    const PipelineInput in = input_from_json(io::parse_document(read_input(o.input)));
    const Certificate c = run_pipeline(in);
    write_output(o.output, certificate_text(c));
    note(o, "chain: " + std::to_string(c.steps.size()) + " steps");
    return report_status(o, "chain", c.report);
}

int run_verify(const Options& o)
{
    const VerificationReport r = verify_document(read_input(o.input));
    json out = report_to_json(r);
    out["format"] = report_format;
    write_output(o.output, dump(out));
    return report_status(o, "verify", r);
}

int run_demo(const Options& o)
{
    if (!o.demo_name.empty()) {
        write_output(o.output, dump(input_to_json(demo_input(o.demo_name, o.seed))));
        return ok;
    }
    json all = json::object();
    for (const std::string& name : demo_names()) all[name] = input_to_json(demo_input(name, o.seed));
    write_output(o.output, dump(all));
    return ok;
}

}  // namespace

int main(int argc, char** argv)
{
    Options o;
    CLI::App app{"Exact lattice toolkit for reflective Hodge isometries of K3 lattices"};
    app.require_subcommand(1, 1);
    app.fallthrough();
    app.add_option("--input", o.input, "Input document (default: stdin)");
    app.add_option("--output", o.output, "Output file (default: stdout)");
    app.add_flag("--decompose-only", o.decompose_only, "chain: emit only the reflection factorization");
    app.add_option("--seed", o.seed, "Seed for the random demo");
    app.add_flag("--quiet", o.quiet, "Suppress progress messages");

    CLI::App* decompose = app.add_subcommand("decompose", "Factor an isometry into reflections");
    CLI::App* lift = app.add_subcommand("lift", "Lift one reflection to the Mukai extension");
    CLI::App* chain = app.add_subcommand("chain", "Run the full pipeline and emit a certificate");
    CLI::App* verify = app.add_subcommand("verify", "Verify a certificate");
    CLI::App* demo = app.add_subcommand("demo", "Emit built-in input documents");
    demo->add_option("name", o.demo_name, "identity, reflection, minus_id or random")
        ->check(CLI::IsMember(demo_names()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : usage;
    }

    try {
        if (*decompose) return run_decompose(o);
        if (*lift) return run_lift(o);
        if (*chain) return run_chain(o);
        if (*verify) return run_verify(o);
        if (*demo) return run_demo(o);
    } catch (const parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return usage;
    } catch (const math_error& e) {
        std::cerr << "precondition failed: " << e.what() << "\n";
        return precondition;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "verification failed: internal: " << e.what() << "\n";
        return verification;
    }
    return usage;
}
