#include "conelab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "conelab/error.hpp"
#include "conelab/maximal.hpp"
#include "conelab/semigroup.hpp"
#include "conelab/sparse_ops.hpp"
#include "conelab/square.hpp"
#include "conelab/verify.hpp"
#include "conelab/weights.hpp"

namespace conelab::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            require(used == item.size(), "");
        } catch (const std::exception&) {
            throw PreconditionError("malformed " + what + " list entry '" + item + "'");
        }
    }
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

// Everything a subcommand may read; each subcommand registers the subset it uses.
struct Options {
    std::string config;
    std::string output;
    // domain
    std::string mode = "line";
    double left = -4.0;
    double right = 4.0;
    std::size_t n = 1024;
    int k = 0;
    // operator
    std::string op = "laplacian";
    std::string psi = "s2exp";
    std::string potential;
    std::string fluctuation = "plain";
    int per_octave = 16;
    double t_min = 0.0;
    double t_max = 0.0;
    // input
    std::string input;
    std::string function = "gauss-0";
    std::uint64_t seed = 42;
    // square
    std::string variant = "cone";
    double alpha = 1.0;
    double lambda = 3.0;
    int k_max = 6;
    // maximal
    std::string kind = "hl";
    std::string family = "all";
    bool centered = false;
    double exponent = 1.0;
    std::string young = "power";
    double young_p = 2.0;
    double young_delta = 1.0;
    double delta = 0.5;
    int shift = 0;
    // weights
    std::string weight;
    double p = 2.0;
    std::size_t max_cells = 0;
    // sparse
    double tolerance = 1e-6;
    // kernel
    std::size_t stride = 1;
    bool bound_check = false;
    // verify
    std::string suite = "all";
    std::string alphas = "1";
    std::string p_values;
    std::size_t functions = 20;
    double drift_tolerance = 0.15;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::string format = "json";
    bool timing = false;
    bool list_suites = false;
};

// Options that never change the numbers written.
const std::set<std::string> kUnhashed = {"help", "config", "output", "workers", "timing", "list-suites"};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "key=value config file with [sections]; flags override it");
    sub->add_option("--output,-o", o.output, "write the result to this file instead of standard output");
}

void add_domain(CLI::App* sub, Options& o) {
    sub->add_option("--mode", o.mode, "line (truncated) or torus (periodic)");
    sub->add_option("--left", o.left, "left endpoint");
    sub->add_option("--right", o.right, "right endpoint");
    sub->add_option("--N", o.n, "number of cells, a power of two");
    sub->add_option("--K", o.k, "N = 2^K when positive");
}

void add_operator(CLI::App* sub, Options& o, bool with_fluctuation = true) {
    sub->add_option("--op", o.op, "laplacian, spectral or schrodinger");
    sub->add_option("--psi", o.psi, "spectral multiplier: s2exp, s4exp or bump");
    sub->add_option("--potential", o.potential, "CSV potential V >= 0 for the schrodinger operator");
    if (with_fluctuation) sub->add_option("--fluctuation", o.fluctuation, "plain, gradient or spectral");
    sub->add_option("--per-octave", o.per_octave, "cone time nodes per octave");
    sub->add_option("--t-min", o.t_min, "smallest cone time; 0 means max(length / 512, 2h)");
    sub->add_option("--t-max", o.t_max, "largest cone time; 0 means the domain length");
}

void add_input(CLI::App* sub, Options& o) {
    sub->add_option("--input,-i", o.input, "GridFunction CSV (x,value); its domain line overrides the domain flags");
    sub->add_option("--function", o.function, "corpus function used when no input is given (e.g. gauss-0, step-3)");
    sub->add_option("--seed", o.seed, "corpus seed");
}

Domain make_domain(const Options& o) {
    std::size_t n = o.n;
    if (o.k > 0) {
        require(o.k < 31, "K must be below 31");
        n = std::size_t{1} << o.k;
    }
    return Domain::make(parse_domain_mode(o.mode), o.left, o.right, n);
}

GridFunction load_function(const Options& o) {
    if (!o.input.empty()) {
        std::ifstream in(o.input);
        if (!in) throw PreconditionError("cannot read input file " + o.input);
        return read_csv(in);
    }
    const Domain d = make_domain(o);
    for (const auto& f : function_corpus(20, o.seed)) {
        if (f.label == o.function) return sample_corpus(d, f);
    }
    throw PreconditionError("unknown corpus function '" + o.function + "'");
}

OperatorSpec make_operator(const Options& o, const Domain& d) {
    switch (parse_operator_kind(o.op)) {
        case OperatorKind::Laplacian: return OperatorSpec::laplacian();
        case OperatorKind::Spectral: return OperatorSpec::spectral(SpectralMultiplier::from_name(o.psi));
        case OperatorKind::Schrodinger: {
            require(!o.potential.empty(), "the schrodinger operator needs --potential");
            std::ifstream in(o.potential);
            if (!in) throw PreconditionError("cannot read potential file " + o.potential);
            return OperatorSpec::schrodinger(read_csv(in, d));
        }
    }
    throw PreconditionError("unknown operator " + o.op);
}

KernelField make_field(const Options& o, const Domain& d) {
    OperatorSpec op = make_operator(o, d);
    const Fluctuation kind = parse_fluctuation(o.fluctuation);
    if (kind == Fluctuation::Spectral) op.psi = SpectralMultiplier::from_name(o.psi);
    // Unset t_min follows the default grid but never drops below 2h on coarse grids.
    const double t_min = o.t_min > 0.0 ? o.t_min : std::max(d.length() / 512.0, 2.0 * d.h());
    const double t_max = o.t_max > 0.0 ? o.t_max : d.length();
    return KernelField(d, std::move(op), kind, TimeGrid::make(t_min, t_max, o.per_octave));
}

MaximalConfig maximal_config(const Options& o) {
    MaximalConfig mc;
    mc.family = parse_cube_family(o.family);
    mc.centered = o.centered;
    mc.max_cells = o.max_cells;
    return mc;
}

struct Header {
    std::string hash;
    std::string line() const { return std::string("conelab ") + kVersion + " config=" + hash; }
    nlohmann::json json() const { return {{"version", kVersion}, {"config_hash", hash}}; }
};

// Effective option values of the active subcommand, defaults included.
std::map<std::string, std::string> effective_config(const CLI::App* sub) {
    std::map<std::string, std::string> out;
    out["subcommand"] = sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (kUnhashed.count(name)) continue;
        const auto& results = opt->results();
        out[name] = results.empty() ? opt->get_default_str() : results.back();
    }
    return out;
}

class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw PreconditionError("cannot write output file " + path);
        out_ = file_.get();
    }
    std::ostream& operator*() { return *out_; }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* out_;
};

int cmd_kernel(const Options& o, const Header& header, std::ostream& out) {
    const Domain d = make_domain(o);
    Sink sink(o.output, out);
    if (o.bound_check) {
        const auto rep = kernel_bound_check(make_operator(o, d), d);
        nlohmann::json j;
        j["artifact"] = header.json();
        j["c"] = rep.c;
        j["gaussian_C"] = rep.gaussian_C;
        j["poly_C_half"] = rep.poly_C_half;
        j["poly_C_one"] = rep.poly_C_one;
        j["samples"] = rep.samples;
        j["violations"] = rep.violations;
        *sink << j.dump(2) << '\n';
        return rep.violations == 0 ? kOk : kSuiteFailure;
    }
    const KernelField field = make_field(o, d);
    *sink << "# " << header.line() << '\n';
    field.write_csv(*sink, o.stride);
    return kOk;
}

int cmd_square(const Options& o, const Header& header, std::ostream& out) {
    const GridFunction f = load_function(o);
    const KernelField field = make_field(o, f.domain);
    const GStarConfig gc{o.lambda, o.k_max};
    GridFunction result;
    double lambda = 0.0;
    if (o.variant == "cone" || o.variant == "smoothed") {
        result = conical_square(f, field, ConeConfig{o.alpha}, o.variant == "smoothed");
    } else if (o.variant == "vertical") {
        result = vertical_square(f, field);
    } else if (o.variant == "gstar" || o.variant == "series") {
        lambda = o.lambda;
        result = o.variant == "gstar" ? gstar_square(f, field, gc) : cone_series(f, field, gc);
    } else {
        throw PreconditionError("unknown square variant '" + o.variant + "' (cone, smoothed, vertical, gstar, series)");
    }
    auto meta = square_metadata(field, o.variant, o.alpha, lambda);
    meta.insert(meta.begin(), header.line());
    Sink sink(o.output, out);
    write_csv(*sink, result, meta);
    return kOk;
}

int cmd_maximal(const Options& o, const Header& header, std::ostream& out) {
    const GridFunction f = load_function(o);
    const MaximalConfig mc = maximal_config(o);
    GridFunction result;
    if (o.kind == "hl") {
        result = hl_maximal(f, mc, o.exponent);
    } else if (o.kind == "dyadic") {
        result = dyadic_maximal(f, DyadicGrid(f.domain, o.shift));
    } else if (o.kind == "orlicz") {
        result = orlicz_maximal(f, YoungFunction::from_name(o.young, o.young_p, o.young_delta), mc);
    } else if (o.kind == "sharp") {
        result = sharp_maximal(f, o.delta, mc);
    } else {
        throw PreconditionError("unknown maximal kind '" + o.kind + "' (hl, dyadic, orlicz, sharp)");
    }
    Sink sink(o.output, out);
    write_csv(*sink, result, {header.line(), "maximal=" + o.kind, "family=" + o.family});
    return kOk;
}

int cmd_weights(const Options& o, const Header& header, std::ostream& out) {
    Weight w;
    std::string name = o.weight;
    if (!o.input.empty()) {
        std::ifstream in(o.input);
        if (!in) throw PreconditionError("cannot read input file " + o.input);
        w = read_csv(in);
        name = o.input;
    } else {
        require(!o.weight.empty(), "weights needs --weight or --input");
        w = make_weight(make_domain(o), o.weight);
    }
    const CubeScan scan{parse_cube_family(o.family), o.max_cells};
    const auto c = weight_constants(w, o.p, scan);
    auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
    nlohmann::json j;
    j["artifact"] = header.json();
    j["weight"] = name;
    j["family"] = to_string(scan.family);
    j["p"] = c.p;
    j["ap"] = num(c.ap);
    j["a1"] = num(c.a1);
    j["ainfty_hp"] = num(c.ainfty_hp);
    j["ainfty_exp"] = num(c.ainfty_exp);
    j["apR"] = num(c.apR);
    j["rh_infinity"] = num(c.rh_infinity);
    Sink sink(o.output, out);
    *sink << j.dump(2) << '\n';
    return kOk;
}

int cmd_sparse(const Options& o, const Header& header, std::ostream& out) {
    const GridFunction f = load_function(o);
    const KernelField field = make_field(o, f.domain);
    DominationConfig dc;
    dc.delta = o.delta;
    dc.series_tolerance = o.tolerance;
    auto j = dominate(f, field, ConeConfig{o.alpha}, dc).to_json();
    j["artifact"] = header.json();
    Sink sink(o.output, out);
    *sink << j.dump(2) << '\n';
    return kOk;
}

int list_suites(std::ostream& out) {
    for (const auto& id : suite_names()) out << id << "  " << suite_statement(id) << '\n';
    return kOk;
}

int cmd_verify(const Options& o, const Header& header, std::ostream& out, std::ostream& err) {
    if (o.list_suites) return list_suites(out);
    require(o.format == "json" || o.format == "text", "format must be json or text");
    std::vector<std::string> ids = split_names(o.suite);
    require(!ids.empty(), "no suite selected");
    if (std::find(ids.begin(), ids.end(), "all") != ids.end()) ids = suite_names();
    for (const auto& id : ids) suite_statement(id);  // rejects unknown ids before any work

    VerifyConfig vc;
    const Domain probe = Domain{parse_domain_mode(o.mode), o.left, o.right, o.k > 0 ? std::size_t{1} << o.k : o.n};
    vc.mode = probe.mode;
    vc.left = probe.left;
    vc.right = probe.right;
    vc.n = probe.n;
    vc.op = o.op;
    vc.psi = o.psi;
    vc.alphas = parse_list(o.alphas, "alpha");
    vc.p_values = parse_list(o.p_values, "p");
    vc.per_octave = o.per_octave;
    vc.t_min = o.t_min;
    vc.t_max = o.t_max;
    vc.seed = o.seed;
    vc.functions = o.functions;
    vc.drift_tolerance = o.drift_tolerance;
    vc.lambda = o.lambda;
    vc.delta = o.delta;
    vc.workers = o.workers;
    VerifyContext ctx(vc);

    std::vector<SuiteReport> reports;
    for (const auto& id : ids) {
        reports.push_back(run_suite(ctx, id));
        if (o.timing) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "suite %s: %.3f s\n", id.c_str(), reports.back().runtime);
            err << buf;
        }
    }
    Sink sink(o.output, out);
    if (o.format == "json") {
        auto j = reports_to_json(reports, false);
        j["artifact"] = header.json();
        *sink << j.dump(2) << '\n';
    } else {
        *sink << "# " << header.line() << '\n' << reports_to_text(reports, false);
    }
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const SuiteReport& r) { return r.passed; });
    return ok ? kOk : kSuiteFailure;
}

int cmd_report(const Options& o, std::ostream& out) {
    require(!o.input.empty(), "report needs --input with a verify JSON report");
    std::ifstream in(o.input);
    if (!in) throw PreconditionError("cannot read input file " + o.input);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError("malformed report JSON: " + std::string(e.what()));
    }
    const auto reports = reports_from_json(j);
    Sink sink(o.output, out);
    if (j.contains("artifact")) {
        *sink << "# conelab " << j["artifact"].value("version", "?") << " config="
              << j["artifact"].value("config_hash", "?") << '\n';
    }
    *sink << reports_to_text(reports, false);
    const bool ok = std::all_of(reports.begin(), reports.end(), [](const SuiteReport& r) { return r.passed; });
    return ok ? kOk : kSuiteFailure;
}

const std::set<std::string> kSubcommands = {"kernel", "square", "maximal", "weights", "sparse", "verify", "report"};
// Sections that apply to every subcommand registering the key.
const std::set<std::string> kSharedSections = {"", "domain", "operator", "cone", "corpus", "input", "run", "output"};

// Command-line tokens equivalent to the config entries that concern `sub`.
std::vector<std::string> config_arguments(const std::vector<ConfigEntry>& entries, CLI::App& app, CLI::App* sub) {
    std::vector<std::string> args;
    for (const auto& e : entries) {
        const bool own_section = e.section == sub->get_name();
        if (!own_section && !kSharedSections.count(e.section)) {
            if (kSubcommands.count(e.section)) continue;
            throw PreconditionError("config line " + std::to_string(e.line) + ": unknown section [" + e.section + "]");
        }
        const std::string flag = "--" + e.key;
        if (e.key == "config") throw PreconditionError("config files cannot include other config files");
        const CLI::Option* opt = sub->get_option_no_throw(flag);
        if (!opt) {
            bool known = false;
            for (const auto* other : app.get_subcommands({})) known = known || other->get_option_no_throw(flag);
            if (!known || own_section) {
                throw PreconditionError("config line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
            }
            continue;
        }
        if (opt->get_type_size() == 0) {  // flag
            if (e.value == "true" || e.value == "1" || e.value == "yes") args.push_back(flag);
            else require(e.value == "false" || e.value == "0" || e.value == "no",
                         "config line " + std::to_string(e.line) + ": flag '" + e.key + "' needs true or false");
        } else {
            args.push_back(flag);
            args.push_back(e.value);
        }
    }
    return args;
}

}  // namespace

std::vector<ConfigEntry> parse_config(std::istream& in, const std::string& source) {
    std::vector<ConfigEntry> out;
    std::string raw, section;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const std::string where = source + ":" + std::to_string(number);
        if (line.front() == '[') {
            require(line.back() == ']' && line.size() > 2, where + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        require(eq != std::string::npos, where + ": expected key = value");
        ConfigEntry e{section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), number};
        require(!e.key.empty(), where + ": empty key");
        if (e.value.size() >= 2 && e.value.front() == '"' && e.value.back() == '"') {
            e.value = e.value.substr(1, e.value.size() - 2);
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string config_hash(const std::map<std::string, std::string>& effective) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [k, v] : effective) feed(k + "=" + v + "\n");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"conelab: conical square functions, sparse bounds and weighted verification"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.set_version_flag("--version", std::string("conelab ") + kVersion);
    app.require_subcommand(0, 1);
    bool top_list = false;
    app.add_flag("--list-suites", top_list, "list the verification suites and exit");

    auto* kernel = app.add_subcommand("kernel", "dump the fluctuation kernels as CSV t,x,y,value");
    add_common(kernel, o);
    add_domain(kernel, o);
    add_operator(kernel, o);
    kernel->add_option("--stride", o.stride, "keep every stride-th cell pair");
    kernel->add_flag("--bound-check", o.bound_check, "measure the heat kernel bound constants instead");

    auto* square = app.add_subcommand("square", "conical, vertical and g* square functions of a function");
    add_common(square, o);
    add_domain(square, o);
    add_operator(square, o);
    add_input(square, o);
    square->add_option("--variant", o.variant, "cone, smoothed, vertical, gstar or series");
    square->add_option("--alpha", o.alpha, "cone aperture");
    square->add_option("--lambda", o.lambda, "g* exponent, above 2");
    square->add_option("--k-max", o.k_max, "apertures 2^0..2^k_max in the cone series");

    auto* maximal = app.add_subcommand("maximal", "maximal functions of a function");
    add_common(maximal, o);
    add_domain(maximal, o);
    add_input(maximal, o);
    maximal->add_option("--kind", o.kind, "hl, dyadic, orlicz or sharp");
    maximal->add_option("--family", o.family, "all, dyadic or three-grid");
    maximal->add_flag("--centered", o.centered, "centered intervals (all-intervals family)");
    maximal->add_option("--max-cells", o.max_cells, "cap on interval length in cells; 0 for none");
    maximal->add_option("--exponent", o.exponent, "r in <|f|^r>^(1/r) for the hl kind");
    maximal->add_option("--young", o.young, "power, logbump, loglog, llogl, expl or commutator");
    maximal->add_option("--young-p", o.young_p, "Young function exponent");
    maximal->add_option("--young-delta", o.young_delta, "Young function log exponent");
    maximal->add_option("--delta", o.delta, "sharp maximal exponent in (0, 1]");
    maximal->add_option("--shift", o.shift, "dyadic grid shift: 0, 1 or 2");

    auto* weights = app.add_subcommand("weights", "weight class constants as JSON");
    add_common(weights, o);
    add_domain(weights, o);
    weights->add_option("--weight", o.weight,
                        "named weight: constant, 'two-level a b', 'power a', 'cr delta', 'random-lognormal seed', spike");
    weights->add_option("--input,-i", o.input, "weight as GridFunction CSV");
    weights->add_option("--p", o.p, "exponent of the A_p and restricted A_p constants");
    weights->add_option("--family", o.family, "all, dyadic or three-grid");
    weights->add_option("--max-cells", o.max_cells, "cap on interval length in cells; 0 for none");

    auto* sparse = app.add_subcommand("sparse", "sparse domination certificate as JSON");
    add_common(sparse, o);
    add_domain(sparse, o);
    add_operator(sparse, o, false);
    add_input(sparse, o);
    sparse->add_option("--alpha", o.alpha, "cone aperture");
    sparse->add_option("--delta", o.delta, "decay 2^(-j delta) of the dilated averages");
    sparse->add_option("--tolerance", o.tolerance, "series truncation relative to the running sum");

    auto* verify = app.add_subcommand("verify", "run verification suites and emit a SuiteReport");
    add_common(verify, o);
    add_domain(verify, o);
    verify->get_option("--N")->default_val(2048);
    verify->add_option("--op", o.op, "laplacian or spectral");
    verify->add_option("--psi", o.psi, "spectral multiplier: s2exp, s4exp or bump");
    verify->add_option("--per-octave", o.per_octave, "cone time nodes per octave");
    verify->add_option("--t-min", o.t_min, "smallest cone time; 0 means length / 512");
    verify->add_option("--t-max", o.t_max, "largest cone time; 0 means the domain length");
    verify->add_option("--suite", o.suite, "comma-separated suite ids or all");
    verify->add_option("--alpha", o.alphas, "comma-separated apertures");
    verify->add_option("--p", o.p_values, "comma-separated exponents; empty for each suite's own");
    verify->add_option("--seed", o.seed, "corpus seed");
    verify->add_option("--functions", o.functions, "corpus size, at most 20");
    verify->add_option("--drift-tolerance", o.drift_tolerance, "allowed relative drift of constants under N/2 -> N");
    verify->add_option("--lambda", o.lambda, "g* exponent");
    verify->add_option("--delta", o.delta, "dilation decay in the domination pipeline");
    verify->add_option("--workers", o.workers, "worker threads");
    verify->add_option("--format", o.format, "json or text");
    verify->add_flag("--timing", o.timing, "print per-suite runtime to standard error");
    verify->add_flag("--list-suites", o.list_suites, "list the verification suites and exit");

    auto* report = app.add_subcommand("report", "render a verify JSON report as text");
    add_common(report, o);
    report->add_option("--input,-i", o.input, "verify JSON report");

    // Locate the subcommand and --config so the config file can be spliced in
    // ahead of the command-line flags, which then take precedence.
    std::vector<std::string> args(argv + 1, argv + argc);
    std::size_t sub_pos = args.size();
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (sub_pos == args.size() && kSubcommands.count(args[i])) sub_pos = i;
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    try {
        if (!config_path.empty()) {
            require(sub_pos < args.size(), "--config needs a subcommand");
            std::ifstream in(config_path);
            if (!in) throw PreconditionError("cannot read config file " + config_path);
            const auto entries = parse_config(in, config_path);
            const auto extra = config_arguments(entries, app, app.get_subcommand(args[sub_pos]));
            args.insert(args.begin() + static_cast<long>(sub_pos) + 1, extra.begin(), extra.end());
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << "conelab " << kVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    // Subcommand help is raised as CallForHelp from within parse above; anything else dispatches.
    if (top_list) return list_suites(out);
    CLI::App* active = nullptr;
    for (auto* sub : app.get_subcommands()) active = sub;
    if (!active) {
        out << app.help();
        return kConfigError;
    }
    const Header header{config_hash(effective_config(active))};
    try {
        const std::string name = active->get_name();
        if (name == "kernel") return cmd_kernel(o, header, out);
        if (name == "square") return cmd_square(o, header, out);
        if (name == "maximal") return cmd_maximal(o, header, out);
        if (name == "weights") return cmd_weights(o, header, out);
        if (name == "sparse") return cmd_sparse(o, header, out);
        if (name == "verify") return cmd_verify(o, header, out, err);
        return cmd_report(o, out);
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kSuiteFailure;
    }
}

}  // namespace conelab::cli
