// caustics: command-line driver for the heavy-particle and spin-kicked-rotor experiments.
//
//   caustics run --model heavy --mode husimi --out results/
//   caustics run --config samples/rotor_domain.cfg --K 2.4
//
// Exit status 0 on success, 2 for configuration errors, 3 for numerical failures.
// Failures print one JSON object on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "psc/heavy_model.hpp"
#include "psc/rotor_quantum.hpp"
#include "psc/rotor_semiclassical.hpp"

using namespace psc;
namespace fs = std::filesystem;

namespace {

// Keys in echo order. "auto" values are resolved from the model and mode.
const std::vector<std::pair<std::string, std::string>> kKeys = {
    {"model", "heavy"},   {"mode", "husimi"},     {"hbar", "0.25"},        {"F", "1.0"},
    {"J", "0.75"},        {"t", "1.5"},           {"K", "0.4"},            {"deltaK", "1.0"},
    {"N", "3"},           {"q_in", "auto"},       {"p_in", "auto"},        {"q_out", "auto"},
    {"p_out", "auto"},    {"spin_in", "u"},       {"spin_out", "u"},       {"spins", "auto"},
    {"q_min", "auto"},    {"q_max", "auto"},      {"p_min", "auto"},       {"p_max", "auto"},
    {"re_min", "auto"},   {"re_max", "auto"},     {"im_min", "auto"},      {"im_max", "auto"},
    {"resolution", "auto"}, {"seeds", "24"},      {"seed_half_width", "4"}, {"eps_amp", "1e-6"},
    {"cutoff", "1.151"},  {"r_v", "1.0"},         {"steps", "50"},         {"grid_size", "512"},
    {"exit_label", "induced"}, {"out", "."},
};

using Config = std::map<std::string, std::string>;

bool known(const std::string& k) {
    return std::any_of(kKeys.begin(), kKeys.end(), [&](const auto& kv) { return kv.first == k; });
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void read_config_file(const std::string& path, Config& c) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        std::string s = trim(line.substr(0, line.find('#')));
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
        std::string k = trim(s.substr(0, eq)), v = trim(s.substr(eq + 1));
        if (!known(k)) throw ConfigError(path + ":" + std::to_string(n) + ": unknown key '" + k + "'");
        c[k] = v;
    }
}

double num(const Config& c, const std::string& k) {
    const std::string& v = c.at(k);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw ConfigError("key '" + k + "' expects a number, got '" + v + "'");
    return x;
}

int integer(const Config& c, const std::string& k) {
    double x = num(c, k);
    if (x != std::floor(x)) throw ConfigError("key '" + k + "' expects an integer");
    return static_cast<int>(x);
}

void set_auto(Config& c, const std::string& k, double v) {
    if (c[k] == "auto") c[k] = fmt17(v);
}

SpinState spin_of(const Config& c, const std::string& k) {
    auto s = parse_spin_sequence(c.at(k));
    if (s.size() != 1) throw ConfigError("key '" + k + "' expects a single spin symbol");
    return s[0];
}

// Fills every "auto" with a concrete value so the header echo is complete.
void resolve(Config& c) {
    const std::string& model = c["model"];
    const std::string& mode = c["mode"];
    if (model != "heavy" && model != "rotor") throw ConfigError("model must be heavy or rotor");
    static const std::vector<std::string> modes{"husimi", "imf", "caustics", "spin-evolution", "oracle-compare",
                                                "domain-d"};
    if (std::find(modes.begin(), modes.end(), mode) == modes.end()) throw ConfigError("unknown mode '" + mode + "'");
    if (mode == "spin-evolution" && model != "rotor") throw ConfigError("spin-evolution needs the rotor model");
    if (c["exit_label"] != "induced" && c["exit_label"] != "fixed") throw ConfigError("exit_label must be induced or fixed");

    bool heavy = model == "heavy";
    set_auto(c, "q_in", 0.0);
    set_auto(c, "p_in", heavy ? 0.0 : 1.5);
    double h = num(c, "hbar");
    if (!(h > 0)) throw ConfigError("hbar must be positive");
    if (c["spins"] == "auto") {
        int N = integer(c, "N");
        if (N < 0) throw ConfigError("N must be non-negative");
        c["spins"] = std::string(static_cast<std::size_t>(N) + 1, 'u');
    }
    parse_spin_sequence(c["spins"]);
    spin_of(c, "spin_in");
    spin_of(c, "spin_out");

    int res = mode == "husimi" || mode == "oracle-compare" ? (heavy ? 64 : 16) : mode == "spin-evolution" ? 0 : 128;
    set_auto(c, "resolution", res);
    if (mode != "spin-evolution" && integer(c, "resolution") < 2) throw ConfigError("resolution must be at least 2");
    if (integer(c, "seeds") < 1) throw ConfigError("seeds must be positive");
    if (integer(c, "steps") < 0) throw ConfigError("steps must be non-negative");
    if (!is_power_of_two(static_cast<std::size_t>(std::max(0, integer(c, "grid_size")))))
        throw ConfigError("grid_size must be a power of two");
}

HeavyParams heavy_params(const Config& c) { return {num(c, "hbar"), num(c, "F"), num(c, "J"), num(c, "t")}; }

KickParams kick_params(const Config& c) {
    KickParams p;
    p.hbar = num(c, "hbar");
    p.K = num(c, "K");
    p.deltaK = num(c, "deltaK");
    p.J = num(c, "J");
    p.N = static_cast<int>(parse_spin_sequence(c.at("spins")).size()) - 1;
    return p;
}

CoherentLabel entrance(const Config& c) { return {num(c, "q_in"), num(c, "p_in")}; }

void echo(std::ostream& os, const Config& c, const std::string& prefix = "# param ") {
    for (const auto& [k, d] : kKeys) os << prefix << k << "=" << c.at(k) << "\n";
}

void echo_into(GridField& f, const Config& c) {
    for (const auto& [k, d] : kKeys) f.set_meta(k, c.at(k));
}

std::ofstream open_out(const Config& c, const std::string& name) {
    fs::path p = fs::path(c.at("out")) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw Error("IOError", "cannot open " + p.string());
    return os;
}

void write_grid(GridField f, const Config& c, const std::string& name) {
    echo_into(f, c);
    emit_grid(f, (fs::path(c.at("out")) / name).string());
}

// Map for the configured model; the rotor uses the configured spin sequence.
struct Model {
    std::optional<HeavyMap> heavy;
    std::optional<RotorMap> rotor;
};

Model make_model(const Config& c) {
    Model m;
    if (c.at("model") == "heavy")
        m.heavy.emplace(entrance(c), spin_of(c, "spin_in"), spin_of(c, "spin_out"), heavy_params(c));
    else
        m.rotor.emplace(entrance(c), parse_spin_sequence(c.at("spins")), kick_params(c));
    return m;
}

template <class Fn>
auto with_map(const Model& m, Fn&& fn) {
    if (m.heavy) return fn(*m.heavy);
    return fn(*m.rotor);
}

// Q' window around the anchor: 3 sqrt(hbar) for D and Im F maps, wider for caustics.
Rect qprime_window(Config& c) {
    double half = (c.at("mode") == "caustics" ? (c.at("model") == "heavy" ? 4.0 : 10.0) : 3.0) * std::sqrt(num(c, "hbar"));
    cplx a = label_Q(entrance(c));
    set_auto(c, "re_min", a.real() - half);
    set_auto(c, "re_max", a.real() + half);
    set_auto(c, "im_min", a.imag() - half);
    set_auto(c, "im_max", a.imag() + half);
    return {num(c, "re_min"), num(c, "re_max"), num(c, "im_min"), num(c, "im_max")};
}

// Exit-label window: the figure window for the heavy model, the classical image ±2 otherwise.
Rect exit_window(Config& c, const Model& m) {
    if (m.heavy) {
        set_auto(c, "q_min", -2.0);
        set_auto(c, "q_max", 2.0);
        set_auto(c, "p_min", -3.0);
        set_auto(c, "p_max", 1.0);
    } else {
        CoherentLabel img = label_of(m.rotor->evaluate(label_Q(entrance(c))).Qf);
        set_auto(c, "q_min", img.q - 2.0);
        set_auto(c, "q_max", img.q + 2.0);
        set_auto(c, "p_min", img.p - 2.0);
        set_auto(c, "p_max", img.p + 2.0);
    }
    return {num(c, "q_min"), num(c, "q_max"), num(c, "p_min"), num(c, "p_max")};
}

std::optional<CoherentLabel> fixed_exit(Config& c, const Model& m) {
    CoherentLabel img = with_map(m, [&](const auto& map) { return label_of(map.evaluate(label_Q(entrance(c))).Qf); });
    set_auto(c, "q_out", img.q);
    set_auto(c, "p_out", img.p);
    if (c.at("exit_label") == "induced") return std::nullopt;
    return CoherentLabel{num(c, "q_out"), num(c, "p_out")};
}

SolveOptions solve_options(const Config& c) {
    SolveOptions o;
    o.seeds_per_axis = integer(c, "seeds");
    o.half_width = num(c, "seed_half_width");
    return o;
}

CausticOptions caustic_options(const Config& c) {
    CausticOptions o;
    o.r_v = num(c, "r_v");
    return o;
}

StokesAnalysis stokes_for(const Model& m, const Config& c) {
    if (m.heavy) return heavy_stokes(*m.heavy, caustic_options(c));
    return rotor_stokes(*m.rotor, caustic_options(c));
}

void write_caustics(std::ostream& os, const StokesAnalysis& A) {
    os << "# caustic index kind ReQ ImQ image_q image_p imF zero_distance\n";
    for (std::size_t i = 0; i < A.caustics.size(); ++i) {
        const auto& c = A.caustics[i];
        CoherentLabel l = label_of(c.image);
        os << "caustic " << i << " " << to_string(c.kind) << " " << fmt17(c.Qprime.real()) << " "
           << fmt17(c.Qprime.imag()) << " " << fmt17(l.q) << " " << fmt17(l.p) << " " << fmt17(c.imF) << " "
           << fmt17(c.zero_distance) << "\n";
    }
}

void write_stokes(std::ostream& os, const StokesAnalysis& A) {
    os << "# stokes caustic ray end theta0 npoints, then npoints lines ReQ ImQ\n";
    for (std::size_t i = 0; i < A.lines.size(); ++i)
        for (const auto& L : A.lines[i]) {
            os << "stokes " << i << " " << L.ray << " " << to_string(L.end) << " " << fmt17(L.theta0) << " "
               << L.points.size() << "\n";
            for (cplx z : L.points) os << fmt17(z.real()) << " " << fmt17(z.imag()) << "\n";
        }
    os << "# region caustic valid rule ray_a ray_b npoints, then npoints lines ReQ ImQ\n";
    for (const auto& R : A.regions) {
        os << "region " << R.caustic << " " << R.valid << " "
           << (R.rule == RegionRule::singular_pair ? "singular_pair" : "away_from_anchor") << " " << R.ray_a << " "
           << R.ray_b << " " << R.polygon.size() << "\n";
        for (cplx z : R.polygon) os << fmt17(z.real()) << " " << fmt17(z.imag()) << "\n";
    }
    for (const auto& w : A.warnings) os << "# warning " << w << "\n";
}

// Exact and semiclassical |K|² over the exit window, one value per label.
struct KernelGrids {
    GridField exact, semiclassical;
    std::vector<int> roots, kept;
};

KernelGrids kernel_grids(Config& c, const Model& m, const StokesAnalysis& A) {
    Rect w = exit_window(c, m);
    int res = integer(c, "resolution");
    double eps = num(c, "eps_amp");
    SolveOptions so = solve_options(c);
    KernelGrids g;
    Axis ax = label_axis("q", w.re_min, w.re_max, res), ay = label_axis("p", w.im_min, w.im_max, res);
    g.exact = GridField(ax, ay);
    g.semiclassical = GridField(ax, ay);
    g.exact.provenance = "exact";
    g.semiclassical.provenance = "semiclassical";
    std::size_t n = ax.size * ay.size;
    g.roots.assign(n, 0);
    g.kept.assign(n, 0);
    double cut = num(c, "hbar") * std::log(1.0 / eps);
    CoherentLabel in = entrance(c);
    with_map(m, [&](const auto& map) {
        std::vector<cplx> seeds = default_seeds(map, so);
        parallel_for(n, [&](std::size_t i) {
            CoherentLabel out{ax.at(i % ax.size), ay.at(i / ax.size)};
            if (m.heavy)
                g.exact.values[i] = std::norm(exact_kernel(in, out, m.heavy->spin_in(), m.heavy->spin_out(), m.heavy->params()));
            else
                g.exact.values[i] = std::norm(exact_decomposed_kernel(in, out, m.rotor->spins(), m.rotor->params()));
            try {
                KernelResult r = semiclassical_sum(map, out, seeds, so, &A, eps, 0.3);
                g.semiclassical.values[i] = std::norm(r.value);
                g.roots[i] = static_cast<int>(r.branches.size());
                for (const auto& b : r.branches) g.kept[i] += b.physical && b.F.imag() <= cut;
            } catch (const NoRoots&) {
                g.semiclassical.values[i] = std::numeric_limits<double>::quiet_NaN();
            }
        });
        return 0;
    });
    return g;
}

void run_husimi(Config& c, const Model& m) {
    StokesAnalysis A = stokes_for(m, c);
    KernelGrids g = kernel_grids(c, m, A);
    write_grid(g.exact, c, "husimi_exact.grid");
    write_grid(g.semiclassical, c, "husimi_semiclassical.grid");
    std::ofstream os = open_out(c, "branches.txt");
    echo(os, c);
    os << "# q p roots kept\n";
    for (std::size_t i = 0; i < g.roots.size(); ++i)
        os << fmt17(g.exact.x.at(i % g.exact.x.size)) << " " << fmt17(g.exact.y.at(i / g.exact.x.size)) << " "
           << g.roots[i] << " " << g.kept[i] << "\n";
}

void run_oracle(Config& c, const Model& m) {
    StokesAnalysis A = stokes_for(m, c);
    KernelGrids g = kernel_grids(c, m, A);
    double mx = 0.0;
    for (cplx v : g.exact.values) mx = std::max(mx, v.real());
    double r = 0.3 * std::sqrt(num(c, "hbar"));
    std::vector<double> errs;
    std::ostringstream rows;
    for (std::size_t i = 0; i < g.exact.values.size(); ++i) {
        double q = g.exact.x.at(i % g.exact.x.size), p = g.exact.y.at(i / g.exact.x.size);
        double e = g.exact.values[i].real(), s = g.semiclassical.values[i].real();
        bool near = false;
        for (const auto& cp : A.caustics) {
            CoherentLabel l = label_of(cp.image);
            near |= std::hypot(l.q - q, l.p - p) <= r;
        }
        bool used = e >= 0.1 * mx && !near && std::isfinite(s);
        double rel = e > 0 ? std::abs(s - e) / e : std::numeric_limits<double>::infinity();
        if (used) errs.push_back(rel);
        rows << fmt17(q) << "," << fmt17(p) << "," << fmt17(e) << "," << fmt17(s) << "," << fmt17(rel) << ","
             << used << "\n";
    }
    std::sort(errs.begin(), errs.end());
    std::ofstream os = open_out(c, "oracle_compare.csv");
    echo(os, c);
    os << "# compared=" << errs.size() << "\n";
    os << "# median_relative_error=" << (errs.empty() ? std::string("nan") : fmt17(errs[errs.size() / 2])) << "\n";
    os << "q,p,exact,semiclassical,relative_error,compared\n" << rows.str();
}

void run_imf(Config& c, const Model& m) {
    Rect w = qprime_window(c);
    auto fx = fixed_exit(c, m);
    int res = integer(c, "resolution");
    GridField f = with_map(m, [&](const auto& map) { return imf_grid(map, w, res, fx); });
    write_grid(f, c, "imf.grid");
    StokesAnalysis A = with_map(m, [&](const auto& map) { return analyze_stokes(map, w, caustic_options(c)); });
    std::ofstream os = open_out(c, "imf_caustics.txt");
    echo(os, c);
    write_caustics(os, A);
    if (m.heavy)
        for (cplx z : m.heavy->zeros()) {
            cplx Q = m.heavy->preimage(z);
            if (w.contains(Q)) os << "zero " << fmt17(Q.real()) << " " << fmt17(Q.imag()) << "\n";
        }
}

void run_caustics(Config& c, const Model& m) {
    Rect w = qprime_window(c);
    StokesAnalysis A = with_map(m, [&](const auto& map) { return analyze_stokes(map, w, caustic_options(c)); });
    std::ofstream os = open_out(c, "caustics.txt");
    echo(os, c);
    write_caustics(os, A);
    std::ofstream ls = open_out(c, "stokes.txt");
    echo(ls, c);
    write_stokes(ls, A);
}

void run_spin(Config& c, const Model&) {
    KickParams p = kick_params(c);
    auto obs = evolve_observables(entrance(c), spin_of(c, "spin_in"), p, integer(c, "steps"),
                                  static_cast<std::size_t>(integer(c, "grid_size")));
    std::ofstream os = open_out(c, "spin_evolution.csv");
    echo(os, c);
    os << "n,s_z,c,P\n";
    for (std::size_t n = 0; n < obs.size(); ++n)
        os << n << "," << fmt17(obs[n].s_z) << "," << fmt17(obs[n].c) << "," << fmt17(obs[n].P) << "\n";
}

void run_domain(Config& c, const Model& m) {
    Rect w = qprime_window(c);
    auto fx = fixed_exit(c, m);
    int res = integer(c, "resolution");
    double cut = num(c, "cutoff");
    DomainD D = with_map(m, [&](const auto& map) { return domain_D(map, w, res, cut, fx); });
    GridField mask(D.imf.x, D.imf.y);
    mask.provenance = "semiclassical";
    for (std::size_t i = 0; i < D.mask.size(); ++i) mask.values[i] = D.inside(i) ? 1.0 : 0.0;
    D.imf.set_meta("area", fmt17(D.area));
    mask.set_meta("area", fmt17(D.area));
    write_grid(D.imf, c, "domain_d_imf.grid");
    write_grid(mask, c, "domain_d_mask.grid");
}

void error_record(const std::string& code, int status, const std::string& msg) {
    nlohmann::json j{{"error", code}, {"exit_status", status}, {"message", msg}};
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-space caustics and Stokes analysis for spin-coupled semiclassics"};
    app.require_subcommand(1);
    CLI::App* run = app.add_subcommand("run", "run one experiment");
    std::string config_path;
    run->add_option("--config", config_path, "flat key=value configuration file");
    std::map<std::string, std::string> flags;
    for (const auto& [k, d] : kKeys) run->add_option("--" + k, flags[k], "default " + d);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_record("ConfigError", 2, e.what());
        return 2;
    }

    try {
        Config c;
        for (const auto& [k, d] : kKeys) c[k] = d;
        if (!config_path.empty()) read_config_file(config_path, c);
        for (const auto& [k, d] : kKeys)
            if (run->count("--" + k)) c[k] = flags[k];
        resolve(c);
        fs::create_directories(c.at("out"));
        Model m = make_model(c);
        const std::string& mode = c.at("mode");
        if (mode == "husimi") run_husimi(c, m);
        else if (mode == "oracle-compare") run_oracle(c, m);
        else if (mode == "imf") run_imf(c, m);
        else if (mode == "caustics") run_caustics(c, m);
        else if (mode == "spin-evolution") run_spin(c, m);
        else run_domain(c, m);
    } catch (const Error& e) {
        error_record(e.code(), e.exit_status(), e.what());
        return e.exit_status();
    } catch (const std::exception& e) {
        error_record("InternalError", 3, e.what());
        return 3;
    }
    return 0;
}
