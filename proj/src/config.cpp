#include "pflow/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "pflow/analytic.hpp"
#include "pflow/errors.hpp"

namespace pflow {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
}

struct Loc {
    int line;
    int col;
};

[[noreturn]] void fail(const std::string& what, Loc loc) { throw ParseError(what, loc.line, loc.col); }

double to_double(const std::string& s, Loc loc) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("invalid number '" + s + "'", loc);
    return v;
}

long long to_int(const std::string& s, Loc loc) {
    long long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("invalid integer '" + s + "'", loc);
    return v;
}

bool to_bool(const std::string& s, Loc loc) {
    if (s == "true" || s == "on" || s == "yes" || s == "1") return true;
    if (s == "false" || s == "off" || s == "no" || s == "0") return false;
    fail("expected a boolean, got '" + s + "'", loc);
}

std::vector<int> to_int_list(const std::string& s, Loc loc) {
    std::vector<int> out;
    for (const auto& item : split(s, ',')) out.push_back(static_cast<int>(to_int(item, loc)));
    if (out.empty()) fail("empty list", loc);
    return out;
}

Point to_point(const std::string& s, Loc loc) {
    const auto parts = split(s, ',');
    if (parts.empty() || parts.size() > 2) fail("expected one or two numbers", loc);
    Point p{to_double(parts[0], loc), 0.0};
    p[1] = parts.size() == 2 ? to_double(parts[1], loc) : p[0];
    return p;
}

// Checks preset syntax now so that errors point at the offending value.
template <class F>
void check_preset(F parse, const std::string& value, Loc loc) {
    try {
        (void)parse(value);
    } catch (const ParseError& e) {
        fail(e.what(), loc);
    }
}

struct ParseState {
    bool has_model = false;
};

void parse_into(RunConfig& cfg, ParseState& st, const std::string& text);

void apply(RunConfig& cfg, ParseState& st, const std::string& section, const std::string& key,
           const std::string& value, Loc loc) {
    auto unknown = [&] { fail("unknown key '" + key + "' in [" + section + "]", loc); };
    if (section.empty()) {
        if (key != "scenario") fail("key '" + key + "' outside of a section", loc);
        const std::filesystem::path file = scenario_dir() / (value + ".ini");
        std::ifstream in(file);
        if (!in) fail("unknown scenario '" + value + "'", loc);
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            parse_into(cfg, st, ss.str());
        } catch (const ParseError& e) {
            fail(std::string("in scenario '") + value + "': " + e.what(), loc);
        }
        cfg.scenario = value;
        return;
    }
    if (section == "model") {
        st.has_model = true;
        if (key == "mode") {
            if (value != "general" && value != "classical" && value != "matrix_diagonal")
                fail("mode must be general, classical or matrix_diagonal", loc);
            cfg.mode = value;
        } else if (key == "beta") {
            check_preset(ScalarLaw::parse, value, loc);
            cfg.beta = value;
        } else if (key == "b") {
            check_preset(ScalarLaw::parse, value, loc);
            cfg.b = value;
        } else if (key == "psi") {
            check_preset(ScalarLaw::parse, value, loc);
            cfg.psi = value;
        } else if (key == "b_diag") {
            check_preset(ScalarLaw::parse, value, loc);
            cfg.b_diag = value;
        } else if (key == "potential") {
            check_preset(Potential::parse, value, loc);
            cfg.potential = value;
        } else if (key == "m") {
            cfg.m = to_double(value, loc);
            if (!(cfg.m > 1.0)) fail("m must exceed 1", loc);
        } else if (key == "beta_variant") {
            if (value == "i") cfg.beta_variant = BetaVariant::i;
            else if (value == "i_prime") cfg.beta_variant = BetaVariant::i_prime;
            else fail("beta_variant must be i or i_prime", loc);
        } else {
            unknown();
        }
    } else if (section == "grid") {
        if (key == "dim") {
            const auto d = to_int(value, loc);
            if (d != 1 && d != 2) fail("dim must be 1 or 2", loc);
            cfg.dim = static_cast<int>(d);
        } else if (key == "lower") {
            cfg.lower = to_point(value, loc);
        } else if (key == "upper") {
            cfg.upper = to_point(value, loc);
        } else if (key == "cells") {
            const auto c = to_int_list(value, loc);
            if (c.size() > 2 || *std::min_element(c.begin(), c.end()) < 3) fail("cells must be >= 3 per axis", loc);
            cfg.cells = {c[0], c.size() == 2 ? c[1] : c[0]};
        } else {
            unknown();
        }
    } else if (section == "time") {
        if (key == "t0") cfg.time.t0 = to_double(value, loc);
        else if (key == "t1") cfg.time.t1 = to_double(value, loc);
        else if (key == "cfl_safety") cfg.time.cfl_safety = to_double(value, loc);
        else if (key == "max_dt") cfg.time.max_dt = to_double(value, loc);
        else if (key == "store_every") cfg.time.store_every = static_cast<int>(to_int(value, loc));
        else if (key == "scheme") {
            if (value == "explicit_euler" || value == "explicit") cfg.time.scheme = Scheme::explicit_euler;
            else if (value == "semi_implicit") cfg.time.scheme = Scheme::semi_implicit;
            else fail("scheme must be explicit_euler or semi_implicit", loc);
        } else {
            unknown();
        }
    } else if (section == "init") {
        if (key != "profile") unknown();
        InitSpec spec;
        try {
            spec = parse_init(value);
        } catch (const ParseError& e) {
            fail(e.what(), loc);
        }
        const std::string& kind = spec.kind;
        if (kind != "gaussian" && kind != "barenblatt" && kind != "gibbs" && kind != "spike" && kind != "file")
            fail("unknown init profile '" + kind + "'", loc);
        cfg.init = value;
    } else if (section == "verify") {
        auto& v = cfg.verify;
        if (key == "battery") v.battery = static_cast<int>(to_int(value, loc));
        else if (key == "probes") v.probes = static_cast<int>(to_int(value, loc));
        else if (key == "gradient_flow") v.gradient_flow = to_bool(value, loc);
        else if (key == "fd_oracle") v.fd_oracle = to_bool(value, loc);
        else if (key == "gf_tolerance") v.gf_tolerance = to_double(value, loc);
        else if (key == "lyapunov") v.lyapunov = to_bool(value, loc);
        else if (key == "energy_constant") v.energy_constant = to_bool(value, loc);
        else if (key == "dissipation") v.dissipation = to_bool(value, loc);
        else if (key == "stationary") v.stationary = to_bool(value, loc);
        else if (key == "stationary_l1") v.stationary_l1 = to_double(value, loc);
        else if (key == "analytic") v.analytic = to_bool(value, loc);
        else if (key == "differential") v.differential = to_bool(value, loc);
        else if (key == "differential_tolerance") v.differential_tolerance = to_double(value, loc);
        else if (key == "ladder") v.ladder = to_bool(value, loc);
        else if (key == "ladder_counts") v.ladder_counts = to_int_list(value, loc);
        else if (key == "ladder_samples") v.ladder_samples = static_cast<int>(to_int(value, loc));
        else if (key == "refinement_ladder") v.refinement_ladder = to_bool(value, loc);
        else if (key == "refinement_factors") v.refinement_factors = to_int_list(value, loc);
        else if (key == "seed") v.seed = static_cast<unsigned long long>(to_int(value, loc));
        else unknown();
    } else if (section == "output") {
        if (key == "dir") cfg.output_dir = value;
        else if (key == "csv_stride") {
            cfg.csv_stride = static_cast<int>(to_int(value, loc));
            if (cfg.csv_stride < 1) fail("csv_stride must be >= 1", loc);
        } else {
            unknown();
        }
    } else {
        fail("unknown section [" + section + "]", loc);
    }
}

void parse_into(RunConfig& cfg, ParseState& st, const std::string& text) {
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const Loc at{line_no, static_cast<int>(first) + 1};
        if (line[first] == '[') {
            const auto close = line.find(']', first);
            if (close == std::string::npos) fail("missing ']'", at);
            if (!trim(line.substr(close + 1)).empty()) fail("trailing text after section header", {line_no, static_cast<int>(close) + 2});
            section = trim(line.substr(first + 1, close - first - 1));
            if (section.empty()) fail("empty section name", at);
            static const std::set<std::string> known{"model", "grid", "time", "init", "verify", "output"};
            if (!known.count(section)) fail("unknown section [" + section + "]", at);
            if (section == "model") st.has_model = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("expected key = value", at);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail("missing key before '='", at);
        const auto vstart = line.find_first_not_of(" \t", eq + 1);
        const Loc vloc{line_no, static_cast<int>(vstart == std::string::npos ? eq + 2 : vstart + 1)};
        const std::string value = trim(line.substr(eq + 1));
        if (value.empty()) fail("missing value for '" + key + "'", vloc);
        apply(cfg, st, section, key, value, vloc);
    }
}

}  // namespace

std::filesystem::path scenario_dir() {
    if (const char* env = std::getenv("PFLOW_SCENARIOS")) return env;
    return PFLOW_SCENARIO_DIR;
}

std::vector<std::string> scenario_names() {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(scenario_dir(), ec))
        if (e.path().extension() == ".ini") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    RunConfig cfg;
    ParseState st;
    parse_into(cfg, st, text);
    if (!st.has_model) throw ParseError("missing [model] section", 1, 1);
    cfg.base_dir = base_dir;
    return cfg;
}

RunConfig load_config(const std::string& path_or_name) {
    std::filesystem::path p(path_or_name);
    if (!std::filesystem::is_regular_file(p)) {
        const auto preset = scenario_dir() / (path_or_name + ".ini");
        if (std::filesystem::exists(preset)) return parse_config("scenario = " + path_or_name + "\n", scenario_dir());
        throw ParseError("cannot read config '" + path_or_name + "'", 0, 0);
    }
    std::ifstream in(p);
    if (!in) throw ParseError("cannot read config '" + path_or_name + "'", 0, 0);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), p.parent_path());
}

EnergyFunctional make_energy(const RunConfig& cfg) {
    if (cfg.mode == "classical") return EnergyFunctional::classical(cfg.m);
    const Potential phi = Potential::parse(cfg.potential);
    if (cfg.mode == "matrix_diagonal")
        return EnergyFunctional::matrix_diagonal(ScalarLaw::parse(cfg.psi), ScalarLaw::parse(cfg.b_diag), phi);
    return EnergyFunctional::general(ScalarLaw::parse(cfg.beta), ScalarLaw::parse(cfg.b), phi);
}

Grid make_grid(const RunConfig& cfg, int refine) {
    if (refine < 1) throw DomainError("refinement factor must be >= 1");
    if (cfg.dim == 1) return Grid::line(cfg.lower[0], cfg.upper[0], cfg.cells[0] * refine);
    return Grid::rect(cfg.lower, cfg.upper, cfg.cells[0] * refine, cfg.cells[1] * refine);
}

double InitSpec::get(const std::string& key, double fallback) const {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

InitSpec parse_init(const std::string& text) {
    InitSpec spec;
    const auto colon = text.find(':');
    spec.kind = trim(text.substr(0, colon));
    if (colon == std::string::npos) return spec;
    const std::string rest = trim(text.substr(colon + 1));
    if (spec.kind == "file") {
        spec.path = rest;
        return spec;
    }
    for (const auto& item : split(rest, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value in '" + text + "'", 0, 0);
        spec.params[trim(item.substr(0, eq))] = to_double(trim(item.substr(eq + 1)), {0, 0});
    }
    return spec;
}

DensityField make_initial(const RunConfig& cfg, const Grid& grid) {
    const InitSpec init = parse_init(cfg.init);
    if (init.kind == "file") {
        std::filesystem::path p = init.path;
        if (p.is_relative() && !cfg.base_dir.empty()) p = cfg.base_dir / p;
        std::ifstream in(p);
        if (!in) throw ParseError("cannot read initial density '" + p.string() + "'", 0, 0);
        std::vector<double> v;
        double x;
        while (in >> x) v.push_back(x);
        if (v.size() != grid.size()) throw ShapeError("initial density file does not match the grid");
        return DensityField(grid, std::move(v)).normalized();
    }
    if (init.kind == "gibbs") return gibbs_state(make_energy(cfg), grid);
    const Point mean{init.get("mean", 0.0), init.get("mean_y", 0.0)};
    if (init.kind == "gaussian") return gaussian(grid, mean, init.get("sigma", 1.0));
    if (init.kind == "spike") return gaussian(grid, mean, 3.0 * grid.max_spacing());
    if (init.kind == "barenblatt") {
        const BarenblattProfile prof = BarenblattProfile::make(init.get("m", cfg.m), grid.dim());
        return barenblatt(prof, init.get("t0", cfg.time.t0), grid);
    }
    throw ParseError("unknown init profile '" + init.kind + "'", 0, 0);
}

}  // namespace pflow
