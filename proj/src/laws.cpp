#include "pflow/laws.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

struct Preset {
    std::string kind;
    std::map<std::string, double> params;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double parse_number(std::string_view text, std::string_view context) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
        throw ParseError("invalid number '" + t + "' in '" + std::string(context) + "'", 0, 0);
    return v;
}

Preset split_preset(std::string_view text) {
    Preset p;
    const auto colon = text.find(':');
    p.kind = trim(text.substr(0, colon));
    if (p.kind.empty()) throw ParseError("empty preset in '" + std::string(text) + "'", 0, 0);
    if (colon == std::string_view::npos) return p;
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected key=value in '" + std::string(text) + "'", 0, 0);
        p.params[trim(item.substr(0, eq))] = parse_number(item.substr(eq + 1), text);
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
    }
    return p;
}

double need(const Preset& p, const std::string& key, std::string_view text) {
    const auto it = p.params.find(key);
    if (it == p.params.end())
        throw ParseError("missing parameter '" + key + "' in '" + std::string(text) + "'", 0, 0);
    return it->second;
}

void only(const Preset& p, std::initializer_list<const char*> keys, std::string_view text) {
    for (const auto& [k, v] : p.params) {
        bool ok = false;
        for (const char* allowed : keys) ok = ok || k == allowed;
        if (!ok) throw ParseError("unknown parameter '" + k + "' in '" + std::string(text) + "'", 0, 0);
    }
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

ScalarLaw ScalarLaw::power(double m) {
    if (!(m >= 1.0)) throw DomainError("power law needs m >= 1");
    return {Kind::power, m, 0.0};
}
ScalarLaw ScalarLaw::linear(double sigma) { return {Kind::linear, sigma, 0.0}; }
ScalarLaw ScalarLaw::linear_plus_power(double gamma, double m) {
    if (!(m >= 1.0)) throw DomainError("linear_plus_power needs m >= 1");
    return {Kind::linear_plus_power, gamma, m};
}
ScalarLaw ScalarLaw::constant(double c) { return {Kind::constant, c, 0.0}; }
ScalarLaw ScalarLaw::bounded_rational(double b0, double c) { return {Kind::bounded_rational, b0, c}; }

ScalarLaw ScalarLaw::parse(std::string_view text) {
    const Preset p = split_preset(text);
    if (p.kind == "power") {
        only(p, {"m"}, text);
        return power(need(p, "m", text));
    }
    if (p.kind == "linear") {
        only(p, {"sigma"}, text);
        return linear(need(p, "sigma", text));
    }
    if (p.kind == "linear_plus_power") {
        only(p, {"gamma", "m"}, text);
        return linear_plus_power(need(p, "gamma", text), need(p, "m", text));
    }
    if (p.kind == "const" || p.kind == "constant") {
        only(p, {"c"}, text);
        return constant(need(p, "c", text));
    }
    if (p.kind == "bounded_rational") {
        only(p, {"b0", "c"}, text);
        return bounded_rational(need(p, "b0", text), need(p, "c", text));
    }
    throw ParseError("unknown law '" + p.kind + "'", 0, 0);
}

double ScalarLaw::evaluate(double r) const noexcept {
    switch (kind_) {
        case Kind::power:
            return std::pow(std::abs(r), p1_ - 1.0) * r;
        case Kind::linear:
            return p1_ * r;
        case Kind::linear_plus_power:
            return p1_ * r + std::pow(std::abs(r), p2_ - 1.0) * r;
        case Kind::constant:
            return p1_;
        case Kind::bounded_rational:
            return p1_ + p2_ / (1.0 + r * r);
    }
    return 0.0;
}

double ScalarLaw::derivative(double r) const noexcept {
    switch (kind_) {
        case Kind::power:
            return p1_ * std::pow(std::abs(r), p1_ - 1.0);
        case Kind::linear:
            return p1_;
        case Kind::linear_plus_power:
            return p1_ + p2_ * std::pow(std::abs(r), p2_ - 1.0);
        case Kind::constant:
            return 0.0;
        case Kind::bounded_rational: {
            const double q = 1.0 + r * r;
            return -2.0 * p2_ * r / (q * q);
        }
    }
    return 0.0;
}

std::string ScalarLaw::to_string() const {
    switch (kind_) {
        case Kind::power:
            return "power:m=" + num(p1_);
        case Kind::linear:
            return "linear:sigma=" + num(p1_);
        case Kind::linear_plus_power:
            return "linear_plus_power:gamma=" + num(p1_) + ",m=" + num(p2_);
        case Kind::constant:
            return "const:c=" + num(p1_);
        case Kind::bounded_rational:
            return "bounded_rational:b0=" + num(p1_) + ",c=" + num(p2_);
    }
    return {};
}

// ---------------------------------------------------------------------------

Potential Potential::none() { return {Kind::none, 0.0, 0.0}; }
Potential Potential::quadratic(double a, double offset) { return {Kind::quadratic, a, offset}; }
Potential Potential::quartic_well(double a, double offset) { return {Kind::quartic_well, a, offset}; }

Potential Potential::parse(std::string_view text) {
    const Preset p = split_preset(text);
    if (p.kind == "none") {
        only(p, {}, text);
        return none();
    }
    if (p.kind == "quadratic") {
        only(p, {"a", "offset"}, text);
        return quadratic(need(p, "a", text), p.params.contains("offset") ? p.params.at("offset") : 0.0);
    }
    if (p.kind == "quartic" || p.kind == "quartic_well") {
        only(p, {"a", "offset"}, text);
        return quartic_well(need(p, "a", text), p.params.contains("offset") ? p.params.at("offset") : 0.0);
    }
    throw ParseError("unknown potential '" + p.kind + "'", 0, 0);
}

double Potential::value(const Point& x, int dim) const noexcept {
    const double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
    switch (kind_) {
        case Kind::none:
            return 0.0;
        case Kind::quadratic:
            return offset_ + a_ * r2;
        case Kind::quartic_well:
            return offset_ + a_ * r2 * r2;
    }
    return 0.0;
}

Point Potential::gradient(const Point& x, int dim) const noexcept {
    const double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
    double f = 0.0;
    switch (kind_) {
        case Kind::none:
            f = 0.0;
            break;
        case Kind::quadratic:
            f = 2.0 * a_;
            break;
        case Kind::quartic_well:
            f = 4.0 * a_ * r2;
            break;
    }
    return {f * x[0], dim == 2 ? f * x[1] : 0.0};
}

Point Potential::drift(const Point& x, int dim) const noexcept {
    const Point g = gradient(x, dim);
    return {-g[0], -g[1]};
}

double Potential::laplacian(const Point& x, int dim) const noexcept {
    const double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
    switch (kind_) {
        case Kind::none:
            return 0.0;
        case Kind::quadratic:
            return 2.0 * a_ * dim;
        case Kind::quartic_well:
            return 4.0 * a_ * (dim + 2) * r2;
    }
    return 0.0;
}

std::string Potential::to_string() const {
    switch (kind_) {
        case Kind::none:
            return "none";
        case Kind::quadratic:
            return "quadratic:a=" + num(a_) + ",offset=" + num(offset_);
        case Kind::quartic_well:
            return "quartic:a=" + num(a_) + ",offset=" + num(offset_);
    }
    return {};
}

std::vector<double> Potential::sample(const Grid& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(grid.center(i), grid.dim());
    return out;
}

// ---------------------------------------------------------------------------

const ClauseResult* HypothesisReport::find(std::string_view clause) const {
    for (const auto& c : clauses)
        if (c.clause == clause) return &c;
    return nullptr;
}

bool HypothesisReport::passes(std::string_view clause) const {
    const ClauseResult* c = find(clause);
    return c != nullptr && c->pass;
}

std::vector<double> log_probe(double lo, double hi, int count) {
    std::vector<double> r(count);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int k = 0; k < count; ++k) r[k] = std::exp(a + (b - a) * k / (count - 1));
    return r;
}

namespace {

// Bounded-above test on sampled values: the law saturates over the top decade.
bool saturates(const ScalarLaw& law, bool use_derivative) {
    auto f = [&](double r) { return use_derivative ? law.derivative(r) : law.evaluate(r); };
    const double top = f(1e6);
    const double below = f(1e5);
    return std::isfinite(top) && std::abs(top - below) <= 1e-6 * std::max(1.0, std::abs(below));
}

struct PotentialStats {
    double grad_sup = 0.0;
    double div_neg_sup = 0.0;
    double div_abs_sup = 0.0;
    double phi_min = 0.0;
    double neg_power_integral = 0.0;
    bool finite = true;
};

PotentialStats potential_stats(const Potential& phi, const Grid& domain) {
    PotentialStats s;
    s.phi_min = std::numeric_limits<double>::infinity();
    std::vector<double> neg_power(domain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
        const Point x = domain.center(i);
        const Point g = phi.gradient(x, domain.dim());
        const double div_d = -phi.laplacian(x, domain.dim());
        const double v = phi.value(x, domain.dim());
        s.grad_sup = std::max(s.grad_sup, std::hypot(g[0], g[1]));
        s.div_neg_sup = std::max(s.div_neg_sup, std::max(0.0, -div_d));
        s.div_abs_sup = std::max(s.div_abs_sup, std::abs(div_d));
        s.phi_min = std::min(s.phi_min, v);
        neg_power[i] = v > 0.0 ? 1.0 / (v * v) : std::numeric_limits<double>::infinity();
    }
    s.neg_power_integral = integrate_dx(domain, neg_power);
    s.finite = std::isfinite(s.grad_sup) && std::isfinite(s.div_abs_sup);
    return s;
}

void drift_clauses(HypothesisReport& rep, const Potential& phi, const Grid& domain) {
    const PotentialStats ps = potential_stats(phi, domain);
    rep.grad_phi_sup = ps.grad_sup;
    rep.div_drift_neg_sup = ps.div_neg_sup;
    rep.div_drift_abs_sup = ps.div_abs_sup;
    rep.phi_min = ps.phi_min;
    rep.phi_neg_power_integral = ps.neg_power_integral;

    // Unbounded gradients (confining wells) are only bounded on the truncated box.
    const bool unbounded_on_rd = phi.kind() != Potential::Kind::none && phi.a() != 0.0;
    rep.clauses.push_back({"(iii)", ps.finite, unbounded_on_rd,
                           unbounded_on_rd ? "sup |grad Phi| finite on the domain; verified on domain only" : ""});
    rep.clauses.push_back({"(iv)", ps.finite, true, "div D bounded on the domain; verified on domain only"});

    const bool ge_one = ps.phi_min >= 1.0;
    const bool integrable = std::isfinite(ps.neg_power_integral);
    const bool coercive = phi.confining();
    std::string note;
    if (!ge_one) note += "Phi >= 1 fails; ";
    if (!coercive) note += "Phi does not tend to infinity; ";
    if (!integrable) note += "Phi^{-m} not integrable on the domain; ";
    rep.clauses.push_back({"(v)", ge_one && integrable && coercive, true, note});
}

}  // namespace

HypothesisReport validate_hypothesis1(const ScalarLaw& beta, const ScalarLaw& b, const Potential& phi,
                                      BetaVariant variant, const Grid& domain,
                                      std::optional<std::pair<double, double>> density_range) {
    HypothesisReport rep;
    std::vector<double> probe = log_probe(1e-6, 1e6, 241);
    probe.push_back(0.0);
    std::vector<double> range_probe;
    if (density_range) {
        const auto [lo, hi] = *density_range;
        for (int k = 0; k <= 200; ++k) range_probe.push_back(lo + (hi - lo) * k / 200.0);
        probe.insert(probe.end(), range_probe.begin(), range_probe.end());
    }
    std::sort(probe.begin(), probe.end());

    rep.gamma = std::numeric_limits<double>::infinity();
    rep.gamma1 = 0.0;
    rep.b0 = std::numeric_limits<double>::infinity();
    rep.b_sup = 0.0;
    double r_at_min = 0.0;
    for (double r : probe) {
        const double d = beta.derivative(r);
        if (d < rep.gamma) {
            rep.gamma = d;
            r_at_min = r;
        }
        rep.gamma1 = std::max(rep.gamma1, d);
        rep.b0 = std::min(rep.b0, b.evaluate(r));
        rep.b_sup = std::max(rep.b_sup, b.evaluate(r));
    }
    rep.gamma1_on_range = 0.0;
    for (double r : range_probe) rep.gamma1_on_range = std::max(rep.gamma1_on_range, beta.derivative(r));

    const bool beta_zero = beta.evaluate(0.0) == 0.0;
    const bool lower = rep.gamma > 0.0;
    std::string note_i;
    if (!beta_zero) note_i += "beta(0) != 0; ";
    if (!lower) {
        std::ostringstream os;
        os << "min beta' = " << rep.gamma << " attained at r = " << r_at_min << " (r -> 0)";
        note_i += os.str();
    }
    rep.clauses.push_back({"(i)", beta_zero && lower, false, note_i});
    const bool upper = saturates(beta, true);
    rep.clauses.push_back({"(i)'", beta_zero && lower && upper, false,
                           upper ? note_i : note_i + "beta' unbounded above on the probe range"});

    const bool b_ok = rep.b0 > 0.0 && saturates(b, false);
    rep.clauses.push_back({"(ii)", b_ok, false, b_ok ? "" : "b not bounded or not bounded below by b0 > 0"});
    drift_clauses(rep, phi, domain);
    rep.required_pass = rep.passes(variant == BetaVariant::i ? "(i)" : "(i)'") && rep.passes("(ii)") &&
                        rep.passes("(iii)");
    return rep;
}

HypothesisReport validate_hypothesis2(const ScalarLaw& psi, const ScalarLaw& b_diag, const Potential& phi,
                                      const Grid& domain) {
    HypothesisReport rep;
    std::vector<double> probe = log_probe(1e-6, 1e6, 241);
    probe.push_back(0.0);
    rep.gamma = std::numeric_limits<double>::infinity();
    rep.b0 = std::numeric_limits<double>::infinity();
    for (double r : probe) {
        rep.gamma = std::min(rep.gamma, psi.evaluate(r));
        rep.gamma1 = std::max(rep.gamma1, psi.evaluate(r));
        rep.b0 = std::min(rep.b0, b_diag.evaluate(r));
        rep.b_sup = std::max(rep.b_sup, b_diag.evaluate(r));
    }
    const bool psi_ok = rep.gamma > 0.0 && saturates(psi, false);
    const bool b_ok = rep.b0 > 0.0 && saturates(b_diag, false);
    rep.clauses.push_back({"H2(i)", psi_ok && b_ok, false,
                           psi_ok ? (b_ok ? "" : "B not bounded or |B| < b0") : "Psi not within [c0, c1]"});
    HypothesisReport drift;
    drift_clauses(drift, phi, domain);
    rep.grad_phi_sup = drift.grad_phi_sup;
    rep.div_drift_neg_sup = drift.div_drift_neg_sup;
    rep.div_drift_abs_sup = drift.div_drift_abs_sup;
    rep.phi_min = drift.phi_min;
    rep.phi_neg_power_integral = drift.phi_neg_power_integral;
    ClauseResult c = *drift.find("(iii)");
    c.clause = "H2(ii)";
    rep.clauses.push_back(c);
    rep.required_pass = rep.passes("H2(i)") && rep.passes("H2(ii)");
    return rep;
}

std::vector<double> balance_map(double gamma1, double b0, const Potential& phi, const Grid& grid) {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Point x = grid.center(i);
        const Point g = phi.gradient(x, grid.dim());
        out[i] = gamma1 * phi.laplacian(x, grid.dim()) - b0 * (g[0] * g[0] + g[1] * g[1]);
    }
    return out;
}

bool validate_balance_condition(std::pair<double, double> beta_bounds, double b0, const Potential& phi,
                                const Grid& grid) {
    const auto map = balance_map(beta_bounds.second, b0, phi, grid);
    return std::all_of(map.begin(), map.end(), [](double v) { return v <= 1e-12; });
}

}  // namespace pflow
