#include "pflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pflow/errors.hpp"
#include "quadrature.hpp"

namespace pflow {

namespace {

constexpr double kTableLo = -10.0;  // log10 of the tabulated range
constexpr double kTableHi = 4.0;
constexpr int kNodesPerDecade = 256;
constexpr double kBlowUp = 1e12;
constexpr double kLogTiny = -744.0;  // below log of the smallest subnormal

double hermite(double s0, double s1, double g0, double g1, double d0, double d1, double s) {
    const double h = s1 - s0;
    const double t = (s - s0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * g0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * g1 + (t3 - t2) * h * d1;
}

// Gradient of a cell-centred scalar that only uses cells flagged active.
// Central where both neighbours are active, one-sided (second order if
// possible) where only one side is, zero for isolated cells.
VectorFieldSample masked_gradient(std::span<const double> f, const std::vector<char>& active, const Grid& grid) {
    VectorFieldSample out(grid);
    const int nx = grid.cells()[0];
    const int ny = grid.cells()[1];
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const double h = grid.spacing(axis);
        const int n = axis == 0 ? nx : ny;
        auto comp = out.component(axis);
        for (std::size_t idx = 0; idx < grid.size(); ++idx) {
            if (!active[idx]) continue;
            const int i = grid.ix(idx);
            const int j = grid.iy(idx);
            const int k = axis == 0 ? i : j;
            auto at = [&](int kk) { return axis == 0 ? grid.index(kk, j) : grid.index(i, kk); };
            auto ok = [&](int kk) { return kk >= 0 && kk < n && active[at(kk)]; };
            const bool l = ok(k - 1);
            const bool r = ok(k + 1);
            double d = 0.0;
            if (l && r) {
                d = (f[at(k + 1)] - f[at(k - 1)]) / (2 * h);
            } else if (r) {
                d = ok(k + 2) ? (-3 * f[idx] + 4 * f[at(k + 1)] - f[at(k + 2)]) / (2 * h) : (f[at(k + 1)] - f[idx]) / h;
            } else if (l) {
                d = ok(k - 2) ? (3 * f[idx] - 4 * f[at(k - 1)] + f[at(k - 2)]) / (2 * h) : (f[idx] - f[at(k - 1)]) / h;
            }
            comp[idx] = d;
        }
    }
    return out;
}

// Face-based surrogates: sum over interior faces of w(vL, vR) * (qR - qL)^2 / h^2 * vol.
template <class Q, class W>
double face_sum(const DensityField& field, Q q, W w, double floor) {
    const Grid& grid = field.grid();
    const double vol = grid.cell_volume();
    double acc = 0.0;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        const double h = grid.spacing(axis);
        for (std::size_t idx = 0; idx < grid.size(); ++idx) {
            const int i = grid.ix(idx);
            const int j = grid.iy(idx);
            const int ii = axis == 0 ? i + 1 : i;
            const int jj = axis == 0 ? j : j + 1;
            if (ii >= grid.cells()[0] || jj >= grid.cells()[1]) continue;
            const double vl = field[idx];
            const double vr = field[grid.index(ii, jj)];
            if (vl < floor && vr < floor) continue;
            const double dq = (q(vr) - q(vl)) / h;
            acc += w(vl, vr) * dq * dq * vol;
        }
    }
    return acc;
}

double gradient_surrogate(const EnergyFunctional& fnl, const DensityField& field) {
    const double floor = density_floor(field);
    if (fnl.mode() == EnergyFunctional::Mode::classical_pme) {
        const double m = fnl.m();
        const double k = m / (m - 1);
        return face_sum(
            field, [&](double v) { return std::pow(v, m - 1); },
            [&](double vl, double vr) { return k * k * 0.5 * (vl + vr); }, floor);
    }
    return 4.0 * face_sum(
                     field, [](double v) { return std::sqrt(v); }, [](double, double) { return 1.0; }, floor);
}

}  // namespace

// ---------------------------------------------------------------------------
// GTable

GTable::GTable(std::vector<double> log_nodes, std::vector<double> values, std::vector<double> slopes,
               std::vector<double> node_error)
    : s_(std::move(log_nodes)), g_(std::move(values)), slope_(std::move(slopes)), err_(std::move(node_error)) {
    if (s_.size() < 2 || g_.size() != s_.size() || slope_.size() != s_.size() || err_.size() != s_.size())
        throw ShapeError("g table arrays must share a length >= 2");
}

double GTable::r_min() const noexcept { return std::exp(s_.front()); }
double GTable::r_max() const noexcept { return std::exp(s_.back()); }
double GTable::node_r(std::size_t k) const noexcept { return std::exp(s_[k]); }

double GTable::eval(double r) const noexcept {
    const double s = std::clamp(std::log(r), s_.front(), s_.back());
    auto it = std::upper_bound(s_.begin(), s_.end(), s);
    std::size_t k = it == s_.begin() ? 0 : static_cast<std::size_t>(it - s_.begin()) - 1;
    k = std::min(k, s_.size() - 2);
    return hermite(s_[k], s_[k + 1], g_[k], g_[k + 1], slope_[k], slope_[k + 1], s);
}

std::size_t GTable::bracket(double y) const noexcept {
    auto it = std::upper_bound(g_.begin(), g_.end(), y);
    std::size_t k = it == g_.begin() ? 0 : static_cast<std::size_t>(it - g_.begin()) - 1;
    return std::min(k, g_.size() - 2);
}

double GTable::max_node_error() const noexcept { return *std::max_element(err_.begin(), err_.end()); }

bool GTable::strictly_increasing() const noexcept {
    for (std::size_t k = 1; k < g_.size(); ++k)
        if (!(g_[k] > g_[k - 1])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// EnergyFunctional

EnergyFunctional::EnergyFunctional(Mode mode, double m, ScalarLaw beta, ScalarLaw b, Potential phi)
    : mode_(mode), m_(m), beta_(beta), b_(b), phi_(phi) {
    build_table();
}

EnergyFunctional EnergyFunctional::classical(double m) {
    if (!(m > 1.0)) throw DomainError("classical porous-medium energy needs m > 1");
    return {Mode::classical_pme, m, ScalarLaw::power(m), ScalarLaw::constant(1.0), Potential::none()};
}

EnergyFunctional EnergyFunctional::general(ScalarLaw beta, ScalarLaw b, Potential phi) {
    return {Mode::general, 0.0, beta, b, phi};
}

EnergyFunctional EnergyFunctional::matrix_diagonal(ScalarLaw psi, ScalarLaw b_diag, Potential phi) {
    return {Mode::matrix_diagonal, 0.0, psi, b_diag, phi};
}

std::string EnergyFunctional::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (mode_) {
        case Mode::classical_pme: os << "classical m=" << m_; break;
        case Mode::general:
            os << "general beta=" << beta_.to_string() << " b=" << b_.to_string() << " phi=" << phi_.to_string();
            break;
        case Mode::matrix_diagonal:
            os << "matrix_diagonal psi=" << beta_.to_string() << " b_diag=" << b_.to_string()
               << " phi=" << phi_.to_string();
            break;
    }
    return os.str();
}

double EnergyFunctional::rate(double r) const noexcept {
    switch (mode_) {
        case Mode::classical_pme: return m_ * std::pow(r, m_ - 1);
        case Mode::general: return beta_.derivative(r) / b_.evaluate(r);
        case Mode::matrix_diagonal: return beta_.evaluate(r);
    }
    return 0.0;
}

double EnergyFunctional::weight_b(double v) const noexcept {
    return mode_ == Mode::classical_pme ? 1.0 : b_.evaluate(v);
}

void EnergyFunctional::build_table() {
    const double ds = std::log(10.0) / kNodesPerDecade;
    const int k_lo = static_cast<int>(kTableLo) * kNodesPerDecade;
    const int k_hi = static_cast<int>(kTableHi) * kNodesPerDecade;
    const std::size_t n = static_cast<std::size_t>(k_hi - k_lo + 1);
    const std::size_t zero = static_cast<std::size_t>(-k_lo);
    std::vector<double> s(n), gv(n, 0.0), slope(n), err(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        s[k] = (static_cast<int>(k) + k_lo) * ds;
        slope[k] = rate(std::exp(s[k]));
    }
    auto kap = [this](double x) { return rate(std::exp(x)); };
    auto segment = [&](std::size_t a, std::size_t b, double& e) {
        e = 0.0;
        return detail::integrate_gk(kap, s[a], s[b], 1e-12, 30, &e);
    };
    for (std::size_t k = zero + 1; k < n; ++k) {
        double e = 0.0;
        gv[k] = gv[k - 1] + segment(k - 1, k, e);
        err[k] = err[k - 1] + e;
    }
    for (std::size_t k = zero; k-- > 0;) {
        double e = 0.0;
        gv[k] = gv[k + 1] - segment(k, k + 1, e);
        err[k] = err[k + 1] + e;
    }
    if (mode_ == Mode::classical_pme) {
        for (std::size_t k = 0; k < n; ++k) {
            gv[k] = g(std::exp(s[k]));
            err[k] = 0.0;
        }
    }
    table_ = std::make_shared<const GTable>(std::move(s), std::move(gv), std::move(slope), std::move(err));
}

double EnergyFunctional::g(double r) const {
    if (!(r > 0.0)) throw DomainError("g is defined for r > 0");
    if (mode_ == Mode::classical_pme) return m_ / (m_ - 1) * (std::pow(r, m_ - 1) - 1);
    const double s = std::log(r);
    const GTable& t = *table_;
    // anchor at the nearest node, then integrate kappa(e^s) ds from there
    const double ds = std::log(10.0) / kNodesPerDecade;
    const double s0 = kTableLo * std::log(10.0);
    const double pos = std::round((s - s0) / ds);
    const std::size_t k = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(t.size() - 1)));
    const double sk = s0 + static_cast<double>(k) * ds;
    auto kap = [this](double x) { return rate(std::exp(x)); };
    return t.node_g(k) + detail::integrate_gk(kap, sk, s, 1e-12);
}

double EnergyFunctional::g_derivative(double r) const {
    if (!(r > 0.0)) throw DomainError("g' is defined for r > 0");
    return rate(r) / r;
}

double EnergyFunctional::cumulative_rate(double r) const {
    if (mode_ == Mode::classical_pme) return std::pow(r, m_);
    return detail::integrate_gk([this](double x) { return rate(x); }, 0.0, r, 1e-12);
}

double EnergyFunctional::eta(double r) const {
    if (r < 0.0 || std::isnan(r)) throw DomainError("eta is defined for r >= 0");
    if (r == 0.0) return 0.0;
    if (mode_ == Mode::classical_pme) return (std::pow(r, m_) - m_ * r) / (m_ - 1);
    // integration by parts: (eta - r eta')' = -kappa, eta' = g
    return r * g(r) - cumulative_rate(r);
}

bool EnergyFunctional::has_closed_form_g() const noexcept {
    if (mode_ == Mode::classical_pme) return true;
    if (mode_ == Mode::matrix_diagonal) return beta_.kind() == ScalarLaw::Kind::constant;
    if (b_.kind() != ScalarLaw::Kind::constant) return false;
    return beta_.kind() == ScalarLaw::Kind::linear || beta_.kind() == ScalarLaw::Kind::power ||
           beta_.kind() == ScalarLaw::Kind::linear_plus_power;
}

double EnergyFunctional::g_fast(double r) const {
    if (!has_closed_form_g()) {
        if (!(r > 0.0)) throw DomainError("g is defined for r > 0");
        const GTable& t = *table_;
        if (r > t.r_max()) return g(r);
        if (r >= t.r_min()) return t.eval(r);
        // kappa is close to kappa(0+) below the table; extend linearly in log r
        const double s0 = std::log(t.r_min());
        return t.g_min() + rate(t.r_min()) * (std::log(r) - s0);
    }
    if (mode_ == Mode::classical_pme) return m_ / (m_ - 1) * (std::pow(r, m_ - 1) - 1);
    if (mode_ == Mode::matrix_diagonal) return beta_.p1() * std::log(r);
    const double c0 = b_.p1();
    auto pw = [r](double m) { return m == 1.0 ? std::log(r) : m / (m - 1) * (std::pow(r, m - 1) - 1); };
    switch (beta_.kind()) {
        case ScalarLaw::Kind::linear: return beta_.p1() / c0 * std::log(r);
        case ScalarLaw::Kind::power: return pw(beta_.p1()) / c0;
        case ScalarLaw::Kind::linear_plus_power: return (beta_.p1() * std::log(r) + pw(beta_.p2())) / c0;
        default: return g(r);
    }
}

double EnergyFunctional::g_inverse(double y) const {
    if (std::isnan(y)) throw DomainError("g_inverse of NaN");
    if (mode_ == Mode::classical_pme) {
        const double base = 1.0 + (m_ - 1) / m_ * y;
        return base <= 0.0 ? 0.0 : std::pow(base, 1.0 / (m_ - 1));
    }
    if (y == -std::numeric_limits<double>::infinity()) return 0.0;
    if (y == std::numeric_limits<double>::infinity()) throw DomainError("g_inverse(+inf) is unbounded");
    const GTable& t = *table_;
    auto G = [this](double s) { return g(std::exp(s)); };
    double lo, hi;
    if (y >= t.g_min() && y <= t.g_max()) {
        const std::size_t k = t.bracket(y);
        lo = std::log(t.node_r(k));
        hi = std::log(t.node_r(k + 1));
    } else if (y < t.g_min()) {
        hi = std::log(t.r_min());
        lo = hi - 3 * std::log(10.0);
        while (G(lo) > y) {
            hi = lo;
            lo -= 3 * std::log(10.0);
            if (lo < kLogTiny) return 0.0;
        }
    } else {
        lo = std::log(t.r_max());
        hi = lo + std::log(10.0);
        while (G(hi) < y) {
            lo = hi;
            hi += std::log(10.0);
            if (hi > 709.0) throw DomainError("g_inverse overflows");
        }
    }
    // safeguarded Newton in s = log r
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = G(s) - y;
        if (f == 0.0) break;
        if (f > 0) hi = s; else lo = s;
        const double k = rate(std::exp(s));
        double next = k > 0.0 ? s - f / k : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - s);
        s = next;
        if (step <= 1e-14 * std::max(1.0, std::abs(s)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(s))) break;
    }
    return std::exp(s);
}

// ---------------------------------------------------------------------------
// field-level operations

double density_floor(const DensityField& field) noexcept { return 1e-12 * field.max(); }

double energy_value(const EnergyFunctional& fnl, const DensityField& field) {
    const Grid& grid = field.grid();
    const double vol = grid.cell_volume();
    if (fnl.mode() == EnergyFunctional::Mode::classical_pme) {
        double acc = 0.0;
        for (std::size_t i = 0; i < field.size(); ++i) acc += std::pow(std::max(field[i], 0.0), fnl.m());
        return (acc * vol - fnl.m()) / (fnl.m() - 1);
    }
    const std::vector<double> phi = fnl.phi().sample(grid);
    double acc = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double v = std::max(field[i], 0.0);
        acc += fnl.eta(v) + phi[i] * v;
    }
    return acc * vol;
}

MembershipReport membership(const EnergyFunctional& fnl, const DensityField& field) {
    MembershipReport rep;
    const bool classical = fnl.mode() == EnergyFunctional::Mode::classical_pme;
    rep.domain = classical ? "D_nice" : "D0";
    rep.sup_v = field.max();
    const Grid& grid = field.grid();
    const double vol = grid.cell_volume();

    rep.gradient_surrogate = gradient_surrogate(fnl, field);
    double ent = 0.0;
    std::vector<double> q(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double v = std::max(field[i], 0.0);
        if (v > 0.0) ent += std::abs(v * std::log(v));
        q[i] = classical ? std::pow(v, fnl.m()) : v;
    }
    rep.entropy_surrogate = ent * vol;
    const VectorFieldSample dq = gradient_of(q, grid);
    double w11 = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        const Point p = dq.at(i);
        w11 += std::hypot(p[0], p[1]);
    }
    rep.w11_surrogate = w11 * vol;

    // refinement exponent against cell-averaged coarsenings
    std::vector<double> lh, ls;
    lh.push_back(std::log(grid.max_spacing()));
    ls.push_back(std::log(rep.gradient_surrogate));
    for (int f : {2, 4}) {
        bool ok = true;
        for (int a = 0; a < grid.dim(); ++a) ok = ok && grid.cells()[a] % f == 0 && grid.cells()[a] / f >= 3;
        if (!ok) break;
        const DensityField c = coarsen(field, f);
        const double s = gradient_surrogate(fnl, c);
        lh.push_back(std::log(c.grid().max_spacing()));
        ls.push_back(std::log(s));
    }
    bool usable = lh.size() >= 2;
    for (double v : ls) usable = usable && std::isfinite(v);
    if (usable) {
        const double n = static_cast<double>(lh.size());
        double mh = 0, ms = 0;
        for (std::size_t i = 0; i < lh.size(); ++i) {
            mh += lh[i] / n;
            ms += ls[i] / n;
        }
        double num = 0, den = 0;
        for (std::size_t i = 0; i < lh.size(); ++i) {
            num += (lh[i] - mh) * (ls[i] - ms);
            den += (lh[i] - mh) * (lh[i] - mh);
        }
        rep.refinement_exponent = den > 0 ? num / den : 0.0;
    }

    for (double v : {rep.sup_v, rep.gradient_surrogate, rep.entropy_surrogate, rep.w11_surrogate})
        rep.finite = rep.finite && std::isfinite(v) && v < kBlowUp;
    rep.member = rep.finite && rep.refinement_exponent > -1.0;
    if (!rep.finite) rep.note = "surrogate exceeds blow-up threshold";
    else if (!rep.member) rep.note = "gradient surrogate grows under refinement";
    if (!classical && !rep.member) rep.note += "; not in D0";
    return rep;
}

VectorFieldSample gradient_field(const EnergyFunctional& fnl, const DensityField& field, GradientForm form) {
    const Grid& grid = field.grid();
    for (std::size_t i = 0; i < field.size(); ++i)
        if (!std::isfinite(field[i])) throw DomainError("density has non-finite values");
    const double sur = gradient_surrogate(fnl, field);
    if (!std::isfinite(sur) || sur > kBlowUp) throw DomainError("density outside the energy domain");

    const double floor = density_floor(field);
    const std::size_t n = field.size();
    std::vector<char> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = field[i] >= floor && field[i] > 0.0;

    if (fnl.mode() == EnergyFunctional::Mode::classical_pme) {
        const double m = fnl.m();
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::pow(std::max(field[i], 0.0), m - 1);
        VectorFieldSample out = gradient_of(p, grid).scaled(m / (m - 1));
        if (form == GradientForm::quotient) {
            std::vector<double> q(n);
            for (std::size_t i = 0; i < n; ++i) q[i] = std::pow(std::max(field[i], 0.0), m);
            const VectorFieldSample dq = gradient_of(q, grid);
            for (std::size_t i = 0; i < n; ++i) {
                if (!active[i]) continue;
                const Point d = dq.at(i);
                out.set(i, {d[0] / field[i], d[1] / field[i]});
            }
        }
        return out;
    }

    // product form b(v) grad(g(v) + Phi), g clamped at g(floor)
    const std::vector<double> phi = fnl.phi().sample(grid);
    const double gfloor = fnl.g(std::max(floor, 1e-300));
    std::vector<double> xi(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double gv = active[i] ? fnl.g(field[i]) : gfloor;
        xi[i] = gv + phi[i];
    }
    VectorFieldSample dxi = masked_gradient(xi, active, grid);
    const VectorFieldSample dclamped = gradient_of(xi, grid);
    VectorFieldSample out(grid);
    for (std::size_t i = 0; i < n; ++i) {
        const double bv = fnl.weight_b(std::max(field[i], 0.0));
        const Point d = active[i] ? dxi.at(i) : dclamped.at(i);
        out.set(i, {bv * d[0], bv * d[1]});
    }
    if (form == GradientForm::quotient) {
        // grad(beta(v))/v - b(v) D; in the diagonal case b(v) Psi(v) grad v / v - b(v) D
        const bool matrix = fnl.mode() == EnergyFunctional::Mode::matrix_diagonal;
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = matrix ? field[i] : fnl.beta().evaluate(field[i]);
        const VectorFieldSample dq = masked_gradient(q, active, grid);
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const double v = field[i];
            const double bv = fnl.weight_b(v);
            const double pre = matrix ? bv * fnl.beta().evaluate(v) / v : 1.0 / v;
            const Point d = dq.at(i);
            const Point drift = fnl.phi().drift(grid.center(i), grid.dim());
            out.set(i, {pre * d[0] - bv * drift[0], pre * d[1] - bv * drift[1]});
        }
    }
    return out;
}

std::vector<double> metric_weight(const EnergyFunctional& fnl, const DensityField& field) {
    std::vector<double> w(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) w[i] = 1.0 / fnl.weight_b(std::max(field[i], 0.0));
    return w;
}

double gradient_norm_sq(const EnergyFunctional& fnl, const DensityField& field) {
    const VectorFieldSample gf = gradient_field(fnl, field);
    const DensityField masked = field.masked(density_floor(field));
    const std::vector<double> w = metric_weight(fnl, field);
    return weighted_inner(masked, w, gf, gf);
}

StationaryState stationary_state(const EnergyFunctional& fnl, const Grid& grid) {
    if (fnl.mode() == EnergyFunctional::Mode::classical_pme)
        throw UnsupportedModelError("stationary states need a potential (general or matrix_diagonal mode)");
    if (!fnl.phi().confining()) throw NoConfinementError("potential is not confining");
    const std::vector<double> phi = fnl.phi().sample(grid);
    const double vol = grid.cell_volume();
    auto profile = [&](double c) {
        std::vector<double> v(phi.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fnl.g_inverse(c - phi[i]);
        return v;
    };
    auto mass = [&](double c) {
        double acc = 0.0;
        try {
            for (double v : profile(c)) acc += v;
        } catch (const DomainError&) {
            return std::numeric_limits<double>::infinity();
        }
        return acc * vol;
    };
    // expand a bracket around 0, then bisect
    double lo = -1.0, hi = 1.0;
    while (mass(lo) > 1.0) {
        lo *= 2;
        if (lo < -1e6) throw NoConfinementError("no bracket for the normalization constant");
    }
    while (mass(hi) < 1.0) {
        hi *= 2;
        if (hi > 1e6) throw NoConfinementError("no bracket for the normalization constant");
    }
    double c = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        c = 0.5 * (lo + hi);
        const double mc = mass(c);
        if (std::abs(mc - 1.0) <= 1e-13) break;
        if (mc > 1.0) hi = c; else lo = c;
        if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(c))) break;
    }
    return {c, DensityField(grid, profile(c))};
}

}  // namespace pflow
