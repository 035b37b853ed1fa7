#include "pflow/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

// C-infinity cut-off: 1 on t <= 0, 0 on t >= 1.
double smooth_f(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double smooth_df(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

double cutoff(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = smooth_f(1.0 - t);
    return a / (a + smooth_f(t));
}

double cutoff_derivative(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = smooth_f(1.0 - t);
    const double b = smooth_f(t);
    const double da = -smooth_df(1.0 - t);
    const double db = smooth_df(t);
    return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}

double hermite_he(int k, double y) {
    double h0 = 1.0, h1 = y;
    if (k == 0) return h0;
    for (int n = 1; n < k; ++n) {
        const double h2 = y * h1 - n * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

constexpr double kTaperStart = 0.5;

double det2(const std::array<double, 4>& a, double tau, int dim) {
    if (dim == 1) return 1.0 + tau * a[0];
    return (1.0 + tau * a[0]) * (1.0 + tau * a[3]) - tau * a[1] * tau * a[2];
}

}  // namespace

// ---------------------------------------------------------------------------
// TestProfile

TestProfile TestProfile::bump(Point center, double radius, double amplitude) {
    if (!(radius > 0.0)) throw DomainError("bump radius must be positive");
    return {Kind::bump, center, radius, amplitude, 0};
}

TestProfile TestProfile::hermite_damped(int order, double scale, Point center, double taper_radius) {
    if (order < 0 || !(scale > 0.0) || !(taper_radius > 0.0)) throw DomainError("invalid damped Hermite profile");
    return {Kind::hermite_damped, center, scale, taper_radius, order};
}

double TestProfile::support_radius() const noexcept { return kind_ == Kind::bump ? p1_ : p1_ * p2_; }

double TestProfile::value(const Point& x, int dim) const noexcept {
    const double dx = x[0] - center_[0];
    const double dy = dim == 2 ? x[1] - center_[1] : 0.0;
    if (kind_ == Kind::bump) {
        const double q = (dx * dx + dy * dy) / (p1_ * p1_);
        if (q >= 1.0) return 0.0;
        return p2_ * std::exp(1.0 - 1.0 / (1.0 - q));
    }
    const double y1 = dx / p1_, y2 = dy / p1_;
    const double r2 = y1 * y1 + y2 * y2;
    const double rho = std::sqrt(r2) / p2_;
    const double T = cutoff((rho - kTaperStart) / (1.0 - kTaperStart));
    if (T == 0.0) return 0.0;
    return hermite_he(order_, y1) * std::exp(-0.5 * r2) * T;
}

Point TestProfile::gradient(const Point& x, int dim) const noexcept {
    const double dx = x[0] - center_[0];
    const double dy = dim == 2 ? x[1] - center_[1] : 0.0;
    if (kind_ == Kind::bump) {
        const double r2 = p1_ * p1_;
        const double q = (dx * dx + dy * dy) / r2;
        if (q >= 1.0) return {0.0, 0.0};
        const double one = 1.0 - q;
        const double f = p2_ * std::exp(1.0 - 1.0 / one) * (-1.0 / (one * one)) * (2.0 / r2);
        return {f * dx, dim == 2 ? f * dy : 0.0};
    }
    const double s = p1_;
    const double y1 = dx / s, y2 = dy / s;
    const double r2 = y1 * y1 + y2 * y2;
    const double r = std::sqrt(r2);
    const double t = (r / p2_ - kTaperStart) / (1.0 - kTaperStart);
    const double T = cutoff(t);
    if (T == 0.0) return {0.0, 0.0};
    const double E = std::exp(-0.5 * r2);
    const double H = hermite_he(order_, y1);
    const double dH = order_ == 0 ? 0.0 : order_ * hermite_he(order_ - 1, y1);
    const double dT = r > 0.0 ? cutoff_derivative(t) / ((1.0 - kTaperStart) * p2_ * r) : 0.0;  // dT/dy_k = dT * y_k
    const double g1 = dH * E * T - H * E * y1 * T + H * E * dT * y1;
    const double g2 = -H * E * y2 * T + H * E * dT * y2;
    return {g1 / s, dim == 2 ? g2 / s : 0.0};
}

std::vector<double> TestProfile::sample(const Grid& grid) const {
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = value(grid.center(i), grid.dim());
    return out;
}

VectorFieldSample TestProfile::sample_gradient(const Grid& grid) const {
    VectorFieldSample out(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) out.set(i, gradient(grid.center(i), grid.dim()));
    return out;
}

std::string TestProfile::describe() const {
    std::ostringstream os;
    os.precision(6);
    if (kind_ == Kind::bump)
        os << "bump(c=" << center_[0] << "," << center_[1] << ";r=" << p1_ << ")";
    else
        os << "hermite" << order_ << "(c=" << center_[0] << "," << center_[1] << ";s=" << p1_ << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// cylinder functions

double CylinderFunction::outer_value(const std::vector<double>& y) const {
    if (y.size() != coefficients.size()) throw ShapeError("cylinder function: argument count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double c = coefficients[i];
        switch (outer) {
            case Outer::sin_sum: s += c * std::sin(y[i]); break;
            case Outer::tanh_sum: s += c * std::tanh(y[i]); break;
            case Outer::poly_clipped: {
                const double v = std::clamp(y[i], -1.0, 1.0);
                s += c * (v - v * v * v / 3.0);
                break;
            }
        }
    }
    return s;
}

std::vector<double> CylinderFunction::outer_gradient(const std::vector<double>& y) const {
    if (y.size() != coefficients.size()) throw ShapeError("cylinder function: argument count mismatch");
    std::vector<double> d(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double c = coefficients[i];
        switch (outer) {
            case Outer::sin_sum: d[i] = c * std::cos(y[i]); break;
            case Outer::tanh_sum: {
                const double t = std::tanh(y[i]);
                d[i] = c * (1.0 - t * t);
                break;
            }
            case Outer::poly_clipped: d[i] = std::abs(y[i]) < 1.0 ? c * (1.0 - y[i] * y[i]) : 0.0; break;
        }
    }
    return d;
}

double integrate_profile(const TestProfile& h, const DensityField& field) {
    return integrate(field, h.sample(field.grid()));
}

namespace {
std::vector<double> inner_values(const CylinderFunction& F, const DensityField& field) {
    if (F.inner.empty() || F.inner.size() != F.coefficients.size())
        throw ShapeError("cylinder function needs k >= 1 profiles with one coefficient each");
    std::vector<double> y;
    for (const auto& h : F.inner) y.push_back(integrate_profile(h, field));
    return y;
}
}  // namespace

double cylinder_value(const CylinderFunction& F, const DensityField& field) {
    return F.outer_value(inner_values(F, field));
}

VectorFieldSample cylinder_gradient(const CylinderFunction& F, const DensityField& field) {
    const std::vector<double> d = F.outer_gradient(inner_values(F, field));
    VectorFieldSample out(field.grid());
    for (std::size_t k = 0; k < F.inner.size(); ++k) out = out + F.inner[k].sample_gradient(field.grid()).scaled(d[k]);
    return out;
}

// ---------------------------------------------------------------------------
// pushforward

PushforwardCurve::PushforwardCurve(DensityField base, VectorFieldSample direction, double tau_max)
    : base_(std::move(base)), direction_(std::move(direction)), tau_max_(tau_max), jac_(jacobian_of(direction_)) {
    require_same_grid(base_.grid(), direction_.grid(), "pushforward curve");
    jac_sup_ = 0.0;
    for (const auto& e : jac_.entries)
        jac_sup_ = std::max(jac_sup_, std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + e[3] * e[3]));
    if (!(tau_max >= 0.0) || tau_max * jac_sup_ >= 1.0)
        throw CurveDomainError("Id + tau phi is not a diffeomorphism on the requested tau range");
}

PushforwardResult pushforward(const PushforwardCurve& curve, double tau) {
    if (std::abs(tau) > curve.tau_max()) throw CurveDomainError("|tau| exceeds tau_max");
    const DensityField& base = curve.base();
    const Grid& grid = base.grid();
    const int dim = grid.dim();
    if (tau == 0.0 || curve.direction().sup_norm() == 0.0) return {base, 1.0, 0};

    const auto phi0 = curve.direction().component(0);
    const auto phi1 = dim == 2 ? curve.direction().component(1) : phi0;
    std::array<std::vector<double>, 4> jac;
    for (int k = 0; k < 4; ++k) {
        jac[k].resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) jac[k][i] = curve.jacobian().entries[i][k];
    }
    const double damping = std::abs(tau) * curve.jacobian_sup() > 0.5 ? 0.5 : 1.0;

    std::vector<double> rho(grid.size());
    int worst = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.center(i);
        Point y = x;
        bool converged = false;
        int it = 0;
        for (; it < 200; ++it) {
            const Point target{x[0] - tau * interpolate_linear(grid, phi0, y),
                               dim == 2 ? x[1] - tau * interpolate_linear(grid, phi1, y) : 0.0};
            const double res = std::hypot(target[0] - y[0], target[1] - y[1]);
            if (res <= 1e-12 * (1.0 + std::hypot(x[0], x[1]))) {
                converged = true;
                break;
            }
            y = {y[0] + damping * (target[0] - y[0]), y[1] + damping * (target[1] - y[1])};
        }
        if (!converged) throw InversionError("fixed-point inversion of Id + tau phi did not converge");
        worst = std::max(worst, it);
        std::array<double, 4> J{};
        for (int k = 0; k < 4; ++k) J[k] = dim == 2 || k == 0 ? interpolate_cubic(grid, jac[k], y) : 0.0;
        const double det = det2(J, tau, dim);
        if (!(det > 0.0)) throw CurveDomainError("Jacobian determinant of Id + tau phi is not positive");
        rho[i] = std::max(interpolate_linear(grid, base.values(), y), 0.0) / det;
    }
    double mass = 0.0;
    for (double v : rho) mass += v;
    mass *= grid.cell_volume();
    const double factor = base.mass() / mass;
    const double h = grid.max_spacing();
    if (std::abs(factor - 1.0) > 10.0 * h * h)
        throw DomainError("pushforward lost mass beyond 10 h^2; support reaches the boundary?");
    for (double& v : rho) v *= factor;
    return {DensityField(grid, std::move(rho)), factor, worst};
}

DensityField pushforward_density(const PushforwardCurve& curve, double tau) { return pushforward(curve, tau).density; }

// ---------------------------------------------------------------------------
// determinant derivative identity

namespace {

DetDerivativeReport det_report(std::size_t n, int dim, const std::function<std::array<double, 4>(std::size_t)>& jac,
                               double h_tau) {
    DetDerivativeReport rep;
    auto fwd = [&](const std::array<double, 4>& J, double t) { return det2(J, t, dim); };
    auto inv = [&](const std::array<double, 4>& J, double t) { return 1.0 / det2(J, t, dim); };
    auto central = [](auto f, double h) { return (f(h) - f(-h)) / (2.0 * h); };
    for (std::size_t i = 0; i < n; ++i) {
        const std::array<double, 4> J = jac(i);
        const double div = dim == 2 ? J[0] + J[3] : J[0];
        rep.max_div = std::max(rep.max_div, std::abs(div));
        auto f1 = [&](double t) { return fwd(J, t); };
        auto f2 = [&](double t) { return inv(J, t); };
        const double d1 = central(f1, h_tau), d1h = central(f1, h_tau / 2);
        const double d2 = central(f2, h_tau), d2h = central(f2, h_tau / 2);
        rep.max_dev_forward = std::max(rep.max_dev_forward, std::abs(d1 - div));
        rep.max_dev_inverse = std::max(rep.max_dev_inverse, std::abs(d2 + div));
        rep.max_dev_forward_richardson = std::max(rep.max_dev_forward_richardson, std::abs((4 * d1h - d1) / 3 - div));
        rep.max_dev_inverse_richardson = std::max(rep.max_dev_inverse_richardson, std::abs((4 * d2h - d2) / 3 + div));
    }
    return rep;
}

}  // namespace

DetDerivativeReport det_derivative_check(const VectorFieldSample& phi, double h_tau) {
    const Jacobian J = jacobian_of(phi);
    return det_report(J.entries.size(), phi.grid().dim(), [&](std::size_t i) { return J.entries[i]; }, h_tau);
}

DetDerivativeReport det_derivative_check(const Grid& grid,
                                         const std::function<std::array<double, 4>(const Point&)>& jac,
                                         double h_tau) {
    return det_report(grid.size(), grid.dim(), [&](std::size_t i) { return jac(grid.center(i)); }, h_tau);
}

// ---------------------------------------------------------------------------
// differentials

double default_fd_step(const VectorFieldSample& phi) noexcept { return 1e-4 / (1.0 + phi.sup_norm()); }

double diff_functional_fd(const std::function<double(const DensityField&)>& G, const DensityField& field,
                          const VectorFieldSample& phi, double tau, bool richardson) {
    if (phi.sup_norm() == 0.0) return 0.0;
    if (!(tau > 0.0)) tau = default_fd_step(phi);
    const PushforwardCurve curve(field, phi, tau);
    auto d = [&](double t) {
        return (G(pushforward_density(curve, t)) - G(pushforward_density(curve, -t))) / (2.0 * t);
    };
    const double d1 = d(tau);
    if (!richardson) return d1;
    return (4.0 * d(tau / 2) - d1) / 3.0;
}

double diff_energy_fd(const EnergyFunctional& fnl, const DensityField& field, const VectorFieldSample& phi,
                      double tau, bool richardson) {
    return diff_functional_fd([&](const DensityField& f) { return energy_value(fnl, f); }, field, phi, tau,
                              richardson);
}

// ---------------------------------------------------------------------------
// projection onto the weighted gradient subspace

GradientSubspaceBasis::GradientSubspaceBasis(DensityField field, ScalarLaw b_law, std::vector<TestProfile> generators)
    : field_(std::move(field)), b_(b_law), generators_(std::move(generators)) {
    const Grid& grid = field_.grid();
    std::vector<double> bv(grid.size());
    weight_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        bv[i] = b_.evaluate(std::max(field_[i], 0.0));
        if (!(bv[i] > 0.0)) throw DomainError("mobility weight b must be positive");
        weight_[i] = 1.0 / bv[i];
    }
    for (const auto& z : generators_) elements_.push_back(z.sample_gradient(grid).scaled(bv));
    const std::size_t n = elements_.size();
    gram_.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) gram_[i * n + j] = gram_[j * n + i] = inner(elements_[i], elements_[j]);
}

double GradientSubspaceBasis::inner(const VectorFieldSample& a, const VectorFieldSample& b) const {
    return weighted_inner(field_, weight_, a, b);
}

Projection project_onto_G(const GradientSubspaceBasis& basis, const VectorFieldSample& target) {
    const std::size_t n = basis.size();
    Projection out;
    out.target_norm = std::sqrt(std::max(basis.inner(target, target), 0.0));
    if (n == 0) {
        out.residual_norm = out.target_norm;
        return out;
    }
    Eigen::MatrixXd G(n, n);
    Eigen::VectorXd r(n);
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) G(i, j) = basis.gram()[i * n + j];
        trace += G(i, i);
        r(i) = basis.inner(basis.element(i), target);
    }
    G.diagonal().array() += 1e-12 * trace;
    const Eigen::VectorXd c = G.ldlt().solve(r);
    out.coefficients.assign(c.data(), c.data() + n);
    VectorFieldSample resid = target;
    for (std::size_t j = 0; j < n; ++j) resid = resid - basis.element(j).scaled(c(j));
    out.residual_norm = std::sqrt(std::max(basis.inner(resid, resid), 0.0));
    return out;
}

// ---------------------------------------------------------------------------
// batteries

SupportBox support_box(const std::vector<const DensityField*>& states, double rel, int margin_cells) {
    if (states.empty()) throw ShapeError("support_box needs at least one state");
    const Grid& grid = states.front()->grid();
    SupportBox box{{1e300, 1e300}, {-1e300, -1e300}};
    for (const DensityField* f : states) {
        require_same_grid(grid, f->grid(), "support_box");
        const double thr = rel * f->max();
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if ((*f)[i] < thr || (*f)[i] <= 0.0) continue;
            const Point c = grid.center(i);
            for (int a = 0; a < grid.dim(); ++a) {
                box.lo[a] = std::min(box.lo[a], c[a] - 0.5 * grid.spacing(a));
                box.hi[a] = std::max(box.hi[a], c[a] + 0.5 * grid.spacing(a));
            }
        }
    }
    const Point up = grid.upper();
    for (int a = 0; a < grid.dim(); ++a) {
        const double lo = grid.origin()[a] + margin_cells * grid.spacing(a);
        const double hi = up[a] - margin_cells * grid.spacing(a);
        box.lo[a] = std::clamp(box.lo[a], lo, hi);
        box.hi[a] = std::clamp(box.hi[a], lo, hi);
        if (box.hi[a] - box.lo[a] < 4 * grid.spacing(a)) throw DomainError("support box is too small for test profiles");
    }
    if (grid.dim() == 1) box.lo[1] = box.hi[1] = 0.0;
    return box;
}

namespace {

// n bumps tiling the box (a row in 1D, a near-square lattice in 2D).
std::vector<TestProfile> bump_tiling(const Grid& grid, const SupportBox& box, int n) {
    std::vector<TestProfile> out;
    if (grid.dim() == 1) {
        const double w = (box.hi[0] - box.lo[0]) / n;
        for (int k = 0; k < n; ++k) out.push_back(TestProfile::bump({box.lo[0] + (k + 0.5) * w, 0.0}, 0.5 * w));
        return out;
    }
    const int nx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    const int ny = (n + nx - 1) / nx;
    const double wx = (box.hi[0] - box.lo[0]) / nx;
    const double wy = (box.hi[1] - box.lo[1]) / ny;
    for (int j = 0; j < ny && static_cast<int>(out.size()) < n; ++j)
        for (int i = 0; i < nx && static_cast<int>(out.size()) < n; ++i)
            out.push_back(TestProfile::bump({box.lo[0] + (i + 0.5) * wx, box.lo[1] + (j + 0.5) * wy},
                                            0.5 * std::min(wx, wy)));
    return out;
}

std::vector<TestProfile> hermite_set(const Grid& grid, const SupportBox& box) {
    std::vector<TestProfile> out;
    const Point mid{0.5 * (box.lo[0] + box.hi[0]), 0.5 * (box.lo[1] + box.hi[1])};
    double width = box.hi[0] - box.lo[0];
    if (grid.dim() == 2) width = std::min(width, box.hi[1] - box.lo[1]);
    for (int k = 1; k <= 4; ++k) out.push_back(TestProfile::hermite_damped(k, width / 6.0, mid, 3.0));
    return out;
}

}  // namespace

std::vector<TestProfile> default_battery(const Grid& grid, const SupportBox& box, int count) {
    std::vector<TestProfile> out = bump_tiling(grid, box, 4);
    for (auto& h : hermite_set(grid, box)) out.push_back(h);
    if (count < 0 || count > static_cast<int>(out.size())) count = static_cast<int>(out.size());
    out.resize(static_cast<std::size_t>(count), out.front());
    return out;
}

std::vector<TestProfile> generator_ladder(const Grid& grid, const SupportBox& box, int count) {
    std::vector<TestProfile> out = default_battery(grid, box, 8);
    for (int n = 8; static_cast<int>(out.size()) < count; n *= 2)
        for (auto& b : bump_tiling(grid, box, n)) out.push_back(b);
    if (count < static_cast<int>(out.size())) out.resize(static_cast<std::size_t>(std::max(count, 0)), out.front());
    return out;
}

}  // namespace pflow
