#include "pflow/analytic.hpp"

#include <cmath>
#include <numbers>

#include "pflow/errors.hpp"

namespace pflow {

BarenblattProfile BarenblattProfile::make(double m, int dim, double t_ref) {
    if (!(m > 1.0) || (dim != 1 && dim != 2) || !(t_ref > 0.0)) throw DomainError("invalid Barenblatt parameters");
    BarenblattProfile p{};
    p.m = m;
    p.dim = dim;
    p.t_ref = t_ref;
    const double d = dim;
    p.alpha = d / (d * (m - 1) + 2);
    p.beta_exp = p.alpha / d;
    p.kappa = p.alpha * (m - 1) / (2 * m * d);
    const double q = 1.0 / (m - 1);
    // int (C - kappa |y|^2)_+^q dy = C^{q + d/2} kappa^{-d/2} pi^{d/2} Gamma(q+1) / Gamma(q+1+d/2)
    const double k = std::pow(p.kappa, d / 2) * std::tgamma(q + 1 + d / 2) /
                     (std::pow(std::numbers::pi, d / 2) * std::tgamma(q + 1));
    p.C_mass = std::pow(k, 1.0 / (q + d / 2));
    return p;
}

double BarenblattProfile::value(double t, const Point& x) const noexcept {
    const double r2 = x[0] * x[0] + (dim == 2 ? x[1] * x[1] : 0.0);
    const double base = C_mass - kappa * r2 * std::pow(t, -2 * beta_exp);
    if (base <= 0.0) return 0.0;
    return std::pow(t, -alpha) * std::pow(base, 1.0 / (m - 1));
}

double BarenblattProfile::radius(double t) const noexcept { return std::pow(t, beta_exp) * std::sqrt(C_mass / kappa); }

double BarenblattProfile::exact_mass() const noexcept {
    const double d = dim;
    const double q = 1.0 / (m - 1);
    return std::pow(C_mass, q + d / 2) * std::pow(kappa, -d / 2) * std::pow(std::numbers::pi, d / 2) *
           std::tgamma(q + 1) / std::tgamma(q + 1 + d / 2);
}

DensityField barenblatt(const BarenblattProfile& profile, double t, const Grid& grid, double* factor) {
    if (!(t > 0.0)) throw DomainError("Barenblatt profile needs t > 0");
    if (grid.dim() != profile.dim) throw ShapeError("Barenblatt profile dimension differs from the grid");
    const double r = profile.radius(t);
    const Point lo = grid.origin(), hi = grid.upper();
    for (int a = 0; a < grid.dim(); ++a) {
        const double margin = 2 * grid.spacing(a);
        if (-r < lo[a] + margin || r > hi[a] - margin) throw DomainError("domain too small for the Barenblatt support");
    }
    // Cell averages by composite midpoint on k x k sub-cells; the front is only Hoelder.
    constexpr int k = 8;
    std::vector<double> avg(grid.size(), 0.0);
    const int ky = grid.dim() == 2 ? k : 1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point c = grid.center(i);
        double acc = 0.0;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < ky; ++b) {
                Point x = c;
                x[0] += ((a + 0.5) / k - 0.5) * grid.spacing(0);
                if (grid.dim() == 2) x[1] += ((b + 0.5) / k - 0.5) * grid.spacing(1);
                acc += profile.value(t, x);
            }
        avg[i] = acc / (k * ky);
    }
    const DensityField raw(grid, std::move(avg));
    const double f = 1.0 / raw.mass();
    if (std::abs(f - 1.0) > 1e-4) throw DomainError("Barenblatt sampling too coarse (mass off by more than 1e-4)");
    if (factor) *factor = f;
    return raw.normalized();
}

double barenblatt_residual(const BarenblattProfile& profile, double t, const Grid& grid, double dt) {
    const double r = 0.8 * profile.radius(t);
    double worst = 0.0;
    auto pm = [&](const Point& x) { return std::pow(profile.value(t, x), profile.m); };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Point x = grid.center(i);
        if (std::hypot(x[0], grid.dim() == 2 ? x[1] : 0.0) > r) continue;
        const double dudt = (profile.value(t + dt, x) - profile.value(t - dt, x)) / (2 * dt);
        double lap = 0.0;
        for (int a = 0; a < grid.dim(); ++a) {
            const double h = grid.spacing(a);
            Point xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            lap += (pm(xp) - 2 * pm(x) + pm(xm)) / (h * h);
        }
        worst = std::max(worst, std::abs(dudt - lap));
    }
    return worst;
}

DensityField gaussian(const Grid& grid, const Point& mean, double s) {
    if (!(s > 0.0)) throw DomainError("Gaussian width must be positive");
    const double d = grid.dim();
    const double norm = std::pow(2 * std::numbers::pi * s * s, -d / 2);
    return DensityField::sample(grid, [&](const Point& x) {
               const double dx = x[0] - mean[0];
               const double dy = grid.dim() == 2 ? x[1] - mean[1] : 0.0;
               return norm * std::exp(-(dx * dx + dy * dy) / (2 * s * s));
           })
        .normalized();
}

DensityField heat_kernel(double sigma, double t, const Grid& grid, double initial_variance, const Point& mean) {
    const double var = initial_variance + 2 * sigma * t;
    if (!(var > 0.0)) throw DomainError("heat kernel needs positive variance");
    return gaussian(grid, mean, std::sqrt(var));
}

DensityField gibbs_state(const EnergyFunctional& fnl, const Grid& grid) { return stationary_state(fnl, grid).density; }

double l1_distance(const DensityField& a, const DensityField& b) {
    require_same_grid(a.grid(), b.grid(), "l1_distance");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s * a.grid().cell_volume();
}

double convergence_order(const std::vector<double>& h, const std::vector<double>& err) {
    if (h.size() != err.size() || h.size() < 2) throw ShapeError("convergence_order needs >= 2 matching levels");
    const double n = static_cast<double>(h.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        mx += std::log(h[i]) / n;
        my += std::log(err[i]) / n;
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        num += (std::log(h[i]) - mx) * (std::log(err[i]) - my);
        den += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
    }
    return num / den;
}

}  // namespace pflow
