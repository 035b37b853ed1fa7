#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "pflow/analytic.hpp"
#include "pflow/errors.hpp"
#include "pflow/grid.hpp"

using namespace pflow;

namespace {

DensityField uniform(const Grid& g) { return DensityField(g, std::vector<double>(g.size(), 1.0)).normalized(); }

}  // namespace

TEST_CASE("grid geometry") {
    const Grid g = Grid::rect({-1.0, 0.0}, {1.0, 2.0}, 4, 8);
    CHECK(g.dim() == 2);
    CHECK(g.size() == 32);
    CHECK(g.spacing(0) == doctest::Approx(0.5));
    CHECK(g.spacing(1) == doctest::Approx(0.25));
    CHECK(g.cell_volume() == doctest::Approx(0.125));
    CHECK(g.center(g.index(0, 0))[0] == doctest::Approx(-0.75));
    CHECK(g.layer(g.index(0, 3)) == 0);
    CHECK(g.layer(g.index(2, 3)) == 1);
    CHECK_THROWS_AS(Grid::line(1.0, 0.0, 4), DomainError);
    CHECK_THROWS_AS(Grid::line(0.0, 1.0, 0), DomainError);
}

TEST_CASE("density field invariants") {
    const Grid g = Grid::line(0.0, 1.0, 4);
    CHECK_THROWS_AS(DensityField(g, {1.0, -0.5, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(DensityField(g, {1.0, NAN, 1.0, 1.0}), DomainError);
    CHECK_THROWS_AS(DensityField(g, {1.0, 1.0}), ShapeError);
    const DensityField u = DensityField(g, {1.0, 2.0, 3.0, 4.0}).normalized();
    CHECK(u.mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("integrate: constant, zero and Gaussian second moment") {
    const Grid g = Grid::line(-8.0, 8.0, 512);
    const DensityField u = uniform(g);
    CHECK(integrate(u, std::vector<double>(g.size(), 1.0)) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(integrate(u, std::vector<double>(g.size(), 0.0)) == 0.0);

    const DensityField gauss = gaussian(g, {0.0, 0.0}, 1.0);
    std::vector<double> x2(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) x2[i] = g.center(i)[0] * g.center(i)[0];
    CHECK(std::abs(integrate(gauss, x2) - 1.0) <= 1e-3);

    CHECK_THROWS_AS((void)integrate(u, std::vector<double>(3, 1.0)), ShapeError);
}

TEST_CASE("integrate is linear in the integrand") {
    const Grid g = Grid::line(-3.0, 3.0, 64);
    const DensityField u = gaussian(g, {0.3, 0.0}, 0.8);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> f(g.size()), h(g.size()), comb(g.size());
        const double a = U(rng), b = U(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
            f[i] = U(rng);
            h[i] = U(rng);
            comb[i] = a * f[i] + b * h[i];
        }
        const double lhs = integrate(u, comb), rhs = a * integrate(u, f) + b * integrate(u, h);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("weighted inner product") {
    const Grid g = Grid::rect({-2.0, -2.0}, {2.0, 2.0}, 32, 32);
    const DensityField u = gaussian(g, {0.0, 0.0}, 0.7);
    const auto a = VectorFieldSample::sample(g, [](const Point& x) { return Point{std::sin(x[0]), x[1]}; });
    const auto b = VectorFieldSample::sample(g, [](const Point& x) { return Point{x[0] * x[1], 1.0}; });
    const std::vector<double> ones(g.size(), 1.0), half(g.size(), 0.5);

    double l2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = a.at(i);
        l2 += (p[0] * p[0] + p[1] * p[1]) * u[i] * g.cell_volume();
    }
    CHECK(weighted_inner(u, ones, a, a) == doctest::Approx(l2).epsilon(1e-13));

    const auto ex = VectorFieldSample::sample(g, [](const Point&) { return Point{1.0, 0.0}; });
    const auto ey = VectorFieldSample::sample(g, [](const Point&) { return Point{0.0, 1.0}; });
    CHECK(weighted_inner(u, ones, ex, ey) == 0.0);

    // weight 1/b with b = 2
    CHECK(weighted_inner(u, half, a, b) == doctest::Approx(0.5 * weighted_inner(u, ones, a, b)).epsilon(1e-14));

    const double ab = weighted_inner(u, ones, a, b), ba = weighted_inner(u, ones, b, a);
    CHECK(std::abs(ab - ba) <= 1e-12 * (1.0 + std::abs(ab)));
    CHECK(weighted_inner(u, ones, b, b) > 0.0);

    std::vector<double> bad(g.size(), 1.0);
    bad[5] = 0.0;
    CHECK_THROWS_AS((void)weighted_inner(u, bad, a, b), DomainError);
}

TEST_CASE("gradient and divergence: exact cases") {
    const Grid g = Grid::line(-1.0, 1.0, 20);
    const std::vector<double> c(g.size(), 4.2);
    CHECK(gradient_of(c, g).sup_norm() <= 1e-12);

    std::vector<double> lin(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) lin[i] = 3.0 * g.center(i)[0];
    const auto grad = gradient_of(lin, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(grad.component(0)[i] == doctest::Approx(3.0));

    const auto zero = VectorFieldSample(g);
    for (double d : divergence_of(zero)) CHECK(d == 0.0);
    const auto field = VectorFieldSample::sample(g, [](const Point& x) { return Point{3.0 * x[0], 0.0}; });
    const auto div = divergence_of(field);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(div[i] == doctest::Approx(3.0));
}

TEST_CASE("gradient of sin converges at second order") {
    std::vector<double> hs, errs;
    for (int n : {32, 64, 128, 256}) {
        const Grid g = Grid::line(0.0, 2.0 * std::numbers::pi, n);
        std::vector<double> s(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) s[i] = std::sin(g.center(i)[0]);
        const auto grad = gradient_of(s, g);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            worst = std::max(worst, std::abs(grad.component(0)[i] - std::cos(g.center(i)[0])));
        hs.push_back(g.spacing(0));
        errs.push_back(worst);
    }
    CHECK(convergence_order(hs, errs) >= 1.9);
}

TEST_CASE("2D divergence of (sin x, cos y) converges at second order") {
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
        const Grid g = Grid::rect({0.0, 0.0}, {3.0, 3.0}, n, n);
        const auto f = VectorFieldSample::sample(g, [](const Point& x) { return Point{std::sin(x[0]), std::cos(x[1])}; });
        const auto div = divergence_of(f);
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.center(i);
            worst = std::max(worst, std::abs(div[i] - (std::cos(x[0]) - std::sin(x[1]))));
        }
        hs.push_back(g.spacing(0));
        errs.push_back(worst);
    }
    CHECK(convergence_order(hs, errs) >= 1.9);
}

TEST_CASE("divergence of gradient converges to the Laplacian") {
    std::vector<double> hs, errs;
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::rect({-1.0, -1.0}, {1.0, 1.0}, n, n);
        std::vector<double> s(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.center(i);
            s[i] = std::sin(x[0]) * std::cos(2.0 * x[1]);
        }
        const auto lap = divergence_of(gradient_of(s, g));
        double worst = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.layer(i) < 2) continue;
            const Point x = g.center(i);
            worst = std::max(worst, std::abs(lap[i] + 5.0 * std::sin(x[0]) * std::cos(2.0 * x[1])));
        }
        hs.push_back(g.spacing(0));
        errs.push_back(worst);
    }
    CHECK(convergence_order(hs, errs) >= 1.9);
}

TEST_CASE("discrete integration by parts") {
    // Central differences are skew-adjoint away from the boundary, so the
    // O(h^2) bound holds with room to spare: the identity is exact up to round-off.
    for (int n : {32, 64, 128}) {
        const Grid g = Grid::line(-2.0, 2.0, n);
        const auto phi = VectorFieldSample::sample(g, [](const Point& x) { return Point{std::sin(2.0 * x[0]) + 1.0, 0.0}; });
        std::vector<double> zeta(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double x = g.center(i)[0];
            zeta[i] = std::abs(x) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - x * x)) : 0.0;
        }
        const auto div = divergence_of(phi);
        const auto dz = gradient_of(zeta, g);
        std::vector<double> a(g.size()), b(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            a[i] = div[i] * zeta[i];
            b[i] = phi.component(0)[i] * dz.component(0)[i];
        }
        CHECK(std::abs(integrate_dx(g, a) + integrate_dx(g, b)) <= 1e-12);
    }
}

TEST_CASE("interpolation, margins and coarsening") {
    const Grid g = Grid::line(0.0, 1.0, 10);
    std::vector<double> lin(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) lin[i] = 2.0 * g.center(i)[0] + 1.0;
    CHECK(interpolate_linear(g, lin, {0.33, 0.0}) == doctest::Approx(1.66));
    CHECK(interpolate_cubic(g, lin, {0.33, 0.0}) == doctest::Approx(1.66));

    std::vector<double> v(g.size(), 0.0);
    v[4] = v[5] = 5.0;
    const DensityField u(g, v);
    CHECK(margin_max(u, 2) == 0.0);
    const DensityField c = coarsen(u, 2);
    CHECK(c.size() == 5);
    CHECK(c.mass() == doctest::Approx(u.mass()));
    CHECK_THROWS_AS((void)coarsen(u, 3), ShapeError);
}
