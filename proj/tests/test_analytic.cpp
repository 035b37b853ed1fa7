#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "pflow/analytic.hpp"
#include "pflow/errors.hpp"

using namespace pflow;

TEST_CASE("Barenblatt exponents") {
    const auto p1 = BarenblattProfile::make(2.0, 1);
    CHECK(p1.alpha == doctest::Approx(1.0 / 3.0));
    CHECK(p1.beta_exp == doctest::Approx(1.0 / 3.0));
    CHECK(p1.kappa == doctest::Approx(1.0 / 12.0));
    const auto p2 = BarenblattProfile::make(3.0, 2);
    CHECK(p2.alpha == doctest::Approx(1.0 / 3.0));
    CHECK(p2.beta_exp == doctest::Approx(1.0 / 6.0));
    CHECK(p2.kappa == doctest::Approx(1.0 / 18.0));
    CHECK_THROWS_AS((void)BarenblattProfile::make(1.0, 1), DomainError);
    CHECK_THROWS_AS((void)BarenblattProfile::make(2.0, 3), DomainError);
}

TEST_CASE("Barenblatt profile has unit mass") {
    // independent fine midpoint quadrature of the closed form
    for (double m : {1.5, 2.0, 3.0}) {
        const auto p = BarenblattProfile::make(m, 1);
        CHECK(p.exact_mass() == doctest::Approx(1.0).epsilon(1e-12));
        for (double t : {0.5, 1.0, 4.0}) {
            const double r = p.radius(t);
            const int n = 200000;
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += p.value(t, {-r + (i + 0.5) * 2 * r / n, 0.0});
            CHECK(s * 2 * r / n == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    const auto p = BarenblattProfile::make(3.0, 2);
    const double r = p.radius(1.0);
    const int n = 1500;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += p.value(1.0, {-r + (i + 0.5) * 2 * r / n, -r + (j + 0.5) * 2 * r / n});
    CHECK(s * (2 * r / n) * (2 * r / n) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("Barenblatt self-similarity and support") {
    const auto p = BarenblattProfile::make(2.0, 1);
    for (double t : {0.3, 1.0, 2.5})
        for (double x : {0.0, 0.4, 1.1}) {
            const double scaled = std::pow(t, -p.alpha) * p.value(1.0, {x * std::pow(t, -p.beta_exp), 0.0});
            CHECK(p.value(t, {x, 0.0}) == doctest::Approx(scaled).epsilon(1e-13));
        }
    CHECK(p.value(1.0, {p.radius(1.0) * 1.0001, 0.0}) == 0.0);
    CHECK(p.value(1.0, {p.radius(1.0) * 0.99, 0.0}) > 0.0);
    CHECK(p.radius(8.0) == doctest::Approx(2.0 * p.radius(1.0)));
}

TEST_CASE("Barenblatt solves the porous medium equation") {
    for (const auto& [m, dim] : {std::pair{2.0, 1}, std::pair{3.0, 2}}) {
        const auto p = BarenblattProfile::make(m, dim);
        std::vector<double> hs, res;
        for (int n : {32, 64, 128}) {
            const Grid g = dim == 1 ? Grid::line(-4.0, 4.0, n) : Grid::rect({-2.0, -2.0}, {2.0, 2.0}, n, n);
            const double h = g.spacing(0);
            hs.push_back(h);
            res.push_back(barenblatt_residual(p, 1.5, g, h));
        }
        CHECK(res.back() <= 1e-2);
        CHECK(convergence_order(hs, res) >= 1.0);
    }
}

TEST_CASE("Barenblatt sampling") {
    const auto p = BarenblattProfile::make(2.0, 1);
    const Grid g = Grid::line(-4.0, 4.0, 256);
    double f = 0.0;
    const DensityField u = barenblatt(p, 1.0, g, &f);
    CHECK(std::abs(f - 1.0) <= 1e-4);
    CHECK(u.mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(u.min() >= 0.0);
    CHECK_THROWS_AS((void)barenblatt(p, 0.0, g), DomainError);
    CHECK_THROWS_AS((void)barenblatt(p, 1.0, Grid::line(-1.0, 1.0, 64)), DomainError);
    CHECK_THROWS_AS((void)barenblatt(p, 1.0, Grid::rect({-4.0, -4.0}, {4.0, 4.0}, 16, 16)), ShapeError);
    CHECK_THROWS_AS((void)barenblatt(p, 1.0, Grid::line(-4.0, 4.0, 8)), DomainError);

    const auto p2 = BarenblattProfile::make(3.0, 2);
    double f2 = 0.0;
    (void)barenblatt(p2, 1.0, Grid::rect({-2.0, -2.0}, {2.0, 2.0}, 64, 64), &f2);
    CHECK(std::abs(f2 - 1.0) <= 1e-4);
}

TEST_CASE("Gaussian and heat kernel") {
    const Grid g = Grid::line(-10.0, 10.0, 400);
    const DensityField a = gaussian(g, {1.0, 0.0}, 1.5);
    CHECK(a.mass() == doctest::Approx(1.0).epsilon(1e-14));
    const double peak = 1.0 / std::sqrt(2 * std::numbers::pi * 2.25);
    CHECK(a.max() == doctest::Approx(peak).epsilon(1e-3));
    // variance grows by 2 sigma t
    const DensityField b = heat_kernel(0.5, 1.25, g, 1.0, {1.0, 0.0});
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
    CHECK_THROWS_AS((void)gaussian(g, {0.0, 0.0}, 0.0), DomainError);
    CHECK_THROWS_AS((void)heat_kernel(1.0, 0.0, g), DomainError);
}

TEST_CASE("L1 distance and convergence order") {
    const Grid g = Grid::line(0.0, 1.0, 10);
    const DensityField a(g, std::vector<double>(10, 1.0));
    std::vector<double> v(10, 1.0);
    v[0] = 2.0;
    v[9] = 0.0;
    const DensityField b(g, v);
    CHECK(l1_distance(a, a) == 0.0);
    CHECK(l1_distance(a, b) == doctest::Approx(0.2));
    CHECK(l1_distance(a, b) == l1_distance(b, a));
    CHECK_THROWS_AS((void)l1_distance(a, DensityField(Grid::line(0.0, 1.0, 5), std::vector<double>(5, 1.0))),
                    ShapeError);

    CHECK(convergence_order({0.1, 0.05, 0.025}, {3e-2, 7.5e-3, 1.875e-3}) == doctest::Approx(2.0));
    CHECK(convergence_order({0.1, 0.05}, {1.0, 0.5}) == doctest::Approx(1.0));
    CHECK_THROWS_AS((void)convergence_order({0.1}, {1.0}), ShapeError);
}

TEST_CASE("Gibbs state") {
    const Grid g = Grid::line(-8.0, 8.0, 256);
    const auto fnl =
        EnergyFunctional::general(ScalarLaw::linear(1.0), ScalarLaw::constant(1.0), Potential::quadratic(0.5, 1.0));
    const DensityField u = gibbs_state(fnl, g);
    const DensityField n = gaussian(g, {0.0, 0.0}, 1.0);
    CHECK(l1_distance(u, n) <= 1e-6);
}
