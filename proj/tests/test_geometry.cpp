#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

#include "pflow/analytic.hpp"
#include "pflow/energy.hpp"
#include "pflow/errors.hpp"
#include "pflow/geometry.hpp"

using namespace pflow;

namespace {

EnergyFunctional heat(Potential phi = Potential::none()) {
    return EnergyFunctional::general(ScalarLaw::linear(1.0), ScalarLaw::constant(1.0), phi);
}

// Smooth 1D field from a profile: phi(x) = psi(x).
VectorFieldSample profile_field(const Grid& g, const TestProfile& p, double scale = 1.0) {
    return VectorFieldSample::sample(g, [&](const Point& x) { return Point{scale * p.value(x, g.dim()), 0.0}; });
}

}  // namespace

TEST_CASE("test profiles are smooth and compactly supported") {
    const TestProfile b = TestProfile::bump({0.5, 0.0}, 1.0, 2.0);
    CHECK(b.value({0.5, 0.0}, 1) == doctest::Approx(2.0));
    CHECK(b.value({1.6, 0.0}, 1) == 0.0);
    CHECK(b.support_radius() == 1.0);
    const TestProfile h = TestProfile::hermite_damped(3, 0.5, {0.0, 0.0});
    CHECK(h.value({2.0, 0.0}, 1) == 0.0);
    const double eps = 1e-6;
    for (const auto& p : {b, h, TestProfile::hermite_damped(2, 0.7, {0.3, -0.2})}) {
        for (const Point x : {Point{0.2, 0.1}, Point{0.9, -0.3}, Point{-0.4, 0.5}}) {
            for (int a = 0; a < 2; ++a) {
                Point xp = x, xm = x;
                xp[a] += eps;
                xm[a] -= eps;
                CHECK(p.gradient(x, 2)[a] == doctest::Approx((p.value(xp, 2) - p.value(xm, 2)) / (2 * eps)).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("pushforward: identity cases and errors") {
    const Grid g = Grid::line(-6.0, 6.0, 128);
    const DensityField u = gaussian(g, {0.0, 0.0}, 1.0);
    const auto phi = profile_field(g, TestProfile::bump({0.5, 0.0}, 2.0));
    const PushforwardCurve curve(u, phi, 0.1);
    const DensityField same = pushforward_density(curve, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(same[i] == u[i]);

    const PushforwardCurve zero(u, VectorFieldSample(g), 1.0);
    const DensityField still = pushforward_density(zero, 0.7);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(still[i] == doctest::Approx(u[i]).epsilon(1e-14));

    CHECK_THROWS_AS((void)pushforward_density(curve, 0.2), CurveDomainError);
    CHECK_THROWS_AS(PushforwardCurve(u, phi.scaled(100.0), 1.0), CurveDomainError);
}

TEST_CASE("pushforward matches a Monte-Carlo histogram") {
    const Grid g = Grid::line(-6.0, 6.0, 96);
    const DensityField u = gaussian(g, {0.0, 0.0}, 1.0);
    const TestProfile psi = TestProfile::bump({0.5, 0.0}, 2.0);
    const double tau = 0.4;
    const auto phi = profile_field(g, psi);
    const PushforwardCurve curve(u, phi, tau);
    const PushforwardResult res = pushforward(curve, tau);
    const double h = g.spacing(0);
    CHECK(std::abs(res.renormalization - 1.0) <= 10 * h * h);

    std::mt19937_64 rng(2024);
    std::normal_distribution<double> N(0.0, 1.0);
    const int samples = 1000000;
    std::vector<double> hist(g.size(), 0.0);
    for (int k = 0; k < samples; ++k) {
        const double x = N(rng);
        const double y = x + tau * psi.value({x, 0.0}, 1);
        const auto bin = static_cast<long>(std::floor((y - g.origin()[0]) / h));
        if (bin >= 0 && bin < static_cast<long>(g.size())) hist[bin] += 1.0;
    }
    for (double& v : hist) v /= samples * h;
    const DensityField mc(g, hist);
    CHECK(l1_distance(res.density, mc) <= 3.0 * (h + h));
}

TEST_CASE("pushforward preserves mass within 10 h^2 over a tau range") {
    const Grid g = Grid::rect({-4.0, -4.0}, {4.0, 4.0}, 48, 48);
    const DensityField u = gaussian(g, {0.3, -0.2}, 0.8);
    const auto phi = VectorFieldSample::sample(g, [](const Point& x) {
        return Point{std::sin(x[1]) * std::exp(-0.1 * x[0] * x[0]), 0.5 * std::cos(x[0])};
    });
    const PushforwardCurve curve(u, phi, 0.3);
    const double h = g.max_spacing();
    for (double tau : {-0.3, -0.1, 0.05, 0.2, 0.3}) {
        const auto res = pushforward(curve, tau);
        CHECK(std::abs(res.renormalization - 1.0) <= 10 * h * h);
        CHECK(res.density.mass() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("determinant derivative identity") {
    const Grid g1 = Grid::line(-3.0, 3.0, 64);
    const auto zero = det_derivative_check(VectorFieldSample(g1));
    CHECK(zero.max_dev_forward == 0.0);
    CHECK(zero.max_dev_inverse == 0.0);

    // 1D phi = psi: derivative of det(1 + tau psi') is psi'
    const TestProfile psi = TestProfile::bump({0.2, 0.0}, 1.5);
    const auto one_d = det_derivative_check(g1, [&](const Point& x) {
        return std::array<double, 4>{psi.gradient(x, 1)[0], 0.0, 0.0, 0.0};
    });
    CHECK(one_d.max_dev_forward <= 1e-10);
    CHECK(one_d.max_dev_forward_richardson <= 1e-10);

    // smooth 2D field, analytic Jacobian
    const Grid g2 = Grid::rect({-2.0, -2.0}, {2.0, 2.0}, 32, 32);
    const auto jac = [](const Point& x) {
        return std::array<double, 4>{std::cos(x[0]) * std::cos(x[1]), -std::sin(x[0]) * std::sin(x[1]),
                                     2.0 * x[0] * std::exp(-x[1] * x[1]),
                                     -2.0 * x[0] * x[0] * x[1] * std::exp(-x[1] * x[1])};
    };
    const auto two_d = det_derivative_check(g2, jac, 1e-5);
    CHECK(two_d.max_dev_forward <= 1e-6);
    CHECK(two_d.max_dev_inverse <= 1e-6);

    // sampled field: Jacobian from grid differences
    const auto sampled = det_derivative_check(VectorFieldSample::sample(g2, [](const Point& x) {
        return Point{std::sin(x[0]) * std::cos(x[1]), x[0] * x[0] * std::exp(-x[1] * x[1])};
    }));
    CHECK(sampled.max_dev_forward <= 1e-6);
}

TEST_CASE("cylinder functions") {
    const Grid g = Grid::line(-6.0, 6.0, 256);
    const DensityField u = gaussian(g, {0.0, 0.0}, 1.0);
    const TestProfile h1 = TestProfile::bump({0.3, 0.0}, 1.5);
    const CylinderFunction F{CylinderFunction::Outer::sin_sum, {1.0}, {h1}};
    const double nu_h = integrate_profile(h1, u);
    CHECK(cylinder_value(F, u) == doctest::Approx(std::sin(nu_h)));
    const auto grad = cylinder_gradient(F, u);
    const auto dh = h1.sample_gradient(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(grad.at(i)[0] == doctest::Approx(std::cos(nu_h) * dh.at(i)[0]));

    // profile supported where v = 0
    std::vector<double> v(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.center(i)[0] < 0.0) v[i] = 1.0;
    const DensityField left = DensityField(g, v).normalized();
    const TestProfile far = TestProfile::bump({3.0, 0.0}, 1.0);
    const CylinderFunction G{CylinderFunction::Outer::tanh_sum, {2.0}, {far}};
    CHECK(integrate_profile(far, left) == 0.0);
    const auto gG = cylinder_gradient(G, left);
    CHECK(gG.sup_norm() > 0.0);
    CHECK(weighted_inner(left, std::vector<double>(g.size(), 1.0), gG, gG) == 0.0);
}

TEST_CASE("cylinder differential by pushforward") {
    std::vector<double> hs, errs;
    for (int n : {64, 128, 256}) {
        const Grid g = Grid::line(-6.0, 6.0, n);
        const DensityField u = gaussian(g, {0.2, 0.0}, 1.0);
        const CylinderFunction F{CylinderFunction::Outer::sin_sum,
                                 {1.0, -0.5},
                                 {TestProfile::bump({0.0, 0.0}, 1.5), TestProfile::hermite_damped(2, 0.8, {0.5, 0.0})}};
        const auto phi = profile_field(g, TestProfile::bump({0.3, 0.0}, 2.5));
        const double fd = diff_functional_fd([&](const DensityField& f) { return cylinder_value(F, f); }, u, phi,
                                             0.1 * g.spacing(0));
        const double pairing = weighted_inner(u, std::vector<double>(g.size(), 1.0), cylinder_gradient(F, u), phi);
        hs.push_back(g.spacing(0));
        errs.push_back(std::abs(fd - pairing));
    }
    CHECK(errs.back() <= 1e-4);
    CHECK(convergence_order(hs, errs) >= 1.8);
}

TEST_CASE("energy differential oracle") {
    const Grid g = Grid::line(-8.0, 8.0, 256);
    const auto f = heat(Potential::quadratic(0.5, 1.0));
    const DensityField u = gaussian(g, {0.5, 0.0}, 0.9);
    CHECK(diff_energy_fd(f, u, VectorFieldSample(g)) == 0.0);

    const auto phi = profile_field(g, TestProfile::hermite_damped(1, 1.0, {0.0, 0.0}));
    const DensityField uinf = stationary_state(f, g).density;
    CHECK(std::abs(diff_energy_fd(f, uinf, phi)) <= 1e-5);

    // linearity in the direction
    const auto phi2 = profile_field(g, TestProfile::bump({1.0, 0.0}, 2.0));
    const double a = 0.7, b = -1.3;
    const double lhs = diff_energy_fd(f, u, phi.scaled(a) + phi2.scaled(b), 1e-3);
    const double rhs = a * diff_energy_fd(f, u, phi, 1e-3) + b * diff_energy_fd(f, u, phi2, 1e-3);
    CHECK(std::abs(lhs - rhs) <= 1e-4);

    // classical m = 2: diff E(phi) = -int v^2 div phi
    const auto c2 = EnergyFunctional::classical(2.0);
    const Grid gb = Grid::line(-4.0, 4.0, 256);
    const DensityField v = gaussian(gb, {0.0, 0.0}, 0.8);
    const auto psi = profile_field(gb, TestProfile::bump({0.2, 0.0}, 2.0));
    const auto div = divergence_of(psi);
    std::vector<double> integrand(gb.size());
    for (std::size_t i = 0; i < gb.size(); ++i) integrand[i] = -v[i] * v[i] * div[i];
    const double closed = integrate_dx(gb, integrand);
    CHECK(std::abs(diff_energy_fd(c2, v, psi, 1e-3) - closed) <= 1e-3 * std::abs(closed));
    // and agrees with the gradient pairing
    const double pairing = weighted_inner(v, std::vector<double>(gb.size(), 1.0), gradient_field(c2, v), psi);
    CHECK(std::abs(pairing - closed) <= 1e-3 * std::abs(closed));
}

TEST_CASE("weighted and unweighted gradients give the same pairing") {
    const Grid g = Grid::line(-6.0, 6.0, 128);
    const DensityField u = gaussian(g, {0.0, 0.0}, 1.1);
    const CylinderFunction F{CylinderFunction::Outer::poly_clipped, {1.5}, {TestProfile::bump({0.0, 0.0}, 2.0)}};
    const auto grad = cylinder_gradient(F, u);
    const ScalarLaw b = ScalarLaw::bounded_rational(1.0, 1.0);
    std::vector<double> alpha(g.size()), inv_alpha(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        alpha[i] = 1.0 / b.evaluate(u[i]);
        inv_alpha[i] = 1.0 / alpha[i];
    }
    const auto grad_alpha = grad.scaled(inv_alpha);
    for (int k = 1; k <= 3; ++k) {
        const auto phi = profile_field(g, TestProfile::hermite_damped(k, 1.0, {0.1, 0.0}));
        const double w = weighted_inner(u, alpha, grad_alpha, phi);
        const double plain = weighted_inner(u, std::vector<double>(g.size(), 1.0), grad, phi);
        CHECK(w == doctest::Approx(plain).epsilon(1e-13));
    }
}

TEST_CASE("derivative of int g(Id + tau phi) dnu") {
    const Grid g = Grid::line(-6.0, 6.0, 256);
    const DensityField u = gaussian(g, {0.0, 0.0}, 1.0);
    const TestProfile gi = TestProfile::hermite_damped(2, 1.0, {0.2, 0.0});
    const TestProfile psi = TestProfile::bump({0.0, 0.0}, 2.0);
    const double tau = 1e-4;
    auto moved = [&](double t) {
        std::vector<double> vals(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.center(i);
            vals[i] = gi.value({x[0] + t * psi.value(x, 1), 0.0}, 1);
        }
        return integrate(u, vals);
    };
    const double fd = (moved(tau) - moved(-tau)) / (2 * tau);
    std::vector<double> pairing(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.center(i);
        pairing[i] = gi.gradient(x, 1)[0] * psi.value(x, 1);
    }
    CHECK(fd == doctest::Approx(integrate(u, pairing)).epsilon(1e-7));
}

TEST_CASE("projection onto weighted gradient fields") {
    const Grid g = Grid::line(-8.0, 8.0, 256);
    const auto f = heat(Potential::quadratic(0.5, 1.0));
    const DensityField u = gaussian(g, {1.0, 0.0}, 0.8);
    const SupportBox box = support_box({&u});
    const auto gens = generator_ladder(g, box, 8);
    const GradientSubspaceBasis basis(u, ScalarLaw::constant(1.0), gens);

    const auto& G = basis.gram();
    const std::size_t n = basis.size();
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        trace += G[i * n + i];
        for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(G[i * n + j] - G[j * n + i]) <= 1e-12 * (1 + std::abs(G[i * n + j])));
    }
    Eigen::MatrixXd M(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) M(i, j) = G[i * n + j];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * trace);

    // in the span
    const auto target = basis.element(2).scaled(1.5) + basis.element(5).scaled(-0.5);
    const Projection in_span = project_onto_G(basis, target);
    CHECK(in_span.residual_norm <= 1e-8 * in_span.target_norm);
    CHECK(in_span.coefficients[2] == doctest::Approx(1.5).epsilon(1e-6));

    // orthogonal to every generator: Gram-Schmidt complement of a generic field
    VectorFieldSample w = VectorFieldSample::sample(g, [](const Point& x) { return Point{std::sin(3 * x[0]) + x[0], 0.0}; });
    for (int pass = 0; pass < 2; ++pass) {
        const Projection p = project_onto_G(basis, w);
        for (std::size_t j = 0; j < n; ++j) w = w - basis.element(j).scaled(p.coefficients[j]);
    }
    const Projection orth = project_onto_G(basis, w);
    for (double c : orth.coefficients) CHECK(std::abs(c) <= 1e-8);

    // the energy gradient: nonincreasing residual over the generator ladder
    const VectorFieldSample grad = gradient_field(f, u);
    const auto all = generator_ladder(g, box, 32);
    double prev = std::numeric_limits<double>::infinity();
    for (int count : {4, 8, 16, 32}) {
        const GradientSubspaceBasis bc(u, ScalarLaw::constant(1.0),
                                       std::vector<TestProfile>(all.begin(), all.begin() + count));
        const Projection p = project_onto_G(bc, grad);
        CHECK(p.residual_norm <= prev + 1e-10 * p.target_norm);
        prev = p.residual_norm;
    }
}
