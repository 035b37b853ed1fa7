#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "pflow/analytic.hpp"
#include "pflow/errors.hpp"
#include "pflow/solver.hpp"

using namespace pflow;

namespace {

FlowModel heat_model(Potential phi = Potential::none()) {
    return FlowModel(EnergyFunctional::general(ScalarLaw::linear(1.0), ScalarLaw::constant(1.0), phi));
}

FlowModel gpme_model() {
    return FlowModel(EnergyFunctional::general(ScalarLaw::linear_plus_power(0.5, 3.0),
                                               ScalarLaw::bounded_rational(1.0, 1.0), Potential::quartic_well(0.1, 1.0)));
}

double sup_diff(const DensityField& a, const DensityField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("model and step argument errors") {
    CHECK_THROWS_AS(FlowModel(EnergyFunctional::matrix_diagonal(ScalarLaw::linear(1.0), ScalarLaw::constant(2.0),
                                                                Potential::none())),
                    UnsupportedModelError);
    const FlowModel diag(EnergyFunctional::matrix_diagonal(ScalarLaw::constant(1.0), ScalarLaw::constant(2.0),
                                                           Potential::none()));
    CHECK(diag.beta().derivative(0.3) == doctest::Approx(2.0));

    const Grid g = Grid::line(-4.0, 4.0, 64);
    const DensityField u = gaussian(g, {0.0, 0.0}, 0.5);
    const FlowModel m = heat_model();
    CHECK_THROWS_AS((void)step(u, m, 0.0, Scheme::explicit_euler), StepSizeError);
    CHECK_THROWS_AS((void)step(u, m, -1e-3, Scheme::explicit_euler), StepSizeError);
    const double bound = cfl_dt(u, m, 1.0);
    CHECK(bound == doctest::Approx(g.spacing(0) * g.spacing(0) / 2.0));
    CHECK_THROWS_AS((void)step(u, m, 1.5 * bound, Scheme::explicit_euler), StepSizeError);
    CHECK_NOTHROW((void)step(u, m, 1.5 * bound, Scheme::semi_implicit));
    CHECK(cfl_dt(u, m, 0.5, 1e-6) == 1e-6);

    SolverConfig bad;
    bad.t1 = -1.0;
    CHECK_THROWS_AS((void)integrate_path(u, m, bad), DomainError);
    bad = SolverConfig{};
    bad.cfl_safety = 1.5;
    CHECK_THROWS_AS((void)integrate_path(u, m, bad), DomainError);
    bad = SolverConfig{};
    bad.store_every = 0;
    CHECK_THROWS_AS((void)integrate_path(u, m, bad), DomainError);
}

TEST_CASE("mass is conserved to round-off at every step") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (const Grid& g : {Grid::line(-4.0, 4.0, 128), Grid::rect({-3.0, -3.0}, {3.0, 3.0}, 32, 32)}) {
        std::vector<double> v(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g.layer(i) >= 3) v[i] = U(rng);
        DensityField u = DensityField(g, v).normalized();
        for (const FlowModel& m : {heat_model(Potential::quadratic(0.5, 1.0)), gpme_model()}) {
            DensityField w = u;
            for (int k = 0; k < 20; ++k) {
                StepInfo info;
                w = step(w, m, cfl_dt(w, m, 0.45), Scheme::explicit_euler, &info);
                CHECK(info.mass_drift <= 1e-13);
                CHECK(info.min_value >= -1e-14);
            }
            CHECK(std::abs(w.mass() - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("stationary states are fixed points of the scheme") {
    const Grid g = Grid::line(-8.0, 8.0, 256);
    for (const auto& fnl : {EnergyFunctional::general(ScalarLaw::linear(1.0), ScalarLaw::constant(1.0),
                                                      Potential::quadratic(0.5, 1.0)),
                            EnergyFunctional::general(ScalarLaw::linear_plus_power(0.5, 3.0),
                                                      ScalarLaw::bounded_rational(1.0, 1.0),
                                                      Potential::quartic_well(0.1, 1.0))}) {
        const FlowModel m(fnl);
        const DensityField uinf = stationary_state(fnl, g).density;
        DensityField w = uinf;
        for (int k = 0; k < 100; ++k) w = step(w, m, cfl_dt(w, m, 0.45));
        CHECK(sup_diff(w, uinf) <= 1e-10 * uinf.max());
    }
}

TEST_CASE("reflection symmetry") {
    const Grid g = Grid::line(-5.0, 5.0, 128);
    const DensityField u = gaussian(g, {0.7, 0.0}, 0.6);
    std::vector<double> mirrored(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) mirrored[i] = u[g.size() - 1 - i];
    const DensityField r(g, mirrored);
    const FlowModel m = gpme_model();
    SolverConfig cfg;
    cfg.t1 = 0.3;
    const auto a = integrate_path(u, m, cfg).states.back();
    const auto b = integrate_path(r, m, cfg).states.back();
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(a[i] == doctest::Approx(b[g.size() - 1 - i]).epsilon(1e-10));
}

TEST_CASE("heat equation converges to the heat kernel at second order") {
    for (Scheme scheme : {Scheme::explicit_euler, Scheme::semi_implicit}) {
        std::vector<double> hs, errs;
        for (int n : {128, 256, 512}) {
            const Grid g = Grid::line(-14.0, 14.0, n);
            const double s0 = 1.0;
            const DensityField u0 = heat_kernel(1.0, 0.0, g, s0 * s0);
            SolverConfig cfg;
            cfg.scheme = scheme;
            cfg.t1 = 0.5;
            // semi-implicit: dt tied to h^2 so the time error does not mask the space order
            if (scheme == Scheme::semi_implicit) cfg.max_dt = 0.5 * g.spacing(0) * g.spacing(0);
            const auto traj = integrate_path(u0, heat_model(), cfg);
            hs.push_back(g.spacing(0));
            errs.push_back(l1_distance(traj.states.back(), heat_kernel(1.0, 0.5, g, s0 * s0)));
        }
        CHECK(errs.back() <= 1e-3);
        CHECK(convergence_order(hs, errs) >= 1.8);
    }
}

TEST_CASE("semi-implicit step takes large steps and stays close to explicit") {
    const Grid g = Grid::line(-8.0, 8.0, 128);
    const DensityField u0 = gaussian(g, {1.0, 0.0}, 0.7);
    const FlowModel m = heat_model(Potential::quadratic(0.5, 1.0));
    SolverConfig ex;
    ex.t1 = 1.0;
    SolverConfig im = ex;
    im.scheme = Scheme::semi_implicit;
    const auto a = integrate_path(u0, m, ex);
    const auto b = integrate_path(u0, m, im);
    CHECK(b.steps < a.steps);
    CHECK(b.total_mass_drift <= 1e-12);
    CHECK(l1_distance(a.states.back(), b.states.back()) <= 1e-2);
}

TEST_CASE("trajectory bookkeeping") {
    const Grid g = Grid::line(-10.0, 10.0, 64);
    const DensityField u0 = gaussian(g, {0.0, 0.0}, 0.8);
    SolverConfig cfg;
    cfg.t0 = 0.25;
    cfg.t1 = 0.75;
    cfg.store_every = 7;
    int calls = 0;
    const auto traj = integrate_path(u0, heat_model(), cfg, {[&](double, const DensityField&) { ++calls; }});
    CHECK(traj.times.front() == 0.25);
    CHECK(traj.times.back() == 0.75);
    CHECK(static_cast<std::size_t>(calls) == traj.states.size());
    CHECK(traj.states.size() == traj.steps / 7 + 1 + (traj.steps % 7 ? 1 : 0));
    CHECK(traj.step_dt.size() == traj.steps);
    for (std::size_t k = 1; k < traj.times.size(); ++k) {
        CHECK(traj.times[k] > traj.times[k - 1]);
        CHECK(traj.dt_budget[k] > traj.dt_budget[k - 1]);
    }
    double sum = 0.0;
    for (double dt : traj.step_dt) sum += dt;
    CHECK(sum == doctest::Approx(0.5).epsilon(1e-12));

    SolverConfig zero;
    zero.t1 = 0.0;
    const auto still = integrate_path(u0, heat_model(), zero);
    CHECK(still.steps == 0);
    CHECK(still.states.size() == 1);
}

TEST_CASE("margin check and positivity") {
    const Grid g = Grid::line(-2.0, 2.0, 64);
    const DensityField edge = gaussian(g, {1.5, 0.0}, 0.5);
    SolverConfig cfg;
    cfg.t1 = 0.1;
    CHECK_THROWS_AS((void)integrate_path(edge, heat_model(), cfg), DomainError);
    cfg.margin_check = false;
    CHECK_NOTHROW((void)integrate_path(edge, heat_model(), cfg));

    // point mass spreads without going negative
    const Grid gs = Grid::line(-4.0, 4.0, 128);
    std::vector<double> v(gs.size(), 0.0);
    v[64] = 1.0;
    const DensityField spike = DensityField(gs, v).normalized();
    SolverConfig sc;
    sc.t1 = 0.2;
    const auto traj = integrate_path(spike, gpme_model(), sc);
    CHECK(traj.min_value >= -1e-14);
    CHECK(traj.total_mass_drift <= 1e-12);
}

TEST_CASE("porous medium equation tracks the Barenblatt profile") {
    const auto prof = BarenblattProfile::make(2.0, 1, 1.0);
    const FlowModel m(EnergyFunctional::classical(2.0));
    std::vector<double> hs, errs;
    for (int n : {64, 128, 256}) {
        const Grid g = Grid::line(-4.0, 4.0, n);
        SolverConfig cfg;
        cfg.t0 = 1.0;
        cfg.t1 = 2.0;
        const auto traj = integrate_path(barenblatt(prof, 1.0, g), m, cfg);
        hs.push_back(g.spacing(0));
        errs.push_back(l1_distance(traj.states.back(), barenblatt(prof, 2.0, g)));
    }
    CHECK(errs.back() <= 1e-3);
    CHECK(convergence_order(hs, errs) >= 0.8);
}
