#pragma once

// Closed-form reference solutions used as oracles.

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"

namespace pflow {

/// U(t, x) = t^{-alpha} (C - kappa |x|^2 t^{-2 beta})_+^{1/(m-1)} with unit mass.
struct BarenblattProfile {
    double m;
    int dim;
    double t_ref;
    double alpha;
    double beta_exp;
    double kappa;
    double C_mass;

    static BarenblattProfile make(double m, int dim, double t_ref = 1.0);

    [[nodiscard]] double value(double t, const Point& x) const noexcept;
    [[nodiscard]] double radius(double t) const noexcept;
    /// int U(t, x) dx of the formula (independent of t).
    [[nodiscard]] double exact_mass() const noexcept;
};

/// Samples U(t) at cell centres and renormalizes; `factor` receives the
/// renormalization factor (must lie within 1 +- 1e-4).
[[nodiscard]] DensityField barenblatt(const BarenblattProfile& profile, double t, const Grid& grid,
                                      double* factor = nullptr);

/// Max of |dU/dt - Lap(U^m)| over cells well inside the support, with
/// centred differences of step h in space and dt in time.
[[nodiscard]] double barenblatt_residual(const BarenblattProfile& profile, double t, const Grid& grid, double dt);

/// Isotropic Gaussian N(mean, s^2 Id) at cell centres, renormalized.
[[nodiscard]] DensityField gaussian(const Grid& grid, const Point& mean, double s);

/// Heat-equation solution d/dt u = sigma Lap u from N(mean, s0^2 Id) after time t:
/// variance s0^2 + 2 sigma t per axis.
[[nodiscard]] DensityField heat_kernel(double sigma, double t, const Grid& grid, double initial_variance = 0.0,
                                       const Point& mean = {0.0, 0.0});

[[nodiscard]] DensityField gibbs_state(const EnergyFunctional& fnl, const Grid& grid);

/// L1 distance int |a - b| dx.
[[nodiscard]] double l1_distance(const DensityField& a, const DensityField& b);

/// Least-squares slope of log(err) against log(h).
[[nodiscard]] double convergence_order(const std::vector<double>& h, const std::vector<double>& err);

}  // namespace pflow
