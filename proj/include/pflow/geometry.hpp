#pragma once

// Differential geometry on densities: pushforward curves nu o (Id + tau phi)^{-1},
// cylinder functions and their gradients, the finite-difference differential
// of E along pushforward curves, the determinant derivative identity, and least-squares
// projection onto the closure of weighted smooth gradient fields.

#include <functional>
#include <string>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"
#include "pflow/laws.hpp"

namespace pflow {

/// Smooth compactly supported test profile zeta with analytic gradient.
class TestProfile {
public:
    enum class Kind { bump, hermite_damped };

    /// amplitude * exp(1 - 1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside.
    static TestProfile bump(Point center, double radius, double amplitude = 1.0);
    /// He_k(y1) exp(-|y|^2/2) T(|y|/R), y = (x - c)/scale, T a smooth cut-off
    /// equal to 1 on [0, 1/2] and 0 beyond 1.
    static TestProfile hermite_damped(int order, double scale, Point center, double taper_radius = 3.0);

    [[nodiscard]] double value(const Point& x, int dim) const noexcept;
    [[nodiscard]] Point gradient(const Point& x, int dim) const noexcept;
    [[nodiscard]] std::vector<double> sample(const Grid& grid) const;
    [[nodiscard]] VectorFieldSample sample_gradient(const Grid& grid) const;

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] const Point& center() const noexcept { return center_; }
    /// Radius of the closed ball containing the support.
    [[nodiscard]] double support_radius() const noexcept;
    [[nodiscard]] std::string describe() const;

private:
    TestProfile(Kind kind, Point center, double p1, double p2, int order)
        : kind_(kind), center_(center), p1_(p1), p2_(p2), order_(order) {}
    Kind kind_;
    Point center_;
    double p1_;  // radius (bump) or scale (hermite)
    double p2_;  // amplitude (bump) or taper radius in scale units (hermite)
    int order_;
};

/// F(nu) = f(nu(h_1), ..., nu(h_k)).
struct CylinderFunction {
    enum class Outer { sin_sum, tanh_sum, poly_clipped };
    Outer outer;
    std::vector<double> coefficients;  // one per inner profile
    std::vector<TestProfile> inner;

    [[nodiscard]] double outer_value(const std::vector<double>& y) const;
    [[nodiscard]] std::vector<double> outer_gradient(const std::vector<double>& y) const;
};

/// nu(h) = int h v dx.
[[nodiscard]] double integrate_profile(const TestProfile& h, const DensityField& field);
[[nodiscard]] double cylinder_value(const CylinderFunction& F, const DensityField& field);
/// sum_i d_i f(nu(h_1), ...) grad h_i sampled on the grid.
[[nodiscard]] VectorFieldSample cylinder_gradient(const CylinderFunction& F, const DensityField& field);

/// tau -> nu o (Id + tau phi)^{-1}.
class PushforwardCurve {
public:
    /// Throws CurveDomainError unless tau_max * sup|D phi| < 1.
    PushforwardCurve(DensityField base, VectorFieldSample direction, double tau_max);

    [[nodiscard]] const DensityField& base() const noexcept { return base_; }
    [[nodiscard]] const VectorFieldSample& direction() const noexcept { return direction_; }
    [[nodiscard]] double tau_max() const noexcept { return tau_max_; }
    /// sup over cells of the Frobenius norm of D phi.
    [[nodiscard]] double jacobian_sup() const noexcept { return jac_sup_; }
    [[nodiscard]] const Jacobian& jacobian() const noexcept { return jac_; }

private:
    DensityField base_;
    VectorFieldSample direction_;
    double tau_max_;
    Jacobian jac_;
    double jac_sup_;
};

struct PushforwardResult {
    DensityField density;
    double renormalization;  // factor applied to restore the base mass
    int max_iterations;      // fixed-point iterations used by the worst cell
};

[[nodiscard]] PushforwardResult pushforward(const PushforwardCurve& curve, double tau);
[[nodiscard]] DensityField pushforward_density(const PushforwardCurve& curve, double tau);

struct DetDerivativeReport {
    double max_dev_forward = 0.0;  // |d/dtau det D(Id+tau phi)(x) - div phi(x)|
    double max_dev_inverse = 0.0;  // |d/dtau det D(Id+tau phi)^{-1}(x + tau phi(x)) + div phi(x)|
    double max_dev_forward_richardson = 0.0;
    double max_dev_inverse_richardson = 0.0;
    double max_div = 0.0;
};

/// Sampled field: Jacobian and divergence from the grid differences.
[[nodiscard]] DetDerivativeReport det_derivative_check(const VectorFieldSample& phi, double h_tau = 1e-5);

/// Analytic field: Jacobian supplied pointwise (row-major), divergence = trace.
[[nodiscard]] DetDerivativeReport det_derivative_check(const Grid& grid,
                                                       const std::function<std::array<double, 4>(const Point&)>& jac,
                                                       double h_tau = 1e-5);

/// Default pushforward step 1e-4 / (1 + |phi|_inf).
[[nodiscard]] double default_fd_step(const VectorFieldSample& phi) noexcept;

/// Central difference of tau -> E(nu o (Id+tau phi)^{-1}) at 0; tau <= 0 picks
/// the default step. With richardson the steps tau and tau/2 are combined.
[[nodiscard]] double diff_energy_fd(const EnergyFunctional& fnl, const DensityField& field,
                                    const VectorFieldSample& phi, double tau = 0.0, bool richardson = false);

/// Same construction for an arbitrary functional G of the density.
[[nodiscard]] double diff_functional_fd(const std::function<double(const DensityField&)>& G, const DensityField& field,
                                        const VectorFieldSample& phi, double tau = 0.0, bool richardson = false);

class GradientSubspaceBasis {
public:
    GradientSubspaceBasis(DensityField field, ScalarLaw b_law, std::vector<TestProfile> generators);

    [[nodiscard]] const DensityField& field() const noexcept { return field_; }
    [[nodiscard]] const ScalarLaw& b_law() const noexcept { return b_; }
    [[nodiscard]] const std::vector<TestProfile>& generators() const noexcept { return generators_; }
    [[nodiscard]] std::size_t size() const noexcept { return generators_.size(); }
    /// Row-major n x n Gram matrix of <b grad zeta_i, b grad zeta_j>_{b, nu}.
    [[nodiscard]] const std::vector<double>& gram() const noexcept { return gram_; }
    /// b(v) grad zeta_j.
    [[nodiscard]] const VectorFieldSample& element(std::size_t j) const { return elements_.at(j); }
    [[nodiscard]] const std::vector<double>& weight() const noexcept { return weight_; }

    [[nodiscard]] double inner(const VectorFieldSample& a, const VectorFieldSample& b) const;

private:
    DensityField field_;
    ScalarLaw b_;
    std::vector<TestProfile> generators_;
    std::vector<VectorFieldSample> elements_;
    std::vector<double> weight_;  // 1/b(v)
    std::vector<double> gram_;
};

struct Projection {
    std::vector<double> coefficients;
    double residual_norm;
    double target_norm;
};

[[nodiscard]] Projection project_onto_G(const GradientSubspaceBasis& basis, const VectorFieldSample& target);

/// Bounding box [lo, hi] of cells with v >= rel * max v over the given states,
/// shrunk so that it stays `margin_cells` away from the boundary.
struct SupportBox {
    Point lo;
    Point hi;
};
[[nodiscard]] SupportBox support_box(const std::vector<const DensityField*>& states, double rel = 1e-8,
                                     int margin_cells = 4);

/// Default test battery: 4 bumps tiling the box, then Hermite profiles of
/// orders 1..4 centred in it. `count` takes a prefix.
[[nodiscard]] std::vector<TestProfile> default_battery(const Grid& grid, const SupportBox& box, int count = 8);

/// Nested generator sequence: 4 bumps, 4 Hermite, 8 bumps, 16 bumps, ...
/// truncated to `count`.
[[nodiscard]] std::vector<TestProfile> generator_ladder(const Grid& grid, const SupportBox& box, int count);

}  // namespace pflow
