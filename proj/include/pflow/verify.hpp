#pragma once

// Runtime checks along a trajectory: the gradient-flow identity tested against
// a battery of profiles, Lyapunov monotonicity of E, the dissipation identity
// and integral, and the projection ladder onto weighted gradient fields.

#include <string>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/geometry.hpp"
#include "pflow/solver.hpp"

namespace pflow {

struct ResidualRecord {
    double t = 0.0;
    std::size_t t_index = 0;
    int zeta_id = 0;
    double lhs = 0.0;         // d/dt int zeta u, centred in time
    double rhs_closed = 0.0;  // -int u b grad(g(u) + Phi) . grad zeta
    double rhs_fd = 0.0;      // -diff E along the pushforward by b(u) grad zeta
    double residual = 0.0;    // max |lhs - rhs| / max(1, |lhs|)
    double rhs_gap = 0.0;     // |rhs_closed - rhs_fd| / max(1, |lhs|)
};

/// Residual of the gradient-flow identity for one profile at a stored index.
/// Throws IndexError at the trajectory ends.
[[nodiscard]] ResidualRecord gradient_flow_residual(const Trajectory& traj, const EnergyFunctional& fnl,
                                                    const TestProfile& zeta, std::size_t t_index,
                                                    bool with_fd = true);

struct ResidualSummary {
    std::vector<ResidualRecord> records;
    double max = 0.0;
    double p90 = 0.0;
    double max_gap = 0.0;
    double fraction_over = 0.0;  // share of time indices with some residual above tolerance
    double tolerance = 0.0;
    bool pass = false;           // p90 within tolerance and fraction_over <= 10%
};

/// Interior stored indices nearest to `probes` evenly spaced times.
[[nodiscard]] std::vector<std::size_t> probe_indices(const Trajectory& traj, int probes);

[[nodiscard]] ResidualSummary gradient_flow_residuals(const Trajectory& traj, const EnergyFunctional& fnl,
                                                      const std::vector<TestProfile>& battery, double tolerance,
                                                      int probes = 20, bool with_fd = true);

/// Battery of `count` profiles placed on the support of the first and last states.
[[nodiscard]] std::vector<TestProfile> trajectory_battery(const Trajectory& traj, int count = 8);

struct LyapunovRecord {
    std::vector<double> energies;
    std::vector<double> tolerances;  // allowed increase between consecutive stored states
    int violations = 0;
    double max_increase = 0.0;  // largest E(t_k) - E(t_{k-1})
    double max_deviation = 0.0; // largest |E(t_k) - E(t_0)|
    bool pass = true;
};

/// tol between stored states = 10 sum dt (dt + h^2) * max(1, |E(u0)|).
[[nodiscard]] LyapunovRecord lyapunov_check(const Trajectory& traj, const EnergyFunctional& fnl);

/// |grad_b E|^2_{b,mu} at every stored state.
[[nodiscard]] std::vector<double> dissipation_rates(const Trajectory& traj, const EnergyFunctional& fnl);

struct DissipationIdentity {
    double lhs = 0.0;  // E(t) - E(s)
    double rhs = 0.0;  // -int_s^t D(r) dr (trapezoid)
    double gap = 0.0;  // |lhs - rhs| / |lhs| (absolute when |lhs| < 1e-14)
};

[[nodiscard]] DissipationIdentity dissipation_identity(const Trajectory& traj, const EnergyFunctional& fnl,
                                                       std::size_t s_index, std::size_t t_index);
[[nodiscard]] DissipationIdentity dissipation_identity(const std::vector<double>& times,
                                                       const std::vector<double>& energies,
                                                       const std::vector<double>& rates, std::size_t s_index,
                                                       std::size_t t_index);

[[nodiscard]] double dissipation_integral(const Trajectory& traj, const EnergyFunctional& fnl);
[[nodiscard]] double trapezoid(const std::vector<double>& t, const std::vector<double>& f, std::size_t from,
                               std::size_t to);

struct DifferentialProbe {
    double closed = 0.0;     // <b(v) grad(g(v) + Phi), phi>_{b, nu}
    double fd = 0.0;         // central difference of E along the pushforward curve
    double scale = 0.0;      // max(1, |grad_b E|_{b, nu}) |phi|_{b, nu}
    double rel_error = 0.0;  // |fd - closed| / scale
};

/// Seeded probe fields: random combinations of the battery profiles, used as
/// (non-gradient) vector fields. tau <= 0 picks a step proportional to h.
[[nodiscard]] std::vector<DifferentialProbe> differential_identity(const EnergyFunctional& fnl,
                                                                   const DensityField& field, int count,
                                                                   unsigned long long seed, double tau = 0.0);

struct LadderRow {
    double t = 0.0;
    std::size_t t_index = 0;
    std::vector<int> counts;
    std::vector<double> residuals;  // absolute residual norms
    double target_norm = 0.0;
    bool monotone = true;
};

struct LadderRecord {
    std::vector<LadderRow> rows;
    bool monotone = true;
};

/// Projection of grad_b E onto spans of nested generator sets at `samples`
/// evenly spaced stored states.
[[nodiscard]] LadderRecord g_membership_ladder(const Trajectory& traj, const EnergyFunctional& fnl,
                                               const std::vector<int>& counts, int samples = 5);

}  // namespace pflow
