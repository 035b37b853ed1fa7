#pragma once

// Conservative finite-volume integration of du/dt = Lap beta(u) - div(D b(u) u),
// D = -grad Phi, with zero-flux walls.

#include <functional>
#include <limits>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"
#include "pflow/laws.hpp"

namespace pflow {

/// Coefficients of the equation, derived from an energy functional so that the
/// drift flux can be written in the balanced form -M (g_R - g_L + Phi_R - Phi_L)/h.
class FlowModel {
public:
    explicit FlowModel(EnergyFunctional fnl);

    /// Effective diffusivity (matrix mode: linear(Psi * b_diag)).
    [[nodiscard]] const ScalarLaw& beta() const noexcept { return beta_; }
    [[nodiscard]] const ScalarLaw& b() const noexcept { return b_; }
    [[nodiscard]] const Potential& phi() const noexcept { return energy_.phi(); }
    [[nodiscard]] const EnergyFunctional& energy() const noexcept { return energy_; }
    [[nodiscard]] bool has_drift() const noexcept { return energy_.phi().kind() != Potential::Kind::none; }

private:
    EnergyFunctional energy_;
    ScalarLaw beta_;
    ScalarLaw b_;
};

enum class Scheme { explicit_euler, semi_implicit };

struct SolverConfig {
    Scheme scheme = Scheme::explicit_euler;
    double cfl_safety = 0.45;
    double t0 = 0.0;
    double t1 = 1.0;
    double max_dt = std::numeric_limits<double>::infinity();
    int store_every = 1;
    /// Abort with DomainError when mass reaches the two outermost cell layers.
    bool margin_check = true;
    bool positivity_clip_log = true;
};

struct StepInfo {
    double mass_drift = 0.0;
    double min_value = 0.0;
    int limiter_activations = 0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityField> states;
    /// Running sum of dt (dt + h^2) up to each stored state (Lyapunov tolerance).
    std::vector<double> dt_budget;
    std::vector<double> step_dt;  // dt of every step taken
    std::size_t steps = 0;
    double max_step_mass_drift = 0.0;
    double total_mass_drift = 0.0;
    double min_value = 0.0;
    int limiter_activations = 0;
};

/// One step. Explicit: throws StepSizeError above the stability bound
/// (safety 1); PositivityError if a cell drops below -1e-14.
[[nodiscard]] DensityField step(const DensityField& u, const FlowModel& model, double dt,
                                Scheme scheme = Scheme::explicit_euler, StepInfo* info = nullptr);

/// safety * min(h^2 / (2 dim max beta'(u)), h / (max|D| max|(b(u)u)'|)), capped by max_dt.
[[nodiscard]] double cfl_dt(const DensityField& u, const FlowModel& model, double safety,
                            double max_dt = std::numeric_limits<double>::infinity(),
                            Scheme scheme = Scheme::explicit_euler);

using Observer = std::function<void(double t, const DensityField& u)>;

[[nodiscard]] Trajectory integrate_path(const DensityField& u0, const FlowModel& model, const SolverConfig& cfg,
                                        const std::vector<Observer>& observers = {});

}  // namespace pflow
