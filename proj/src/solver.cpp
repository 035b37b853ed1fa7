#include "pflow/solver.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

constexpr double kNegTol = 1e-14;
constexpr double kGFloor = 1e-300;

struct Face {
    std::size_t left;
    std::size_t right;
    double h;
};

std::vector<Face> faces_of(const Grid& grid) {
    std::vector<Face> faces;
    for (int axis = 0; axis < grid.dim(); ++axis) {
        for (std::size_t idx = 0; idx < grid.size(); ++idx) {
            const int i = grid.ix(idx) + (axis == 0 ? 1 : 0);
            const int j = grid.iy(idx) + (axis == 1 ? 1 : 0);
            if (i >= grid.cells()[0] || j >= grid.cells()[1]) continue;
            faces.push_back({idx, grid.index(i, j), grid.spacing(axis)});
        }
    }
    return faces;
}

// Face fluxes (positive from left to right), diffusive part optional.
std::vector<double> face_fluxes(const DensityField& u, const FlowModel& model, const std::vector<Face>& faces,
                                bool diffusive) {
    const Grid& grid = u.grid();
    const std::size_t n = u.size();
    std::vector<double> beta(n);
    for (std::size_t i = 0; i < n; ++i) beta[i] = model.beta().evaluate(u[i]);
    std::vector<double> phi, gval;
    const bool drift = model.has_drift();
    const EnergyFunctional& fnl = model.energy();
    const double same_tol = fnl.has_closed_form_g() ? 1e-7 : 1e-4;
    if (drift) {
        phi = model.phi().sample(grid);
        gval.resize(n);
        for (std::size_t i = 0; i < n; ++i) gval[i] = fnl.g_fast(std::max(u[i], kGFloor));
    }
    std::vector<double> F(faces.size(), 0.0);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const Face& fc = faces[f];
        const double ul = u[fc.left], ur = u[fc.right];
        double flux = diffusive ? -(beta[fc.right] - beta[fc.left]) / fc.h : 0.0;
        if (drift) {
            const double dphi = phi[fc.right] - phi[fc.left];
            if (dphi != 0.0 && (ul > 0.0 || ur > 0.0)) {
                // balanced mobility: (beta_R - beta_L) / (g_R - g_L) ~ b(u) u
                const double db = beta[fc.right] - beta[fc.left];
                const double dg = gval[fc.right] - gval[fc.left];
                double M;
                if (std::abs(ur - ul) <= same_tol * std::max(std::abs(ul), std::abs(ur)) || !(db * dg > 0.0)) {
                    const double um = std::max(0.5 * (ul + ur), 0.0);
                    M = model.b().evaluate(um) * um;
                } else {
                    M = db / dg;
                }
                flux += -M * dphi / fc.h;
            }
        }
        F[f] = flux;
    }
    return F;
}

double cell_volume_factor(const Face& f) { return 1.0 / f.h; }

}  // namespace

FlowModel::FlowModel(EnergyFunctional fnl)
    : energy_(std::move(fnl)), beta_(energy_.beta()), b_(energy_.b()) {
    if (energy_.mode() == EnergyFunctional::Mode::matrix_diagonal) {
        if (energy_.beta().kind() != ScalarLaw::Kind::constant || energy_.b().kind() != ScalarLaw::Kind::constant)
            throw UnsupportedModelError("time stepping in the diagonal matrix case needs constant Psi and b_diag");
        beta_ = ScalarLaw::linear(energy_.beta().p1() * energy_.b().p1());
    }
}

double cfl_dt(const DensityField& u, const FlowModel& model, double safety, double max_dt, Scheme scheme) {
    const Grid& grid = u.grid();
    const double h = grid.min_spacing();
    double max_db = 0.0, max_dm = 0.0, max_d = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double v = std::max(u[i], 0.0);
        max_db = std::max(max_db, std::abs(model.beta().derivative(v)));
        max_dm = std::max(max_dm, std::abs(model.b().derivative(v) * v + model.b().evaluate(v)));
        if (model.has_drift()) {
            const Point d = model.phi().drift(grid.center(i), grid.dim());
            max_d = std::max(max_d, std::hypot(d[0], d[1]));
        }
    }
    double bound = std::numeric_limits<double>::infinity();
    if (scheme == Scheme::explicit_euler && max_db > 0.0) bound = h * h / (2.0 * grid.dim() * max_db);
    if (max_d > 0.0 && max_dm > 0.0) bound = std::min(bound, h / (max_d * max_dm));
    if (!std::isfinite(bound)) return max_dt;
    return std::min(safety * bound, max_dt);
}

DensityField step(const DensityField& u, const FlowModel& model, double dt, Scheme scheme, StepInfo* info) {
    if (!(dt > 0.0)) throw StepSizeError("time step must be positive");
    const Grid& grid = u.grid();
    if (scheme == Scheme::explicit_euler) {
        const double bound = cfl_dt(u, model, 1.0, std::numeric_limits<double>::infinity(), scheme);
        if (dt > bound * (1.0 + 1e-9)) throw StepSizeError("time step exceeds the stability bound");
    }
    const std::vector<Face> faces = faces_of(grid);
    const std::size_t n = u.size();
    std::vector<double> F = face_fluxes(u, model, faces, scheme == Scheme::explicit_euler);

    // donor-cell limiter: never let a cell export more than it holds
    std::vector<double> out(n, 0.0);
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const double w = cell_volume_factor(faces[f]);
        if (F[f] > 0.0) out[faces[f].left] += F[f] * w;
        else out[faces[f].right] -= F[f] * w;
    }
    std::vector<double> theta(n, 1.0);
    int activations = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double avail = std::max(u[i], 0.0);
        if (dt * out[i] > avail) {
            theta[i] = avail / (dt * out[i]);
            ++activations;
        }
    }
    if (activations > 0)
        for (std::size_t f = 0; f < faces.size(); ++f) F[f] *= theta[F[f] > 0.0 ? faces[f].left : faces[f].right];

    std::vector<double> next(u.values().begin(), u.values().end());
    if (scheme == Scheme::explicit_euler) {
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const double q = dt * F[f] * cell_volume_factor(faces[f]);
            next[faces[f].left] -= q;
            next[faces[f].right] += q;
        }
    } else {
        // (I - dt Lap_h diag(beta'(u))) delta = dt (Lap_h beta(u) - div drift)
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        std::vector<double> beta(n), dbeta(n);
        for (std::size_t i = 0; i < n; ++i) {
            beta[i] = model.beta().evaluate(u[i]);
            dbeta[i] = model.beta().derivative(std::max(u[i], 0.0));
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t i = 0; i < n; ++i) trip.emplace_back(i, i, 1.0);
        for (std::size_t f = 0; f < faces.size(); ++f) {
            const Face& fc = faces[f];
            const double w = dt / (fc.h * fc.h);
            const auto L = static_cast<Eigen::Index>(fc.left), R = static_cast<Eigen::Index>(fc.right);
            const double dflux = -(beta[fc.right] - beta[fc.left]) / fc.h;
            const double total = dt * (dflux + F[f]) / fc.h;
            rhs(L) -= total;
            rhs(R) += total;
            // implicit increment of the diffusive flux
            trip.emplace_back(L, L, w * dbeta[fc.left]);
            trip.emplace_back(L, R, -w * dbeta[fc.right]);
            trip.emplace_back(R, R, w * dbeta[fc.right]);
            trip.emplace_back(R, L, -w * dbeta[fc.left]);
        }
        Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success) throw Error("semi-implicit step: factorization failed");
        const Eigen::VectorXd delta = lu.solve(rhs);
        for (std::size_t i = 0; i < n; ++i) next[i] += delta(static_cast<Eigen::Index>(i));
    }

    double mn = next.empty() ? 0.0 : next.front();
    for (double v : next) mn = std::min(mn, v);
    if (mn < -kNegTol) throw PositivityError("negative density after step; time step too large?");
    DensityField result(grid, std::move(next));
    if (info) {
        info->mass_drift = std::abs(result.mass() - u.mass());
        info->min_value = mn;
        info->limiter_activations = activations;
    }
    return result;
}

Trajectory integrate_path(const DensityField& u0, const FlowModel& model, const SolverConfig& cfg,
                          const std::vector<Observer>& observers) {
    if (!(cfg.t1 >= cfg.t0) || cfg.t0 < 0.0) throw DomainError("solver needs t1 >= t0 >= 0");
    if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) throw DomainError("cfl_safety must lie in (0, 1]");
    if (cfg.store_every < 1) throw DomainError("store_every must be >= 1");
    const Grid& grid = u0.grid();
    const double h = grid.max_spacing();

    Trajectory traj;
    auto store = [&](double t, const DensityField& u, double budget) {
        if (cfg.margin_check && margin_max(u, 2) >= 1e-10)
            throw DomainError("density reaches the outer cell layers; enlarge the domain");
        traj.times.push_back(t);
        traj.states.push_back(u);
        traj.dt_budget.push_back(budget);
        for (const auto& obs : observers) obs(t, u);
    };
    traj.min_value = u0.min();
    store(cfg.t0, u0, 0.0);

    DensityField u = u0;
    double t = cfg.t0;
    double budget = 0.0;
    const double m0 = u0.mass();
    while (t < cfg.t1) {
        double dt = cfl_dt(u, model, cfg.cfl_safety, cfg.max_dt, cfg.scheme);
        bool last = false;
        if (t + dt >= cfg.t1 - 1e-12 * std::max(1.0, std::abs(cfg.t1))) {
            dt = cfg.t1 - t;
            last = true;
        }
        StepInfo info;
        u = step(u, model, dt, cfg.scheme, &info);
        t = last ? cfg.t1 : t + dt;
        budget += dt * (dt + h * h);
        ++traj.steps;
        traj.step_dt.push_back(dt);
        traj.max_step_mass_drift = std::max(traj.max_step_mass_drift, info.mass_drift);
        traj.min_value = std::min(traj.min_value, info.min_value);
        traj.limiter_activations += info.limiter_activations;
        if (last || traj.steps % static_cast<std::size_t>(cfg.store_every) == 0) store(t, u, budget);
        if (last) break;
    }
    traj.total_mass_drift = std::abs(u.mass() - m0);
    return traj;
}

}  // namespace pflow
