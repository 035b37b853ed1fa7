#include "pflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pflow/errors.hpp"

namespace pflow {

namespace {

double centred_derivative(double t0, double t1, double t2, double f0, double f1, double f2) {
    const double h1 = t1 - t0, h2 = t2 - t1;
    return (h1 * h1 * f2 - h2 * h2 * f0 - (h1 * h1 - h2 * h2) * f1) / (h1 * h2 * (h1 + h2));
}

double percentile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

ResidualRecord gradient_flow_residual(const Trajectory& traj, const EnergyFunctional& fnl, const TestProfile& zeta,
                                      std::size_t t_index, bool with_fd) {
    if (t_index == 0 || t_index + 1 >= traj.states.size())
        throw IndexError("gradient-flow residual needs stored states on both sides");
    const DensityField& u = traj.states[t_index];
    const Grid& grid = u.grid();
    const std::vector<double> z = zeta.sample(grid);
    ResidualRecord rec;
    rec.t = traj.times[t_index];
    rec.t_index = t_index;
    rec.lhs = centred_derivative(traj.times[t_index - 1], traj.times[t_index], traj.times[t_index + 1],
                                 integrate(traj.states[t_index - 1], z), integrate(u, z),
                                 integrate(traj.states[t_index + 1], z));

    const VectorFieldSample dz = zeta.sample_gradient(grid);
    const VectorFieldSample gf = gradient_field(fnl, u);
    const DensityField masked = u.masked(density_floor(u));
    const std::vector<double> ones(grid.size(), 1.0);
    rec.rhs_closed = -weighted_inner(masked, ones, gf, dz);

    double err = std::abs(rec.lhs - rec.rhs_closed);
    const double scale = std::max(1.0, std::abs(rec.lhs));
    if (with_fd) {
        std::vector<double> bv(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) bv[i] = fnl.weight_b(std::max(u[i], 0.0));
        rec.rhs_fd = -diff_energy_fd(fnl, u, dz.scaled(bv));
        err = std::max(err, std::abs(rec.lhs - rec.rhs_fd));
        rec.rhs_gap = std::abs(rec.rhs_closed - rec.rhs_fd) / scale;
    } else {
        rec.rhs_fd = rec.rhs_closed;
    }
    rec.residual = err / scale;
    return rec;
}

std::vector<std::size_t> probe_indices(const Trajectory& traj, int probes) {
    std::vector<std::size_t> out;
    const std::size_t n = traj.states.size();
    if (n < 3 || probes < 1) return out;
    const double t0 = traj.times.front(), t1 = traj.times.back();
    for (int p = 0; p < probes; ++p) {
        const double target = t0 + (p + 0.5) / probes * (t1 - t0);
        std::size_t best = 1;
        for (std::size_t k = 1; k + 1 < n; ++k)
            if (std::abs(traj.times[k] - target) < std::abs(traj.times[best] - target)) best = k;
        if (out.empty() || out.back() != best) out.push_back(best);
    }
    return out;
}

std::vector<TestProfile> trajectory_battery(const Trajectory& traj, int count) {
    if (traj.states.empty()) throw IndexError("empty trajectory");
    const SupportBox box = support_box({&traj.states.front(), &traj.states.back()});
    return default_battery(traj.states.front().grid(), box, count);
}

ResidualSummary gradient_flow_residuals(const Trajectory& traj, const EnergyFunctional& fnl,
                                        const std::vector<TestProfile>& battery, double tolerance, int probes,
                                        bool with_fd) {
    ResidualSummary sum;
    sum.tolerance = tolerance;
    const std::vector<std::size_t> idx = probe_indices(traj, probes);
    std::vector<double> all;
    std::size_t over = 0;
    for (std::size_t k : idx) {
        bool bad = false;
        for (std::size_t z = 0; z < battery.size(); ++z) {
            ResidualRecord r = gradient_flow_residual(traj, fnl, battery[z], k, with_fd);
            r.zeta_id = static_cast<int>(z);
            if (!std::isfinite(r.residual)) r.residual = std::numeric_limits<double>::infinity();
            all.push_back(r.residual);
            sum.max = std::max(sum.max, r.residual);
            sum.max_gap = std::max(sum.max_gap, r.rhs_gap);
            bad = bad || !(r.residual <= tolerance);
            sum.records.push_back(r);
        }
        if (bad) ++over;
    }
    sum.p90 = percentile(all, 0.9);
    sum.fraction_over = idx.empty() ? 0.0 : static_cast<double>(over) / static_cast<double>(idx.size());
    sum.pass = !idx.empty() && sum.p90 <= tolerance && sum.fraction_over <= 0.1;
    return sum;
}

LyapunovRecord lyapunov_check(const Trajectory& traj, const EnergyFunctional& fnl) {
    LyapunovRecord rec;
    for (const auto& s : traj.states) rec.energies.push_back(energy_value(fnl, s));
    if (rec.energies.empty()) return rec;
    const double scale = std::max(1.0, std::abs(rec.energies.front()));
    rec.tolerances.push_back(0.0);
    for (std::size_t k = 1; k < rec.energies.size(); ++k) {
        const double tol = 10.0 * (traj.dt_budget[k] - traj.dt_budget[k - 1]) * scale;
        rec.tolerances.push_back(tol);
        const double inc = rec.energies[k] - rec.energies[k - 1];
        rec.max_increase = std::max(rec.max_increase, inc);
        rec.max_deviation = std::max(rec.max_deviation, std::abs(rec.energies[k] - rec.energies.front()));
        if (inc > tol) ++rec.violations;
    }
    rec.pass = rec.violations == 0;
    return rec;
}

std::vector<double> dissipation_rates(const Trajectory& traj, const EnergyFunctional& fnl) {
    std::vector<double> d;
    d.reserve(traj.states.size());
    for (const auto& s : traj.states) d.push_back(gradient_norm_sq(fnl, s));
    return d;
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f, std::size_t from, std::size_t to) {
    double acc = 0.0;
    for (std::size_t k = from; k < to; ++k) acc += 0.5 * (t[k + 1] - t[k]) * (f[k] + f[k + 1]);
    return acc;
}

DissipationIdentity dissipation_identity(const std::vector<double>& times, const std::vector<double>& energies,
                                         const std::vector<double>& rates, std::size_t s_index, std::size_t t_index) {
    if (s_index > t_index || t_index >= times.size()) throw IndexError("dissipation identity: bad index range");
    DissipationIdentity out;
    out.lhs = energies[t_index] - energies[s_index];
    out.rhs = -trapezoid(times, rates, s_index, t_index);
    const double diff = std::abs(out.lhs - out.rhs);
    out.gap = std::abs(out.lhs) < 1e-14 ? diff : diff / std::abs(out.lhs);
    return out;
}

DissipationIdentity dissipation_identity(const Trajectory& traj, const EnergyFunctional& fnl, std::size_t s_index,
                                         std::size_t t_index) {
    if (s_index > t_index || t_index >= traj.states.size()) throw IndexError("dissipation identity: bad index range");
    std::vector<double> e(traj.states.size(), 0.0), d(traj.states.size(), 0.0);
    for (std::size_t k = s_index; k <= t_index; ++k) {
        e[k] = energy_value(fnl, traj.states[k]);
        d[k] = gradient_norm_sq(fnl, traj.states[k]);
    }
    return dissipation_identity(traj.times, e, d, s_index, t_index);
}

double dissipation_integral(const Trajectory& traj, const EnergyFunctional& fnl) {
    if (traj.states.size() < 2) return 0.0;
    return trapezoid(traj.times, dissipation_rates(traj, fnl), 0, traj.states.size() - 1);
}

std::vector<DifferentialProbe> differential_identity(const EnergyFunctional& fnl, const DensityField& field,
                                                     int count, unsigned long long seed, double tau) {
    const Grid& grid = field.grid();
    const SupportBox box = support_box({&field});
    const std::vector<TestProfile> battery = default_battery(grid, box, 8);
    std::vector<std::vector<double>> samples;
    for (const auto& z : battery) samples.push_back(z.sample(grid));

    const DensityField masked = field.masked(density_floor(field));
    const std::vector<double> w = metric_weight(fnl, masked);
    const VectorFieldSample gf = gradient_field(fnl, field);
    const double gf_norm = std::sqrt(std::max(weighted_inner(masked, w, gf, gf), 0.0));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::vector<DifferentialProbe> out;
    for (int k = 0; k < count; ++k) {
        VectorFieldSample phi(grid);
        for (int axis = 0; axis < grid.dim(); ++axis) {
            auto comp = phi.component(axis);
            for (const auto& s : samples) {
                const double c = coef(rng);
                for (std::size_t i = 0; i < grid.size(); ++i) comp[i] += c * s[i];
            }
        }
        const double step = tau > 0.0 ? tau : 0.05 * grid.max_spacing() / (1.0 + phi.sup_norm());
        DifferentialProbe p;
        p.closed = weighted_inner(masked, w, gf, phi);
        p.fd = diff_energy_fd(fnl, field, phi, step);
        // The finite-difference error does not vanish with grad E, hence max(1, .).
        const double phi_norm = std::sqrt(std::max(weighted_inner(masked, w, phi, phi), 0.0));
        p.scale = phi_norm * std::max(1.0, gf_norm);
        p.rel_error = p.scale > 0.0 ? std::abs(p.fd - p.closed) / p.scale : std::abs(p.fd - p.closed);
        out.push_back(p);
    }
    return out;
}

LadderRecord g_membership_ladder(const Trajectory& traj, const EnergyFunctional& fnl, const std::vector<int>& counts,
                                 int samples) {
    if (fnl.mode() == EnergyFunctional::Mode::classical_pme)
        throw UnsupportedModelError("projection ladder is defined for the general and diagonal modes");
    LadderRecord rec;
    const std::size_t n = traj.states.size();
    if (n == 0 || counts.empty()) return rec;
    const int max_count = *std::max_element(counts.begin(), counts.end());
    std::vector<std::size_t> picks;
    for (int s = 0; s < samples; ++s) {
        const std::size_t k = samples == 1 ? n - 1 : (n - 1) * static_cast<std::size_t>(s) /
                                                           static_cast<std::size_t>(samples - 1);
        if (picks.empty() || picks.back() != k) picks.push_back(k);
    }
    for (std::size_t k : picks) {
        const DensityField& u = traj.states[k];
        LadderRow row;
        row.t = traj.times[k];
        row.t_index = k;
        const SupportBox box = support_box({&u});
        const std::vector<TestProfile> gens = generator_ladder(u.grid(), box, max_count);
        const VectorFieldSample target = gradient_field(fnl, u);
        const DensityField masked = u.masked(density_floor(u));
        for (int c : counts) {
            std::vector<TestProfile> sub(gens.begin(), gens.begin() + std::min<std::size_t>(c, gens.size()));
            const GradientSubspaceBasis basis(masked, fnl.mode() == EnergyFunctional::Mode::classical_pme
                                                          ? ScalarLaw::constant(1.0)
                                                          : fnl.b(),
                                              sub);
            const Projection p = project_onto_G(basis, target);
            row.counts.push_back(c);
            row.residuals.push_back(p.residual_norm);
            row.target_norm = p.target_norm;
        }
        for (std::size_t j = 1; j < row.residuals.size(); ++j)
            if (row.residuals[j] > row.residuals[j - 1] + 1e-10 * row.target_norm) row.monotone = false;
        rec.monotone = rec.monotone && row.monotone;
        rec.rows.push_back(row);
    }
    return rec;
}

}  // namespace pflow
