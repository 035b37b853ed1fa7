#pragma once

// Entropy/energy functionals E(v dx) = int eta(v) dx + int Phi v dx with
// eta'' = g' = beta' / (r b) (general), Psi / r (diagonal matrix case) or the
// classical porous-medium choice, together with their measure-space gradients
// and stationary states.

#include <memory>
#include <string>
#include <vector>

#include "pflow/grid.hpp"
#include "pflow/laws.hpp"

namespace pflow {

/// Monotone table of g on log-spaced nodes, cubic Hermite in s = log r with the
/// exact slopes kappa(r) = r g'(r). Built once per functional.
class GTable {
public:
    GTable() = default;
    GTable(std::vector<double> log_nodes, std::vector<double> values, std::vector<double> slopes,
           std::vector<double> node_error);

    [[nodiscard]] bool empty() const noexcept { return s_.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return s_.size(); }
    [[nodiscard]] double r_min() const noexcept;
    [[nodiscard]] double r_max() const noexcept;
    [[nodiscard]] double g_min() const noexcept { return g_.front(); }
    [[nodiscard]] double g_max() const noexcept { return g_.back(); }
    /// Interpolated g at r in [r_min, r_max].
    [[nodiscard]] double eval(double r) const noexcept;
    /// Index k with g_k <= y <= g_{k+1}; requires g_min <= y <= g_max.
    [[nodiscard]] std::size_t bracket(double y) const noexcept;
    [[nodiscard]] double node_r(std::size_t k) const noexcept;
    [[nodiscard]] double node_g(std::size_t k) const noexcept { return g_[k]; }
    [[nodiscard]] double max_node_error() const noexcept;
    /// g strictly increasing over the nodes.
    [[nodiscard]] bool strictly_increasing() const noexcept;

private:
    std::vector<double> s_;
    std::vector<double> g_;
    std::vector<double> slope_;
    std::vector<double> err_;
};

class EnergyFunctional {
public:
    enum class Mode { classical_pme, general, matrix_diagonal };

    /// E(u dx) = (int u^m dx - m) / (m - 1).
    static EnergyFunctional classical(double m);
    /// eta(r) = int_0^r int_1^s beta'(w) / (w b(w)) dw ds, plus int Phi v.
    static EnergyFunctional general(ScalarLaw beta, ScalarLaw b, Potential phi);
    /// B = b_diag Id, B^{-1} A = Psi Id; eta(r) = int_0^r int_1^s Psi(w) / w dw ds.
    static EnergyFunctional matrix_diagonal(ScalarLaw psi, ScalarLaw b_diag, Potential phi);

    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] double m() const noexcept { return m_; }
    /// Diffusivity beta (classical: power(m); matrix: the scalar law Psi).
    [[nodiscard]] const ScalarLaw& beta() const noexcept { return beta_; }
    /// Mobility weight b (classical: const 1; matrix: b_diag).
    [[nodiscard]] const ScalarLaw& b() const noexcept { return b_; }
    [[nodiscard]] const Potential& phi() const noexcept { return phi_; }
    [[nodiscard]] std::string describe() const;

    /// kappa(r) = r g'(r): beta'/b, Psi, or m r^{m-1}.
    [[nodiscard]] double rate(double r) const noexcept;
    [[nodiscard]] double eta(double r) const;
    [[nodiscard]] double g(double r) const;
    [[nodiscard]] double g_derivative(double r) const;
    [[nodiscard]] double g_inverse(double y) const;
    /// g through the closed form when one exists, else through the table
    /// (linear in log r below it). Used inside time stepping.
    [[nodiscard]] double g_fast(double r) const;
    [[nodiscard]] bool has_closed_form_g() const noexcept;
    [[nodiscard]] const GTable& table() const noexcept { return *table_; }

    /// Pointwise weight b(v) of the metric tensor (1 for the classical mode).
    [[nodiscard]] double weight_b(double v) const noexcept;

private:
    EnergyFunctional(Mode mode, double m, ScalarLaw beta, ScalarLaw b, Potential phi);
    double cumulative_rate(double r) const;  // int_0^r kappa(s) ds
    void build_table();

    Mode mode_;
    double m_;
    ScalarLaw beta_;
    ScalarLaw b_;
    Potential phi_;
    std::shared_ptr<const GTable> table_;
};

/// Stationary state u_inf = g^{-1}(-Phi + c) with unit mass.
struct StationaryState {
    double c;
    DensityField density;
};

enum class GradientForm {
    product,   // b(v) grad(g(v) + Phi); classical m/(m-1) grad(v^{m-1})
    quotient,  // grad(beta(v))/v - b(v) D; classical grad(v^m)/v
};

struct MembershipReport {
    std::string domain;          // "D_nice" (classical) or "D0" (general / matrix)
    double sup_v = 0.0;
    double gradient_surrogate = 0.0;  // int |grad(v^m)/v|^2 v  or  int |grad v / v|^2 v
    double entropy_surrogate = 0.0;   // int |v log v|
    double w11_surrogate = 0.0;       // int |grad v^m| (classical) or int |grad v|
    double refinement_exponent = 0.0; // slope of log(gradient surrogate) vs log h
    bool finite = true;
    bool member = true;
    std::string note;
};

/// Density floor below which cells are nu-null.
[[nodiscard]] double density_floor(const DensityField& field) noexcept;

[[nodiscard]] double energy_value(const EnergyFunctional& fnl, const DensityField& field);

[[nodiscard]] MembershipReport membership(const EnergyFunctional& fnl, const DensityField& field);

/// The (weighted) measure-space gradient of E at field, sampled on the grid.
/// Sub-floor cells carry the product form with g clamped at g(floor).
[[nodiscard]] VectorFieldSample gradient_field(const EnergyFunctional& fnl, const DensityField& field,
                                               GradientForm form = GradientForm::product);

/// Pointwise weight alpha = 1/b(v) of the metric tensor.
[[nodiscard]] std::vector<double> metric_weight(const EnergyFunctional& fnl, const DensityField& field);

/// |grad_b E|^2_{b, nu} with sub-floor cells masked.
[[nodiscard]] double gradient_norm_sq(const EnergyFunctional& fnl, const DensityField& field);

[[nodiscard]] StationaryState stationary_state(const EnergyFunctional& fnl, const Grid& grid);

}  // namespace pflow
