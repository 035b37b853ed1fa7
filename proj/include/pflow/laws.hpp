#pragma once

// Closed-form model ingredients: the diffusivity beta, the drift nonlinearity
// b, the confining potential Phi, and sampled checks of the standing
// hypotheses on them.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pflow/grid.hpp"

namespace pflow {

class ScalarLaw {
public:
    enum class Kind { power, linear, linear_plus_power, constant, bounded_rational };

    /// r -> |r|^{m-1} r
    static ScalarLaw power(double m);
    /// r -> sigma r
    static ScalarLaw linear(double sigma);
    /// r -> gamma r + |r|^{m-1} r
    static ScalarLaw linear_plus_power(double gamma, double m);
    /// r -> c
    static ScalarLaw constant(double c);
    /// r -> b0 + c / (1 + r^2)
    static ScalarLaw bounded_rational(double b0, double c);

    /// Parses the preset syntax, e.g. "power:m=2.0" or "bounded_rational:b0=1,c=1".
    static ScalarLaw parse(std::string_view text);

    [[nodiscard]] double evaluate(double r) const noexcept;
    [[nodiscard]] double derivative(double r) const noexcept;

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double p1() const noexcept { return p1_; }
    [[nodiscard]] double p2() const noexcept { return p2_; }
    [[nodiscard]] std::string to_string() const;

    bool operator==(const ScalarLaw&) const = default;

private:
    ScalarLaw(Kind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {}
    Kind kind_;
    double p1_;
    double p2_;
};

class Potential {
public:
    enum class Kind { none, quadratic, quartic_well };

    static Potential none();
    /// offset + a |x|^2
    static Potential quadratic(double a, double offset);
    /// offset + a |x|^4
    static Potential quartic_well(double a, double offset);

    /// "none", "quadratic:a=0.5,offset=1.0", "quartic:a=0.1,offset=1.0"
    static Potential parse(std::string_view text);

    [[nodiscard]] double value(const Point& x, int dim) const noexcept;
    [[nodiscard]] Point gradient(const Point& x, int dim) const noexcept;
    /// D = -grad Phi
    [[nodiscard]] Point drift(const Point& x, int dim) const noexcept;
    [[nodiscard]] double laplacian(const Point& x, int dim) const noexcept;

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] double offset() const noexcept { return offset_; }
    [[nodiscard]] bool confining() const noexcept { return kind_ != Kind::none && a_ > 0.0; }
    [[nodiscard]] Potential with_offset(double offset) const { return Potential(kind_, a_, offset); }
    [[nodiscard]] std::string to_string() const;

    /// Phi sampled at cell centres.
    [[nodiscard]] std::vector<double> sample(const Grid& grid) const;

    bool operator==(const Potential&) const = default;

private:
    Potential(Kind kind, double a, double offset) : kind_(kind), a_(a), offset_(offset) {}
    Kind kind_;
    double a_;
    double offset_;
};

enum class BetaVariant { i, i_prime };

struct ClauseResult {
    std::string clause;  // "(i)", "(i)'", "(ii)", ...
    bool pass = false;
    bool domain_only = false;  // verified on the truncated domain only
    std::string note;
};

struct HypothesisReport {
    double gamma = 0.0;           // min beta' over the probe set
    double gamma1 = 0.0;          // max beta' over the probe set
    double gamma1_on_range = 0.0; // max beta' over the realized density range
    double b0 = 0.0;              // min b
    double b_sup = 0.0;           // max b
    double grad_phi_sup = 0.0;    // sup |grad Phi| on the domain
    double div_drift_neg_sup = 0.0;  // sup (div D)^- on the domain
    double div_drift_abs_sup = 0.0;
    double phi_min = 0.0;
    double phi_neg_power_integral = 0.0;  // int Phi^{-2} dx on the domain
    std::vector<ClauseResult> clauses;
    /// Clauses needed for the gradient-flow identity hold: the selected beta
    /// variant, (ii) and (iii) (Hypothesis 2 reports H2(i), H2(ii)).
    bool required_pass = false;

    [[nodiscard]] const ClauseResult* find(std::string_view clause) const;
    [[nodiscard]] bool passes(std::string_view clause) const;
};

/// Sampled check of Hypothesis 1 for (beta, b, Phi). Probe set is a log-spaced
/// range [1e-6, 1e6] plus r = 0 and, if given, the realized density range.
[[nodiscard]] HypothesisReport validate_hypothesis1(const ScalarLaw& beta, const ScalarLaw& b, const Potential& phi,
                                                    BetaVariant variant, const Grid& domain,
                                                    std::optional<std::pair<double, double>> density_range = {});

/// Sampled check of the scalar/diagonal reduction of Hypothesis 2:
/// c0 <= Psi <= c1, b_diag bounded with b_diag >= b0 > 0, drift as in (iii).
[[nodiscard]] HypothesisReport validate_hypothesis2(const ScalarLaw& psi, const ScalarLaw& b_diag,
                                                    const Potential& phi, const Grid& domain);

/// gamma1 * Laplacian(Phi) - b0 |grad Phi|^2 at every cell centre.
[[nodiscard]] std::vector<double> balance_map(double gamma1, double b0, const Potential& phi, const Grid& grid);

/// True iff the balance map is <= 1e-12 everywhere.
[[nodiscard]] bool validate_balance_condition(std::pair<double, double> beta_bounds, double b0,
                                              const Potential& phi, const Grid& grid);

/// Log-spaced probe points used by the validators.
[[nodiscard]] std::vector<double> log_probe(double lo, double hi, int count);

}  // namespace pflow
