#pragma once

// INI-style run configuration:
//
//   [model]   mode = general | classical | matrix_diagonal, beta, b, potential,
//             m (classical), psi, b_diag (matrix_diagonal), beta_variant = i | i_prime
//   [grid]    dim, lower, upper (comma separated in 2D), cells
//   [time]    t0, t1, scheme, cfl_safety, store_every, max_dt
//   [init]    profile = gaussian:mean=..,sigma=.. | barenblatt:m=..,t0=.. | gibbs | spike | file:path
//   [verify]  see VerifyConfig
//   [output]  dir, csv_stride
//
// A top-level `scenario = name` line loads a shipped preset first; the rest of
// the file then overrides single keys.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pflow/energy.hpp"
#include "pflow/grid.hpp"
#include "pflow/laws.hpp"
#include "pflow/solver.hpp"

namespace pflow {

struct VerifyConfig {
    int battery = 8;
    int probes = 20;
    bool gradient_flow = true;
    bool fd_oracle = true;
    double gf_tolerance = 5e-3;
    bool lyapunov = true;
    bool energy_constant = false;  // stationary runs: |E(t) - E(0)| <= 1e-10
    bool dissipation = true;
    bool stationary = false;       // compare u(t1) with u_inf
    double stationary_l1 = 1e-3;
    bool analytic = true;          // compare with the closed-form solution when one exists
    bool differential = true;      // pushforward differential vs closed-form pairing at t1/2
    double differential_tolerance = 1e-3;
    bool ladder = false;
    std::vector<int> ladder_counts{4, 8, 16, 32};
    int ladder_samples = 5;
    bool refinement_ladder = false;
    std::vector<int> refinement_factors{1, 2, 4};
    unsigned long long seed = 0;
};

struct RunConfig {
    std::string scenario;  // preset name, empty for ad-hoc configs
    std::string mode = "general";
    std::string beta = "linear:sigma=1";
    std::string b = "const:c=1";
    std::string potential = "none";
    double m = 2.0;
    std::string psi = "const:c=1";
    std::string b_diag = "const:c=1";
    BetaVariant beta_variant = BetaVariant::i;

    int dim = 1;
    Point lower{-1.0, -1.0};
    Point upper{1.0, 1.0};
    std::array<int, 2> cells{64, 1};

    SolverConfig time;
    std::string init = "gaussian:mean=0,sigma=1";
    std::filesystem::path base_dir;  // for relative file: paths
    VerifyConfig verify;
    std::string output_dir = "out";
    int csv_stride = 1;
};

/// Parses configuration text. ParseError carries line and column.
[[nodiscard]] RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});

/// Loads a file, or a shipped preset when `path_or_name` names one.
[[nodiscard]] RunConfig load_config(const std::string& path_or_name);

[[nodiscard]] std::filesystem::path scenario_dir();
[[nodiscard]] std::vector<std::string> scenario_names();

/// Parsed [init] profile: kind plus numeric parameters, or a path for file:.
struct InitSpec {
    std::string kind;
    std::map<std::string, double> params;
    std::string path;

    [[nodiscard]] double get(const std::string& key, double fallback) const;
};

[[nodiscard]] InitSpec parse_init(const std::string& text);

[[nodiscard]] EnergyFunctional make_energy(const RunConfig& cfg);
/// Grid with every cell count multiplied by `refine`.
[[nodiscard]] Grid make_grid(const RunConfig& cfg, int refine = 1);
[[nodiscard]] DensityField make_initial(const RunConfig& cfg, const Grid& grid);

}  // namespace pflow
