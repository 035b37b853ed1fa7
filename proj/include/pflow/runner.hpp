#pragma once

// Scenario driver behind the command-line tool: runs a configured flow, applies
// the enabled checks and writes the CSV artifacts.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pflow/config.hpp"
#include "pflow/verify.hpp"

namespace pflow {

struct CheckRow {
    std::string check;
    std::string status;  // pass | fail | info
    double tolerance = 0.0;
    double value = 0.0;
    std::string anchor;
};

struct RunReport {
    Trajectory traj;
    std::vector<double> energies;
    std::vector<double> rates;
    std::vector<ResidualRecord> residuals;
    std::optional<LadderRecord> ladder;
    std::vector<CheckRow> checks;
    std::string error;  // set when the run aborted
    bool pass = false;

    [[nodiscard]] const CheckRow* find(const std::string& check) const;
};

/// Integrates and checks one configuration. Library errors raised during the
/// run are caught and reported as a failed "run" row.
[[nodiscard]] RunReport run_scenario(const RunConfig& cfg, int refine = 1);

/// trajectory.csv, residuals.csv, summary.csv and, when present, ladder.csv.
void write_run_artifacts(const RunConfig& cfg, const RunReport& report, const std::filesystem::path& dir);

struct RefinementRow {
    int factor = 1;
    double h = 0.0;
    double gf_p90 = 0.0;
    double gf_max = 0.0;
    double dissipation_gap = 0.0;
    double dissipation_integral = 0.0;
    double analytic_l1 = -1.0;  // negative when no closed-form solution applies
};

struct RefinementStudy {
    std::vector<RefinementRow> rows;
    double gf_order = 0.0;
    double analytic_order = 0.0;
};

[[nodiscard]] RefinementStudy refinement_study(const RunConfig& cfg);
void write_refinement_csv(const RefinementStudy& study, const std::filesystem::path& file);

/// L1 distance to the closed-form solution at t1, or nullopt if none applies
/// (classical mode from a Barenblatt start; heat mode without drift from a
/// Gaussian start).
[[nodiscard]] std::optional<double> analytic_error(const RunConfig& cfg, const DensityField& final_state);

/// Command entry points; return the process exit code.
int cmd_run(const RunConfig& cfg, std::ostream& log);
int cmd_validate(const RunConfig& cfg, std::ostream& log);
int cmd_ladder(const RunConfig& cfg, std::ostream& log);

}  // namespace pflow
