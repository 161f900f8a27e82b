#pragma once

#include <string>
#include <vector>

#include "isac/ao.hpp"

namespace isac {

struct RunArtifacts {
    std::string dir;
    std::string report_json;
    std::string rates_csv;
    std::string trajectory_csv;
    std::string illumination_csv;
    std::string association_csv;
    std::vector<std::string> plots;
};

/// Illumination sampled at cell centers of an (ny x nx) grid over the box, at
/// the given altitude and slot. Row i corresponds to the i-th y cell.
Eigen::MatrixXd illumination_heatmap(const Scenario& scenario, const BeamformingSolution& beams,
                                     int slot, const Eigen::Vector2d& lo,
                                     const Eigen::Vector2d& hi, double altitude, int nx, int ny);

/// Serializes a report: report.json plus the documented CSV set; SVG plots
/// when emit_plots is set. Deterministic for fixed inputs.
RunArtifacts write_artifacts(const SolveReport& report, const Scenario& scenario,
                             const std::string& out_dir, bool emit_plots);

/// Illumination heatmap + trajectory overlay SVGs for one report.
std::vector<std::string> render_plots(const SolveReport& report, const Scenario& scenario,
                                      const std::string& out_dir);

struct SweepPoint {
    double gamma = 0.0;  // linear
    bool feasible = false;
    double objective = 0.0;     // total over slots
    double avg_sum_rate = 0.0;  // objective / N
    std::string dir;
};

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path);
void render_rate_curve(const std::vector<SweepPoint>& points, const std::string& path);

namespace cli {
/// Command-line entry point. Returns the process exit code:
/// 0 success, 2 infeasible scenario, 1 any other error.
int run(const std::vector<std::string>& args);
}  // namespace cli

}  // namespace isac
