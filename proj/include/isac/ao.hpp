#pragma once

#include <vector>

#include "isac/beamforming.hpp"
#include "isac/signal_model.hpp"
#include "isac/trajectory.hpp"

namespace isac {

enum class BenchmarkKind { None, StraightFlight, Isotropic };

/// Rate of every (GBS, UAV, slot) triple under the given beams and
/// trajectory; rates[m](k, n) is the rate UAV k would get from GBS m.
std::vector<Eigen::MatrixXd> compute_rate_tensor(const Scenario& scenario,
                                                 const BeamformingSolution& beams,
                                                 const TrajectoryPlan& traj);

/// Per-(UAV, slot) argmax over GBSs; ties go to the lowest GBS index.
Association optimize_association(const std::vector<Eigen::MatrixXd>& rates);

/// Uniform interpolation from the initial to the final location. Endpoints
/// are met exactly; steps are constant.
TrajectoryPlan straight_flight(const Scenario& scenario);

struct Initialization {
    TrajectoryPlan traj;
    BeamformingSolution beams;
    Association assoc;
    double maxmin_illumination = 0.0;  // largest supportable Gamma
};

/// Straight-flight trajectory, feasibility-driven beams (max-min illumination
/// sensing covariances scaled to meet Gamma, remaining power on matched
/// rank-one beams), association from the resulting rates.
/// Throws InfeasibleScenario when Gamma exceeds the max-min optimum.
Initialization initialize(const Scenario& scenario);

struct StageTimings {
    double association_s = 0.0;
    double beamforming_s = 0.0;
    double trajectory_s = 0.0;
    double total_s = 0.0;
};

struct SolveReport {
    CaseSpec case_spec;
    BenchmarkKind benchmark = BenchmarkKind::None;
    double gamma = 0.0;

    BeamformingSolution beams;
    TrajectoryPlan traj;
    Association assoc;

    std::vector<double> ao_history;                  // objective per AO round
    std::vector<std::vector<double>> bf_histories;   // per round
    std::vector<std::vector<double>> traj_histories; // per round
    ReconstructionStats recon_stats;
    int conic_failures = 0;

    SumRate rates;
    Eigen::MatrixXd illumination;  // (Q x N)
    double min_illumination = 0.0;
    double max_gbs_power = 0.0;
    StageTimings timings;
};

/// Alternating optimization: association -> beamforming -> trajectory per
/// round, each stage warm-started, until the round gain drops below ao_tol.
SolveReport solve(const Scenario& scenario);

/// straight: trajectory frozen to straight flight, association+beamforming
/// optimized as in solve. isotropic: covariances restricted to scaled
/// identities with power scalars optimized; trajectory and association as in
/// solve.
SolveReport run_benchmark(BenchmarkKind kind, const Scenario& scenario);

}  // namespace isac
