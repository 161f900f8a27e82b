#pragma once

#include <vector>

#include "isac/conic.hpp"
#include "isac/signal_model.hpp"

namespace isac {

/// First-order rate surrogate around a local beamforming point for one served
/// (GBS m, UAV k) pair at one slot. All channel quantities are held
/// sigma2-normalized so the conic subproblems see noise power 1.
struct RateLinearization {
    int m = 0;
    int k = 0;
    Receiver receiver = Receiver::TypeI;
    Orientation orientation = Orientation::Horizontal;

    double a0 = 0.0;       // log2 of the local interference-plus-noise term
    double total0 = 0.0;   // local total received power plus noise (normalized)
    double interf0 = 0.0;  // local interference plus noise (normalized)
    std::vector<Eigen::MatrixXcd> B;   // per-GBS slope matrices (log2 e / interf0) Hn_l
    std::vector<Eigen::MatrixXcd> Hn;  // per-GBS normalized channel outers toward UAV k
};

/// Coefficients of the concave lower bound on the rate of pair (m, k) at slot
/// n around the given local point. Type-II drops every R term.
RateLinearization rate_lower_bound_coeffs(Receiver receiver, Orientation orientation,
                                          const std::vector<Eigen::MatrixXcd>& H_per_gbs,
                                          int serving_m, int k, const BeamformingSolution& local,
                                          int n, double sigma2);

/// Value of the lower bound at an arbitrary feasible point (slot slice).
double rate_lower_bound_value(const RateLinearization& lin, const BeamformingSolution& local,
                              const BeamformingSolution& point, int n);

/// Per-slot SDR subproblem: linear objective (the leading log is linearized at
/// the local point), per-GBS power rows, per-sample illumination rows, and one
/// embedded PSD block per covariance. Gamma == 0 drops the illumination rows.
conic::ConicProblem assemble_beamforming_sdr(const Scenario& scenario,
                                             const SensingGeometry& sensing,
                                             const std::vector<RateLinearization>& lins,
                                             const BeamformingSolution& local, int n);

/// Slot slice of covariances used by reconstruction.
struct BeamSlot {
    std::vector<std::vector<Eigen::MatrixXcd>> W;  // [m][k]
    std::vector<Eigen::MatrixXcd> R;               // [m]
    std::vector<std::vector<bool>> rank1;          // [m][k]
};

/// Extracts the covariances of one solved SDR subproblem.
BeamSlot extract_beam_slot(const conic::ConicProblem& p, const conic::ConicSolution& sol, int M,
                           int K);

/// Rank-one reconstruction of an SDR optimum: each information covariance is
/// replaced by the matched rank-one beam, the removed remainder is folded into
/// the sensing covariance. Per-GBS covariance sums are preserved exactly, so
/// power and illumination are too. channels[l][i] is GBS l's channel to UAV i.
BeamSlot rank_one_reconstruct(const BeamSlot& star,
                              const std::vector<std::vector<Eigen::VectorXcd>>& channels);

/// Aggregates of the runtime tightness checks over every solved subproblem.
struct ReconstructionStats {
    int solves = 0;
    double max_objective_change = 0.0;  // relative surrogate-objective change
    double max_power_change = 0.0;      // relative per-GBS power change
    double max_illum_change = 0.0;      // relative per-sample illumination change
    double max_eig_ratio = 0.0;         // lambda2 / lambda1 over reconstructed W

    void merge(const ReconstructionStats& other);
};

struct BeamformingResult {
    BeamformingSolution beams;
    std::vector<double> history;  // true objective per SCA iteration, entry 0 = start
    ReconstructionStats stats;
    int conic_failures = 0;
};

/// SCA loop: linearize -> assemble -> solve -> reconstruct -> accept.
/// A candidate is accepted only if the true slot objective did not decrease;
/// otherwise the step is halved toward the previous point. Slot subproblems
/// are dispatched through the parallel kernel.
BeamformingResult optimize_beamforming(const Scenario& scenario, const TrajectoryPlan& traj,
                                       const Association& assoc, const BeamformingSolution& init);

/// Serial reference of the same loop, kept for testing the parallel dispatch.
BeamformingResult optimize_beamforming_serial(const Scenario& scenario,
                                              const TrajectoryPlan& traj,
                                              const Association& assoc,
                                              const BeamformingSolution& init);

/// Max-min illumination over sensing covariances at full power; the returned
/// value is the largest Gamma any transmit strategy can support.
struct MaxMinIllumination {
    std::vector<Eigen::MatrixXcd> R;  // per-GBS covariances attaining the optimum
    double value = 0.0;
};
MaxMinIllumination solve_maxmin_illumination(const Scenario& scenario,
                                             const SensingGeometry& sensing);

/// Closed-form max-min illumination under isotropic transmission.
double maxmin_illumination_isotropic(const Scenario& scenario, const SensingGeometry& sensing);

/// Isotropic benchmark: covariances restricted to scaled identities; the SCA
/// machinery collapses to per-slot linear programs over nonnegative powers.
struct IsotropicPowers {
    std::vector<std::vector<std::vector<double>>> comm;  // [n][l][i]
    std::vector<std::vector<double>> sense;              // [n][l]
};

BeamformingSolution materialize_isotropic(const IsotropicPowers& powers, int n_antennas);

struct IsotropicResult {
    IsotropicPowers powers;
    BeamformingSolution beams;
    std::vector<double> history;
    int conic_failures = 0;
};

IsotropicResult optimize_power_allocation(const Scenario& scenario, const TrajectoryPlan& traj,
                                          const Association& assoc, const IsotropicPowers& init);

}  // namespace isac
