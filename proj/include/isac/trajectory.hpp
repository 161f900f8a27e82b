#pragma once

#include <vector>

#include "isac/conic.hpp"
#include "isac/signal_model.hpp"

namespace isac {

/// Quadratic form a(q)^H M a(q) written out through the entries of M: trace
/// plus phase-shifted cosine terms. Serves both the information (eta) and
/// sensing (mu) covariances.
double eta_mu(Orientation orientation, const Eigen::MatrixXcd& M, const GbsSite& gbs,
              const Eigen::Vector2d& q, double altitude, double spacing_over_wavelength);

/// Closed-form gradient of eta_mu with respect to the horizontal position.
Eigen::Vector2d eta_mu_gradient(Orientation orientation, const Eigen::MatrixXcd& M,
                                const GbsSite& gbs, const Eigen::Vector2d& q, double altitude,
                                double spacing_over_wavelength);

/// Rate of UAV k served by GBS m evaluated through the eta/mu decomposition;
/// algebraically equal to the signal-model rate for the same inputs.
double rate_via_eta_mu(const Scenario& scenario, const BeamformingSolution& beams, int n,
                       int serving_m, int k, const Eigen::Vector2d& q);

/// First-order expansion of one pair's rate around the local UAV position.
struct TrajLinearization {
    int m = 0;
    int k = 0;
    int n = 0;
    double c = 0.0;       // rate at the local point
    Eigen::Vector2d d{0.0, 0.0};  // gradient at the local point
    double g = 0.0;       // total received-power sum at the local point (> 0)
    double h = 0.0;       // interference power sum at the local point (> 0)
};

/// Expansion coefficients for every (UAV, slot) pair under the association.
std::vector<TrajLinearization> traj_taylor_coeffs(const Scenario& scenario,
                                                  const BeamformingSolution& beams,
                                                  const Association& assoc,
                                                  const TrajectoryPlan& local);

/// Linearized collision-avoidance constraint
///   normal . (q_k - q_i) >= rhs,
/// an inner approximation of the true separation constraint. vacuous marks
/// pairs whose altitude gap alone guarantees separation.
struct CollisionConstraint {
    Eigen::Vector2d normal{0.0, 0.0};
    double rhs = 0.0;
    bool vacuous = false;
    bool infeasible_at_local = false;
};

CollisionConstraint linearize_collision(const Eigen::Vector2d& q_k_local,
                                        const Eigen::Vector2d& q_i_local, double H_k, double H_i,
                                        double d_min);

/// Trust-region subproblem over per-slot displacement variables: linear
/// objective, endpoint equalities, speed and trust-region cones, linearized
/// collisions.
conic::ConicProblem assemble_traj_subproblem(const Scenario& scenario,
                                             const std::vector<TrajLinearization>& lins,
                                             const TrajectoryPlan& local, double omega);

struct TrajectoryResult {
    TrajectoryPlan plan;
    std::vector<double> history;  // accepted true objective per iteration
    int conic_failures = 0;
    bool warning = false;  // a conic failure ended the loop early
};

/// Trust-region SCA: solve the linearized subproblem, evaluate the true sum
/// rate, accept improvements, halve the radius otherwise; stops below xi.
TrajectoryResult optimize_trajectory(const Scenario& scenario, const BeamformingSolution& beams,
                                     const Association& assoc, const TrajectoryPlan& local);

}  // namespace isac
