#pragma once

#include <vector>

#include "isac/geometry.hpp"
#include "isac/scenario.hpp"

namespace isac {

/// Per-slot transmit covariances: W[n][m][k] are the information covariances,
/// R[n][m] the dedicated sensing covariances. All blocks Hermitian PSD.
struct BeamformingSolution {
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> W;  // [n][m][k]
    std::vector<std::vector<Eigen::MatrixXcd>> R;               // [n][m]
    std::vector<std::vector<std::vector<bool>>> rank1;          // [n][m][k]

    static BeamformingSolution zeros(int n_slots, int n_gbs, int n_uavs, int n_antennas);

    int num_slots() const { return static_cast<int>(W.size()); }
    int num_gbs() const { return W.empty() ? 0 : static_cast<int>(W[0].size()); }
    int num_uavs() const {
        return (W.empty() || W[0].empty()) ? 0 : static_cast<int>(W[0][0].size());
    }

    /// Full PSD / power / rank-one checks against the stated tolerances.
    /// Throws std::invalid_argument naming the violated invariant.
    void validate(double p_max) const;
};

/// One serving GBS per (UAV, slot).
struct Association {
    Eigen::MatrixXi gbs_of;  // (K x N)

    int serving(int k, int n) const { return gbs_of(k, n); }
};

/// Per-slot horizontal UAV positions plus fixed altitudes.
struct TrajectoryPlan {
    std::vector<std::vector<Eigen::Vector2d>> q;  // [k][n]
    std::vector<double> altitudes;                // [k]

    int num_uavs() const { return static_cast<int>(q.size()); }
    int num_slots() const { return q.empty() ? 0 : static_cast<int>(q[0].size()); }

    AirPoint point(int k, int n) const { return AirPoint{q[k][n], altitudes[k]}; }

    /// Endpoint / speed / separation checks (1e-6 m tolerances).
    void validate(const Scenario& scenario) const;
};

/// Channel outers H[n][l][k] = h h^H for GBS l -> UAV k at slot n, plus the
/// underlying vectors. Built once per trajectory; all evaluations below use it.
struct ChannelSet {
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> h;  // [n][l][k]
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> H;  // [n][l][k]

    static ChannelSet build(const Scenario& scenario, const TrajectoryPlan& traj);
};

/// Steering vectors and squared distances from each GBS to each sensing
/// sample. Sensing points are time-invariant, so this is slot-independent.
struct SensingGeometry {
    std::vector<std::vector<Eigen::VectorXcd>> a;  // [l][q]
    std::vector<std::vector<double>> d2;           // [l][q]

    static SensingGeometry build(const Scenario& scenario);
};

/// SINR of UAV k served by GBS m at one slot. H_per_gbs holds the channel
/// outers from every GBS toward UAV k; interference from GBS l is evaluated
/// with that GBS's own outer. Type-II receivers cancel the R terms.
double sinr(Receiver receiver, const std::vector<Eigen::MatrixXcd>& H_per_gbs, int serving_m,
            int k, const BeamformingSolution& beams, int n, double sigma2);

double rate(Receiver receiver, const std::vector<Eigen::MatrixXcd>& H_per_gbs, int serving_m,
            int k, const BeamformingSolution& beams, int n, double sigma2);

struct SumRate {
    double total = 0.0;
    Eigen::VectorXd per_slot;                 // [n]
    Eigen::MatrixXd per_uav_slot;             // (K x N) individual rates
};

/// Sum over slots and UAVs of the associated-pair rates (Eq of the objective).
/// Slots are evaluated through the parallel kernel; the reduction is ordered,
/// so results are bitwise identical for any thread count.
SumRate sum_rate(Receiver receiver, const Association& assoc, const BeamformingSolution& beams,
                 const TrajectoryPlan& traj, const Scenario& scenario);

/// Serial reference for sum_rate, kept for testing the parallel kernel.
SumRate sum_rate_serial(Receiver receiver, const Association& assoc,
                        const BeamformingSolution& beams, const TrajectoryPlan& traj,
                        const Scenario& scenario);

/// Received sensing power at sample q_idx for slot n:
/// sum_l a_l^H (sum_i W_{l,i} + R_l) a_l / d_{l,q}^2.
double illumination_power(int q_idx, const BeamformingSolution& beams, int n,
                          const Scenario& scenario, const SensingGeometry& sensing);

/// All samples x slots illumination matrix (Q x N).
Eigen::MatrixXd illumination_table(const BeamformingSolution& beams, const Scenario& scenario);

}  // namespace isac
