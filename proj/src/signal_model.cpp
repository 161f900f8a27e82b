#include "isac/signal_model.hpp"

#include <cmath>
#include <stdexcept>

#include "isac/parallel.hpp"

namespace isac {

namespace {

double real_trace_product(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    return (A.array() * B.array().transpose()).sum().real();
}

// Cheap model-violation guard: for Hermitian PSD factors the trace product is
// nonnegative, so a clearly negative value means a non-PSD block slipped in.
void check_trace(double value, double scale) {
    if (value < -1e-9 * std::max(1e-30, scale)) {
        throw std::invalid_argument("signal model: non-PSD covariance block");
    }
}

}  // namespace

BeamformingSolution BeamformingSolution::zeros(int n_slots, int n_gbs, int n_uavs,
                                               int n_antennas) {
    BeamformingSolution b;
    const Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(n_antennas, n_antennas);
    b.W.assign(n_slots, std::vector<std::vector<Eigen::MatrixXcd>>(
                            n_gbs, std::vector<Eigen::MatrixXcd>(n_uavs, Z)));
    b.R.assign(n_slots, std::vector<Eigen::MatrixXcd>(n_gbs, Z));
    b.rank1.assign(n_slots, std::vector<std::vector<bool>>(n_gbs, std::vector<bool>(n_uavs, false)));
    return b;
}

void BeamformingSolution::validate(double p_max) const {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("beamforming solution: " + what);
    };
    auto check_psd = [&](const Eigen::MatrixXcd& M, const char* name) {
        const double asym = (M - M.adjoint()).norm();
        if (asym > 1e-9 * std::max(1.0, M.norm())) fail(std::string(name) + " not Hermitian");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
        const double tr = M.trace().real();
        if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, tr)) {
            fail(std::string(name) + " not PSD");
        }
    };
    for (int n = 0; n < num_slots(); ++n) {
        for (int m = 0; m < num_gbs(); ++m) {
            double power = R[n][m].trace().real();
            check_psd(R[n][m], "R block");
            for (int k = 0; k < num_uavs(); ++k) {
                check_psd(W[n][m][k], "W block");
                power += W[n][m][k].trace().real();
                if (rank1[n][m][k]) {
                    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W[n][m][k],
                                                                       Eigen::EigenvaluesOnly);
                    const auto& ev = es.eigenvalues();
                    const double top = ev(ev.size() - 1);
                    const double second = ev.size() > 1 ? ev(ev.size() - 2) : 0.0;
                    if (top > 0.0 && second > 1e-7 * top) fail("flagged W block not rank one");
                }
            }
            if (power > p_max * (1.0 + 1e-8)) fail("per-GBS power budget exceeded");
        }
    }
}

void TrajectoryPlan::validate(const Scenario& scenario) const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("trajectory: " + what); };
    const double tol = 1e-6;
    for (int k = 0; k < num_uavs(); ++k) {
        if ((q[k].front() - scenario.uavs[k].initial).norm() > tol) fail("initial endpoint violated");
        if ((q[k].back() - scenario.uavs[k].final).norm() > tol) fail("final endpoint violated");
        for (int n = 0; n + 1 < num_slots(); ++n) {
            if ((q[k][n + 1] - q[k][n]).norm() > scenario.max_step + tol) {
                fail("per-slot step exceeds V_max * Delta_t");
            }
        }
    }
    for (int k = 0; k < num_uavs(); ++k) {
        for (int i = k + 1; i < num_uavs(); ++i) {
            const double dh2 = std::pow(altitudes[k] - altitudes[i], 2);
            for (int n = 0; n < num_slots(); ++n) {
                const double sep = std::sqrt((q[k][n] - q[i][n]).squaredNorm() + dh2);
                if (sep < scenario.d_min - tol) fail("inter-UAV separation violated");
            }
        }
    }
}

ChannelSet ChannelSet::build(const Scenario& scenario, const TrajectoryPlan& traj) {
    const int N = traj.num_slots();
    const int M = scenario.num_gbs();
    const int K = traj.num_uavs();
    ChannelSet cs;
    cs.h.assign(N, std::vector<std::vector<Eigen::VectorXcd>>(M, std::vector<Eigen::VectorXcd>(K)));
    cs.H.assign(N, std::vector<std::vector<Eigen::MatrixXcd>>(M, std::vector<Eigen::MatrixXcd>(K)));
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < M; ++l) {
            for (int k = 0; k < K; ++k) {
                const auto ch =
                    channel_vector(scenario.gbs[l], traj.point(k, n), scenario.array, scenario.kappa);
                cs.h[n][l][k] = ch.entries;
                cs.H[n][l][k] = channel_outer(ch.entries);
            }
        }
    }
    return cs;
}

SensingGeometry SensingGeometry::build(const Scenario& scenario) {
    const int M = scenario.num_gbs();
    const int Q = scenario.num_samples();
    SensingGeometry sg;
    sg.a.assign(M, std::vector<Eigen::VectorXcd>(Q));
    sg.d2.assign(M, std::vector<double>(Q));
    for (int l = 0; l < M; ++l) {
        for (int q = 0; q < Q; ++q) {
            const AirPoint& p = scenario.sensing_points[q];
            sg.a[l][q] = steering_vector(
                aod_cosine(scenario.array.orientation, scenario.gbs[l], p), scenario.array);
            sg.d2[l][q] = squared_distance(scenario.gbs[l], p);
        }
    }
    return sg;
}

double sinr(Receiver receiver, const std::vector<Eigen::MatrixXcd>& H_per_gbs, int serving_m,
            int k, const BeamformingSolution& beams, int n, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("sinr: sigma2 must be positive");
    const int M = beams.num_gbs();
    const int K = beams.num_uavs();

    double signal = 0.0;
    double received_info = 0.0;
    double received_sense = 0.0;
    for (int l = 0; l < M; ++l) {
        const Eigen::MatrixXcd& Hl = H_per_gbs[l];
        const double hscale = Hl.trace().real();
        for (int i = 0; i < K; ++i) {
            const Eigen::MatrixXcd& Wli = beams.W[n][l][i];
            const double t = real_trace_product(Hl, Wli);
            check_trace(t, hscale * std::abs(Wli.trace().real()));
            received_info += t;
            if (l == serving_m && i == k) signal = t;
        }
        const double tr = real_trace_product(Hl, beams.R[n][l]);
        check_trace(tr, hscale * std::abs(beams.R[n][l].trace().real()));
        received_sense += tr;
    }
    double denom = received_info - signal + sigma2;
    if (receiver == Receiver::TypeI) denom += received_sense;
    return std::max(0.0, signal) / denom;
}

double rate(Receiver receiver, const std::vector<Eigen::MatrixXcd>& H_per_gbs, int serving_m,
            int k, const BeamformingSolution& beams, int n, double sigma2) {
    return std::log2(1.0 + sinr(receiver, H_per_gbs, serving_m, k, beams, n, sigma2));
}

namespace {

SumRate sum_rate_impl(Receiver receiver, const Association& assoc, const BeamformingSolution& beams,
                      const TrajectoryPlan& traj, const Scenario& scenario, bool parallel) {
    const int N = traj.num_slots();
    const int K = traj.num_uavs();
    const ChannelSet channels = ChannelSet::build(scenario, traj);

    SumRate out;
    out.per_slot = Eigen::VectorXd::Zero(N);
    out.per_uav_slot = Eigen::MatrixXd::Zero(K, N);

    auto slot_rates = [&](int n) {
        for (int k = 0; k < K; ++k) {
            std::vector<Eigen::MatrixXcd> H_per_gbs(scenario.num_gbs());
            for (int l = 0; l < scenario.num_gbs(); ++l) H_per_gbs[l] = channels.H[n][l][k];
            out.per_uav_slot(k, n) = rate(receiver, H_per_gbs, assoc.serving(k, n), k, beams, n,
                                          scenario.sigma2);
        }
    };
    if (parallel) {
        parallel_for(N, slot_rates);
    } else {
        serial_for(N, slot_rates);
    }
    for (int n = 0; n < N; ++n) {
        double s = 0.0;
        for (int k = 0; k < K; ++k) s += out.per_uav_slot(k, n);
        out.per_slot(n) = s;
        out.total += s;
    }
    return out;
}

}  // namespace

SumRate sum_rate(Receiver receiver, const Association& assoc, const BeamformingSolution& beams,
                 const TrajectoryPlan& traj, const Scenario& scenario) {
    return sum_rate_impl(receiver, assoc, beams, traj, scenario, true);
}

SumRate sum_rate_serial(Receiver receiver, const Association& assoc,
                        const BeamformingSolution& beams, const TrajectoryPlan& traj,
                        const Scenario& scenario) {
    return sum_rate_impl(receiver, assoc, beams, traj, scenario, false);
}

double illumination_power(int q_idx, const BeamformingSolution& beams, int n,
                          const Scenario& scenario, const SensingGeometry& sensing) {
    const int M = scenario.num_gbs();
    const int K = beams.num_uavs();
    double total = 0.0;
    for (int l = 0; l < M; ++l) {
        Eigen::MatrixXcd X = beams.R[n][l];
        for (int i = 0; i < K; ++i) X += beams.W[n][l][i];
        const Eigen::VectorXcd& a = sensing.a[l][q_idx];
        total += (a.adjoint() * X * a).value().real() / sensing.d2[l][q_idx];
    }
    return total;
}

Eigen::MatrixXd illumination_table(const BeamformingSolution& beams, const Scenario& scenario) {
    const SensingGeometry sensing = SensingGeometry::build(scenario);
    const int Q = scenario.num_samples();
    const int N = beams.num_slots();
    Eigen::MatrixXd table(Q, N);
    for (int n = 0; n < N; ++n) {
        for (int q = 0; q < Q; ++q) {
            table(q, n) = illumination_power(q, beams, n, scenario, sensing);
        }
    }
    return table;
}

}  // namespace isac
