#include "isac/ao.hpp"

#include <chrono>
#include <cmath>

namespace isac {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void fill_report_tail(SolveReport& report, const Scenario& scenario) {
    report.gamma = scenario.gamma;
    report.rates = sum_rate(scenario.receiver, report.assoc, report.beams, report.traj, scenario);
    report.illumination = illumination_table(report.beams, scenario);
    report.min_illumination = report.illumination.size() ? report.illumination.minCoeff() : 0.0;
    report.max_gbs_power = 0.0;
    for (int n = 0; n < report.beams.num_slots(); ++n) {
        for (int m = 0; m < report.beams.num_gbs(); ++m) {
            double power = report.beams.R[n][m].trace().real();
            for (int k = 0; k < report.beams.num_uavs(); ++k) {
                power += report.beams.W[n][m][k].trace().real();
            }
            report.max_gbs_power = std::max(report.max_gbs_power, power);
        }
    }
}

IsotropicPowers initial_isotropic_powers(const Scenario& scenario, double maxmin_iso) {
    if (scenario.gamma > maxmin_iso * (1.0 + 1e-12)) {
        throw InfeasibleScenario("isotropic transmission cannot meet the sensing threshold");
    }
    const double beta = scenario.gamma > 0.0 ? scenario.gamma / maxmin_iso : 0.0;
    const int N = scenario.n_slots;
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    IsotropicPowers p;
    p.comm.assign(N, std::vector<std::vector<double>>(M, std::vector<double>(K)));
    p.sense.assign(N, std::vector<double>(M));
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < M; ++l) {
            p.sense[n][l] = beta * scenario.p_max;
            for (int i = 0; i < K; ++i) {
                p.comm[n][l][i] = (1.0 - beta) * scenario.p_max / K;
            }
        }
    }
    return p;
}

}  // namespace

std::vector<Eigen::MatrixXd> compute_rate_tensor(const Scenario& scenario,
                                                 const BeamformingSolution& beams,
                                                 const TrajectoryPlan& traj) {
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const int N = scenario.n_slots;
    const ChannelSet channels = ChannelSet::build(scenario, traj);
    std::vector<Eigen::MatrixXd> rates(M, Eigen::MatrixXd::Zero(K, N));
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            std::vector<Eigen::MatrixXcd> H(M);
            for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
            for (int m = 0; m < M; ++m) {
                rates[m](k, n) =
                    rate(scenario.receiver, H, m, k, beams, n, scenario.sigma2);
            }
        }
    }
    return rates;
}

Association optimize_association(const std::vector<Eigen::MatrixXd>& rates) {
    const int M = static_cast<int>(rates.size());
    const int K = static_cast<int>(rates[0].rows());
    const int N = static_cast<int>(rates[0].cols());
    Association assoc;
    assoc.gbs_of = Eigen::MatrixXi::Zero(K, N);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            int best = 0;
            double best_rate = rates[0](k, n);
            for (int m = 1; m < M; ++m) {
                if (rates[m](k, n) > best_rate) {
                    best_rate = rates[m](k, n);
                    best = m;
                }
            }
            assoc.gbs_of(k, n) = best;
        }
    }
    return assoc;
}

TrajectoryPlan straight_flight(const Scenario& scenario) {
    const int N = scenario.n_slots;
    TrajectoryPlan plan;
    plan.q.resize(scenario.num_uavs());
    plan.altitudes.resize(scenario.num_uavs());
    for (int k = 0; k < scenario.num_uavs(); ++k) {
        plan.altitudes[k] = scenario.uavs[k].altitude;
        plan.q[k].resize(N);
        for (int n = 0; n < N; ++n) {
            const double frac = static_cast<double>(n) / static_cast<double>(N - 1);
            plan.q[k][n] =
                scenario.uavs[k].initial + frac * (scenario.uavs[k].final - scenario.uavs[k].initial);
        }
    }
    return plan;
}

Initialization initialize(const Scenario& scenario) {
    scenario.validate();
    Initialization init;
    init.traj = straight_flight(scenario);

    const SensingGeometry sensing = SensingGeometry::build(scenario);
    const MaxMinIllumination maxmin = solve_maxmin_illumination(scenario, sensing);
    init.maxmin_illumination = maxmin.value;
    if (scenario.gamma > maxmin.value * (1.0 + 1e-12)) {
        throw InfeasibleScenario("sensing threshold exceeds the max-min illumination optimum");
    }
    const double beta = scenario.gamma > 0.0 ? scenario.gamma / maxmin.value : 0.0;

    const int N = scenario.n_slots;
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const int Na = scenario.array.n_antennas;
    const ChannelSet channels = ChannelSet::build(scenario, init.traj);

    init.beams = BeamformingSolution::zeros(N, M, K, Na);
    const double comm_power = (1.0 - beta) * scenario.p_max / K;
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < M; ++l) {
            init.beams.R[n][l] = beta * maxmin.R[l];
            for (int i = 0; i < K; ++i) {
                const Eigen::VectorXcd& h = channels.h[n][l][i];
                init.beams.W[n][l][i] = comm_power * (h * h.adjoint()) / h.squaredNorm();
                init.beams.rank1[n][l][i] = true;
            }
        }
    }

    init.assoc = optimize_association(compute_rate_tensor(scenario, init.beams, init.traj));
    return init;
}

namespace {

SolveReport run(const Scenario& scenario, BenchmarkKind benchmark) {
    const auto t_start = std::chrono::steady_clock::now();
    scenario.validate();

    SolveReport report;
    report.case_spec.orientation = scenario.array.orientation;
    report.case_spec.receiver = scenario.receiver;
    report.benchmark = benchmark;

    IsotropicPowers iso_powers;
    if (benchmark == BenchmarkKind::Isotropic) {
        const SensingGeometry sensing = SensingGeometry::build(scenario);
        const double maxmin_iso = maxmin_illumination_isotropic(scenario, sensing);
        iso_powers = initial_isotropic_powers(scenario, maxmin_iso);
        report.traj = straight_flight(scenario);
        report.beams = materialize_isotropic(iso_powers, scenario.array.n_antennas);
        report.assoc =
            optimize_association(compute_rate_tensor(scenario, report.beams, report.traj));
    } else {
        Initialization init = initialize(scenario);
        report.traj = std::move(init.traj);
        report.beams = std::move(init.beams);
        report.assoc = std::move(init.assoc);
    }

    double objective =
        sum_rate(scenario.receiver, report.assoc, report.beams, report.traj, scenario).total;
    report.ao_history.push_back(objective);

    for (int round = 0; round < scenario.options.max_ao_rounds; ++round) {
        auto t0 = std::chrono::steady_clock::now();
        report.assoc =
            optimize_association(compute_rate_tensor(scenario, report.beams, report.traj));
        report.timings.association_s += seconds_since(t0);

        t0 = std::chrono::steady_clock::now();
        if (benchmark == BenchmarkKind::Isotropic) {
            IsotropicResult iso =
                optimize_power_allocation(scenario, report.traj, report.assoc, iso_powers);
            iso_powers = std::move(iso.powers);
            report.beams = std::move(iso.beams);
            report.bf_histories.push_back(std::move(iso.history));
            report.conic_failures += iso.conic_failures;
        } else {
            BeamformingResult bf =
                optimize_beamforming(scenario, report.traj, report.assoc, report.beams);
            report.beams = std::move(bf.beams);
            report.bf_histories.push_back(std::move(bf.history));
            report.recon_stats.merge(bf.stats);
            report.conic_failures += bf.conic_failures;
        }
        report.timings.beamforming_s += seconds_since(t0);

        if (benchmark != BenchmarkKind::StraightFlight) {
            t0 = std::chrono::steady_clock::now();
            TrajectoryResult tr =
                optimize_trajectory(scenario, report.beams, report.assoc, report.traj);
            report.traj = std::move(tr.plan);
            report.traj_histories.push_back(std::move(tr.history));
            report.conic_failures += tr.conic_failures;
            report.timings.trajectory_s += seconds_since(t0);
        }

        const double new_objective =
            sum_rate(scenario.receiver, report.assoc, report.beams, report.traj, scenario).total;
        report.ao_history.push_back(new_objective);
        const double gain = new_objective - objective;
        objective = new_objective;
        if (gain < scenario.options.ao_tol * (1.0 + std::abs(new_objective))) break;
    }

    fill_report_tail(report, scenario);
    report.timings.total_s = seconds_since(t_start);
    return report;
}

}  // namespace

SolveReport solve(const Scenario& scenario) { return run(scenario, BenchmarkKind::None); }

SolveReport run_benchmark(BenchmarkKind kind, const Scenario& scenario) {
    return run(scenario, kind);
}

}  // namespace isac
