#include "isac/beamforming.hpp"

#include <cmath>
#include <stdexcept>

#include "isac/parallel.hpp"

namespace isac {

namespace {

constexpr double kLog2e = 1.4426950408889634;

double real_trace(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
    return (A.cwiseProduct(B.transpose())).sum().real();
}

// Solve with the caller tolerance, once more with a 10x looser one on failure.
conic::ConicSolution solve_with_retry(const conic::ConicProblem& p, double tol, int max_iters) {
    conic::ConicSolution sol = conic::solve(p, tol, max_iters);
    if (sol.status == conic::SolveStatus::Optimal) return sol;
    const double loose = std::min(1e-4, tol * 10.0);
    conic::ConicSolution retry = conic::solve(p, loose, max_iters);
    if (retry.status == conic::SolveStatus::Optimal) return retry;
    // keep whichever got closer to feasibility
    return retry.kkt.primal < sol.kkt.primal ? retry : sol;
}

bool usable(const conic::ConicSolution& sol) {
    if (sol.status == conic::SolveStatus::Optimal) return true;
    return sol.status == conic::SolveStatus::MaxIters && sol.kkt.primal <= 1e-8 &&
           sol.kkt.dual <= 1e-6;
}

}  // namespace

RateLinearization rate_lower_bound_coeffs(Receiver receiver, Orientation orientation,
                                          const std::vector<Eigen::MatrixXcd>& H_per_gbs,
                                          int serving_m, int k, const BeamformingSolution& local,
                                          int n, double sigma2) {
    const int M = local.num_gbs();
    const int K = local.num_uavs();
    RateLinearization lin;
    lin.m = serving_m;
    lin.k = k;
    lin.receiver = receiver;
    lin.orientation = orientation;
    lin.Hn.resize(M);
    for (int l = 0; l < M; ++l) lin.Hn[l] = H_per_gbs[l] / sigma2;

    double total = 1.0;  // sigma2-normalized noise
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) total += real_trace(lin.Hn[l], local.W[n][l][i]);
        if (receiver == Receiver::TypeI) total += real_trace(lin.Hn[l], local.R[n][l]);
    }
    const double serving = real_trace(lin.Hn[serving_m], local.W[n][serving_m][k]);
    lin.total0 = total;
    lin.interf0 = total - serving;
    lin.a0 = std::log2(lin.interf0);
    lin.B.resize(M);
    for (int l = 0; l < M; ++l) lin.B[l] = (kLog2e / lin.interf0) * lin.Hn[l];
    return lin;
}

double rate_lower_bound_value(const RateLinearization& lin, const BeamformingSolution& local,
                              const BeamformingSolution& point, int n) {
    const int M = point.num_gbs();
    const int K = point.num_uavs();
    double total = 1.0;
    double slope_terms = 0.0;
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            const double t = real_trace(lin.Hn[l], point.W[n][l][i]);
            total += t;
            if (!(l == lin.m && i == lin.k)) {
                slope_terms +=
                    (kLog2e / lin.interf0) * (t - real_trace(lin.Hn[l], local.W[n][l][i]));
            }
        }
        if (lin.receiver == Receiver::TypeI) {
            const double t = real_trace(lin.Hn[l], point.R[n][l]);
            total += t;
            slope_terms += (kLog2e / lin.interf0) * (t - real_trace(lin.Hn[l], local.R[n][l]));
        }
    }
    return std::log2(total) - lin.a0 - slope_terms;
}

conic::ConicProblem assemble_beamforming_sdr(const Scenario& scenario,
                                             const SensingGeometry& sensing,
                                             const std::vector<RateLinearization>& lins,
                                             const BeamformingSolution& local, int n) {
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const int Na = scenario.array.n_antennas;
    const int Q = scenario.num_samples();
    (void)local;

    conic::ConicProblem p;
    p.psd_dims.assign(M * K + M, 2 * Na);
    p.resize_vectors();
    const int nvar = p.num_vars();
    auto w_block = [&](int l, int i) { return l * K + i; };
    auto r_block = [&](int l) { return M * K + l; };

    // Linear objective: inner linearization of each leading log at the local
    // point plus the interference slope terms; constants dropped.
    std::vector<std::vector<Eigen::MatrixXcd>> w_coeff(
        M, std::vector<Eigen::MatrixXcd>(K, Eigen::MatrixXcd::Zero(Na, Na)));
    std::vector<Eigen::MatrixXcd> r_coeff(M, Eigen::MatrixXcd::Zero(Na, Na));
    for (const auto& lin : lins) {
        const double beta_total = kLog2e / lin.total0;
        const double beta_interf = kLog2e / lin.interf0;
        for (int l = 0; l < M; ++l) {
            for (int i = 0; i < K; ++i) {
                double c = beta_total;
                if (!(l == lin.m && i == lin.k)) c -= beta_interf;
                w_coeff[l][i] += c * lin.Hn[l];
            }
            if (lin.receiver == Receiver::TypeI) {
                r_coeff[l] += (beta_total - beta_interf) * lin.Hn[l];
            }
        }
    }
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            conic::ConicProblem::add_sym_coeff(p.objective, p.psd_offset(w_block(l, i)),
                                               0.5 * conic::embed_hermitian(w_coeff[l][i]));
        }
        conic::ConicProblem::add_sym_coeff(p.objective, p.psd_offset(r_block(l)),
                                           0.5 * conic::embed_hermitian(r_coeff[l]));
    }

    const bool with_illum = scenario.gamma > 0.0;
    const int rows = M + (with_illum ? Q : 0);
    p.ineq_coeffs = Eigen::MatrixXd::Zero(rows, nvar);
    p.ineq_rhs = Eigen::VectorXd::Zero(rows);

    // Per-GBS power, scaled to rhs 1: sum_i tr(W_{l,i}) + tr(R_l) <= P_max.
    const Eigen::MatrixXd trace_coeff =
        0.5 / scenario.p_max * Eigen::MatrixXd::Identity(2 * Na, 2 * Na);
    for (int l = 0; l < M; ++l) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
        for (int i = 0; i < K; ++i) {
            conic::ConicProblem::add_sym_coeff(row, p.psd_offset(w_block(l, i)), trace_coeff);
        }
        conic::ConicProblem::add_sym_coeff(row, p.psd_offset(r_block(l)), trace_coeff);
        p.ineq_coeffs.row(l) = row.transpose();
        p.ineq_rhs(l) = 1.0;
    }

    // Illumination floors, scaled to rhs -1.
    if (with_illum) {
        for (int q = 0; q < Q; ++q) {
            Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
            for (int l = 0; l < M; ++l) {
                const Eigen::MatrixXcd A =
                    sensing.a[l][q] * sensing.a[l][q].adjoint() /
                    (sensing.d2[l][q] * scenario.gamma);
                const Eigen::MatrixXd C = -0.5 * conic::embed_hermitian(A);
                for (int i = 0; i < K; ++i) {
                    conic::ConicProblem::add_sym_coeff(row, p.psd_offset(w_block(l, i)), C);
                }
                conic::ConicProblem::add_sym_coeff(row, p.psd_offset(r_block(l)), C);
            }
            p.ineq_coeffs.row(M + q) = row.transpose();
            p.ineq_rhs(M + q) = -1.0;
        }
    }
    (void)n;
    return p;
}

namespace {

// Clamps the tiny negative eigenvalues a finite-tolerance solve leaves behind;
// without this, nearly-degenerate beams amplify the indefiniteness during
// rank-one reconstruction.
Eigen::MatrixXcd psd_clamp(const Eigen::MatrixXcd& X) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(X);
    if (es.eigenvalues().minCoeff() >= 0.0) return X;
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

BeamSlot extract_beam_slot(const conic::ConicProblem& p, const conic::ConicSolution& sol, int M,
                           int K) {
    BeamSlot slot;
    slot.W.assign(M, std::vector<Eigen::MatrixXcd>(K));
    slot.R.assign(M, {});
    slot.rank1.assign(M, std::vector<bool>(K, false));
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            slot.W[l][i] = psd_clamp(conic::extract_hermitian(sol.psd_block(p, l * K + i)));
        }
        slot.R[l] = psd_clamp(conic::extract_hermitian(sol.psd_block(p, M * K + l)));
    }
    return slot;
}

BeamSlot rank_one_reconstruct(const BeamSlot& star,
                              const std::vector<std::vector<Eigen::VectorXcd>>& channels) {
    const int M = static_cast<int>(star.W.size());
    const int K = static_cast<int>(star.W[0].size());
    BeamSlot out;
    out.W.assign(M, std::vector<Eigen::MatrixXcd>(K));
    out.R.assign(M, {});
    out.rank1.assign(M, std::vector<bool>(K, true));
    for (int l = 0; l < M; ++l) {
        Eigen::MatrixXcd residual = star.R[l];
        for (int i = 0; i < K; ++i) {
            const Eigen::MatrixXcd& Ws = star.W[l][i];
            const Eigen::VectorXcd& h = channels[l][i];
            const double t = (h.adjoint() * Ws * h).value().real();
            // threshold scaled by ||h||^2, the natural size of h^H W h
            const double eps_num =
                1e-12 * std::max(1.0, Ws.trace().real()) * h.squaredNorm();
            residual += Ws;
            if (t <= eps_num) {
                // degenerate beam: carries no power toward its user, fold it
                // entirely into the sensing covariance
                out.W[l][i] = Eigen::MatrixXcd::Zero(Ws.rows(), Ws.cols());
                continue;
            }
            const Eigen::VectorXcd w = (Ws * h) / std::sqrt(t);
            out.W[l][i] = w * w.adjoint();
            residual -= out.W[l][i];
        }
        out.R[l] = 0.5 * (residual + residual.adjoint());
    }
    return out;
}

void ReconstructionStats::merge(const ReconstructionStats& other) {
    solves += other.solves;
    max_objective_change = std::max(max_objective_change, other.max_objective_change);
    max_power_change = std::max(max_power_change, other.max_power_change);
    max_illum_change = std::max(max_illum_change, other.max_illum_change);
    max_eig_ratio = std::max(max_eig_ratio, other.max_eig_ratio);
}

namespace {

// Wraps a slot slice as a standalone one-slot solution so evaluations inside
// the parallel region never touch other slots' storage.
BeamformingSolution as_single_slot(const BeamSlot& slot) {
    BeamformingSolution b;
    b.W = {slot.W};
    b.R = {slot.R};
    b.rank1 = {slot.rank1};
    return b;
}

// Objective of the solved SDR subproblem at a slot slice: the surrogate with
// its leading log linearized at the local point, i.e. exactly what the conic
// program maximizes (up to constants).
double slot_sdr_objective(const std::vector<RateLinearization>& lins, const BeamSlot& point) {
    double total = 0.0;
    for (const auto& lin : lins) {
        const int M = static_cast<int>(point.W.size());
        const int K = static_cast<int>(point.W[0].size());
        double value = 0.0;
        for (int l = 0; l < M; ++l) {
            for (int i = 0; i < K; ++i) {
                const double t = (point.W[l][i].cwiseProduct(lin.Hn[l].transpose())).sum().real();
                value += (kLog2e / lin.total0) * t;
                if (!(l == lin.m && i == lin.k)) value -= (kLog2e / lin.interf0) * t;
            }
            if (lin.receiver == Receiver::TypeI) {
                const double t = (point.R[l].cwiseProduct(lin.Hn[l].transpose())).sum().real();
                value += (kLog2e / lin.total0 - kLog2e / lin.interf0) * t;
            }
        }
        total += value;
    }
    return total;
}

// True slot objective: sum over UAVs of the associated-pair rate.
double slot_objective(const Scenario& scenario, const ChannelSet& channels,
                      const Association& assoc, const BeamSlot& slot, int n) {
    const int K = scenario.num_uavs();
    const int M = scenario.num_gbs();
    const BeamformingSolution one = as_single_slot(slot);
    double total = 0.0;
    for (int k = 0; k < K; ++k) {
        std::vector<Eigen::MatrixXcd> H(M);
        for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
        total += rate(scenario.receiver, H, assoc.serving(k, n), k, one, 0, scenario.sigma2);
    }
    return total;
}

void write_slot(BeamformingSolution& beams, int n, const BeamSlot& slot) {
    const int M = static_cast<int>(slot.W.size());
    const int K = static_cast<int>(slot.W[0].size());
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            beams.W[n][l][i] = slot.W[l][i];
            beams.rank1[n][l][i] = slot.rank1[l][i];
        }
        beams.R[n][l] = slot.R[l];
    }
}

BeamSlot read_slot(const BeamformingSolution& beams, int n) {
    BeamSlot slot;
    const int M = beams.num_gbs();
    const int K = beams.num_uavs();
    slot.W.assign(M, std::vector<Eigen::MatrixXcd>(K));
    slot.R.assign(M, {});
    slot.rank1.assign(M, std::vector<bool>(K, false));
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            slot.W[l][i] = beams.W[n][l][i];
            slot.rank1[l][i] = beams.rank1[n][l][i];
        }
        slot.R[l] = beams.R[n][l];
    }
    return slot;
}

BeamSlot halve_toward(const BeamSlot& prev, const BeamSlot& cand) {
    BeamSlot mid = cand;
    const int M = static_cast<int>(cand.W.size());
    const int K = static_cast<int>(cand.W[0].size());
    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            mid.W[l][i] = 0.5 * (prev.W[l][i] + cand.W[l][i]);
            mid.rank1[l][i] = false;
        }
        mid.R[l] = 0.5 * (prev.R[l] + cand.R[l]);
    }
    return mid;
}

ReconstructionStats reconstruction_checks(const Scenario& scenario,
                                          const SensingGeometry& sensing,
                                          const std::vector<RateLinearization>& lins,
                                          const BeamSlot& star, const BeamSlot& bar) {
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    ReconstructionStats st;
    st.solves = 1;

    const double obj_star = slot_sdr_objective(lins, star);
    const double obj_bar = slot_sdr_objective(lins, bar);
    st.max_objective_change =
        std::abs(obj_bar - obj_star) / std::max(1.0, std::abs(obj_star));

    for (int l = 0; l < M; ++l) {
        double ps = star.R[l].trace().real();
        double pb = bar.R[l].trace().real();
        for (int i = 0; i < K; ++i) {
            ps += star.W[l][i].trace().real();
            pb += bar.W[l][i].trace().real();
        }
        st.max_power_change =
            std::max(st.max_power_change, std::abs(pb - ps) / std::max(1e-12, std::abs(ps)));
    }

    for (int q = 0; q < scenario.num_samples(); ++q) {
        double zs = 0.0, zb = 0.0;
        for (int l = 0; l < M; ++l) {
            Eigen::MatrixXcd Xs = star.R[l];
            Eigen::MatrixXcd Xb = bar.R[l];
            for (int i = 0; i < K; ++i) {
                Xs += star.W[l][i];
                Xb += bar.W[l][i];
            }
            const Eigen::VectorXcd& a = sensing.a[l][q];
            zs += (a.adjoint() * Xs * a).value().real() / sensing.d2[l][q];
            zb += (a.adjoint() * Xb * a).value().real() / sensing.d2[l][q];
        }
        st.max_illum_change =
            std::max(st.max_illum_change, std::abs(zb - zs) / std::max(1e-12, std::abs(zs)));
    }

    for (int l = 0; l < M; ++l) {
        for (int i = 0; i < K; ++i) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bar.W[l][i],
                                                               Eigen::EigenvaluesOnly);
            const auto& ev = es.eigenvalues();
            const double top = ev(ev.size() - 1);
            if (top > 1e-12) {
                st.max_eig_ratio =
                    std::max(st.max_eig_ratio, std::max(0.0, ev(ev.size() - 2)) / top);
            }
        }
    }
    return st;
}

BeamformingResult optimize_beamforming_impl(const Scenario& scenario, const TrajectoryPlan& traj,
                                            const Association& assoc,
                                            const BeamformingSolution& init, bool parallel) {
    const int N = scenario.n_slots;
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const ChannelSet channels = ChannelSet::build(scenario, traj);
    const SensingGeometry sensing = SensingGeometry::build(scenario);
    const auto& opt = scenario.options;

    BeamformingResult result;
    result.beams = init;
    std::vector<double> slot_obj(N);
    for (int n = 0; n < N; ++n) {
        slot_obj[n] = slot_objective(scenario, channels, assoc, read_slot(result.beams, n), n);
    }
    double objective = 0.0;
    for (double v : slot_obj) objective += v;
    result.history.push_back(objective);

    std::vector<char> converged(N, 0);
    std::vector<ReconstructionStats> slot_stats(N);
    std::vector<int> slot_failures(N, 0);
    std::vector<char> slot_infeasible(N, 0);

    for (int iter = 0; iter < opt.max_sca_iters; ++iter) {
        auto run_slot = [&](int n) {
            if (converged[n]) return;
            std::vector<RateLinearization> lins;
            lins.reserve(K);
            for (int k = 0; k < K; ++k) {
                std::vector<Eigen::MatrixXcd> H(M);
                for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
                lins.push_back(rate_lower_bound_coeffs(scenario.receiver,
                                                       scenario.array.orientation, H,
                                                       assoc.serving(k, n), k, result.beams, n,
                                                       scenario.sigma2));
            }
            const auto prob =
                assemble_beamforming_sdr(scenario, sensing, lins, result.beams, n);
            const auto sol = solve_with_retry(prob, opt.solver_tol, opt.solver_max_iters);
            if (sol.status == conic::SolveStatus::Infeasible && iter == 0) {
                slot_infeasible[n] = 1;
                converged[n] = 1;
                return;
            }
            if (!usable(sol)) {
                ++slot_failures[n];
                converged[n] = 1;  // keep the previous point for this slot
                return;
            }
            const BeamSlot star = extract_beam_slot(prob, sol, M, K);
            const BeamSlot prev = read_slot(result.beams, n);
            BeamSlot cand = rank_one_reconstruct(star, channels.h[n]);
            slot_stats[n].merge(reconstruction_checks(scenario, sensing, lins, star, cand));

            bool accepted = false;
            for (int halve = 0; halve <= 10; ++halve) {
                const double obj = slot_objective(scenario, channels, assoc, cand, n);
                if (obj >= slot_obj[n] - 1e-12) {
                    write_slot(result.beams, n, cand);
                    if (std::abs(obj - slot_obj[n]) <=
                        1e-4 * opt.bf_eps * std::max(1.0, std::abs(obj))) {
                        converged[n] = 1;  // no per-slot progress left
                    }
                    slot_obj[n] = obj;
                    accepted = true;
                    break;
                }
                cand = rank_one_reconstruct(halve_toward(prev, cand), channels.h[n]);
            }
            if (!accepted) converged[n] = 1;
        };
        if (parallel) {
            parallel_for(N, run_slot);
        } else {
            serial_for(N, run_slot);
        }

        for (int n = 0; n < N; ++n) {
            if (slot_infeasible[n]) {
                throw InfeasibleScenario(
                    "beamforming subproblem infeasible at first SCA iteration");
            }
        }

        double new_objective = 0.0;
        for (double v : slot_obj) new_objective += v;
        result.history.push_back(new_objective);
        const double gain = new_objective - objective;
        objective = new_objective;
        if (gain < opt.bf_eps * std::max(1.0, std::abs(new_objective))) break;
        bool all_done = true;
        for (int n = 0; n < N; ++n) all_done = all_done && converged[n];
        if (all_done) break;
    }

    for (int n = 0; n < N; ++n) {
        result.stats.merge(slot_stats[n]);
        result.conic_failures += slot_failures[n];
    }
    return result;
}

}  // namespace

BeamformingResult optimize_beamforming(const Scenario& scenario, const TrajectoryPlan& traj,
                                       const Association& assoc,
                                       const BeamformingSolution& init) {
    return optimize_beamforming_impl(scenario, traj, assoc, init, true);
}

BeamformingResult optimize_beamforming_serial(const Scenario& scenario,
                                              const TrajectoryPlan& traj,
                                              const Association& assoc,
                                              const BeamformingSolution& init) {
    return optimize_beamforming_impl(scenario, traj, assoc, init, false);
}

MaxMinIllumination solve_maxmin_illumination(const Scenario& scenario,
                                             const SensingGeometry& sensing) {
    const int M = scenario.num_gbs();
    const int Na = scenario.array.n_antennas;
    const int Q = scenario.num_samples();

    const double scale = maxmin_illumination_isotropic(scenario, sensing);

    conic::ConicProblem p;
    p.num_scalars = 1;  // t, in units of the isotropic optimum
    p.psd_dims.assign(M, 2 * Na);
    p.resize_vectors();
    const int nvar = p.num_vars();
    p.objective(0) = 1.0;

    p.ineq_coeffs = Eigen::MatrixXd::Zero(Q + M, nvar);
    p.ineq_rhs = Eigen::VectorXd::Zero(Q + M);
    for (int q = 0; q < Q; ++q) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
        row(0) = 1.0;
        for (int l = 0; l < M; ++l) {
            const Eigen::MatrixXcd A =
                sensing.a[l][q] * sensing.a[l][q].adjoint() / (sensing.d2[l][q] * scale);
            conic::ConicProblem::add_sym_coeff(row, p.psd_offset(l),
                                               -0.5 * conic::embed_hermitian(A));
        }
        p.ineq_coeffs.row(q) = row.transpose();
    }
    const Eigen::MatrixXd trace_coeff =
        0.5 / scenario.p_max * Eigen::MatrixXd::Identity(2 * Na, 2 * Na);
    for (int l = 0; l < M; ++l) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
        conic::ConicProblem::add_sym_coeff(row, p.psd_offset(l), trace_coeff);
        p.ineq_coeffs.row(Q + l) = row.transpose();
        p.ineq_rhs(Q + l) = 1.0;
    }

    const auto sol = solve_with_retry(p, scenario.options.solver_tol,
                                      scenario.options.solver_max_iters);
    if (!usable(sol)) {
        throw std::runtime_error("max-min illumination solve failed");
    }
    MaxMinIllumination out;
    out.value = sol.objective * scale;
    out.R.resize(M);
    for (int l = 0; l < M; ++l) out.R[l] = conic::extract_hermitian(sol.psd_block(p, l));
    return out;
}

double maxmin_illumination_isotropic(const Scenario& scenario, const SensingGeometry& sensing) {
    double lo = std::numeric_limits<double>::infinity();
    for (int q = 0; q < scenario.num_samples(); ++q) {
        double z = 0.0;
        for (int l = 0; l < scenario.num_gbs(); ++l) z += scenario.p_max / sensing.d2[l][q];
        lo = std::min(lo, z);
    }
    return lo;
}

BeamformingSolution materialize_isotropic(const IsotropicPowers& powers, int n_antennas) {
    const int N = static_cast<int>(powers.comm.size());
    const int M = static_cast<int>(powers.comm[0].size());
    const int K = static_cast<int>(powers.comm[0][0].size());
    BeamformingSolution beams = BeamformingSolution::zeros(N, M, K, n_antennas);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n_antennas, n_antennas);
    for (int n = 0; n < N; ++n) {
        for (int l = 0; l < M; ++l) {
            for (int i = 0; i < K; ++i) {
                beams.W[n][l][i] = (powers.comm[n][l][i] / n_antennas) * eye;
            }
            beams.R[n][l] = (powers.sense[n][l] / n_antennas) * eye;
        }
    }
    return beams;
}

IsotropicResult optimize_power_allocation(const Scenario& scenario, const TrajectoryPlan& traj,
                                          const Association& assoc,
                                          const IsotropicPowers& init) {
    const int N = scenario.n_slots;
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const int Na = scenario.array.n_antennas;
    const ChannelSet channels = ChannelSet::build(scenario, traj);
    const SensingGeometry sensing = SensingGeometry::build(scenario);
    const auto& opt = scenario.options;

    IsotropicResult result;
    result.powers = init;
    result.beams = materialize_isotropic(init, Na);

    std::vector<double> slot_obj(N);
    for (int n = 0; n < N; ++n) {
        double total = 0.0;
        for (int k = 0; k < K; ++k) {
            std::vector<Eigen::MatrixXcd> H(M);
            for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
            total += rate(scenario.receiver, H, assoc.serving(k, n), k, result.beams, n,
                          scenario.sigma2);
        }
        slot_obj[n] = total;
    }
    double objective = 0.0;
    for (double v : slot_obj) objective += v;
    result.history.push_back(objective);

    // variable packing per slot: [p_comm(l,i) row-major..., p_sense(l)...]
    const int nvar = M * K + M;
    auto c_idx = [&](int l, int i) { return l * K + i; };
    auto s_idx = [&](int l) { return M * K + l; };

    std::vector<char> converged(N, 0);
    for (int iter = 0; iter < opt.max_sca_iters; ++iter) {
        auto run_slot = [&](int n) {
            if (converged[n]) return;
            // linearization at the current powers via the materialized beams
            std::vector<RateLinearization> lins;
            for (int k = 0; k < K; ++k) {
                std::vector<Eigen::MatrixXcd> H(M);
                for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
                lins.push_back(rate_lower_bound_coeffs(scenario.receiver,
                                                       scenario.array.orientation, H,
                                                       assoc.serving(k, n), k, result.beams, n,
                                                       scenario.sigma2));
            }
            conic::ConicProblem p;
            p.num_scalars = nvar;
            p.resize_vectors();
            for (const auto& lin : lins) {
                const double beta_total = kLog2e / lin.total0;
                const double beta_interf = kLog2e / lin.interf0;
                for (int l = 0; l < M; ++l) {
                    const double tau = lin.Hn[l].trace().real() / Na;  // tr(Hn (1/Na) I)
                    for (int i = 0; i < K; ++i) {
                        double c = beta_total;
                        if (!(l == lin.m && i == lin.k)) c -= beta_interf;
                        p.objective(c_idx(l, i)) += c * tau;
                    }
                    if (lin.receiver == Receiver::TypeI) {
                        p.objective(s_idx(l)) += (beta_total - beta_interf) * tau;
                    }
                }
            }
            const bool with_illum = scenario.gamma > 0.0;
            const int rows = nvar + M + (with_illum ? scenario.num_samples() : 0);
            p.ineq_coeffs = Eigen::MatrixXd::Zero(rows, nvar);
            p.ineq_rhs = Eigen::VectorXd::Zero(rows);
            int r = 0;
            for (int j = 0; j < nvar; ++j, ++r) p.ineq_coeffs(r, j) = -1.0;  // p >= 0
            for (int l = 0; l < M; ++l, ++r) {
                for (int i = 0; i < K; ++i) p.ineq_coeffs(r, c_idx(l, i)) = 1.0 / scenario.p_max;
                p.ineq_coeffs(r, s_idx(l)) = 1.0 / scenario.p_max;
                p.ineq_rhs(r) = 1.0;
            }
            if (with_illum) {
                for (int q = 0; q < scenario.num_samples(); ++q, ++r) {
                    for (int l = 0; l < M; ++l) {
                        const double coef =
                            -1.0 / (sensing.d2[l][q] * scenario.gamma);  // a^H I a = Na
                        for (int i = 0; i < K; ++i) p.ineq_coeffs(r, c_idx(l, i)) = coef;
                        p.ineq_coeffs(r, s_idx(l)) = coef;
                    }
                    p.ineq_rhs(r) = -1.0;
                }
            }
            const auto sol = solve_with_retry(p, opt.solver_tol, opt.solver_max_iters);
            if (sol.status == conic::SolveStatus::Infeasible && iter == 0) {
                throw InfeasibleScenario("isotropic power allocation infeasible");
            }
            if (!usable(sol)) {
                ++result.conic_failures;
                converged[n] = 1;
                return;
            }
            // acceptance with halving, on the power vectors
            Eigen::VectorXd prev(nvar);
            for (int l = 0; l < M; ++l) {
                for (int i = 0; i < K; ++i) prev(c_idx(l, i)) = result.powers.comm[n][l][i];
                prev(s_idx(l)) = result.powers.sense[n][l];
            }
            Eigen::VectorXd cand = sol.x.cwiseMax(0.0);
            BeamformingSolution trial = result.beams;
            bool accepted = false;
            for (int halve = 0; halve <= 10; ++halve) {
                for (int l = 0; l < M; ++l) {
                    for (int i = 0; i < K; ++i) {
                        trial.W[n][l][i] = (cand(c_idx(l, i)) / Na) *
                                           Eigen::MatrixXcd::Identity(Na, Na);
                    }
                    trial.R[n][l] =
                        (cand(s_idx(l)) / Na) * Eigen::MatrixXcd::Identity(Na, Na);
                }
                double obj = 0.0;
                for (int k = 0; k < K; ++k) {
                    std::vector<Eigen::MatrixXcd> H(M);
                    for (int l = 0; l < M; ++l) H[l] = channels.H[n][l][k];
                    obj += rate(scenario.receiver, H, assoc.serving(k, n), k, trial, n,
                                scenario.sigma2);
                }
                if (obj >= slot_obj[n] - 1e-12) {
                    for (int l = 0; l < M; ++l) {
                        for (int i = 0; i < K; ++i) {
                            result.powers.comm[n][l][i] = cand(c_idx(l, i));
                            result.beams.W[n][l][i] = trial.W[n][l][i];
                        }
                        result.powers.sense[n][l] = cand(s_idx(l));
                        result.beams.R[n][l] = trial.R[n][l];
                    }
                    if (std::abs(obj - slot_obj[n]) <=
                        1e-4 * opt.bf_eps * std::max(1.0, std::abs(obj))) {
                        converged[n] = 1;
                    }
                    slot_obj[n] = obj;
                    accepted = true;
                    break;
                }
                cand = 0.5 * (prev + cand);
            }
            if (!accepted) converged[n] = 1;
        };
        serial_for(N, run_slot);

        double new_objective = 0.0;
        for (double v : slot_obj) new_objective += v;
        result.history.push_back(new_objective);
        const double gain = new_objective - objective;
        objective = new_objective;
        if (gain < opt.bf_eps * std::max(1.0, std::abs(new_objective))) break;
    }
    return result;
}

}  // namespace isac
