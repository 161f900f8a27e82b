#include "isac/trajectory.hpp"

#include <cmath>

namespace isac {

namespace {

constexpr double kLog2e = 1.4426950408889634;

double cos_aod(Orientation orientation, const Eigen::Vector2d& offset, double altitude,
               double dist) {
    return orientation == Orientation::Horizontal ? offset.x() / dist : altitude / dist;
}

}  // namespace

double eta_mu(Orientation orientation, const Eigen::MatrixXcd& M, const GbsSite& gbs,
              const Eigen::Vector2d& q, double altitude, double spacing_over_wavelength) {
    const int Na = static_cast<int>(M.rows());
    const Eigen::Vector2d offset = q - gbs.position;
    const double dist = std::sqrt(offset.squaredNorm() + altitude * altitude);
    const double cosA = cos_aod(orientation, offset, altitude, dist);

    double value = 0.0;
    for (int r = 0; r < Na; ++r) value += M(r, r).real();
    for (int p = 0; p < Na; ++p) {
        for (int c = p + 1; c < Na; ++c) {
            const double mag = std::abs(M(p, c));
            if (mag == 0.0) continue;
            const double phase = std::arg(M(p, c)) +
                                 2.0 * M_PI * spacing_over_wavelength * (c - p) * cosA;
            value += 2.0 * mag * std::cos(phase);
        }
    }
    return value;
}

Eigen::Vector2d eta_mu_gradient(Orientation orientation, const Eigen::MatrixXcd& M,
                                const GbsSite& gbs, const Eigen::Vector2d& q, double altitude,
                                double spacing_over_wavelength) {
    const int Na = static_cast<int>(M.rows());
    const Eigen::Vector2d offset = q - gbs.position;
    const double dist = std::sqrt(offset.squaredNorm() + altitude * altitude);
    const double cosA = cos_aod(orientation, offset, altitude, dist);

    // chain rule of cos(AoD) w.r.t. the horizontal position
    Eigen::Vector2d dcos;
    if (orientation == Orientation::Horizontal) {
        const Eigen::Vector2d psi(1.0, 0.0);
        dcos = psi / dist - (offset.x() / (dist * dist * dist)) * offset;
    } else {
        dcos = -(altitude / (dist * dist * dist)) * offset;
    }

    double slope = 0.0;  // d(eta)/d(cosA)
    for (int p = 0; p < Na; ++p) {
        for (int c = p + 1; c < Na; ++c) {
            const double mag = std::abs(M(p, c));
            if (mag == 0.0) continue;
            const double factor = 2.0 * M_PI * spacing_over_wavelength * (c - p);
            const double phase = std::arg(M(p, c)) + factor * cosA;
            slope += -2.0 * mag * std::sin(phase) * factor;
        }
    }
    return slope * dcos;
}

namespace {

struct RatePieces {
    double g = 0.0;
    double h = 0.0;
    Eigen::Vector2d dg{0.0, 0.0};
    Eigen::Vector2d dh{0.0, 0.0};
};

// Received-power sums of the two-log rate form, normalized by the serving
// distance over kappa so the noise enters as (sigma2/kappa) * dist_m^2.
// Cross-GBS terms carry the distance ratio rho_l = dist_m^2 / dist_l^2; their
// gradients include the ratio's own chain terms.
RatePieces rate_pieces(const Scenario& scenario, const BeamformingSolution& beams, int n,
                       int serving_m, int k, const Eigen::Vector2d& q, bool with_gradient) {
    const int M = scenario.num_gbs();
    const int K = scenario.num_uavs();
    const double Hk = scenario.uavs[k].altitude;
    const double sw = scenario.array.spacing_over_wavelength;
    const Orientation ori = scenario.array.orientation;
    const bool type_one = scenario.receiver == Receiver::TypeI;

    const Eigen::Vector2d off_m = q - scenario.gbs[serving_m].position;
    const double dm2 = off_m.squaredNorm() + Hk * Hk;

    RatePieces out;
    double serving_eta = 0.0;
    Eigen::Vector2d serving_grad{0.0, 0.0};
    for (int l = 0; l < M; ++l) {
        const Eigen::Vector2d off_l = q - scenario.gbs[l].position;
        const double dl2 = off_l.squaredNorm() + Hk * Hk;
        const double rho = dm2 / dl2;

        double sum_l = 0.0;
        Eigen::Vector2d grad_l{0.0, 0.0};
        for (int i = 0; i < K; ++i) {
            sum_l += eta_mu(ori, beams.W[n][l][i], scenario.gbs[l], q, Hk, sw);
            if (with_gradient) {
                grad_l += eta_mu_gradient(ori, beams.W[n][l][i], scenario.gbs[l], q, Hk, sw);
            }
        }
        if (type_one) {
            sum_l += eta_mu(ori, beams.R[n][l], scenario.gbs[l], q, Hk, sw);
            if (with_gradient) {
                grad_l += eta_mu_gradient(ori, beams.R[n][l], scenario.gbs[l], q, Hk, sw);
            }
        }
        out.g += rho * sum_l;
        if (with_gradient) {
            const Eigen::Vector2d drho = (2.0 / dl2) * (off_m - rho * off_l);
            out.dg += rho * grad_l + sum_l * drho;
        }
        if (l == serving_m) {
            serving_eta = eta_mu(ori, beams.W[n][l][k], scenario.gbs[l], q, Hk, sw);
            if (with_gradient) {
                serving_grad =
                    eta_mu_gradient(ori, beams.W[n][l][k], scenario.gbs[l], q, Hk, sw);
            }
        }
    }
    const double noise_scale = scenario.sigma2 / scenario.kappa;
    out.g += noise_scale * dm2;
    out.h = out.g - serving_eta;
    if (with_gradient) {
        out.dg += 2.0 * noise_scale * off_m;
        out.dh = out.dg - serving_grad;
    }
    return out;
}

}  // namespace

double rate_via_eta_mu(const Scenario& scenario, const BeamformingSolution& beams, int n,
                       int serving_m, int k, const Eigen::Vector2d& q) {
    const RatePieces p = rate_pieces(scenario, beams, n, serving_m, k, q, false);
    return std::log2(p.g) - std::log2(p.h);
}

std::vector<TrajLinearization> traj_taylor_coeffs(const Scenario& scenario,
                                                  const BeamformingSolution& beams,
                                                  const Association& assoc,
                                                  const TrajectoryPlan& local) {
    const int N = local.num_slots();
    const int K = local.num_uavs();
    std::vector<TrajLinearization> lins;
    lins.reserve(K * N);
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            const int m = assoc.serving(k, n);
            const RatePieces p = rate_pieces(scenario, beams, n, m, k, local.q[k][n], true);
            TrajLinearization lin;
            lin.m = m;
            lin.k = k;
            lin.n = n;
            lin.g = p.g;
            lin.h = p.h;
            lin.c = std::log2(p.g) - std::log2(p.h);
            lin.d = kLog2e * (p.dg / p.g - p.dh / p.h);
            lins.push_back(lin);
        }
    }
    return lins;
}

CollisionConstraint linearize_collision(const Eigen::Vector2d& q_k_local,
                                        const Eigen::Vector2d& q_i_local, double H_k, double H_i,
                                        double d_min) {
    CollisionConstraint c;
    const double gap2 = d_min * d_min - (H_k - H_i) * (H_k - H_i);
    c.vacuous = gap2 <= 0.0;
    const Eigen::Vector2d diff = q_k_local - q_i_local;
    c.normal = 2.0 * diff;
    c.rhs = gap2 + diff.squaredNorm();
    c.infeasible_at_local = !c.vacuous && c.normal.dot(diff) < c.rhs - 1e-12;
    return c;
}

conic::ConicProblem assemble_traj_subproblem(const Scenario& scenario,
                                             const std::vector<TrajLinearization>& lins,
                                             const TrajectoryPlan& local, double omega) {
    if (!(omega > 0.0)) throw std::invalid_argument("trajectory subproblem: omega must be positive");
    const int N = local.num_slots();
    const int K = local.num_uavs();

    // Displacement variables delta = q - q_local keep everything O(omega).
    conic::ConicProblem p;
    p.num_scalars = 2 * K * N;
    p.resize_vectors();
    auto var = [&](int k, int n) { return 2 * (k * N + n); };

    for (const auto& lin : lins) {
        p.objective(var(lin.k, lin.n)) += lin.d.x();
        p.objective(var(lin.k, lin.n) + 1) += lin.d.y();
    }

    // UAVs whose endpoints use up the whole speed budget have no freedom at
    // all; pin every slot so the cones keep a strict interior.
    std::vector<bool> forced(K, false);
    for (int k = 0; k < K; ++k) {
        const double reach = (N - 1) * scenario.max_step;
        forced[k] =
            (scenario.uavs[k].final - scenario.uavs[k].initial).norm() >= reach * (1.0 - 1e-12);
    }

    // Endpoints: delta = 0 at the first and last slot (every slot if forced).
    int n_eq = 0;
    for (int k = 0; k < K; ++k) n_eq += forced[k] ? 2 * N : 4;
    p.eq_coeffs = Eigen::MatrixXd::Zero(n_eq, p.num_scalars);
    p.eq_rhs = Eigen::VectorXd::Zero(n_eq);
    int eq_row = 0;
    for (int k = 0; k < K; ++k) {
        if (forced[k]) {
            for (int n = 0; n < N; ++n) {
                p.eq_coeffs(eq_row++, var(k, n)) = 1.0;
                p.eq_coeffs(eq_row++, var(k, n) + 1) = 1.0;
            }
        } else {
            p.eq_coeffs(eq_row++, var(k, 0)) = 1.0;
            p.eq_coeffs(eq_row++, var(k, 0) + 1) = 1.0;
            p.eq_coeffs(eq_row++, var(k, N - 1)) = 1.0;
            p.eq_coeffs(eq_row++, var(k, N - 1) + 1) = 1.0;
        }
    }

    // Speed cones ||q[n+1] - q[n]|| <= max_step.
    for (int k = 0; k < K; ++k) {
        if (forced[k]) continue;
        for (int n = 0; n + 1 < N; ++n) {
            conic::SecondOrderCone cone;
            cone.t_coeffs = Eigen::VectorXd::Zero(p.num_scalars);
            cone.t_const = scenario.max_step;
            cone.u_coeffs = Eigen::MatrixXd::Zero(2, p.num_scalars);
            cone.u_coeffs(0, var(k, n + 1)) = 1.0;
            cone.u_coeffs(0, var(k, n)) = -1.0;
            cone.u_coeffs(1, var(k, n + 1) + 1) = 1.0;
            cone.u_coeffs(1, var(k, n) + 1) = -1.0;
            cone.u_const = local.q[k][n + 1] - local.q[k][n];
            p.socs.push_back(std::move(cone));
        }
    }

    // Trust region ||delta|| <= omega.
    for (int k = 0; k < K; ++k) {
        for (int n = 0; n < N; ++n) {
            conic::SecondOrderCone cone;
            cone.t_coeffs = Eigen::VectorXd::Zero(p.num_scalars);
            cone.t_const = omega;
            cone.u_coeffs = Eigen::MatrixXd::Zero(2, p.num_scalars);
            cone.u_coeffs(0, var(k, n)) = 1.0;
            cone.u_coeffs(1, var(k, n) + 1) = 1.0;
            cone.u_const = Eigen::Vector2d::Zero();
            p.socs.push_back(std::move(cone));
        }
    }

    // Linearized collision rows; coincident local points are perturbed
    // deterministically before linearizing.
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    for (int k = 0; k < K; ++k) {
        for (int i = k + 1; i < K; ++i) {
            for (int n = 0; n < N; ++n) {
                Eigen::Vector2d qk = local.q[k][n];
                const Eigen::Vector2d qi = local.q[i][n];
                if ((qk - qi).norm() < 1e-9) {
                    const double ang = 0.25 * M_PI * ((k * 31 + i * 17 + n) % 8);
                    qk += 1e-3 * Eigen::Vector2d(std::cos(ang), std::sin(ang));
                }
                const CollisionConstraint c = linearize_collision(
                    qk, qi, scenario.uavs[k].altitude, scenario.uavs[i].altitude,
                    scenario.d_min);
                if (c.vacuous) continue;
                // normal.(q_k - q_i) >= rhs, shifted into delta variables
                // relative to the true (unperturbed) local points, and scaled
                // to a unit normal so the row is commensurate with the rest
                const double scale = 1.0 / std::max(1.0, c.normal.norm());
                Eigen::VectorXd row = Eigen::VectorXd::Zero(p.num_scalars);
                row(var(k, n)) = -scale * c.normal.x();
                row(var(k, n) + 1) = -scale * c.normal.y();
                row(var(i, n)) = scale * c.normal.x();
                row(var(i, n) + 1) = scale * c.normal.y();
                rows.push_back(row);
                rhs.push_back(-scale *
                              (c.rhs - c.normal.dot(local.q[k][n] - local.q[i][n])));
            }
        }
    }
    if (!rows.empty()) {
        p.ineq_coeffs = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), p.num_scalars);
        p.ineq_rhs = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            p.ineq_coeffs.row(static_cast<int>(r)) = rows[r].transpose();
            p.ineq_rhs(static_cast<int>(r)) = rhs[r];
        }
    }
    return p;
}

TrajectoryResult optimize_trajectory(const Scenario& scenario, const BeamformingSolution& beams,
                                     const Association& assoc, const TrajectoryPlan& local) {
    const auto& opt = scenario.options;
    TrajectoryResult result;
    result.plan = local;

    double objective = sum_rate(scenario.receiver, assoc, beams, result.plan, scenario).total;
    result.history.push_back(objective);
    if (opt.trust_omega0 < opt.trust_xi) return result;

    // Fully stretched routes leave no slack; nothing to optimize.
    bool any_free = false;
    for (const auto& u : scenario.uavs) {
        const double reach = (scenario.n_slots - 1) * scenario.max_step;
        if ((u.final - u.initial).norm() < reach * (1.0 - 1e-12)) any_free = true;
    }
    if (!any_free) return result;

    double omega = opt.trust_omega0;
    for (int iter = 0; iter < opt.max_trust_iters && omega >= opt.trust_xi; ++iter) {
        const auto lins = traj_taylor_coeffs(scenario, beams, assoc, result.plan);
        const auto prob = assemble_traj_subproblem(scenario, lins, result.plan, omega);
        const auto sol = conic::solve(prob, opt.solver_tol, opt.solver_max_iters);
        const bool ok = sol.status == conic::SolveStatus::Optimal ||
                        (sol.status == conic::SolveStatus::MaxIters && sol.kkt.primal <= 1e-8 &&
                         sol.kkt.dual <= 1e-6);
        if (!ok) {
            ++result.conic_failures;
            result.warning = true;
            break;
        }
        TrajectoryPlan cand = result.plan;
        for (int k = 0; k < cand.num_uavs(); ++k) {
            for (int n = 0; n < cand.num_slots(); ++n) {
                cand.q[k][n].x() += sol.x(2 * (k * cand.num_slots() + n));
                cand.q[k][n].y() += sol.x(2 * (k * cand.num_slots() + n) + 1);
            }
        }
        const double cand_obj =
            sum_rate(scenario.receiver, assoc, beams, cand, scenario).total;
        if (cand_obj > objective) {
            result.plan = cand;
            objective = cand_obj;
        } else {
            omega *= 0.5;
        }
        result.history.push_back(objective);
    }
    return result;
}

}  // namespace isac
