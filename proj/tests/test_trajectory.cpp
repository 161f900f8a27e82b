#include <doctest.h>

#include "isac/ao.hpp"
#include "isac/trajectory.hpp"
#include "oracles.hpp"

using namespace isac;

namespace {

Scenario traj_scenario(int M, int K, int N, Receiver receiver = Receiver::TypeI) {
    Scenario s;
    for (int m = 0; m < M; ++m) s.gbs.push_back({m, {140.0 * m, 70.0 * (m % 2)}});
    for (int k = 0; k < K; ++k) {
        s.uavs.push_back({{0.0, 50.0 + 60.0 * k}, {120.0, 50.0 + 60.0 * k}, 80.0});
    }
    s.array = {4, 0.5, Orientation::Horizontal};
    s.receiver = receiver;
    s.p_max = 3.0;
    s.sigma2 = 1e-10;
    s.kappa = std::pow(10.0, -4.5);
    s.gamma = 0.0;
    s.n_slots = N;
    s.max_step = 30.0;
    s.d_min = 0.0;
    s.sensing_points = {{{60.0, 20.0}, 60.0}};
    return s;
}

BeamformingSolution random_beams(const Scenario& s) {
    BeamformingSolution b =
        BeamformingSolution::zeros(s.n_slots, s.num_gbs(), s.num_uavs(), s.array.n_antennas);
    for (int n = 0; n < s.n_slots; ++n) {
        for (int m = 0; m < s.num_gbs(); ++m) {
            for (int k = 0; k < s.num_uavs(); ++k) {
                const Eigen::MatrixXcd X = oracles::random_hermitian_psd(s.array.n_antennas);
                b.W[n][m][k] =
                    (0.4 * s.p_max / s.num_uavs()) * X / std::max(1e-12, X.trace().real());
            }
            const Eigen::MatrixXcd X = oracles::random_hermitian_psd(s.array.n_antennas);
            b.R[n][m] = 0.4 * s.p_max * X / std::max(1e-12, X.trace().real());
        }
    }
    return b;
}

const GbsSite kGbs{0, {25.0, -10.0}};

}  // namespace

TEST_CASE("eta_mu: identity matrix gives Na, quadratic-form oracle, autocorrelation") {
    CHECK(eta_mu(Orientation::Horizontal, Eigen::MatrixXcd::Identity(4, 4), kGbs, {60.0, 35.0},
                 80.0, 0.5) == doctest::Approx(4.0));

    for (auto ori : {Orientation::Horizontal, Orientation::Vertical}) {
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::MatrixXcd M = oracles::random_hermitian(4);
            const Eigen::Vector2d q(oracles::uniform(-200.0, 200.0),
                                    oracles::uniform(-200.0, 200.0));
            const double alt = oracles::uniform(20.0, 150.0);
            const double value = eta_mu(ori, M, kGbs, q, alt, 0.5);
            const double cosA =
                aod_cosine(ori, kGbs, AirPoint{q, alt});
            const double expected = oracles::quadratic_form_reference(M, cosA, 0.5);
            CHECK(value == doctest::Approx(expected).epsilon(1e-10));
        }
    }

    // M = a a^H evaluated at the same point: Na^2
    const Eigen::Vector2d q(70.0, 12.0);
    const double alt = 90.0;
    const double cosA = aod_cosine(Orientation::Horizontal, kGbs, AirPoint{q, alt});
    const auto a = steering_vector(cosA, {4, 0.5, Orientation::Horizontal});
    CHECK(eta_mu(Orientation::Horizontal, a * a.adjoint(), kGbs, q, alt, 0.5) ==
          doctest::Approx(16.0).epsilon(1e-10));
}

TEST_CASE("eta_mu_gradient: zeros and finite differences") {
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(4, 4);
    diag.diagonal() << 1.0, 2.0, 0.5, 3.0;
    const Eigen::Vector2d g1 =
        eta_mu_gradient(Orientation::Horizontal, diag, kGbs, {60.0, 35.0}, 80.0, 0.5);
    CHECK(g1.norm() == 0.0);

    // vertical orientation at q = u: gradient vanishes by symmetry
    const Eigen::MatrixXcd M0 = oracles::random_hermitian(4);
    const Eigen::Vector2d g2 =
        eta_mu_gradient(Orientation::Vertical, M0, kGbs, kGbs.position, 80.0, 0.5);
    CHECK(g2.norm() <= 1e-14);

    for (auto ori : {Orientation::Horizontal, Orientation::Vertical}) {
        int checked = 0;
        for (int trial = 0; trial < 200 && checked < 100; ++trial) {
            const Eigen::MatrixXcd M = oracles::random_hermitian(4);
            const Eigen::Vector2d q(oracles::uniform(-200.0, 200.0),
                                    oracles::uniform(-200.0, 200.0));
            const double alt = oracles::uniform(30.0, 120.0);
            const Eigen::Vector2d grad = eta_mu_gradient(ori, M, kGbs, q, alt, 0.5);
            if (grad.norm() < 1e-4) continue;  // stay away from gradient zeros
            const Eigen::Vector2d fd = oracles::central_difference(
                [&](const Eigen::Vector2d& x) { return eta_mu(ori, M, kGbs, x, alt, 0.5); }, q,
                1e-3);
            CHECK((grad - fd).norm() <= 1e-4 * fd.norm());
            ++checked;
        }
        CHECK(checked >= 100);
    }
}

TEST_CASE("rate_via_eta_mu equals the signal-model rate") {
    for (Receiver receiver : {Receiver::TypeI, Receiver::TypeII}) {
        const Scenario s = traj_scenario(2, 2, 2, receiver);
        int done = 0;
        for (int trial = 0; trial < 50; ++trial) {
            const BeamformingSolution beams = random_beams(s);
            TrajectoryPlan traj = straight_flight(s);
            for (int k = 0; k < 2; ++k) {
                for (int n = 0; n < 2; ++n) {
                    traj.q[k][n] += Eigen::Vector2d(oracles::uniform(-40.0, 40.0),
                                                    oracles::uniform(-40.0, 40.0));
                }
            }
            const ChannelSet ch = ChannelSet::build(s, traj);
            for (int n = 0; n < 2; ++n) {
                for (int k = 0; k < 2; ++k) {
                    for (int m = 0; m < 2; ++m) {
                        std::vector<Eigen::MatrixXcd> H(2);
                        for (int l = 0; l < 2; ++l) H[l] = ch.H[n][l][k];
                        const double direct = rate(receiver, H, m, k, beams, n, s.sigma2);
                        const double via =
                            rate_via_eta_mu(s, beams, n, m, k, traj.q[k][n]);
                        CHECK(std::abs(via - direct) <= 1e-9 * std::max(1.0, direct));
                        ++done;
                    }
                }
            }
        }
        CHECK(done >= 200);
    }

    // zero W everywhere: rate 0
    const Scenario s = traj_scenario(2, 1, 2);
    const BeamformingSolution zero = BeamformingSolution::zeros(2, 2, 1, 4);
    CHECK(rate_via_eta_mu(s, zero, 0, 0, 0, {30.0, 40.0}) == doctest::Approx(0.0));

    // Type-II strictly exceeds Type-I when sensing power lands on the UAV
    Scenario s2 = traj_scenario(2, 1, 2, Receiver::TypeI);
    BeamformingSolution beams = random_beams(s2);
    const double r1 = rate_via_eta_mu(s2, beams, 0, 0, 0, {30.0, 40.0});
    s2.receiver = Receiver::TypeII;
    const double r2 = rate_via_eta_mu(s2, beams, 0, 0, 0, {30.0, 40.0});
    CHECK(r2 > r1);
}

TEST_CASE("trajectory Taylor coefficients: anchor, gradient, quadratic decay") {
    const Scenario s = traj_scenario(2, 2, 3);
    const BeamformingSolution beams = random_beams(s);
    const TrajectoryPlan local = straight_flight(s);
    Association assoc;
    assoc.gbs_of = Eigen::MatrixXi::Zero(2, 3);
    assoc.gbs_of.row(1).setConstant(1);

    const auto lins = traj_taylor_coeffs(s, beams, assoc, local);
    REQUIRE(lins.size() == 2 * 3);
    for (const auto& lin : lins) {
        CHECK(lin.g > 0.0);
        CHECK(lin.h > 0.0);

        // anchor: c equals the true rate at the local point
        const double truth =
            rate_via_eta_mu(s, beams, lin.n, lin.m, lin.k, local.q[lin.k][lin.n]);
        CHECK(lin.c == doctest::Approx(truth).epsilon(1e-12));

        // d matches central finite differences of the exact rate
        const Eigen::Vector2d fd = oracles::central_difference(
            [&](const Eigen::Vector2d& x) {
                return rate_via_eta_mu(s, beams, lin.n, lin.m, lin.k, x);
            },
            local.q[lin.k][lin.n], 1e-3);
        CHECK((lin.d - fd).norm() <= 1e-4 * std::max(1e-10, fd.norm()));

        // quadratic decay of the first-order residual
        const Eigen::Vector2d dir =
            Eigen::Vector2d(oracles::uniform(-1.0, 1.0), oracles::uniform(-1.0, 1.0)).normalized();
        auto residual = [&](double step) {
            const Eigen::Vector2d q = local.q[lin.k][lin.n] + step * dir;
            const double approx = lin.c + lin.d.dot(q - local.q[lin.k][lin.n]);
            return std::abs(rate_via_eta_mu(s, beams, lin.n, lin.m, lin.k, q) - approx);
        };
        const double r_small = residual(0.01);
        const double r_large = residual(0.1);
        CHECK(r_large <= 100.0 * r_small * 10.0 + 1e-12);
    }
}

TEST_CASE("collision linearization") {
    // slack 75 at the local point
    const auto c =
        linearize_collision({0.0, 0.0}, {10.0, 0.0}, 80.0, 80.0, 5.0);
    CHECK(!c.vacuous);
    CHECK(!c.infeasible_at_local);
    const double slack = c.normal.dot(Eigen::Vector2d(0.0, 0.0) - Eigen::Vector2d(10.0, 0.0)) - c.rhs;
    CHECK(slack == doctest::Approx(75.0));

    // altitude gap alone satisfies separation
    const auto v = linearize_collision({0.0, 0.0}, {1.0, 0.0}, 80.0, 160.0, 20.0);
    CHECK(v.vacuous);

    // coincident local points, equal altitudes: flagged infeasible at local
    const auto bad = linearize_collision({5.0, 5.0}, {5.0, 5.0}, 80.0, 80.0, 10.0);
    CHECK(bad.infeasible_at_local);

    // inner approximation: satisfying the linear cut implies true separation
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Vector2d qk0(oracles::uniform(-50.0, 50.0), oracles::uniform(-50.0, 50.0));
        const Eigen::Vector2d qi0(oracles::uniform(-50.0, 50.0), oracles::uniform(-50.0, 50.0));
        const double hk = oracles::uniform(60.0, 100.0);
        const double hi = oracles::uniform(60.0, 100.0);
        const double dmin = oracles::uniform(1.0, 30.0);
        const auto lc = linearize_collision(qk0, qi0, hk, hi, dmin);
        if (lc.vacuous) continue;
        const Eigen::Vector2d qk(oracles::uniform(-80.0, 80.0), oracles::uniform(-80.0, 80.0));
        const Eigen::Vector2d qi(oracles::uniform(-80.0, 80.0), oracles::uniform(-80.0, 80.0));
        if (lc.normal.dot(qk - qi) >= lc.rhs) {
            const double sep2 = (qk - qi).squaredNorm() + (hk - hi) * (hk - hi);
            CHECK(sep2 >= dmin * dmin - 1e-9);
        }
    }
}

TEST_CASE("trajectory subproblem: tiny radius pins the plan, N=2 is constant") {
    const Scenario s = traj_scenario(1, 1, 4);
    const BeamformingSolution beams = random_beams(s);
    const TrajectoryPlan local = straight_flight(s);
    Association assoc;
    assoc.gbs_of = Eigen::MatrixXi::Zero(1, 4);

    const auto lins = traj_taylor_coeffs(s, beams, assoc, local);
    const auto p = assemble_traj_subproblem(s, lins, local, 1e-4);
    const auto sol = conic::solve(p, 1e-8, 200);
    REQUIRE(sol.status == conic::SolveStatus::Optimal);
    CHECK(sol.x.cwiseAbs().maxCoeff() <= 2e-4);

    CHECK_THROWS_AS(assemble_traj_subproblem(s, lins, local, 0.0), std::invalid_argument);

    // N=2: both slots pinned by endpoints, objective constant
    const Scenario s2 = traj_scenario(1, 1, 2);
    const TrajectoryPlan l2 = straight_flight(s2);
    const auto lins2 =
        traj_taylor_coeffs(s2, random_beams(s2), assoc, l2);
    const auto p2 = assemble_traj_subproblem(s2, lins2, l2, 5.0);
    const auto sol2 = conic::solve(p2, 1e-8, 200);
    REQUIRE(sol2.status == conic::SolveStatus::Optimal);
    CHECK(sol2.x.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("trajectory subproblem: free midpoint moves along d by min(omega, speed slack)") {
    Scenario s = traj_scenario(1, 1, 3);
    s.uavs[0] = {{0.0, 0.0}, {0.0, 0.0}, 80.0};  // hover route, midpoint free
    s.max_step = 12.0;
    TrajectoryPlan local;
    local.altitudes = {80.0};
    local.q = {{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};

    std::vector<TrajLinearization> lins(3);
    for (int n = 0; n < 3; ++n) {
        lins[n].k = 0;
        lins[n].n = n;
        lins[n].d = Eigen::Vector2d::Zero();
    }
    lins[1].d = Eigen::Vector2d(0.03, 0.04);  // push the midpoint toward (3,4)/5

    SUBCASE("trust radius binds") {
        const auto p = assemble_traj_subproblem(s, lins, local, 5.0);
        const auto sol = conic::solve(p, 1e-8, 200);
        REQUIRE(sol.status == conic::SolveStatus::Optimal);
        CHECK(sol.x(2) == doctest::Approx(5.0 * 0.6).epsilon(1e-5));
        CHECK(sol.x(3) == doctest::Approx(5.0 * 0.8).epsilon(1e-5));
    }
    SUBCASE("speed slack binds") {
        const auto p = assemble_traj_subproblem(s, lins, local, 50.0);
        const auto sol = conic::solve(p, 1e-8, 200);
        REQUIRE(sol.status == conic::SolveStatus::Optimal);
        CHECK(sol.x(2) == doctest::Approx(12.0 * 0.6).epsilon(1e-5));
        CHECK(sol.x(3) == doctest::Approx(12.0 * 0.8).epsilon(1e-5));
    }
}

TEST_CASE("optimize_trajectory: tiny omega0 returns the input unchanged") {
    Scenario s = traj_scenario(1, 1, 4);
    s.options.trust_omega0 = 0.01;
    s.options.trust_xi = 0.1;
    const BeamformingSolution beams = random_beams(s);
    const TrajectoryPlan local = straight_flight(s);
    Association assoc;
    assoc.gbs_of = Eigen::MatrixXi::Zero(1, 4);
    const auto result = optimize_trajectory(s, beams, assoc, local);
    CHECK(result.history.size() == 1);
    for (int n = 0; n < 4; ++n) {
        CHECK((result.plan.q[0][n] - local.q[0][n]).norm() == 0.0);
    }
}

TEST_CASE("optimize_trajectory: monotone, feasible, beats straight flight") {
    Scenario s = traj_scenario(1, 1, 8);
    s.gbs[0].position = {60.0, 120.0};  // off the straight path
    s.max_step = 30.0;
    s.options.trust_omega0 = 20.0;
    const Initialization init = initialize(s);
    const auto result = optimize_trajectory(s, init.beams, init.assoc, init.traj);

    for (std::size_t i = 1; i < result.history.size(); ++i) {
        CHECK(result.history[i] >= result.history[i - 1]);
    }
    CHECK_NOTHROW(result.plan.validate(s));
    CHECK(result.history.back() > result.history.front());

    // final plan is on average closer to the serving GBS than straight flight
    double straight_dist = 0.0, opt_dist = 0.0;
    for (int n = 0; n < s.n_slots; ++n) {
        straight_dist += (init.traj.q[0][n] - s.gbs[0].position).norm();
        opt_dist += (result.plan.q[0][n] - s.gbs[0].position).norm();
    }
    CHECK(opt_dist < straight_dist);
}
