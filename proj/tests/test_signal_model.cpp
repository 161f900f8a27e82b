#include <doctest.h>

#include "isac/signal_model.hpp"
#include "oracles.hpp"

using namespace isac;

namespace {

Scenario tiny_scenario(int M, int K, int N, int Na = 4) {
    Scenario s;
    for (int m = 0; m < M; ++m) {
        s.gbs.push_back({m, {120.0 * m, 40.0 * (m % 2)}});
    }
    for (int k = 0; k < K; ++k) {
        s.uavs.push_back({{10.0 + 30.0 * k, 60.0}, {100.0 + 30.0 * k, 90.0}, 80.0 + 5.0 * k});
    }
    s.array = {Na, 0.5, Orientation::Horizontal};
    s.receiver = Receiver::TypeI;
    s.p_max = 3.0;
    s.sigma2 = 1e-10;
    s.kappa = std::pow(10.0, -4.5);
    s.gamma = 0.0;
    s.n_slots = N;
    s.max_step = 200.0;
    s.d_min = 0.0;
    s.sensing_points = {{{50.0, 50.0}, 60.0}, {{80.0, 20.0}, 60.0}};
    return s;
}

TrajectoryPlan random_traj(const Scenario& s) {
    TrajectoryPlan traj;
    traj.q.resize(s.num_uavs());
    traj.altitudes.resize(s.num_uavs());
    for (int k = 0; k < s.num_uavs(); ++k) {
        traj.altitudes[k] = s.uavs[k].altitude;
        traj.q[k].resize(s.n_slots);
        for (int n = 0; n < s.n_slots; ++n) {
            traj.q[k][n] = Eigen::Vector2d(oracles::uniform(-50.0, 250.0),
                                           oracles::uniform(-50.0, 250.0));
        }
    }
    return traj;
}

BeamformingSolution random_beams(const Scenario& s) {
    BeamformingSolution b =
        BeamformingSolution::zeros(s.n_slots, s.num_gbs(), s.num_uavs(), s.array.n_antennas);
    for (int n = 0; n < s.n_slots; ++n) {
        for (int m = 0; m < s.num_gbs(); ++m) {
            double budget = s.p_max;
            for (int k = 0; k < s.num_uavs(); ++k) {
                const Eigen::MatrixXcd X = oracles::random_hermitian_psd(s.array.n_antennas);
                const double share = 0.3 * budget / s.num_uavs();
                b.W[n][m][k] = share * X / std::max(1e-12, X.trace().real());
            }
            const Eigen::MatrixXcd X = oracles::random_hermitian_psd(s.array.n_antennas);
            b.R[n][m] = 0.3 * budget * X / std::max(1e-12, X.trace().real());
        }
    }
    return b;
}

}  // namespace

TEST_CASE("sinr basic values and MRT example") {
    Scenario s = tiny_scenario(1, 1, 1);
    // single GBS at origin, UAV at (60, 0, 80): ||h||^2 = 4 kappa / 1e4
    s.gbs[0].position = {0.0, 0.0};
    TrajectoryPlan traj;
    traj.q = {{{60.0, 0.0}}};
    traj.altitudes = {80.0};
    const ChannelSet ch = ChannelSet::build(s, traj);
    const double h2 = ch.h[0][0][0].squaredNorm();
    CHECK(h2 == doctest::Approx(4.0 * std::pow(10.0, -8.5)).epsilon(1e-12));

    BeamformingSolution beams = BeamformingSolution::zeros(1, 1, 1, 4);
    std::vector<Eigen::MatrixXcd> H = {ch.H[0][0][0]};
    CHECK(sinr(Receiver::TypeI, H, 0, 0, beams, 0, s.sigma2) == 0.0);

    // MRT with P = 3: tr(H W) = P ||h||^2
    beams.W[0][0][0] = 3.0 * ch.h[0][0][0] * ch.h[0][0][0].adjoint() / h2;
    const double g = sinr(Receiver::TypeI, H, 0, 0, beams, 0, s.sigma2);
    CHECK(g == doctest::Approx(3.0 * h2 / 1e-10).epsilon(1e-9));
    CHECK(g == doctest::Approx(379.47).epsilon(1e-3));
    CHECK(rate(Receiver::TypeI, H, 0, 0, beams, 0, s.sigma2) ==
          doctest::Approx(std::log2(1.0 + g)).epsilon(1e-12));
    CHECK(rate(Receiver::TypeI, H, 0, 0, beams, 0, s.sigma2) ==
          doctest::Approx(8.572).epsilon(1e-3));

    // rate at SINR exactly 1 is 1 bit
    beams.W[0][0][0] *= 1e-10 / (3.0 * h2);
    CHECK(rate(Receiver::TypeI, H, 0, 0, beams, 0, s.sigma2) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Type-II SINR dominates Type-I and equals it when R = 0") {
    const Scenario s = tiny_scenario(2, 2, 2);
    const TrajectoryPlan traj = random_traj(s);
    const ChannelSet ch = ChannelSet::build(s, traj);
    BeamformingSolution beams = random_beams(s);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = trial % s.n_slots;
        const int k = trial % s.num_uavs();
        const int m = trial % s.num_gbs();
        std::vector<Eigen::MatrixXcd> H(s.num_gbs());
        for (int l = 0; l < s.num_gbs(); ++l) H[l] = ch.H[n][l][k];
        const double g1 = sinr(Receiver::TypeI, H, m, k, beams, n, s.sigma2);
        const double g2 = sinr(Receiver::TypeII, H, m, k, beams, n, s.sigma2);
        CHECK(g2 >= g1);
    }
}

TEST_CASE("sinr matches the naive oracle and rejects non-PSD blocks") {
    const Scenario s = tiny_scenario(2, 2, 2);
    const TrajectoryPlan traj = random_traj(s);
    const ChannelSet ch = ChannelSet::build(s, traj);
    const BeamformingSolution beams = random_beams(s);
    for (int n = 0; n < s.n_slots; ++n) {
        for (int k = 0; k < s.num_uavs(); ++k) {
            std::vector<Eigen::MatrixXcd> H(s.num_gbs());
            std::vector<Eigen::VectorXcd> h(s.num_gbs());
            for (int l = 0; l < s.num_gbs(); ++l) {
                H[l] = ch.H[n][l][k];
                h[l] = ch.h[n][l][k];
            }
            for (int m = 0; m < s.num_gbs(); ++m) {
                const double mine = sinr(Receiver::TypeI, H, m, k, beams, n, s.sigma2);
                const double ref =
                    oracles::naive_sinr(false, h, m, k, beams.W[n], beams.R[n], s.sigma2);
                CHECK(mine == doctest::Approx(ref).epsilon(1e-11));
            }
        }
    }

    BeamformingSolution bad = beams;
    bad.W[0][0][0] = -Eigen::MatrixXcd::Identity(4, 4);
    std::vector<Eigen::MatrixXcd> H(s.num_gbs());
    for (int l = 0; l < s.num_gbs(); ++l) H[l] = ch.H[0][l][0];
    CHECK_THROWS_AS(sinr(Receiver::TypeI, H, 0, 0, bad, 0, s.sigma2), std::invalid_argument);
}

TEST_CASE("sum_rate equals brute-force accumulation") {
    const Scenario s = tiny_scenario(2, 2, 2);
    const TrajectoryPlan traj = random_traj(s);
    const ChannelSet ch = ChannelSet::build(s, traj);
    const BeamformingSolution beams = random_beams(s);
    Association assoc;
    assoc.gbs_of = Eigen::MatrixXi::Zero(2, 2);
    assoc.gbs_of << 0, 1, 1, 0;

    const SumRate sr = sum_rate(s.receiver, assoc, beams, traj, s);

    double expected = 0.0;
    for (int n = 0; n < s.n_slots; ++n) {
        for (int k = 0; k < s.num_uavs(); ++k) {
            std::vector<Eigen::VectorXcd> h(s.num_gbs());
            for (int l = 0; l < s.num_gbs(); ++l) h[l] = ch.h[n][l][k];
            expected += std::log2(1.0 + oracles::naive_sinr(false, h, assoc.serving(k, n), k,
                                                            beams.W[n], beams.R[n], s.sigma2));
        }
    }
    CHECK(sr.total == doctest::Approx(expected).epsilon(1e-12));

    // single term: one UAV, one slot
    Scenario s1 = tiny_scenario(1, 1, 1);
    const TrajectoryPlan t1 = random_traj(s1);
    const BeamformingSolution b1 = random_beams(s1);
    Association a1;
    a1.gbs_of = Eigen::MatrixXi::Zero(1, 1);
    const SumRate r1 = sum_rate(s1.receiver, a1, b1, t1, s1);
    const ChannelSet ch1 = ChannelSet::build(s1, t1);
    std::vector<Eigen::MatrixXcd> H1 = {ch1.H[0][0][0]};
    CHECK(r1.total == doctest::Approx(rate(s1.receiver, H1, 0, 0, b1, 0, s1.sigma2)));
}

TEST_CASE("illumination power: identities and linearity") {
    Scenario s = tiny_scenario(1, 1, 1);
    s.gbs[0].position = {0.0, 0.0};
    s.sensing_points = {{{100.0, 0.0}, 60.0}};
    const SensingGeometry sg = SensingGeometry::build(s);

    BeamformingSolution beams = BeamformingSolution::zeros(1, 1, 1, 4);
    CHECK(illumination_power(0, beams, 0, s, sg) == 0.0);

    // isotropic R with power P: zeta = P / d^2 (a^H a = Na cancels 1/Na)
    beams.R[0][0] = (3.0 / 4.0) * Eigen::MatrixXcd::Identity(4, 4);
    const double d2 = 100.0 * 100.0 + 60.0 * 60.0;
    CHECK(illumination_power(0, beams, 0, s, sg) == doctest::Approx(3.0 / d2).epsilon(1e-12));
    CHECK(illumination_power(0, beams, 0, s, sg) == doctest::Approx(2.206e-4).epsilon(1e-3));

    // beam steered exactly at the sample: Na times the isotropic value
    const Eigen::VectorXcd a = sg.a[0][0];
    beams.R[0][0].setZero();
    beams.W[0][0][0] = (3.0 / 4.0) * a * a.adjoint();
    CHECK(illumination_power(0, beams, 0, s, sg) ==
          doctest::Approx(4.0 * 3.0 / d2).epsilon(1e-12));

    // linearity in each block
    const Scenario s2 = tiny_scenario(2, 2, 1);
    const SensingGeometry sg2 = SensingGeometry::build(s2);
    BeamformingSolution a2 = random_beams(s2);
    BeamformingSolution b2 = random_beams(s2);
    BeamformingSolution mix = a2;
    const double alpha = 0.7, beta = 1.9;
    for (int m = 0; m < 2; ++m) {
        for (int k = 0; k < 2; ++k) mix.W[0][m][k] = alpha * a2.W[0][m][k] + beta * b2.W[0][m][k];
        mix.R[0][m] = alpha * a2.R[0][m] + beta * b2.R[0][m];
    }
    for (int q = 0; q < s2.num_samples(); ++q) {
        const double lhs = illumination_power(q, mix, 0, s2, sg2);
        const double rhs = alpha * illumination_power(q, a2, 0, s2, sg2) +
                           beta * illumination_power(q, b2, 0, s2, sg2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("beamforming solution validation catches violations") {
    const Scenario s = tiny_scenario(2, 2, 1);
    BeamformingSolution beams = random_beams(s);
    CHECK_NOTHROW(beams.validate(s.p_max));

    BeamformingSolution over = beams;
    over.W[0][0][0] = 10.0 * Eigen::MatrixXcd::Identity(4, 4);
    CHECK_THROWS_AS(over.validate(s.p_max), std::invalid_argument);

    BeamformingSolution nonpsd = beams;
    nonpsd.R[0][0] = -0.01 * Eigen::MatrixXcd::Identity(4, 4);
    CHECK_THROWS_AS(nonpsd.validate(s.p_max), std::invalid_argument);

    BeamformingSolution fakerank = beams;
    fakerank.rank1[0][0][0] = true;  // random PSD block is not rank one
    CHECK_THROWS_AS(fakerank.validate(s.p_max), std::invalid_argument);
}

TEST_CASE("trajectory validation enforces endpoints, speed, separation") {
    Scenario s = tiny_scenario(1, 2, 4);
    s.max_step = 50.0;
    s.d_min = 20.0;
    TrajectoryPlan plan;
    plan.altitudes = {80.0, 85.0};
    plan.q = {{{10.0, 60.0}, {40.0, 70.0}, {70.0, 80.0}, {100.0, 90.0}},
              {{40.0, 60.0}, {70.0, 70.0}, {100.0, 80.0}, {130.0, 90.0}}};
    Scenario s2 = s;
    s2.uavs = {{{10.0, 60.0}, {100.0, 90.0}, 80.0}, {{40.0, 60.0}, {130.0, 90.0}, 85.0}};
    CHECK_NOTHROW(plan.validate(s2));

    TrajectoryPlan bad_speed = plan;
    bad_speed.q[0][1] = {200.0, 70.0};
    CHECK_THROWS_AS(bad_speed.validate(s2), std::invalid_argument);

    TrajectoryPlan bad_sep = plan;
    bad_sep.q[1] = plan.q[0];  // altitudes differ by 5 < d_min
    Scenario s3 = s2;
    s3.uavs[1].initial = s3.uavs[0].initial;
    s3.uavs[1].final = s3.uavs[0].final;
    CHECK_THROWS_AS(bad_sep.validate(s3), std::invalid_argument);
}
