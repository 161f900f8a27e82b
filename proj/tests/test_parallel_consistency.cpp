#include <doctest.h>

#include <cstring>

#include "isac/ao.hpp"
#include "isac/parallel.hpp"

using namespace isac;

namespace {

Scenario consistency_scenario() {
    Scenario s;
    s.gbs = {{0, {0.0, 0.0}}, {1, {140.0, 40.0}}};
    s.uavs = {{{0.0, 80.0}, {140.0, 80.0}, 80.0}, {{0.0, 20.0}, {140.0, 20.0}, 75.0}};
    s.array = {3, 0.5, Orientation::Horizontal};
    s.receiver = Receiver::TypeII;
    s.p_max = 3.0;
    s.sigma2 = 1e-10;
    s.kappa = std::pow(10.0, -4.5);
    s.gamma = 3e-5;
    s.n_slots = 5;
    s.max_step = 40.0;
    s.d_min = 5.0;
    s.sensing_points = {{{70.0, -30.0}, 60.0}, {{90.0, -10.0}, 60.0}};
    s.options.max_sca_iters = 4;
    return s;
}

bool beams_identical(const BeamformingSolution& a, const BeamformingSolution& b) {
    for (int n = 0; n < a.num_slots(); ++n) {
        for (int m = 0; m < a.num_gbs(); ++m) {
            if (std::memcmp(a.R[n][m].data(), b.R[n][m].data(),
                            sizeof(std::complex<double>) * a.R[n][m].size()) != 0) {
                return false;
            }
            for (int k = 0; k < a.num_uavs(); ++k) {
                if (std::memcmp(a.W[n][m][k].data(), b.W[n][m][k].data(),
                                sizeof(std::complex<double>) * a.W[n][m][k].size()) != 0) {
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once") {
    std::vector<int> hits(257, 0);
    parallel_for(257, [&](int i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}

TEST_CASE("sum_rate: parallel kernel matches the serial reference bitwise") {
    const Scenario s = consistency_scenario();
    const Initialization init = initialize(s);
    const SumRate a = sum_rate(s.receiver, init.assoc, init.beams, init.traj, s);
    const SumRate b = sum_rate_serial(s.receiver, init.assoc, init.beams, init.traj, s);
    CHECK(a.total == b.total);
    CHECK(std::memcmp(a.per_slot.data(), b.per_slot.data(), sizeof(double) * a.per_slot.size()) ==
          0);
    CHECK(std::memcmp(a.per_uav_slot.data(), b.per_uav_slot.data(),
                      sizeof(double) * a.per_uav_slot.size()) == 0);
}

TEST_CASE("beamforming stage: parallel dispatch matches the serial reference bitwise") {
    const Scenario s = consistency_scenario();
    const Initialization init = initialize(s);
    const BeamformingResult parallel = optimize_beamforming(s, init.traj, init.assoc, init.beams);
    const BeamformingResult serial =
        optimize_beamforming_serial(s, init.traj, init.assoc, init.beams);
    REQUIRE(parallel.history.size() == serial.history.size());
    for (std::size_t i = 0; i < parallel.history.size(); ++i) {
        CHECK(parallel.history[i] == serial.history[i]);
    }
    CHECK(beams_identical(parallel.beams, serial.beams));
}
