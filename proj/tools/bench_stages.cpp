// Compares the OpenMP kernels against their serial reference implementations
// on the desk-scale scenario: per-slot beamforming SCA dispatch and the
// sum-rate evaluation. Results must match bitwise; only the timing differs.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "isac/ao.hpp"
#include "isac/parallel.hpp"
#include "isac/scenario_io.hpp"

namespace {

isac::Scenario desk_scenario() {
    using namespace isac;
    Scenario s;
    s.gbs = {{0, {100.0, 100.0}}, {1, {300.0, 100.0}}, {2, {200.0, 300.0}}};
    s.uavs = {{{50.0, 250.0}, {350.0, 250.0}, 80.0}, {{50.0, 150.0}, {350.0, 150.0}, 80.0}};
    s.array = {4, 0.5, Orientation::Horizontal};
    s.receiver = Receiver::TypeI;
    s.p_max = 3.0;
    s.sigma2 = 1e-10;
    s.kappa = std::pow(10.0, -4.5);
    s.gamma = 1e-4;
    s.n_slots = 10;
    s.max_step = 40.0;
    s.d_min = 10.0;
    s.sensing_points = sample_sensing_grid({150.0, 150.0}, {250.0, 250.0}, 60.0, 6);
    return s;
}

template <typename F>
double time_s(F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    int threads = 0;
    if (argc > 1) threads = std::atoi(argv[1]);
    isac::set_num_threads(threads);

    const isac::Scenario scenario = desk_scenario();
    const isac::Initialization init = isac::initialize(scenario);

    std::printf("desk scenario: M=%d K=%d N=%d Q=%d Na=%d, threads=%d\n", scenario.num_gbs(),
                scenario.num_uavs(), scenario.n_slots, scenario.num_samples(),
                scenario.array.n_antennas, isac::max_threads());

    isac::BeamformingResult serial, parallel;
    const double t_serial = time_s([&] {
        serial = isac::optimize_beamforming_serial(scenario, init.traj, init.assoc, init.beams);
    });
    const double t_parallel = time_s([&] {
        parallel = isac::optimize_beamforming(scenario, init.traj, init.assoc, init.beams);
    });
    const bool identical =
        serial.history.size() == parallel.history.size() &&
        std::memcmp(serial.history.data(), parallel.history.data(),
                    sizeof(double) * serial.history.size()) == 0;
    std::printf("beamforming stage : serial %8.3f s | parallel %8.3f s | speedup %5.2fx | %s\n",
                t_serial, t_parallel, t_serial / t_parallel,
                identical ? "identical" : "MISMATCH");

    isac::SumRate sr_serial, sr_parallel;
    const double t_sr_serial = time_s([&] {
        for (int rep = 0; rep < 200; ++rep) {
            sr_serial = isac::sum_rate_serial(scenario.receiver, init.assoc, serial.beams,
                                              init.traj, scenario);
        }
    });
    const double t_sr_parallel = time_s([&] {
        for (int rep = 0; rep < 200; ++rep) {
            sr_parallel =
                isac::sum_rate(scenario.receiver, init.assoc, serial.beams, init.traj, scenario);
        }
    });
    std::printf("sum rate (x200)   : serial %8.3f s | parallel %8.3f s | speedup %5.2fx | %s\n",
                t_sr_serial, t_sr_parallel, t_sr_serial / t_sr_parallel,
                sr_serial.total == sr_parallel.total ? "identical" : "MISMATCH");
    return 0;
}
