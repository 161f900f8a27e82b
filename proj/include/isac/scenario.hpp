#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "isac/geometry.hpp"

namespace isac {

/// Raised when the sensing requirement cannot be met by any admissible
/// transmit strategy (detected at initialization, mapped to exit code 2).
struct InfeasibleScenario : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Receiver { TypeI, TypeII };

/// One of the four antenna/receiver combinations.
struct CaseSpec {
    Orientation orientation = Orientation::Horizontal;
    Receiver receiver = Receiver::TypeI;

    static CaseSpec from_index(int index);  // 1..4
    int index() const;
};

struct UavRoute {
    Eigen::Vector2d initial{0.0, 0.0};
    Eigen::Vector2d final{0.0, 0.0};
    double altitude = 0.0;
};

/// Algorithm knobs. Defaults follow the module contracts; a scenario file may
/// override any of them.
struct SolveOptionsSet {
    double solver_tol = 1e-8;
    int solver_max_iters = 200;
    double ao_tol = 1e-3;
    int max_ao_rounds = 10;
    double bf_eps = 1e-3;
    int max_sca_iters = 20;
    double trust_omega0 = 20.0;
    double trust_xi = 0.1;
    int max_trust_iters = 30;
};

/// Immutable problem instance. All powers and gains are linear scale; dB only
/// exists at the configuration/reporting boundary.
struct Scenario {
    std::vector<GbsSite> gbs;
    std::vector<UavRoute> uavs;
    ArrayConfig array;
    Receiver receiver = Receiver::TypeI;

    double p_max = 3.0;        // per-GBS transmit power budget [W]
    double sigma2 = 1e-10;     // receiver noise power [W]
    double kappa = 3.1622776601683794e-05;  // -45 dB reference-distance gain
    double gamma = 0.0;        // minimum illumination power per sensing sample
    int n_slots = 2;
    double max_step = 10.0;    // V_max * Delta_t [m]
    double d_min = 0.0;        // inter-UAV safety distance [m]

    std::vector<AirPoint> sensing_points;

    SolveOptionsSet options;
    unsigned long seed = 0;

    int num_gbs() const { return static_cast<int>(gbs.size()); }
    int num_uavs() const { return static_cast<int>(uavs.size()); }
    int num_samples() const { return static_cast<int>(sensing_points.size()); }

    Scenario with_case(const CaseSpec& c) const {
        Scenario s = *this;
        s.array.orientation = c.orientation;
        s.receiver = c.receiver;
        return s;
    }

    /// Throws std::invalid_argument naming the violated invariant.
    void validate() const;
};

}  // namespace isac
