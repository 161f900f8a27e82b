#include "isac/scenario.hpp"

#include <cmath>

namespace isac {

CaseSpec CaseSpec::from_index(int index) {
    switch (index) {
        case 1: return {Orientation::Horizontal, Receiver::TypeI};
        case 2: return {Orientation::Horizontal, Receiver::TypeII};
        case 3: return {Orientation::Vertical, Receiver::TypeI};
        case 4: return {Orientation::Vertical, Receiver::TypeII};
        default: throw std::invalid_argument("CaseSpec: case index must be in 1..4");
    }
}

int CaseSpec::index() const {
    const int base = orientation == Orientation::Horizontal ? 1 : 3;
    return base + (receiver == Receiver::TypeII ? 1 : 0);
}

void Scenario::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("scenario: " + what); };

    if (gbs.empty()) fail("at least one GBS is required");
    for (std::size_t m = 0; m < gbs.size(); ++m) {
        if (gbs[m].id != static_cast<int>(m)) fail("GBS ids must be contiguous from 0");
        if (!gbs[m].position.allFinite()) fail("GBS positions must be finite");
    }
    if (uavs.empty()) fail("at least one UAV is required");
    for (const auto& u : uavs) {
        if (!(u.altitude > 0.0)) fail("UAV altitude must be strictly positive");
        if (!u.initial.allFinite() || !u.final.allFinite()) fail("UAV endpoints must be finite");
    }
    if (array.n_antennas < 1) fail("n_antennas must be >= 1");
    if (!(array.spacing_over_wavelength > 0.0)) fail("spacing_over_wavelength must be positive");
    if (!(p_max > 0.0)) fail("p_max must be positive");
    if (!(sigma2 > 0.0)) fail("sigma2 must be positive");
    if (!(kappa > 0.0)) fail("kappa must be positive");
    if (gamma < 0.0) fail("gamma must be nonnegative");
    if (n_slots < 2) fail("n_slots must be >= 2");
    if (!(max_step > 0.0)) fail("max_step must be positive");
    if (d_min < 0.0) fail("d_min must be nonnegative");
    if (sensing_points.empty()) fail("at least one sensing point is required (Q >= 1)");
    for (const auto& p : sensing_points) {
        if (!(p.altitude > 0.0)) fail("sensing point altitude must be strictly positive");
    }
    for (const auto& u : uavs) {
        const double reach = static_cast<double>(n_slots - 1) * max_step;
        if ((u.final - u.initial).norm() > reach + 1e-9) {
            fail("UAV endpoints unreachable: ||qF - qI|| exceeds (N-1) * max_step");
        }
    }
}

}  // namespace isac
