#include "isac/geometry.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace isac {

double aod_cosine(Orientation orientation, const GbsSite& gbs, const AirPoint& point) {
    if (!(point.altitude > 0.0)) {
        throw std::invalid_argument("aod_cosine: air point altitude must be positive");
    }
    const Eigen::Vector2d offset = point.horizontal - gbs.position;
    const double dist = std::sqrt(offset.squaredNorm() + point.altitude * point.altitude);
    if (orientation == Orientation::Horizontal) {
        // psi = [1, 0]^T, so the numerator is the x-offset.
        return offset.x() / dist;
    }
    return point.altitude / dist;
}

Eigen::VectorXcd steering_vector(double cos_theta, const ArrayConfig& cfg) {
    if (std::abs(cos_theta) > 1.0 + 1e-12) {
        throw std::invalid_argument("steering_vector: |cos_theta| must not exceed 1");
    }
    Eigen::VectorXcd a(cfg.n_antennas);
    const double phase_step = 2.0 * M_PI * cfg.spacing_over_wavelength * cos_theta;
    for (int r = 0; r < cfg.n_antennas; ++r) {
        a(r) = std::polar(1.0, phase_step * static_cast<double>(r));
    }
    return a;
}

ChannelVector channel_vector(const GbsSite& gbs, const AirPoint& point,
                             const ArrayConfig& cfg, double kappa) {
    if (kappa < 0.0) {
        throw std::invalid_argument("channel_vector: kappa must be nonnegative (linear scale)");
    }
    const double gain = std::sqrt(kappa / squared_distance(gbs, point));
    ChannelVector h;
    h.entries = gain * steering_vector(aod_cosine(cfg.orientation, gbs, point), cfg);
    h.gbs_id = gbs.id;
    h.target = point;
    return h;
}

Eigen::MatrixXcd channel_outer(const Eigen::VectorXcd& h) {
    return h * h.adjoint();
}

}  // namespace isac
