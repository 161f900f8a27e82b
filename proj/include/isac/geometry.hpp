#pragma once

#include <Eigen/Dense>

namespace isac {

/// ULA mounting axis at a ground base station.
enum class Orientation { Horizontal, Vertical };

/// Ground base station at zero altitude.
struct GbsSite {
    int id = 0;
    Eigen::Vector2d position{0.0, 0.0};  // (x, y) in meters
};

/// A point in the air: horizontal coordinate plus a strictly positive altitude.
struct AirPoint {
    Eigen::Vector2d horizontal{0.0, 0.0};
    double altitude = 0.0;
};

struct ArrayConfig {
    int n_antennas = 4;
    double spacing_over_wavelength = 0.5;
    Orientation orientation = Orientation::Horizontal;
};

/// LoS channel from one GBS toward one air point.
struct ChannelVector {
    Eigen::VectorXcd entries;
    int gbs_id = 0;
    AirPoint target;

    double squared_norm() const { return entries.squaredNorm(); }
};

/// Cosine of the angle of departure from the array axis toward the point.
/// Horizontal arrays measure against the x-axis projection, vertical arrays
/// against the zenith direction. The angle itself is never needed.
double aod_cosine(Orientation orientation, const GbsSite& gbs, const AirPoint& point);

/// Per-antenna phase profile; entry r is exp(j*2*pi*(d/lambda)*r*cos_theta).
Eigen::VectorXcd steering_vector(double cos_theta, const ArrayConfig& cfg);

/// LoS channel vector: sqrt(kappa / squared 3D distance) times the steering vector.
ChannelVector channel_vector(const GbsSite& gbs, const AirPoint& point,
                             const ArrayConfig& cfg, double kappa);

/// Rank-one outer product h h^H.
Eigen::MatrixXcd channel_outer(const Eigen::VectorXcd& h);

/// Squared 3D distance between a GBS (altitude 0) and an air point.
inline double squared_distance(const GbsSite& gbs, const AirPoint& point) {
    return (point.horizontal - gbs.position).squaredNorm() + point.altitude * point.altitude;
}

}  // namespace isac
