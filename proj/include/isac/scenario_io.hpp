#pragma once

#include <string>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

/// Deterministic uniform lattice over a box: count is factored as rows x cols
/// with rows >= cols, rows along y, points at cell centers in row-major
/// order.
std::vector<AirPoint> sample_sensing_grid(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                          double altitude, int count);

/// Parses the single-document JSON scenario format. Power-like values accept
/// either plain numbers (linear watts) or strings with a dB/dBW suffix.
/// Throws std::runtime_error with key context on parse or validation errors.
Scenario load_scenario(const std::string& path);
Scenario load_scenario_from_string(const std::string& text);

/// Canonical serialization (all values linear). load(save(s)) == s.
std::string scenario_to_json_string(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

bool scenario_equal(const Scenario& a, const Scenario& b);

/// "x dB"/"x dBW" string or plain number -> linear value.
double parse_db_or_linear(const std::string& text);

/// Linear -> dB (10 log10).
double to_db(double linear);

}  // namespace isac
