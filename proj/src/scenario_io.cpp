#include "isac/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace isac {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<AirPoint> sample_sensing_grid(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                                          double altitude, int count) {
    if (count < 1) throw std::invalid_argument("sensing grid: count must be >= 1 (Q >= 1)");
    if (!(hi.x() > lo.x()) || !(hi.y() > lo.y())) {
        throw std::invalid_argument("sensing grid: box extents must be positive");
    }
    int cols = 1;
    for (int d = static_cast<int>(std::sqrt(static_cast<double>(count))); d >= 1; --d) {
        if (count % d == 0) {
            cols = d;
            break;
        }
    }
    const int rows = count / cols;
    std::vector<AirPoint> points;
    points.reserve(count);
    const double width = hi.x() - lo.x();
    const double height = hi.y() - lo.y();
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            AirPoint p;
            p.horizontal = Eigen::Vector2d(lo.x() + (j + 0.5) * width / cols,
                                           lo.y() + (i + 0.5) * height / rows);
            p.altitude = altitude;
            points.push_back(p);
        }
    }
    return points;
}

double parse_db_or_linear(const std::string& text) {
    std::istringstream is(text);
    double value = 0.0;
    is >> value;
    if (is.fail()) throw std::runtime_error("cannot parse numeric value from '" + text + "'");
    std::string suffix;
    is >> suffix;
    if (suffix.empty()) return value;
    if (suffix == "dB" || suffix == "dBW" || suffix == "db" || suffix == "dbw") {
        return std::pow(10.0, value / 10.0);
    }
    throw std::runtime_error("unknown unit suffix '" + suffix + "' in '" + text + "'");
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

namespace {

double power_field(const json& j, const std::string& key) {
    if (!j.contains(key)) throw std::runtime_error("scenario: missing required key '" + key + "'");
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_db_or_linear(v.get<std::string>());
    throw std::runtime_error("scenario: key '" + key + "' must be a number or a dB string");
}

double number_field(const json& j, const std::string& key) {
    if (!j.contains(key)) throw std::runtime_error("scenario: missing required key '" + key + "'");
    return j.at(key).get<double>();
}

Scenario parse_scenario(const json& j) {
    Scenario s;
    if (!j.contains("gbs")) throw std::runtime_error("scenario: missing required key 'gbs'");
    int id = 0;
    for (const auto& g : j.at("gbs")) {
        GbsSite site;
        site.id = id++;
        site.position = Eigen::Vector2d(g.at(0).get<double>(), g.at(1).get<double>());
        s.gbs.push_back(site);
    }
    if (!j.contains("uavs")) throw std::runtime_error("scenario: missing required key 'uavs'");
    for (const auto& u : j.at("uavs")) {
        UavRoute route;
        route.initial =
            Eigen::Vector2d(u.at("initial").at(0).get<double>(), u.at("initial").at(1).get<double>());
        route.final =
            Eigen::Vector2d(u.at("final").at(0).get<double>(), u.at("final").at(1).get<double>());
        route.altitude = u.at("altitude_m").get<double>();
        s.uavs.push_back(route);
    }
    if (!j.contains("array")) throw std::runtime_error("scenario: missing required key 'array'");
    const auto& arr = j.at("array");
    s.array.n_antennas = arr.at("antennas").get<int>();
    s.array.spacing_over_wavelength = arr.value("spacing_over_wavelength", 0.5);
    const std::string ori = arr.value("orientation", "horizontal");
    if (ori == "horizontal") {
        s.array.orientation = Orientation::Horizontal;
    } else if (ori == "vertical") {
        s.array.orientation = Orientation::Vertical;
    } else {
        throw std::runtime_error("scenario: array.orientation must be horizontal or vertical");
    }
    const std::string recv = j.value("receiver", "type1");
    if (recv == "type1" || recv == "typeI" || recv == "type-1") {
        s.receiver = Receiver::TypeI;
    } else if (recv == "type2" || recv == "typeII" || recv == "type-2") {
        s.receiver = Receiver::TypeII;
    } else {
        throw std::runtime_error("scenario: receiver must be type1 or type2");
    }

    s.p_max = power_field(j, "p_max_w");
    s.sigma2 = power_field(j, "noise_power");
    s.kappa = power_field(j, "kappa");
    s.gamma = j.contains("gamma") ? power_field(j, "gamma") : 0.0;
    s.n_slots = static_cast<int>(number_field(j, "slots"));
    s.max_step = number_field(j, "max_step_m");
    s.d_min = j.contains("d_min_m") ? j.at("d_min_m").get<double>() : 0.0;

    if (!j.contains("sensing")) throw std::runtime_error("scenario: missing required key 'sensing'");
    const auto& sensing = j.at("sensing");
    if (sensing.contains("points")) {
        for (const auto& p : sensing.at("points")) {
            AirPoint point;
            point.horizontal = Eigen::Vector2d(p.at("x").get<double>(), p.at("y").get<double>());
            point.altitude = p.at("altitude_m").get<double>();
            s.sensing_points.push_back(point);
        }
    } else if (sensing.contains("box")) {
        const auto& box = sensing.at("box");
        s.sensing_points = sample_sensing_grid(
            Eigen::Vector2d(box.at(0).get<double>(), box.at(1).get<double>()),
            Eigen::Vector2d(box.at(2).get<double>(), box.at(3).get<double>()),
            sensing.at("altitude_m").get<double>(), sensing.at("count").get<int>());
    } else {
        throw std::runtime_error("scenario: sensing must provide 'points' or 'box'");
    }

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        auto& o = s.options;
        o.solver_tol = t.value("solver_tol", o.solver_tol);
        o.solver_max_iters = t.value("solver_max_iters", o.solver_max_iters);
        o.ao_tol = t.value("ao_tol", o.ao_tol);
        o.max_ao_rounds = t.value("max_ao_rounds", o.max_ao_rounds);
        o.bf_eps = t.value("bf_eps", o.bf_eps);
        o.max_sca_iters = t.value("max_sca_iters", o.max_sca_iters);
        o.trust_omega0 = t.value("trust_omega0", o.trust_omega0);
        o.trust_xi = t.value("trust_xi", o.trust_xi);
        o.max_trust_iters = t.value("max_trust_iters", o.max_trust_iters);
    }
    s.seed = j.value("seed", 0UL);

    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("scenario validation failed: ") + e.what());
    }
    return s;
}

ordered_json to_json(const Scenario& s) {
    ordered_json j;
    j["gbs"] = ordered_json::array();
    for (const auto& g : s.gbs) j["gbs"].push_back({g.position.x(), g.position.y()});
    j["uavs"] = ordered_json::array();
    for (const auto& u : s.uavs) {
        ordered_json uj;
        uj["initial"] = {u.initial.x(), u.initial.y()};
        uj["final"] = {u.final.x(), u.final.y()};
        uj["altitude_m"] = u.altitude;
        j["uavs"].push_back(uj);
    }
    j["array"] = {{"antennas", s.array.n_antennas},
                  {"spacing_over_wavelength", s.array.spacing_over_wavelength},
                  {"orientation",
                   s.array.orientation == Orientation::Horizontal ? "horizontal" : "vertical"}};
    j["receiver"] = s.receiver == Receiver::TypeI ? "type1" : "type2";
    j["p_max_w"] = s.p_max;
    j["noise_power"] = s.sigma2;
    j["kappa"] = s.kappa;
    j["gamma"] = s.gamma;
    j["slots"] = s.n_slots;
    j["max_step_m"] = s.max_step;
    j["d_min_m"] = s.d_min;
    ordered_json pts = ordered_json::array();
    for (const auto& p : s.sensing_points) {
        pts.push_back({{"x", p.horizontal.x()}, {"y", p.horizontal.y()}, {"altitude_m", p.altitude}});
    }
    j["sensing"] = {{"points", pts}};
    j["tolerances"] = {{"solver_tol", s.options.solver_tol},
                       {"solver_max_iters", s.options.solver_max_iters},
                       {"ao_tol", s.options.ao_tol},
                       {"max_ao_rounds", s.options.max_ao_rounds},
                       {"bf_eps", s.options.bf_eps},
                       {"max_sca_iters", s.options.max_sca_iters},
                       {"trust_omega0", s.options.trust_omega0},
                       {"trust_xi", s.options.trust_xi},
                       {"max_trust_iters", s.options.max_trust_iters}};
    j["seed"] = s.seed;
    return j;
}

}  // namespace

Scenario load_scenario_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("scenario parse error: ") + e.what());
    }
    return parse_scenario(j);
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return load_scenario_from_string(buffer.str());
}

std::string scenario_to_json_string(const Scenario& scenario) {
    return to_json(scenario).dump(2);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scenario file: " + path);
    out << scenario_to_json_string(scenario) << "\n";
}

bool scenario_equal(const Scenario& a, const Scenario& b) {
    return scenario_to_json_string(a) == scenario_to_json_string(b);
}

}  // namespace isac
