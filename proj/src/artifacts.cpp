#include "isac/artifacts.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "isac/scenario_io.hpp"

namespace isac {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

const char* benchmark_name(BenchmarkKind kind) {
    switch (kind) {
        case BenchmarkKind::StraightFlight: return "straight";
        case BenchmarkKind::Isotropic: return "isotropic";
        default: return "none";
    }
}

// five-stop viridis-like ramp on t in [0, 1]
std::string ramp_color(double t) {
    static const double stops[5][3] = {{0.267, 0.005, 0.329},
                                       {0.229, 0.322, 0.546},
                                       {0.127, 0.566, 0.551},
                                       {0.369, 0.789, 0.383},
                                       {0.993, 0.906, 0.144}};
    t = std::min(1.0, std::max(0.0, t));
    const double x = t * 4.0;
    const int i = std::min(3, static_cast<int>(x));
    const double f = x - i;
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                  static_cast<int>(255 * (stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                  static_cast<int>(255 * (stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                  static_cast<int>(255 * (stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
    return buf;
}

struct SvgCanvas {
    std::string body;
    double width = 640.0;
    double height = 640.0;
    Eigen::Vector2d lo;
    Eigen::Vector2d hi;

    double px(double x) const { return (x - lo.x()) / (hi.x() - lo.x()) * width; }
    double py(double y) const { return height - (y - lo.y()) / (hi.y() - lo.y()) * height; }

    void rect(double x0, double y0, double x1, double y1, const std::string& color) {
        body += "<rect x=\"" + fmt(px(x0)) + "\" y=\"" + fmt(py(y1)) + "\" width=\"" +
                fmt(px(x1) - px(x0)) + "\" height=\"" + fmt(py(y0) - py(y1)) + "\" fill=\"" +
                color + "\"/>\n";
    }
    void line(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const std::string& color,
              double w) {
        body += "<line x1=\"" + fmt(px(a.x())) + "\" y1=\"" + fmt(py(a.y())) + "\" x2=\"" +
                fmt(px(b.x())) + "\" y2=\"" + fmt(py(b.y())) + "\" stroke=\"" + color +
                "\" stroke-width=\"" + fmt(w) + "\"/>\n";
    }
    void marker_plus(const Eigen::Vector2d& p, const std::string& color) {
        const double r = 6.0;
        body += "<path d=\"M" + fmt(px(p.x()) - r) + " " + fmt(py(p.y())) + " h" + fmt(2 * r) +
                " M" + fmt(px(p.x())) + " " + fmt(py(p.y()) - r) + " v" + fmt(2 * r) +
                "\" stroke=\"" + color + "\" stroke-width=\"2.5\"/>\n";
    }
    void marker_triangle(const Eigen::Vector2d& p, const std::string& color) {
        const double r = 7.0;
        body += "<path d=\"M" + fmt(px(p.x())) + " " + fmt(py(p.y()) - r) + " L" +
                fmt(px(p.x()) - r) + " " + fmt(py(p.y()) + r) + " L" + fmt(px(p.x()) + r) + " " +
                fmt(py(p.y()) + r) + " Z\" fill=\"" + color + "\"/>\n";
    }
    void text(const Eigen::Vector2d& p, const std::string& s, const std::string& color) {
        body += "<text x=\"" + fmt(px(p.x()) + 8) + "\" y=\"" + fmt(py(p.y()) - 8) +
                "\" fill=\"" + color + "\" font-size=\"13\" font-family=\"sans-serif\">" + s +
                "</text>\n";
    }
    std::string finish() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
               "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
               fmt(height) + "\">\n" + body + "</svg>\n";
    }
};

// Bounding box covering GBSs, trajectories, and sensing points with margin.
void scene_box(const Scenario& scenario, const TrajectoryPlan& traj, Eigen::Vector2d& lo,
               Eigen::Vector2d& hi) {
    lo = Eigen::Vector2d(1e300, 1e300);
    hi = Eigen::Vector2d(-1e300, -1e300);
    auto grow = [&](const Eigen::Vector2d& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    };
    for (const auto& g : scenario.gbs) grow(g.position);
    for (const auto& p : scenario.sensing_points) grow(p.horizontal);
    for (const auto& route : traj.q) {
        for (const auto& q : route) grow(q);
    }
    const Eigen::Vector2d margin = 0.08 * (hi - lo) + Eigen::Vector2d(10.0, 10.0);
    lo -= margin;
    hi += margin;
}

int default_plot_slot(int n_slots) { return std::min(9, n_slots - 1); }

}  // namespace

Eigen::MatrixXd illumination_heatmap(const Scenario& scenario, const BeamformingSolution& beams,
                                     int slot, const Eigen::Vector2d& lo,
                                     const Eigen::Vector2d& hi, double altitude, int nx, int ny) {
    Eigen::MatrixXd grid(ny, nx);
    Scenario probe = scenario;  // reuse the illumination path with probe points
    probe.sensing_points.clear();
    for (int i = 0; i < ny; ++i) {
        for (int j = 0; j < nx; ++j) {
            AirPoint p;
            p.horizontal = Eigen::Vector2d(lo.x() + (j + 0.5) * (hi.x() - lo.x()) / nx,
                                           lo.y() + (i + 0.5) * (hi.y() - lo.y()) / ny);
            p.altitude = altitude;
            probe.sensing_points.push_back(p);
        }
    }
    const SensingGeometry sensing = SensingGeometry::build(probe);
    for (int i = 0; i < ny; ++i) {
        for (int j = 0; j < nx; ++j) {
            grid(i, j) = illumination_power(i * nx + j, beams, slot, probe, sensing);
        }
    }
    return grid;
}

std::vector<std::string> render_plots(const SolveReport& report, const Scenario& scenario,
                                      const std::string& out_dir) {
    std::vector<std::string> files;
    const fs::path dir = fs::path(out_dir) / "plots";
    fs::create_directories(dir);

    Eigen::Vector2d lo, hi;
    scene_box(scenario, report.traj, lo, hi);
    const int slot = default_plot_slot(scenario.n_slots);

    {  // illumination heatmap with markers and association arrows
        SvgCanvas svg;
        svg.lo = lo;
        svg.hi = hi;
        const int nx = 80, ny = 80;
        const double altitude = scenario.sensing_points.front().altitude;
        const Eigen::MatrixXd grid =
            illumination_heatmap(scenario, report.beams, slot, lo, hi, altitude, nx, ny);
        const double vmax = grid.maxCoeff();
        const double vmin = vmax > 0.0 ? vmax * 1e-4 : 1.0;
        for (int i = 0; i < ny; ++i) {
            for (int j = 0; j < nx; ++j) {
                const double x0 = lo.x() + j * (hi.x() - lo.x()) / nx;
                const double x1 = lo.x() + (j + 1) * (hi.x() - lo.x()) / nx;
                const double y0 = lo.y() + i * (hi.y() - lo.y()) / ny;
                const double y1 = lo.y() + (i + 1) * (hi.y() - lo.y()) / ny;
                const double t =
                    std::log10(std::max(grid(i, j), vmin) / vmin) / std::log10(vmax / vmin);
                svg.rect(x0, y0, x1, y1, ramp_color(t));
            }
        }
        for (const auto& p : scenario.sensing_points) svg.marker_plus(p.horizontal, "#ffffff");
        for (int k = 0; k < report.traj.num_uavs(); ++k) {
            const int m = report.assoc.serving(k, slot);
            svg.line(scenario.gbs[m].position, report.traj.q[k][slot], "#ff4070", 2.0);
            svg.marker_plus(report.traj.q[k][slot], "#ff4070");
        }
        for (const auto& g : scenario.gbs) {
            svg.marker_triangle(g.position, "#ffffff");
            svg.text(g.position, "GBS " + std::to_string(g.id), "#ffffff");
        }
        const std::string path = (dir / "illumination_heatmap.svg").string();
        write_text(path, svg.finish());
        files.push_back(path);
    }

    {  // trajectory overlay
        SvgCanvas svg;
        svg.lo = lo;
        svg.hi = hi;
        svg.rect(lo.x(), lo.y(), hi.x(), hi.y(), "#10141c");
        for (const auto& p : scenario.sensing_points) svg.marker_plus(p.horizontal, "#3c6a8c");
        static const char* palette[] = {"#ffb000", "#64c8ff", "#8cff64", "#ff6ea0"};
        for (int k = 0; k < report.traj.num_uavs(); ++k) {
            const std::string color = palette[k % 4];
            for (int n = 0; n + 1 < report.traj.num_slots(); ++n) {
                svg.line(report.traj.q[k][n], report.traj.q[k][n + 1], color, 2.0);
            }
            svg.marker_plus(report.traj.q[k].front(), color);
            svg.marker_plus(report.traj.q[k].back(), color);
            svg.text(report.traj.q[k].front(), "UAV " + std::to_string(k), color);
        }
        for (const auto& g : scenario.gbs) {
            svg.marker_triangle(g.position, "#ffffff");
            svg.text(g.position, "GBS " + std::to_string(g.id), "#ffffff");
        }
        const std::string path = (dir / "trajectories.svg").string();
        write_text(path, svg.finish());
        files.push_back(path);
    }
    return files;
}

RunArtifacts write_artifacts(const SolveReport& report, const Scenario& scenario,
                             const std::string& out_dir, bool emit_plots) {
    fs::create_directories(out_dir);
    RunArtifacts art;
    art.dir = out_dir;

    const int N = scenario.n_slots;
    const int K = scenario.num_uavs();
    const int Q = scenario.num_samples();

    {  // rates.csv: one row per slot, one column per UAV (row sum = slot sum rate)
        std::string csv = "slot";
        for (int k = 0; k < K; ++k) csv += ",uav_" + std::to_string(k);
        csv += "\n";
        for (int n = 0; n < N; ++n) {
            csv += std::to_string(n);
            for (int k = 0; k < K; ++k) csv += "," + fmt(report.rates.per_uav_slot(k, n));
            csv += "\n";
        }
        art.rates_csv = (fs::path(out_dir) / "rates.csv").string();
        write_text(art.rates_csv, csv);
    }
    {  // trajectory.csv: slot,uav,x_m,y_m
        std::string csv = "slot,uav,x_m,y_m\n";
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) {
                csv += std::to_string(n) + "," + std::to_string(k) + "," +
                       fmt(report.traj.q[k][n].x()) + "," + fmt(report.traj.q[k][n].y()) + "\n";
            }
        }
        art.trajectory_csv = (fs::path(out_dir) / "trajectory.csv").string();
        write_text(art.trajectory_csv, csv);
    }
    {  // illumination.csv: one row per sample, one column per slot
        std::string csv = "sample";
        for (int n = 0; n < N; ++n) csv += ",slot_" + std::to_string(n);
        csv += "\n";
        for (int q = 0; q < Q; ++q) {
            csv += std::to_string(q);
            for (int n = 0; n < N; ++n) csv += "," + fmt(report.illumination(q, n));
            csv += "\n";
        }
        art.illumination_csv = (fs::path(out_dir) / "illumination.csv").string();
        write_text(art.illumination_csv, csv);
    }
    {  // association.csv: slot,uav,gbs
        std::string csv = "slot,uav,gbs\n";
        for (int n = 0; n < N; ++n) {
            for (int k = 0; k < K; ++k) {
                csv += std::to_string(n) + "," + std::to_string(k) + "," +
                       std::to_string(report.assoc.serving(k, n)) + "\n";
            }
        }
        art.association_csv = (fs::path(out_dir) / "association.csv").string();
        write_text(art.association_csv, csv);
    }

    {  // report.json
        ordered_json j;
        j["case"] = report.case_spec.index();
        j["benchmark"] = benchmark_name(report.benchmark);
        j["gamma_w"] = report.gamma;
        j["gamma_dbw"] = report.gamma > 0.0 ? to_db(report.gamma) : -300.0;
        j["objective_total"] = report.rates.total;
        j["avg_sum_rate"] = report.rates.total / N;
        j["ao_history"] = report.ao_history;
        j["bf_histories"] = report.bf_histories;
        j["traj_histories"] = report.traj_histories;
        j["per_slot_sum_rate"] = std::vector<double>(report.rates.per_slot.data(),
                                                     report.rates.per_slot.data() + N);
        ordered_json per_uav = ordered_json::array();
        for (int k = 0; k < K; ++k) {
            std::vector<double> row(N);
            for (int n = 0; n < N; ++n) row[n] = report.rates.per_uav_slot(k, n);
            per_uav.push_back(row);
        }
        j["per_uav_slot_rate"] = per_uav;
        j["min_illumination_w"] = report.min_illumination;
        j["max_gbs_power_w"] = report.max_gbs_power;
        j["reconstruction"] = {{"solves", report.recon_stats.solves},
                               {"max_objective_change", report.recon_stats.max_objective_change},
                               {"max_power_change", report.recon_stats.max_power_change},
                               {"max_illum_change", report.recon_stats.max_illum_change},
                               {"max_eig_ratio", report.recon_stats.max_eig_ratio}};
        j["conic_failures"] = report.conic_failures;
        j["timings_s"] = {{"association", report.timings.association_s},
                          {"beamforming", report.timings.beamforming_s},
                          {"trajectory", report.timings.trajectory_s},
                          {"total", report.timings.total_s}};
        j["seed"] = scenario.seed;
        j["scenario"] = ordered_json::parse(scenario_to_json_string(scenario));
        art.report_json = (fs::path(out_dir) / "report.json").string();
        write_text(art.report_json, j.dump(2) + "\n");
    }

    if (emit_plots) {
        try {
            art.plots = render_plots(report, scenario, out_dir);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "warning: plot rendering failed: %s\n", e.what());
        }
    }
    return art;
}

void write_sweep_csv(const std::vector<SweepPoint>& points, const std::string& path) {
    std::string csv = "gamma_w,gamma_dbw,feasible,objective_total,avg_sum_rate,dir\n";
    for (const auto& p : points) {
        csv += fmt(p.gamma) + "," + fmt(p.gamma > 0.0 ? to_db(p.gamma) : -300.0) + "," +
               (p.feasible ? "1" : "0") + "," + fmt(p.objective) + "," + fmt(p.avg_sum_rate) +
               "," + p.dir + "\n";
    }
    write_text(path, csv);
}

void render_rate_curve(const std::vector<SweepPoint>& points, const std::string& path) {
    std::vector<const SweepPoint*> feasible;
    for (const auto& p : points) {
        if (p.feasible) feasible.push_back(&p);
    }
    if (feasible.empty()) return;

    const double w = 640, h = 480, m = 60;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto* p : feasible) {
        const double x = to_db(p->gamma);
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, p->avg_sum_rate);
        yhi = std::max(yhi, p->avg_sum_rate);
    }
    if (xhi - xlo < 1e-9) xhi = xlo + 1.0;
    if (yhi - ylo < 1e-9) yhi = ylo + 1.0;
    auto px = [&](double x) { return m + (x - xlo) / (xhi - xlo) * (w - 2 * m); };
    auto py = [&](double y) { return h - m - (y - ylo) / (yhi - ylo) * (h - 2 * m); };

    std::string body;
    body += "<rect width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"#ffffff\"/>\n";
    body += "<line x1=\"" + fmt(m) + "\" y1=\"" + fmt(h - m) + "\" x2=\"" + fmt(w - m) +
            "\" y2=\"" + fmt(h - m) + "\" stroke=\"#000\"/>\n";
    body += "<line x1=\"" + fmt(m) + "\" y1=\"" + fmt(m) + "\" x2=\"" + fmt(m) + "\" y2=\"" +
            fmt(h - m) + "\" stroke=\"#000\"/>\n";
    std::string poly;
    for (const auto* p : feasible) {
        poly += fmt(px(to_db(p->gamma))) + "," + fmt(py(p->avg_sum_rate)) + " ";
        body += "<circle cx=\"" + fmt(px(to_db(p->gamma))) + "\" cy=\"" +
                fmt(py(p->avg_sum_rate)) + "\" r=\"4\" fill=\"#2060c0\"/>\n";
    }
    body += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"#2060c0\" stroke-width=\"2\"/>\n";
    body += "<text x=\"" + fmt(w / 2 - 90) + "\" y=\"" + fmt(h - 18) +
            "\" font-size=\"14\" font-family=\"sans-serif\">illumination threshold [dBW]</text>\n";
    body += "<text x=\"14\" y=\"" + fmt(m - 14) +
            "\" font-size=\"14\" font-family=\"sans-serif\">average sum rate [bit/s/Hz]</text>\n";
    write_text(path, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) +
                         "\" height=\"" + fmt(h) + "\">\n" + body + "</svg>\n");
}

}  // namespace isac
