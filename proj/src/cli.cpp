#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isac/artifacts.hpp"
#include "isac/parallel.hpp"
#include "isac/scenario_io.hpp"

namespace isac::cli {

namespace {

// "LO:HI:STEP" with an optional dBW suffix -> list of linear thresholds.
std::vector<double> parse_gamma_sweep(std::string spec) {
    bool db_scale = false;
    for (const std::string& suffix : {"dBW", "dbw", "dB", "db"}) {
        if (spec.size() > suffix.size() &&
            spec.compare(spec.size() - suffix.size(), suffix.size(), suffix) == 0) {
            db_scale = true;
            spec.erase(spec.size() - suffix.size());
            break;
        }
    }
    double lo = 0.0, hi = 0.0, step = 0.0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0) {
        throw std::runtime_error("--sweep-gamma expects LO:HI:STEP[dBW] with STEP > 0");
    }
    std::vector<double> gammas;
    for (double g = lo; g <= hi + 1e-9 * step; g += step) {
        gammas.push_back(db_scale ? std::pow(10.0, g / 10.0) : g);
    }
    if (gammas.empty()) throw std::runtime_error("--sweep-gamma produced no points");
    return gammas;
}

std::string gamma_dir_name(double gamma) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "gamma_%+.3fdBW", gamma > 0.0 ? to_db(gamma) : -300.0);
    return buf;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"networked ISAC planning: coordinated beamforming + UAV trajectories"};
    std::string scenario_path;
    int case_index = 0;
    std::string benchmark_name = "none";
    std::string sweep_spec;
    std::string out_dir = "out";
    int max_ao_rounds = -1;
    double ao_tol = -1.0;
    double solver_tol = -1.0;
    long seed = -1;
    bool emit_plots = true;
    int threads = 0;

    app.add_option("--scenario", scenario_path, "scenario JSON file")->required();
    app.add_option("--case", case_index, "antenna/receiver case 1..4")
        ->check(CLI::Range(1, 4));
    app.add_option("--benchmark", benchmark_name, "none|straight|isotropic")
        ->check(CLI::IsMember({"none", "straight", "isotropic"}));
    app.add_option("--sweep-gamma", sweep_spec, "LO:HI:STEP[dBW] sensing-threshold sweep");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--max-ao-rounds", max_ao_rounds, "cap on alternating-optimization rounds");
    app.add_option("--ao-tol", ao_tol, "relative AO stopping tolerance");
    app.add_option("--solver-tol", solver_tol, "conic solver tolerance");
    app.add_option("--seed", seed, "seed recorded in artifacts");
    app.add_option("--emit-plots", emit_plots, "write SVG plots");
    app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        set_num_threads(threads);
        Scenario scenario = load_scenario(scenario_path);
        if (case_index > 0) scenario = scenario.with_case(CaseSpec::from_index(case_index));
        if (max_ao_rounds >= 0) scenario.options.max_ao_rounds = max_ao_rounds;
        if (ao_tol > 0.0) scenario.options.ao_tol = ao_tol;
        if (solver_tol > 0.0) scenario.options.solver_tol = solver_tol;
        if (seed >= 0) scenario.seed = static_cast<unsigned long>(seed);

        BenchmarkKind kind = BenchmarkKind::None;
        if (benchmark_name == "straight") kind = BenchmarkKind::StraightFlight;
        if (benchmark_name == "isotropic") kind = BenchmarkKind::Isotropic;

        if (sweep_spec.empty()) {
            const SolveReport report = kind == BenchmarkKind::None
                                           ? solve(scenario)
                                           : run_benchmark(kind, scenario);
            write_artifacts(report, scenario, out_dir, emit_plots);
            std::printf("case %d benchmark %s: avg sum rate %.6f bit/s/Hz over %d slots -> %s\n",
                        report.case_spec.index(), benchmark_name.c_str(),
                        report.rates.total / scenario.n_slots, scenario.n_slots,
                        out_dir.c_str());
            return 0;
        }

        const std::vector<double> gammas = parse_gamma_sweep(sweep_spec);
        std::filesystem::create_directories(out_dir);
        std::vector<SweepPoint> points;
        int feasible_count = 0;
        for (double gamma : gammas) {
            Scenario point_scenario = scenario;
            point_scenario.gamma = gamma;
            SweepPoint point;
            point.gamma = gamma;
            point.dir = (std::filesystem::path(out_dir) / gamma_dir_name(gamma)).string();
            try {
                const SolveReport report = kind == BenchmarkKind::None
                                               ? solve(point_scenario)
                                               : run_benchmark(kind, point_scenario);
                write_artifacts(report, point_scenario, point.dir, emit_plots);
                point.feasible = true;
                point.objective = report.rates.total;
                point.avg_sum_rate = report.rates.total / scenario.n_slots;
                ++feasible_count;
            } catch (const InfeasibleScenario& e) {
                point.feasible = false;
                std::fprintf(stderr, "gamma %s infeasible: %s\n", gamma_dir_name(gamma).c_str(),
                             e.what());
            }
            points.push_back(point);
        }
        write_sweep_csv(points, (std::filesystem::path(out_dir) / "sweep.csv").string());
        if (emit_plots && feasible_count > 0) {
            render_rate_curve(points,
                              (std::filesystem::path(out_dir) / "rate_vs_gamma.svg").string());
        }
        return feasible_count > 0 ? 0 : 2;
    } catch (const InfeasibleScenario& e) {
        std::fprintf(stderr, "infeasible scenario: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace isac::cli
