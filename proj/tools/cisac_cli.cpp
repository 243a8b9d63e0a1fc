// Command-line runner for the experiment families.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cisac/experiment.hpp"

using namespace cisac;

namespace {

struct Common {
    std::string scenario;
    std::uint64_t seed = 1;
    int seeds = 1;
    std::string scheme = "proposed";
    std::string out;
    std::string format = "csv";
    int threads = 0;
};

void add_common(CLI::App* cmd, Common& c, bool multi_seed) {
    cmd->add_option("--scenario", c.scenario, "scenario JSON file, or 'default' / 'desk'");
    cmd->add_option("--seed", c.seed, "first seed");
    if (multi_seed) {
        cmd->add_option("--seeds", c.seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
        cmd->add_option("--threads", c.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    }
    cmd->add_option("--scheme", c.scheme, "proposed|optimal_ris|random_ris|no_ris|ss_specific_ris");
    cmd->add_option("--out", c.out, "output file")->required();
    cmd->add_option("--format", c.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
}

ScenarioConfig load_config(const std::string& name) {
    if (name.empty() || name == "default") return default_scenario();
    if (name == "desk") return desk_scenario();
    return load_scenario_file(name);
}

ExperimentSpec make_spec(const Common& c, ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    spec.scheme = parse_scheme(c.scheme);
    for (int i = 0; i < c.seeds; ++i) spec.seeds.push_back(c.seed + static_cast<std::uint64_t>(i));
    spec.threads = c.threads;
    return spec;
}

void report(const RunOutput& out) {
    int failed = 0;
    for (const auto& r : out.records) {
        if (r.error.empty() && r.feasible) continue;
        ++failed;
        std::cerr << "seed " << r.seed << " at (" << r.sweep_x << ", " << r.sweep_y << "): "
                  << (r.error.empty() ? "solution violates the constraints" : r.error) << "\n";
    }
    std::cerr << out.records.size() - failed << "/" << out.records.size() << " points succeeded\n";
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f || !(f << text)) throw std::runtime_error("cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cognitive-radio ISAC beamforming experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Common c;
    std::string trace_path;
    auto* solve = app.add_subcommand("solve", "solve one scenario and seed");
    add_common(solve, c, false);
    solve->add_option("--trace", trace_path, "write the iterate trace as CSV");

    std::string kind = "power_sweep";
    std::vector<double> grid;
    auto* sweep = app.add_subcommand("sweep", "sweep one parameter over a grid");
    add_common(sweep, c, true);
    sweep->add_option("--kind", kind, "power_sweep|ris_sweep|ms_antenna_sweep|tau_sweep")
        ->check(CLI::IsMember({"power_sweep", "ris_sweep", "ms_antenna_sweep", "tau_sweep"}));
    sweep->add_option("--grid", grid, "grid values (dBm, element counts, or tau/T)")->delimiter(',')->required();

    std::vector<double> pf_grid;
    std::string records_path;
    auto* roc = app.add_subcommand("roc", "detection curves of the final design");
    add_common(roc, c, true);
    roc->add_option("--pf", pf_grid, "false-alarm targets (default: 25 log-spaced points)")->delimiter(',');
    roc->add_option("--records", records_path, "also write the per-seed result records");

    auto* cells = app.add_subcommand("grid", "weighted PEB over RIS placements");
    add_common(cells, c, true);

    auto* cdf = app.add_subcommand("cdf", "distribution of outer iteration counts");
    add_common(cdf, c, true);
    cdf->add_option("--records", records_path, "also write the per-seed result records");

    CLI11_PARSE(app, argc, argv);

    try {
        const ScenarioConfig cfg = load_config(c.scenario);
        const Format format = parse_format(c.format);

        if (*solve) {
            ExperimentSpec spec = make_spec(c, ExperimentKind::single_solve);
            SolveOutcome o;
            ResultRecord rec;
            try {
                o = solve_point(cfg, spec.scheme, c.seed);
                rec = o.record;
            } catch (const std::exception& e) {
                rec.scheme = c.scheme;
                rec.seed = c.seed;
                rec.error = e.what();
                emit({rec}, format, c.out, make_manifest(spec, cfg));
                std::cerr << "solve failed: " << e.what() << "\n";
                return 2;
            }
            emit({rec}, format, c.out, make_manifest(spec, cfg));
            if (!trace_path.empty()) write_text(trace_path, trace_csv(o.solution.trace));
            std::printf("weighted_min_sinr %.6g  weighted_peb %.6g  tau %.6g  pd %.6f  iterations %d\n",
                        rec.weighted_min_sinr, rec.weighted_peb, rec.tau, rec.pd, rec.iterations);
            if (!rec.feasible) {
                std::cerr << "solution violates the constraints\n";
                return 2;
            }
            return 0;
        }

        ExperimentSpec spec;
        if (*sweep) {
            spec = make_spec(c, parse_kind(kind));
            spec.grid = grid;
        } else if (*roc) {
            spec = make_spec(c, ExperimentKind::roc);
            spec.grid = pf_grid.empty() ? default_pf_grid() : pf_grid;
        } else if (*cells) {
            spec = make_spec(c, ExperimentKind::ris_location_grid);
            spec.cells = default_location_cells();
        } else {
            spec = make_spec(c, ExperimentKind::convergence_cdf);
        }

        RunOutput out = run(spec, cfg);
        const Manifest manifest = make_manifest(spec, cfg);
        if (*roc) {
            if (!out.roc.empty()) emit_roc(out.roc, format, c.out, manifest);
            if (!records_path.empty()) emit(out.records, format, records_path, manifest);
        } else if (*cdf) {
            std::ostringstream s;
            const auto steps = convergence_cdf(out.records);
            if (format == Format::csv) {
                s << "iterations,fraction\n";
                for (auto [it, frac] : steps) s << it << ',' << frac << '\n';
            } else {
                nlohmann::json j = nlohmann::json::array();
                for (auto [it, frac] : steps) j.push_back({{"iterations", it}, {"fraction", frac}});
                s << j.dump(2) << '\n';
            }
            write_text(c.out, s.str());
            if (!records_path.empty()) emit(out.records, format, records_path, manifest);
        } else {
            emit(out.records, format, c.out, manifest);
        }
        report(out);
        return out.any_failed ? 2 : 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
