#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cisac/bcd.hpp"
#include "cisac/scenario.hpp"
#include "cisac/sensing.hpp"

namespace cisac {

inline constexpr const char* kToolVersion = "0.1.0";

enum class Scheme { proposed, optimal_ris, random_ris, no_ris, ss_specific_ris };
const char* to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

enum class ExperimentKind {
    power_sweep,       // grid: P_SBS in dBm
    ris_sweep,         // grid: N_R
    ms_antenna_sweep,  // grid: N_M
    ris_location_grid, // cells: RIS positions
    roc,               // grid: false-alarm targets
    tau_sweep,         // grid: tau / T
    convergence_cdf,
    single_solve,
};
const char* to_string(ExperimentKind k);
ExperimentKind parse_kind(std::string_view name);

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::single_solve;
    Scheme scheme = Scheme::proposed;
    std::vector<double> grid;
    std::vector<Point2> cells;  // ris_location_grid only
    std::vector<std::uint64_t> seeds;
    int threads = 0;            // 0: hardware concurrency
};

// Rectangular RIS placement grid x in [-20, 90], y in [-50, 60], 10 m step.
std::vector<Point2> default_location_cells();

void validate(const ExperimentSpec& spec);

struct ResultRecord {
    std::string scheme;
    std::uint64_t seed = 0;
    double sweep_x = 0.0;
    double sweep_y = 0.0;
    double weighted_min_sinr = 0.0;
    double weighted_sum_sinr = 0.0;
    double weighted_peb = 0.0;
    std::vector<double> peb;
    std::vector<double> rate;
    double pd = 0.0;
    double pf = 0.0;
    double tau = 0.0;
    int iterations = 0;
    double wall_time = 0.0;
    bool feasible = false;
    std::string error;  // empty on success
};

// Field-wise equality with NaN == NaN.
bool same_record(const ResultRecord& a, const ResultRecord& b);

struct RocRecord {
    double pf = 0.0;
    double pd = 0.0;
    double one_minus_pd = 0.0;
    std::string scheme;
    std::uint64_t seed = 0;
};

struct RunOutput {
    std::vector<ResultRecord> records;  // ordered by (grid point, seed)
    std::vector<RocRecord> roc;         // roc kind only
    bool any_failed = false;
};

// One scheme at one configuration and seed.
struct SolveOutcome {
    ResultRecord record;
    BcdResult solution;
    ChannelSet channels;
    NodePositions positions;
    double epsilon = 0.0;
};

SolveOutcome solve_point(const ScenarioConfig& cfg, Scheme scheme, std::uint64_t seed,
                         std::optional<double> fixed_tau = std::nullopt);

// Weighted PEB of a solution; NaN entries when a FIM is singular.
std::vector<double> solution_pebs(const ScenarioConfig& cfg, const NodePositions& pos, const CMat& W,
                                  const CVec& phi, double tau, std::uint64_t seed, bool ris_present);

// ss_specific_ris phases: principal eigenvector of the sensing lift.
CVec sensing_max_ris(const ChannelSet& ch);

RunOutput run(const ExperimentSpec& spec, const ScenarioConfig& cfg);

enum class Format { csv, json };
Format parse_format(std::string_view name);

std::string records_csv(const std::vector<ResultRecord>& records);
std::string records_json(const std::vector<ResultRecord>& records);
std::vector<ResultRecord> parse_records(std::string_view text, Format format);

std::string roc_csv(const std::vector<RocRecord>& points);
std::string roc_json(const std::vector<RocRecord>& points);

struct Manifest {
    std::string kind;
    std::string scheme;
    std::vector<std::uint64_t> seeds;
    std::vector<double> grid;
    std::uint64_t config_hash = 0;
    std::string tool_version = kToolVersion;
    std::string timestamp;
};

std::string manifest_json(const Manifest& m);
Manifest make_manifest(const ExperimentSpec& spec, const ScenarioConfig& cfg);

// Writes path and path + ".manifest.json". Throws std::runtime_error on I/O failure.
void emit(const std::vector<ResultRecord>& records, Format format, const std::filesystem::path& path,
          const Manifest& manifest);
void emit_roc(const std::vector<RocRecord>& points, Format format, const std::filesystem::path& path,
              const Manifest& manifest);

// Empirical CDF of iteration counts over successful records: (iterations, fraction <= iterations).
std::vector<std::pair<int, double>> convergence_cdf(const std::vector<ResultRecord>& records);

}  // namespace cisac
