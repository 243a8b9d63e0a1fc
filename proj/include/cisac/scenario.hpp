#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cisac/types.hpp"

namespace cisac {

// All physical and algorithmic constants. Powers, variances and thresholds are in watts.
struct ScenarioConfig {
    int n_b = 16;
    int n_r = 32;
    int n_m = 6;
    int m_ms = 2;
    int k_su = 2;
    int l_pu = 2;

    Point2 pos_sbs{0.0, 50.0};
    Point2 pos_pbs{0.0, -50.0};
    Point2 pos_ris{40.0, 40.0};
    Point2 cluster_ms{70.0, 30.0};
    Point2 cluster_su{25.0, 50.0};
    Point2 cluster_pu{70.0, -30.0};
    double cluster_radius = 5.0;

    double p_sbs = 0.0;
    double p_pbs = 0.0;
    double sigma2_sbs = 0.0;
    double sigma2_ms = 0.0;
    double sigma2_su = 0.0;

    double prob_h0 = 0.8;
    double prob_h1 = 0.2;
    double f_c = 3e9;
    double f_s = 6e6;
    double t_total = 10e-3;

    std::vector<double> lambda_m;
    std::vector<double> r_k;
    std::vector<double> gamma_l0;

    double p_d0 = 0.9;
    double p_f0 = 0.1;
    std::optional<double> epsilon_det;

    double alpha_ris = 2.2;
    double alpha_direct = 4.0;
    double g0_ref = 1e-2;
    double rician_k = 10.0;

    double eps_tol = 0.01;
    int i_max = 20;
    int j_max = 10;
    int k_max = 10;
    int tau_grid = 200;
    int z_grid = 100;
    int n_rand = 200;

    bool operator==(const ScenarioConfig&) const = default;
};

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

ScenarioConfig default_scenario();

// Reduced array sizes used for quick runs: N_B = 8, N_R = 16, N_M = 4.
ScenarioConfig desk_scenario();

// Throws ConfigError naming the first offending field.
void validate(const ScenarioConfig& cfg);

// Missing keys take default_scenario() values; unknown keys are rejected.
ScenarioConfig load_scenario(std::string_view document);
ScenarioConfig load_scenario_file(const std::filesystem::path& path);
std::string serialize_scenario(const ScenarioConfig& cfg);

// FNV-1a over the canonical serialization.
std::uint64_t config_hash(const ScenarioConfig& cfg);

// Resizes the per-node vectors after a count change, filling with the default values.
void resize_per_node(ScenarioConfig& cfg);

struct NodePositions {
    std::vector<Point2> ms;
    std::vector<Point2> su;
    std::vector<Point2> pu;
};

NodePositions place_nodes(const ScenarioConfig& cfg, std::uint64_t seed);

}  // namespace cisac
