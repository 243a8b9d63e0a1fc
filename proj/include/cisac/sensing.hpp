#pragma once

#include <vector>

#include "cisac/channels.hpp"
#include "cisac/scenario.hpp"

namespace cisac {

// Standard Gaussian tail probability.
double q_function(double x);
// Inverse of q_function on (0, 1).
double q_inverse(double p);

// P_PBS * ||h_P2S + H_S2R Phi h_P2R||^2 / sigma2_sbs
double snr_sbs(const ChannelSet& ch, const CVec& phi, const ScenarioConfig& cfg);

double false_alarm_probability(double tau, double epsilon, const ScenarioConfig& cfg);
double detection_probability(double tau, double epsilon, double snr, const ScenarioConfig& cfg);
// 1 - P_d evaluated on the upper tail, so it stays accurate when P_d rounds to 1.
double missed_detection_probability(double tau, double epsilon, double snr, const ScenarioConfig& cfg);
// Argument of Q in the detection probability.
double detection_argument(double tau, double epsilon, double snr, const ScenarioConfig& cfg);

double calibrate_threshold(double tau, double p_f0, const ScenarioConfig& cfg);
// epsilon_det when configured, otherwise calibrated at tau = T/2 from p_f0.
double detection_threshold(const ScenarioConfig& cfg);

// 1 - exp(-z/2)/12 - exp(-2z/3)/4
double pd_bound_z(double z);
// exp(-z/2)/12 + exp(-2z/3)/4, the complement of pd_bound_z without cancellation.
double miss_bound_z(double z);
// Smallest z with pd_bound_z(z) >= p_d0 (0 when p_d0 <= 2/3).
double z_min(double p_d0);

// N_B x (N_R+1) factor B of the sensing quadratic form, Tr(E_hat Phibar) = ||B phibar||^2.
CMat sensing_factor(const ChannelSet& ch);
CMat sensing_lift(const ChannelSet& ch);

// Squared Q-argument of the detection probability at the lifted RIS matrix.
// Throws std::domain_error when the argument is positive.
double z_of_phi(const CMat& ris_lifted, const ChannelSet& ch, double tau, double epsilon,
                const ScenarioConfig& cfg);

struct RocPoint {
    double pf = 0.0;
    double pd = 0.0;
    double one_minus_pd = 0.0;
};

std::vector<RocPoint> roc_curve(const ChannelSet& ch, const CVec& phi, double tau, const ScenarioConfig& cfg,
                                const std::vector<double>& pf_grid);

// Log-spaced false-alarm targets from 1e-4 to 0.9.
std::vector<double> default_pf_grid(int points = 25);

}  // namespace cisac
