#pragma once

#include <string>
#include <vector>

#include "cisac/channels.hpp"
#include "cisac/scenario.hpp"

namespace cisac {

// ---- localization: FIM / PEB on the rank-1 geometric link ----

// Received noiseless signal at the MS array for beam w.
CVec noiseless_rx(const GeometricLink& link, const CVec& w, const CVec& phi, const ScenarioConfig& cfg);

// N_M x 6; columns in the order theta_D, theta_R, Im h_D, Re h_D, Im h_R, Re h_R.
CMat partials_channel(const GeometricLink& link, const CVec& w, const CVec& phi, const ScenarioConfig& cfg);

RMat fim_channel(const GeometricLink& link, const CVec& w, const CVec& phi, double tau, const ScenarioConfig& cfg);

// Angle/position block from the arctan bearings, identity on the four gain coordinates.
RMat jacobian(Point2 ms, const ScenarioConfig& cfg);

struct FimPair {
    RMat f_c;
    RMat gamma;
    RMat f_p;
};

FimPair fim_pair(const GeometricLink& link, const CVec& w, const CVec& phi, double tau, Point2 ms,
                 const ScenarioConfig& cfg);

struct PebResult {
    double value = 0.0;
    double condition = 0.0;  // of the diagonally equilibrated FIM
};

class SingularFimError : public std::runtime_error {
public:
    SingularFimError(const std::string& what, RVec direction)
        : std::runtime_error(what), direction_(std::move(direction)) {}
    const RVec& direction() const noexcept { return direction_; }

private:
    RVec direction_;
};

PebResult peb(const RMat& f_p);
double weighted_peb(const std::vector<double>& pebs, const ScenarioConfig& cfg);

// ---- communication ----

struct SinrBreakdown {
    double avg = 0.0;
    double case1 = 0.0;  // PBS idle
    double case2 = 0.0;  // PBS active but missed
};

struct RateBreakdown {
    double avg_rate = 0.0;
    double sinr_case1 = 0.0;
    double sinr_case2 = 0.0;
};

// W holds the M MS beams followed by the K SUE beams as columns.
SinrBreakdown ms_sinr(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double p_d, double p_f,
                      const ScenarioConfig& cfg, int m);
RateBreakdown su_rate(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double p_d, double p_f,
                      const ScenarioConfig& cfg, int k);
double pue_interference(const ChannelSet& ch, const CMat& W, const CVec& phi, int l);

// Everything the optimization problem needs at one operating point.
struct Evaluation {
    double snr = 0.0;
    double pd = 0.0;
    double pf = 0.0;
    double p_miss = 0.0;
    std::vector<SinrBreakdown> sinr;
    std::vector<RateBreakdown> rate;
    std::vector<double> gamma;          // raw PUE interference power
    std::vector<double> interference;   // duty-weighted, compared with gamma_l0
    double power = 0.0;                 // expected transmit power
    double weighted_min_sinr = 0.0;
    double weighted_sum_sinr = 0.0;
    double unit_modulus_residual = 0.0;
};

Evaluation evaluate(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double epsilon,
                    const ScenarioConfig& cfg);

struct Tolerances {
    double rate = 1e-3;        // absolute, bits/s/Hz
    double pd = 1e-3;
    double pf = 1e-6;
    double power = 1e-6;       // relative
    double interference = 1e-6;  // relative
    double unit_modulus = 1e-9;
};

// Tight tolerances for candidate screening inside the algorithms.
Tolerances strict_tolerances();

struct FeasibilityReport {
    std::vector<double> rate_slack;
    double pd_slack = 0.0;
    double pf_slack = 0.0;
    double power_slack = 0.0;
    std::vector<double> interference_slack;
    double unit_modulus_residual = 0.0;
    bool feasible = false;
    std::string violated;  // first violated constraint, empty when feasible
};

FeasibilityReport p1_feasibility(const Evaluation& ev, const ScenarioConfig& cfg, const Tolerances& tol = {});
FeasibilityReport p1_feasibility(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double epsilon,
                                 const ScenarioConfig& cfg, const Tolerances& tol = {});

// JSON metrics record for a single solve.
std::string metrics_record(const Evaluation& ev, const std::vector<double>& pebs, double weighted_peb_value,
                           double tau);

}  // namespace cisac
