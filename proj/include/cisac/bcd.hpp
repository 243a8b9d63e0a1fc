#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cisac/channels.hpp"
#include "cisac/conic.hpp"
#include "cisac/metrics.hpp"
#include "cisac/scenario.hpp"

namespace cisac {

// A subproblem had no feasible point, or a search found no admissible value.
class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, std::string binding)
        : std::runtime_error(what), binding_(std::move(binding)) {}
    const std::string& binding() const noexcept { return binding_; }

private:
    std::string binding_;
};

// ---- transmit beamforming block ----

// Constants of the beamforming subproblem at fixed (tau, phi).
struct LiftedW {
    EffectiveChannels eff;
    double pd = 0.0;
    double pf = 0.0;
    double p_miss = 0.0;
    double b = 0.0;        // duty * Pr{H0} * (1 - P_f)
    double b_tilde = 0.0;  // duty * Pr{H1} * (1 - P_d)
    std::vector<double> a1, a2;      // lambda_m * b, lambda_m * b_tilde
    std::vector<double> a_bar;       // PBS power at MS m plus noise
    std::vector<double> a_tilde;     // PBS power at SUE k plus noise
};

LiftedW build_lifted_w(const ChannelSet& ch, const CVec& phi, double tau, double epsilon, const ScenarioConfig& cfg);

// Lifted beams W_i = w_i w_i^H, M MS beams followed by K SUE beams.
std::vector<CMat> lift_beams(const CMat& W);

double ms_signal(const LiftedW& lw, const std::vector<CMat>& wbar, int m);
double ms_interference(const LiftedW& lw, const std::vector<CMat>& wbar, int m);  // SUE beams only
double su_signal(const LiftedW& lw, const std::vector<CMat>& wbar, int k);
double su_interference(const LiftedW& lw, const std::vector<CMat>& wbar, int k);  // other SUE beams

struct DinkelbachW {
    std::vector<double> y1, y2;
};

DinkelbachW dinkelbach_update_w(const LiftedW& lw, const std::vector<CMat>& wbar, const ScenarioConfig& cfg);

// Tangent upper bound weight * log2(x + offset) around x0, in physical units.
struct LogTangent {
    double weight = 0.0;
    double offset = 0.0;
    double x0 = 0.0;
    double value(double x) const;   // surrogate
    double target(double x) const;  // weight * log2(x + offset)
    double slope() const;
};

struct RateSurrogateW {
    LogTangent idle;    // b * log2(zeta' + sigma^2)
    LogTangent missed;  // b_tilde * log2(zeta' + a_tilde)
};

RateSurrogateW sca_rate_surrogate_w(const LiftedW& lw, const std::vector<CMat>& wbar_prev, int k,
                                    const ScenarioConfig& cfg);

struct WResult {
    CMat W;
    std::vector<double> objective_trace;  // exact weighted min SINR, one entry per Dinkelbach iterate
    int dinkelbach_iterations = 0;
    int sca_iterations = 0;
    double rank1_ratio_min = 1.0;
    bool rank1_flag = false;  // some extracted beam had ratio < 0.95
};

// Dinkelbach + SCA over the relaxed beamforming problem. An incumbent that satisfies the
// constraints is kept unless a better feasible point is found.
WResult solve_w(const ChannelSet& ch, const CVec& phi, double tau, double epsilon, const ScenarioConfig& cfg,
                const std::optional<CMat>& incumbent = std::nullopt);

// ---- RIS block ----

struct LiftedPhi {
    std::vector<std::vector<CMat>> G_bar;    // [m][i], every beam i
    std::vector<CMat> G_tilde;               // [m]
    std::vector<std::vector<CMat>> E;        // [k][i], SUE beams, used as Tr(E conj(Phibar))
    std::vector<CMat> E_bar;                 // [k]
    std::vector<std::vector<CMat>> E_tilde;  // [l][i], every beam i
    CMat E_hat;
    std::vector<double> a1;  // lambda_m * b
    std::vector<double> c;   // lambda_m * duty * Pr{H1}
    double b = 0.0;
    double c_tilde = 0.0;    // duty * Pr{H1}
    double pf = 0.0;
    double sigma2_ms = 0.0;
    double sigma2_su = 0.0;
};

LiftedPhi build_lifted_phi(const ChannelSet& ch, const CMat& W, double tau, double epsilon,
                           const ScenarioConfig& cfg);

// Re Tr(A X) and Re Tr(A conj(X)).
double trace_re(const CMat& a, const CMat& x);
double trace_conj(const CMat& a, const CMat& x);

// Quadratic forms of the RIS subproblem at a lifted point.
struct PhiQuantities {
    std::vector<double> signal;        // Tr(G_bar[m][m] X)
    std::vector<double> interference;  // SUE beams at MS m
    std::vector<double> d;             // P_PBS Tr(G_tilde X) + sigma_ms^2
    std::vector<double> su_signal;
    std::vector<double> su_interference;
    std::vector<double> d_bar;         // P_PBS Tr(E_bar X) + sigma_su^2
    std::vector<double> gamma;         // sum_i Tr(E_tilde[l][i] X)
    double sensing = 0.0;              // Tr(E_hat X)
};

PhiQuantities phi_quantities(const LiftedPhi& lp, const CMat& phibar, const ScenarioConfig& cfg);

// Weighted min SINR with the detection probability replaced by the bound at z.
double model_objective(const LiftedPhi& lp, const PhiQuantities& q, double z);
std::vector<double> model_rates(const LiftedPhi& lp, const PhiQuantities& q, double z);

struct DinkelbachPhi {
    std::vector<double> y1, y2;
};

DinkelbachPhi dinkelbach_update_phi(const LiftedPhi& lp, const CMat& phibar, double z, const ScenarioConfig& cfg);

// Affine upper bound log2(f(X)) <= value + Re Tr(grad (X - X0)) for the two interference logs of SUE k.
struct AffineLogBound {
    double value = 0.0;
    CMat grad;
    CMat x0;
    double at(const CMat& x) const;
};

// missed = false: log2(sum_{i!=k} Tr(E_ki X*) + sigma_su^2)
// missed = true:  log2(sum_{i!=k} Tr(E_ki X*) + P_PBS Tr(E_bar_k X) + sigma_su^2)
AffineLogBound sca_rate_surrogate_phi(const LiftedPhi& lp, const CMat& phibar_prev, int k, bool missed,
                                      const ScenarioConfig& cfg);
double rate_log_target(const LiftedPhi& lp, const CMat& phibar, int k, bool missed, const ScenarioConfig& cfg);

// Sensing constraint with the square-root term replaced by its tangent at Tr(E_hat X0):
// lhs(s) >= epsilon, where s = Tr(E_hat X).
struct PdSurrogate {
    double z = 0.0;
    double kappa = 0.0;     // z / (tau f_s)
    double s0 = 0.0;        // expansion trace
    double root0 = 0.0;     // sqrt(kappa (2 P s0 / sigma^2 + N_B))
    double p_pbs = 0.0;
    double sigma2 = 0.0;
    int n_b = 0;
    double lhs(double s) const;        // surrogate left side
    double exact_lhs(double s) const;  // with the square root kept
};

PdSurrogate sca_pd_surrogate(const LiftedPhi& lp, const CMat& phibar_prev, double z, double tau,
                             const ScenarioConfig& cfg);

struct PhiResult {
    CVec phi;
    std::vector<double> objective_trace;  // exact weighted min SINR of accepted iterates
    int dinkelbach_iterations = 0;
    int ao_iterations = 0;
    int sca_iterations = 0;
    double z = 0.0;
    double rank1_ratio = 1.0;        // of the last relaxed solution
    bool randomization_feasible = true;
};

// Dinkelbach + alternating (Phibar, z) + SCA with Gaussian randomization. phi_init must satisfy
// the constraints at (W, tau); the result never scores below it.
PhiResult solve_phi(const ChannelSet& ch, const CMat& W, double tau, double epsilon, const CVec& phi_init,
                    const ScenarioConfig& cfg, std::uint64_t seed);

// ---- sensing time and the outer loop ----

// Uniform grid {delta, ..., T - delta} with tau_grid points.
std::vector<double> tau_grid(const ScenarioConfig& cfg);

// Feasible grid point maximizing the weighted min SINR.
double tau_search(const ChannelSet& ch, const CMat& W, const CVec& phi, double epsilon, const ScenarioConfig& cfg);

// Smallest grid point meeting the detection and false-alarm targets for phi.
double initial_tau(const ChannelSet& ch, const CVec& phi, double epsilon, const ScenarioConfig& cfg);

struct TracePoint {
    int iter = 0;
    std::string stage;
    double objective = 0.0;
    double pd = 0.0;
    double pf = 0.0;
    double tau = 0.0;
    double min_rate = 0.0;
    double max_interf = 0.0;
    double rank1_ratio_min = 1.0;
};

std::string trace_csv(const std::vector<TracePoint>& trace);

struct IterationCounts {
    double dt_bs = 0.0;
    double sca_bs = 0.0;
    double dt_ris = 0.0;
    double ao_ris = 0.0;
    double sca_ris = 0.0;
    double bcd = 0.0;
};

struct ComplexityReport {
    double o_bs = 0.0;
    double o_ris = 0.0;
    double o_bcd = 0.0;
};

ComplexityReport complexity_report(const ScenarioConfig& cfg, const IterationCounts& counts, double eta = 1e-9);

// Phases favouring the weakest SUE link, used as a warm start when the random start admits no
// beamformer meeting the rate targets.
CVec rate_max_ris(const ChannelSet& ch);

enum class RisMode { optimize, fixed };

struct BcdOptions {
    RisMode ris = RisMode::optimize;
    std::optional<CVec> phi;         // starting (or fixed) phases; random_ris(seed) when absent
    std::optional<double> fixed_tau; // skip the tau search
    bool rate_warm_start = true;     // optimize mode only
};

struct BcdResult {
    double tau = 0.0;
    double epsilon = 0.0;
    CMat W;
    CVec phi;
    std::vector<double> objective;  // O[0], O[1], ...
    std::vector<TracePoint> trace;
    int iterations = 0;
    bool converged = false;
    bool warm_started = false;  // the random start was replaced by rate_max_ris
    IterationCounts counts;  // per-call averages for the inner loops, total for bcd
};

BcdResult bcd(const ChannelSet& ch, const ScenarioConfig& cfg, std::uint64_t seed, const BcdOptions& options = {});

}  // namespace cisac
