#include "cisac/sensing.hpp"

#include <cmath>
#include <stdexcept>

namespace cisac {

namespace {

double noise_spread(double tau, const ScenarioConfig& cfg) {
    if (!(tau > 0.0)) throw std::invalid_argument("sensing time must be positive");
    return cfg.sigma2_sbs / std::sqrt(tau * cfg.f_s);
}

}  // namespace

double q_function(double x) { return 0.5 * std::erfc(x * M_SQRT1_2); }

double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("q_inverse: probability must lie in (0, 1)");
    double lo = -40.0;
    double hi = 40.0;
    double x = 0.0;
    for (int it = 0; it < 200; ++it) {
        double f = q_function(x) - p;
        if (f == 0.0) return x;
        if (f > 0.0) lo = x; else hi = x;
        double dens = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        double next = dens > 0.0 ? x + f / dens : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) return next;
        x = next;
    }
    return x;
}

double snr_sbs(const ChannelSet& ch, const CVec& phi, const ScenarioConfig& cfg) {
    return cfg.p_pbs * sensing_channel(ch, phi).squaredNorm() / cfg.sigma2_sbs;
}

double false_alarm_probability(double tau, double epsilon, const ScenarioConfig& cfg) {
    double nb = cfg.n_b;
    return q_function((epsilon - cfg.sigma2_sbs * nb) / (noise_spread(tau, cfg) * std::sqrt(nb)));
}

double detection_argument(double tau, double epsilon, double snr, const ScenarioConfig& cfg) {
    if (snr < 0.0) throw std::invalid_argument("detection_argument: negative SNR");
    double nb = cfg.n_b;
    return (epsilon - cfg.sigma2_sbs * (nb + snr)) / (noise_spread(tau, cfg) * std::sqrt(2.0 * snr + nb));
}

double detection_probability(double tau, double epsilon, double snr, const ScenarioConfig& cfg) {
    return q_function(detection_argument(tau, epsilon, snr, cfg));
}

double missed_detection_probability(double tau, double epsilon, double snr, const ScenarioConfig& cfg) {
    return q_function(-detection_argument(tau, epsilon, snr, cfg));
}

double calibrate_threshold(double tau, double p_f0, const ScenarioConfig& cfg) {
    double nb = cfg.n_b;
    return cfg.sigma2_sbs * nb + q_inverse(p_f0) * noise_spread(tau, cfg) * std::sqrt(nb);
}

double detection_threshold(const ScenarioConfig& cfg) {
    if (cfg.epsilon_det) return *cfg.epsilon_det;
    return calibrate_threshold(0.5 * cfg.t_total, cfg.p_f0, cfg);
}

double pd_bound_z(double z) {
    if (z < 0.0) throw std::invalid_argument("pd_bound_z: z must be >= 0");
    return 1.0 - miss_bound_z(z);
}

double miss_bound_z(double z) {
    if (z < 0.0) throw std::invalid_argument("miss_bound_z: z must be >= 0");
    return std::exp(-0.5 * z) / 12.0 + 0.25 * std::exp(-2.0 * z / 3.0);
}

double z_min(double p_d0) {
    if (p_d0 >= 1.0) throw std::invalid_argument("z_min: p_d0 must be below 1");
    if (pd_bound_z(0.0) >= p_d0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (pd_bound_z(hi) < p_d0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (pd_bound_z(mid) < p_d0) lo = mid; else hi = mid;
    }
    return hi;
}

CMat sensing_factor(const ChannelSet& ch) {
    const int nr = ch.n_r();
    CMat b(ch.n_b(), nr + 1);
    b.leftCols(nr) = ch.H_s2r * ch.h_p2r.asDiagonal();
    b.col(nr) = ch.h_p2s;
    return b;
}

CMat sensing_lift(const ChannelSet& ch) {
    CMat b = sensing_factor(ch);
    CMat e = b.adjoint() * b;
    return 0.5 * (e + e.adjoint());
}

double z_of_phi(const CMat& ris_lifted, const ChannelSet& ch, double tau, double epsilon,
                const ScenarioConfig& cfg) {
    double power = (sensing_lift(ch).cwiseProduct(ris_lifted.conjugate())).sum().real();
    double snr = cfg.p_pbs * std::max(power, 0.0) / cfg.sigma2_sbs;
    double g = detection_argument(tau, epsilon, snr, cfg);
    if (g > 0.0) throw std::domain_error("z_of_phi: detection-unfavorable regime (Q-argument > 0)");
    return g * g;
}

std::vector<RocPoint> roc_curve(const ChannelSet& ch, const CVec& phi, double tau, const ScenarioConfig& cfg,
                                const std::vector<double>& pf_grid) {
    double snr = snr_sbs(ch, phi, cfg);
    std::vector<RocPoint> out;
    out.reserve(pf_grid.size());
    for (double pf : pf_grid) {
        double eps = calibrate_threshold(tau, pf, cfg);
        RocPoint p;
        p.pf = pf;
        p.pd = detection_probability(tau, eps, snr, cfg);
        p.one_minus_pd = missed_detection_probability(tau, eps, snr, cfg);
        out.push_back(p);
    }
    return out;
}

std::vector<double> default_pf_grid(int points) {
    std::vector<double> grid;
    double lo = std::log10(1e-4);
    double hi = std::log10(0.9);
    for (int i = 0; i < points; ++i) grid.push_back(std::pow(10.0, lo + (hi - lo) * i / (points - 1)));
    return grid;
}

}  // namespace cisac
