#include "cisac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "cisac/sensing.hpp"

namespace cisac {

namespace {

struct PathFactors {
    CVec b_d, b_r, db_d, db_r;   // MS side
    cplx direct_gain;            // a^T(theta_D') w
    cplx ris_gain;               // c^T(theta_R) Phi c(theta_R') a^T(theta_R') w
    cplx ris_gain_dtheta;        // derivative of c^T(theta_R) wrt theta_R, rest fixed
};

PathFactors path_factors(const GeometricLink& link, const CVec& w, const CVec& phi, const ScenarioConfig& cfg) {
    const int nb = static_cast<int>(w.size());
    const int nr = static_cast<int>(phi.size());
    PathFactors f;
    f.b_d = steering_vector(link.theta_d, cfg.n_m);
    f.db_d = steering_derivative(link.theta_d, cfg.n_m);
    f.b_r = steering_vector(link.theta_r, cfg.n_m);
    f.db_r = steering_derivative(link.theta_r, cfg.n_m);
    f.direct_gain = steering_vector(link.theta_d_prime, nb).transpose() * w;
    cplx tx = steering_vector(link.theta_r_prime, nb).transpose() * w;
    CVec c_in = phi.cwiseProduct(steering_vector(link.theta_r_prime, nr));
    f.ris_gain = (steering_vector(link.theta_r, nr).transpose() * c_in)(0) * tx;
    f.ris_gain_dtheta = (steering_derivative(link.theta_r, nr).transpose() * c_in)(0) * tx;
    return f;
}

struct Quadratics {
    // signal[m][i] = ||G_m w_i||^2, pbs_ms[m] = ||PBS channel at MS m||^2
    std::vector<std::vector<double>> ms_power;
    std::vector<double> pbs_ms;
    std::vector<std::vector<double>> su_power;  // |g_k^H w_i|^2 over SUE beams
    std::vector<double> pbs_su;
};

Quadratics quadratics(const ChannelSet& ch, const CMat& W, const CVec& phi) {
    const int M = ch.m_ms();
    const int K = ch.k_su();
    if (W.cols() != M + K) throw std::invalid_argument("beamformer matrix must have M+K columns");
    EffectiveChannels eff = effective_channels(ch, phi);
    CVec phi_p2r = phi.cwiseProduct(ch.h_p2r);
    Quadratics q;
    q.ms_power.assign(static_cast<std::size_t>(M), std::vector<double>(static_cast<std::size_t>(M + K), 0.0));
    for (int m = 0; m < M; ++m) {
        for (int i = 0; i < M + K; ++i) q.ms_power[m][i] = (eff.G[m] * W.col(i)).squaredNorm();
        q.pbs_ms.push_back((ch.h_p2ms[m] + ch.H_r2ms[m].transpose() * phi_p2r).squaredNorm());
    }
    q.su_power.assign(static_cast<std::size_t>(K), std::vector<double>(static_cast<std::size_t>(K), 0.0));
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < K; ++i) q.su_power[k][i] = std::norm(eff.g[k].dot(W.col(M + i)));
        cplx reflected = (ch.h_r2su[k].transpose() * phi_p2r)(0);
        q.pbs_su.push_back(std::norm(ch.h_p2su[k] + reflected));
    }
    return q;
}

SinrBreakdown sinr_from(const Quadratics& q, const ScenarioConfig& cfg, int m, int M, int K, double tau,
                        double p_d, double p_f) {
    double signal = q.ms_power[m][m];
    double zeta = 0.0;
    for (int i = 0; i < K; ++i) zeta += q.ms_power[m][M + i];
    SinrBreakdown s;
    s.case1 = signal / (zeta + cfg.sigma2_ms);
    s.case2 = signal / (zeta + cfg.p_pbs * q.pbs_ms[m] + cfg.sigma2_ms);
    double duty = 1.0 - tau / cfg.t_total;
    s.avg = duty * (cfg.prob_h0 * (1.0 - p_f) * s.case1 + cfg.prob_h1 * (1.0 - p_d) * s.case2);
    return s;
}

RateBreakdown rate_from(const Quadratics& q, const ScenarioConfig& cfg, int k, int K, double tau, double p_d,
                        double p_f) {
    double signal = q.su_power[k][k];
    double zeta = 0.0;
    for (int i = 0; i < K; ++i)
        if (i != k) zeta += q.su_power[k][i];
    RateBreakdown r;
    r.sinr_case1 = signal / (zeta + cfg.sigma2_su);
    r.sinr_case2 = signal / (zeta + cfg.p_pbs * q.pbs_su[k] + cfg.sigma2_su);
    double duty = 1.0 - tau / cfg.t_total;
    r.avg_rate = duty * (cfg.prob_h0 * (1.0 - p_f) * std::log2(1.0 + r.sinr_case1) +
                         cfg.prob_h1 * (1.0 - p_d) * std::log2(1.0 + r.sinr_case2));
    return r;
}

}  // namespace

CVec noiseless_rx(const GeometricLink& link, const CVec& w, const CVec& phi, const ScenarioConfig& cfg) {
    PathFactors f = path_factors(link, w, phi, cfg);
    return link.h_d * f.direct_gain * f.b_d + link.h_r * f.ris_gain * f.b_r;
}

CMat partials_channel(const GeometricLink& link, const CVec& w, const CVec& phi, const ScenarioConfig& cfg) {
    PathFactors f = path_factors(link, w, phi, cfg);
    const cplx j(0.0, 1.0);
    CMat d(cfg.n_m, 6);
    d.col(0) = link.h_d * f.direct_gain * f.db_d;
    // product rule over b(theta_R) c^T(theta_R)
    d.col(1) = link.h_r * (f.ris_gain * f.db_r + f.ris_gain_dtheta * f.b_r);
    d.col(3) = f.direct_gain * f.b_d;
    d.col(2) = j * d.col(3);
    d.col(5) = f.ris_gain * f.b_r;
    d.col(4) = j * d.col(5);
    return d;
}

RMat fim_channel(const GeometricLink& link, const CVec& w, const CVec& phi, double tau, const ScenarioConfig& cfg) {
    if (tau > cfg.t_total) throw std::invalid_argument("fim_channel: tau exceeds T");
    CMat d = partials_channel(link, w, phi, cfg);
    RMat f = (d.adjoint() * d).real();
    f = 0.5 * (f + f.transpose()).eval();
    return (2.0 * (cfg.t_total - tau) / cfg.sigma2_ms) * f;
}

RMat jacobian(Point2 ms, const ScenarioConfig& cfg) {
    double ds = distance(ms, cfg.pos_sbs);
    double dr = distance(ms, cfg.pos_ris);
    if (ds == 0.0) throw GeometryError("jacobian: MS coincides with the SBS");
    if (dr == 0.0) throw GeometryError("jacobian: MS coincides with the RIS");
    RMat g = RMat::Zero(6, 6);
    g(0, 0) = -std::abs(ms.y - cfg.pos_sbs.y) / (ds * ds);
    g(0, 1) = std::abs(ms.x - cfg.pos_sbs.x) / (ds * ds);
    g(1, 0) = -std::abs(ms.y - cfg.pos_ris.y) / (dr * dr);
    g(1, 1) = std::abs(ms.x - cfg.pos_ris.x) / (dr * dr);
    g.bottomRightCorner(4, 4).setIdentity();
    return g;
}

FimPair fim_pair(const GeometricLink& link, const CVec& w, const CVec& phi, double tau, Point2 ms,
                 const ScenarioConfig& cfg) {
    FimPair p;
    p.f_c = fim_channel(link, w, phi, tau, cfg);
    p.gamma = jacobian(ms, cfg);
    p.f_p = p.gamma.transpose() * p.f_c * p.gamma;
    p.f_p = 0.5 * (p.f_p + p.f_p.transpose()).eval();
    return p;
}

PebResult peb(const RMat& f_p) {
    const Eigen::Index n = f_p.rows();
    if (n < 2 || f_p.cols() != n) throw std::invalid_argument("peb: FIM must be square with at least 2 rows");
    RVec scale(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(f_p(i, i) > 0.0)) {
            RVec dir = RVec::Zero(n);
            dir(i) = 1.0;
            throw SingularFimError("peb: FIM has a non-positive diagonal entry", dir);
        }
        scale(i) = 1.0 / std::sqrt(f_p(i, i));
    }
    // Diagonal equilibration keeps the inverse accurate when parameters have very different units.
    RMat s = scale.asDiagonal() * f_p * scale.asDiagonal();
    s = 0.5 * (s + s.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<RMat> es(s);
    RVec ev = es.eigenvalues();
    double lmax = ev.maxCoeff();
    double lmin = ev.minCoeff();
    if (!(lmin > 1e-13 * lmax)) {
        RVec dir = scale.asDiagonal() * es.eigenvectors().col(0);
        dir.normalize();
        throw SingularFimError("peb: FIM is singular", dir);
    }
    RMat s_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    double v = scale(0) * scale(0) * s_inv(0, 0) + scale(1) * scale(1) * s_inv(1, 1);
    return {std::sqrt(v), lmax / lmin};
}

double weighted_peb(const std::vector<double>& pebs, const ScenarioConfig& cfg) {
    if (pebs.size() != cfg.lambda_m.size()) throw std::invalid_argument("weighted_peb: need one PEB per MS");
    double s = 0.0;
    for (std::size_t m = 0; m < pebs.size(); ++m) s += cfg.lambda_m[m] * pebs[m];
    return s;
}

SinrBreakdown ms_sinr(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double p_d, double p_f,
                      const ScenarioConfig& cfg, int m) {
    Quadratics q = quadratics(ch, W, phi);
    return sinr_from(q, cfg, m, ch.m_ms(), ch.k_su(), tau, p_d, p_f);
}

RateBreakdown su_rate(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double p_d, double p_f,
                      const ScenarioConfig& cfg, int k) {
    Quadratics q = quadratics(ch, W, phi);
    return rate_from(q, cfg, k, ch.k_su(), tau, p_d, p_f);
}

double pue_interference(const ChannelSet& ch, const CMat& W, const CVec& phi, int l) {
    EffectiveChannels eff = effective_channels(ch, phi);
    double s = 0.0;
    for (Eigen::Index i = 0; i < W.cols(); ++i) s += std::norm(eff.g_bar[l].dot(W.col(i)));
    return s;
}

Evaluation evaluate(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double epsilon,
                    const ScenarioConfig& cfg) {
    const int M = ch.m_ms();
    const int K = ch.k_su();
    Evaluation ev;
    ev.snr = snr_sbs(ch, phi, cfg);
    ev.pf = false_alarm_probability(tau, epsilon, cfg);
    ev.pd = detection_probability(tau, epsilon, ev.snr, cfg);
    ev.p_miss = missed_detection_probability(tau, epsilon, ev.snr, cfg);

    Quadratics q = quadratics(ch, W, phi);
    ev.weighted_min_sinr = std::numeric_limits<double>::infinity();
    for (int m = 0; m < M; ++m) {
        SinrBreakdown s = sinr_from(q, cfg, m, M, K, tau, ev.pd, ev.pf);
        ev.sinr.push_back(s);
        double weighted = cfg.lambda_m[m] * s.avg;
        ev.weighted_min_sinr = std::min(ev.weighted_min_sinr, weighted);
        ev.weighted_sum_sinr += weighted;
    }
    if (M == 0) ev.weighted_min_sinr = 0.0;
    for (int k = 0; k < K; ++k) ev.rate.push_back(rate_from(q, cfg, k, K, tau, ev.pd, ev.pf));

    double duty = 1.0 - tau / cfg.t_total;
    EffectiveChannels eff = effective_channels(ch, phi);
    for (int l = 0; l < ch.l_pu(); ++l) {
        double g = 0.0;
        for (Eigen::Index i = 0; i < W.cols(); ++i) g += std::norm(eff.g_bar[l].dot(W.col(i)));
        ev.gamma.push_back(g);
        ev.interference.push_back(duty * cfg.prob_h1 * ev.p_miss * g);
    }
    ev.power = duty * (cfg.prob_h0 * (1.0 - ev.pf) + cfg.prob_h1 * ev.p_miss) * W.squaredNorm();
    for (Eigen::Index n = 0; n < phi.size(); ++n)
        ev.unit_modulus_residual = std::max(ev.unit_modulus_residual, std::abs(1.0 - std::abs(phi(n))));
    return ev;
}

Tolerances strict_tolerances() {
    Tolerances t;
    t.rate = 1e-7;
    t.pd = 0.0;
    t.pf = 1e-12;
    t.power = 1e-9;
    t.interference = 1e-9;
    t.unit_modulus = 1e-9;
    return t;
}

FeasibilityReport p1_feasibility(const Evaluation& ev, const ScenarioConfig& cfg, const Tolerances& tol) {
    FeasibilityReport r;
    auto flag = [&](bool ok, const std::string& name) {
        if (!ok && r.violated.empty()) r.violated = name;
    };
    for (std::size_t k = 0; k < ev.rate.size(); ++k) {
        r.rate_slack.push_back(ev.rate[k].avg_rate - cfg.r_k[k]);
        flag(r.rate_slack.back() >= -tol.rate, "rate[" + std::to_string(k) + "]");
    }
    r.pd_slack = ev.pd - cfg.p_d0;
    flag(r.pd_slack >= -tol.pd, "detection probability");
    r.pf_slack = cfg.p_f0 - ev.pf;
    flag(r.pf_slack >= -tol.pf, "false-alarm probability");
    r.power_slack = cfg.p_sbs - ev.power;
    flag(ev.power <= cfg.p_sbs * (1.0 + tol.power), "transmit power");
    for (std::size_t l = 0; l < ev.interference.size(); ++l) {
        r.interference_slack.push_back(cfg.gamma_l0[l] - ev.interference[l]);
        flag(ev.interference[l] <= cfg.gamma_l0[l] * (1.0 + tol.interference), "interference[" + std::to_string(l) + "]");
    }
    r.unit_modulus_residual = ev.unit_modulus_residual;
    flag(ev.unit_modulus_residual <= tol.unit_modulus, "unit modulus");
    r.feasible = r.violated.empty();
    return r;
}

FeasibilityReport p1_feasibility(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double epsilon,
                                 const ScenarioConfig& cfg, const Tolerances& tol) {
    return p1_feasibility(evaluate(ch, W, phi, tau, epsilon, cfg), cfg, tol);
}

std::string metrics_record(const Evaluation& ev, const std::vector<double>& pebs, double weighted_peb_value,
                           double tau) {
    nlohmann::json j;
    j["weighted_min_sinr"] = ev.weighted_min_sinr;
    j["weighted_sum_sinr"] = ev.weighted_sum_sinr;
    j["peb"] = pebs;
    j["weighted_peb"] = weighted_peb_value;
    std::vector<double> rates;
    for (const auto& r : ev.rate) rates.push_back(r.avg_rate);
    j["rate"] = rates;
    j["gamma"] = ev.gamma;
    j["pd"] = ev.pd;
    j["pf"] = ev.pf;
    j["tau"] = tau;
    return j.dump(2);
}

}  // namespace cisac
