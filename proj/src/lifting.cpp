#include <algorithm>
#include <cmath>
#include <limits>

#include "cisac/bcd.hpp"
#include "cisac/sensing.hpp"

namespace cisac {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

CMat hermitian(const CMat& a) { return 0.5 * (a + a.adjoint()); }

CMat outer(const CVec& v) { return hermitian(v * v.adjoint()); }

double duty(double tau, const ScenarioConfig& cfg) { return 1.0 - tau / cfg.t_total; }

}  // namespace

LiftedW build_lifted_w(const ChannelSet& ch, const CVec& phi, double tau, double epsilon, const ScenarioConfig& cfg) {
    LiftedW lw;
    lw.eff = effective_channels(ch, phi);
    double snr = snr_sbs(ch, phi, cfg);
    lw.pf = false_alarm_probability(tau, epsilon, cfg);
    lw.pd = detection_probability(tau, epsilon, snr, cfg);
    lw.p_miss = missed_detection_probability(tau, epsilon, snr, cfg);
    lw.b = duty(tau, cfg) * cfg.prob_h0 * (1.0 - lw.pf);
    lw.b_tilde = duty(tau, cfg) * cfg.prob_h1 * lw.p_miss;
    CVec phi_p2r = phi.cwiseProduct(ch.h_p2r);
    for (int m = 0; m < ch.m_ms(); ++m) {
        lw.a1.push_back(cfg.lambda_m[m] * lw.b);
        lw.a2.push_back(cfg.lambda_m[m] * lw.b_tilde);
        CVec pbs = ch.h_p2ms[m] + ch.H_r2ms[m].transpose() * phi_p2r;
        lw.a_bar.push_back(cfg.p_pbs * pbs.squaredNorm() + cfg.sigma2_ms);
    }
    for (int k = 0; k < ch.k_su(); ++k) {
        cplx pbs = ch.h_p2su[k] + (ch.h_r2su[k].transpose() * phi_p2r)(0);
        lw.a_tilde.push_back(cfg.p_pbs * std::norm(pbs) + cfg.sigma2_su);
    }
    return lw;
}

std::vector<CMat> lift_beams(const CMat& W) {
    std::vector<CMat> out;
    for (Eigen::Index i = 0; i < W.cols(); ++i) out.push_back(outer(W.col(i)));
    return out;
}

double ms_signal(const LiftedW& lw, const std::vector<CMat>& wbar, int m) {
    const CMat& g = lw.eff.G[m];
    return (g * wbar[m] * g.adjoint()).trace().real();
}

double ms_interference(const LiftedW& lw, const std::vector<CMat>& wbar, int m) {
    const CMat& g = lw.eff.G[m];
    const int M = static_cast<int>(lw.eff.G.size());
    double s = 0.0;
    for (std::size_t i = static_cast<std::size_t>(M); i < wbar.size(); ++i)
        s += (g * wbar[i] * g.adjoint()).trace().real();
    return s;
}

double su_signal(const LiftedW& lw, const std::vector<CMat>& wbar, int k) {
    const CVec& g = lw.eff.g[k];
    const int M = static_cast<int>(lw.eff.G.size());
    return (g.adjoint() * wbar[M + k] * g)(0).real();
}

double su_interference(const LiftedW& lw, const std::vector<CMat>& wbar, int k) {
    const CVec& g = lw.eff.g[k];
    const int M = static_cast<int>(lw.eff.G.size());
    const int K = static_cast<int>(lw.eff.g.size());
    double s = 0.0;
    for (int i = 0; i < K; ++i)
        if (i != k) s += (g.adjoint() * wbar[M + i] * g)(0).real();
    return s;
}

DinkelbachW dinkelbach_update_w(const LiftedW& lw, const std::vector<CMat>& wbar, const ScenarioConfig& cfg) {
    DinkelbachW d;
    for (std::size_t m = 0; m < lw.eff.G.size(); ++m) {
        double s = ms_signal(lw, wbar, static_cast<int>(m));
        double z = ms_interference(lw, wbar, static_cast<int>(m));
        d.y1.push_back(lw.a1[m] * s / (z + cfg.sigma2_ms));
        d.y2.push_back(lw.a2[m] * s / (z + lw.a_bar[m]));
    }
    return d;
}

double LogTangent::value(double x) const {
    if (weight == 0.0) return 0.0;
    return weight * std::log2(x0 + offset) + slope() * (x - x0);
}

double LogTangent::target(double x) const {
    if (weight == 0.0) return 0.0;
    return weight * std::log2(x + offset);
}

double LogTangent::slope() const { return weight / (kLn2 * (x0 + offset)); }

RateSurrogateW sca_rate_surrogate_w(const LiftedW& lw, const std::vector<CMat>& wbar_prev, int k,
                                    const ScenarioConfig& cfg) {
    double x0 = su_interference(lw, wbar_prev, k);
    RateSurrogateW r;
    r.idle = {lw.b, cfg.sigma2_su, x0};
    r.missed = {lw.b_tilde, lw.a_tilde[k], x0};
    if (!(x0 + cfg.sigma2_su > 0.0) || !(x0 + lw.a_tilde[k] > 0.0))
        throw std::domain_error("sca_rate_surrogate_w: non-positive log argument at the expansion point");
    return r;
}

// ---- RIS block ----

LiftedPhi build_lifted_phi(const ChannelSet& ch, const CMat& W, double tau, double epsilon,
                           const ScenarioConfig& cfg) {
    const int M = ch.m_ms();
    const int K = ch.k_su();
    const int L = ch.l_pu();
    const int nr = ch.n_r();
    if (W.cols() != M + K) throw std::invalid_argument("build_lifted_phi: W must have M+K columns");
    LiftedPhi lp;
    const double d = duty(tau, cfg);
    lp.pf = false_alarm_probability(tau, epsilon, cfg);
    lp.b = d * cfg.prob_h0 * (1.0 - lp.pf);
    lp.c_tilde = d * cfg.prob_h1;
    for (int m = 0; m < M; ++m) {
        lp.a1.push_back(cfg.lambda_m[m] * lp.b);
        lp.c.push_back(cfg.lambda_m[m] * lp.c_tilde);
    }

    std::vector<CVec> q;  // H_S2R^T w_i
    for (int i = 0; i < M + K; ++i) q.push_back(ch.H_s2r.transpose() * W.col(i));

    lp.G_bar.resize(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
        const CMat hr = ch.H_r2ms[m].transpose();  // N_M x N_R
        for (int i = 0; i < M + K; ++i) {
            CMat b(cfg.n_m, nr + 1);
            b.leftCols(nr) = hr * q[i].asDiagonal();
            b.col(nr) = ch.H_s2ms[m].transpose() * W.col(i);
            lp.G_bar[m].push_back(hermitian(b.adjoint() * b));
        }
        CMat b(cfg.n_m, nr + 1);
        b.leftCols(nr) = hr * ch.h_p2r.asDiagonal();
        b.col(nr) = ch.h_p2ms[m];
        lp.G_tilde.push_back(hermitian(b.adjoint() * b));
    }

    lp.E.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < K; ++i) {
            CVec e(nr + 1);
            e.head(nr) = ch.h_r2su[k].cwiseProduct(q[M + i]);
            e(nr) = (ch.h_s2su[k].transpose() * W.col(M + i))(0);
            lp.E[k].push_back(outer(e));
        }
        CVec e(nr + 1);
        e.head(nr) = ch.h_p2r.cwiseProduct(ch.h_r2su[k]).conjugate();
        e(nr) = std::conj(ch.h_p2su[k]);
        lp.E_bar.push_back(outer(e));
    }

    lp.E_tilde.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
        for (int i = 0; i < M + K; ++i) {
            CVec e(nr + 1);
            e.head(nr) = q[i].cwiseProduct(ch.h_r2pu[l]).conjugate();
            e(nr) = std::conj((ch.h_s2pu[l].transpose() * W.col(i))(0));
            lp.E_tilde[l].push_back(outer(e));
        }
    }
    lp.E_hat = sensing_lift(ch);
    lp.sigma2_ms = cfg.sigma2_ms;
    lp.sigma2_su = cfg.sigma2_su;
    return lp;
}

double trace_re(const CMat& a, const CMat& x) { return (a.cwiseProduct(x.transpose())).sum().real(); }

double trace_conj(const CMat& a, const CMat& x) { return (a.cwiseProduct(x.adjoint())).sum().real(); }

PhiQuantities phi_quantities(const LiftedPhi& lp, const CMat& phibar, const ScenarioConfig& cfg) {
    const int M = static_cast<int>(lp.G_bar.size());
    const int K = static_cast<int>(lp.E.size());
    PhiQuantities q;
    for (int m = 0; m < M; ++m) {
        q.signal.push_back(trace_re(lp.G_bar[m][m], phibar));
        double z = 0.0;
        for (int i = M; i < M + K; ++i) z += trace_re(lp.G_bar[m][i], phibar);
        q.interference.push_back(z);
        q.d.push_back(cfg.p_pbs * trace_re(lp.G_tilde[m], phibar) + cfg.sigma2_ms);
    }
    for (int k = 0; k < K; ++k) {
        q.su_signal.push_back(trace_conj(lp.E[k][k], phibar));
        double z = 0.0;
        for (int i = 0; i < K; ++i)
            if (i != k) z += trace_conj(lp.E[k][i], phibar);
        q.su_interference.push_back(z);
        q.d_bar.push_back(cfg.p_pbs * trace_re(lp.E_bar[k], phibar) + cfg.sigma2_su);
    }
    for (const auto& row : lp.E_tilde) {
        double g = 0.0;
        for (const CMat& e : row) g += trace_re(e, phibar);
        q.gamma.push_back(g);
    }
    q.sensing = trace_re(lp.E_hat, phibar);
    return q;
}

double model_objective(const LiftedPhi& lp, const PhiQuantities& q, double z) {
    const double miss = miss_bound_z(z);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < q.signal.size(); ++m) {
        double v = lp.a1[m] * q.signal[m] / (q.interference[m] + lp.sigma2_ms) +
                   lp.c[m] * miss * q.signal[m] / (q.interference[m] + q.d[m]);
        best = std::min(best, v);
    }
    return q.signal.empty() ? 0.0 : best;
}

std::vector<double> model_rates(const LiftedPhi& lp, const PhiQuantities& q, double z) {
    const double miss = miss_bound_z(z);
    std::vector<double> r;
    for (std::size_t k = 0; k < q.su_signal.size(); ++k) {
        double s = q.su_signal[k];
        double i = q.su_interference[k];
        r.push_back(lp.b * std::log2(1.0 + s / (i + lp.sigma2_su)) +
                    lp.c_tilde * miss * std::log2(1.0 + s / (i + q.d_bar[k])));
    }
    return r;
}

DinkelbachPhi dinkelbach_update_phi(const LiftedPhi& lp, const CMat& phibar, double z, const ScenarioConfig& cfg) {
    PhiQuantities q = phi_quantities(lp, phibar, cfg);
    const double miss = miss_bound_z(z);
    DinkelbachPhi d;
    for (std::size_t m = 0; m < q.signal.size(); ++m) {
        d.y1.push_back(lp.a1[m] * q.signal[m] / (q.interference[m] + cfg.sigma2_ms));
        d.y2.push_back(lp.c[m] * miss * q.signal[m] / (q.interference[m] + q.d[m]));
    }
    return d;
}

double AffineLogBound::at(const CMat& x) const { return value + trace_re(grad, x - x0); }

namespace {

// Linear part of the interference (plus PBS term) inside the rate logs of SUE k, as Re Tr(C X).
CMat rate_log_coefficient(const LiftedPhi& lp, int k, bool missed, const ScenarioConfig& cfg) {
    const int K = static_cast<int>(lp.E.size());
    const Eigen::Index n = lp.E_hat.rows();
    CMat c = CMat::Zero(n, n);
    for (int i = 0; i < K; ++i)
        if (i != k) c += lp.E[k][i].conjugate();
    if (missed) c += cfg.p_pbs * lp.E_bar[k];
    return c;
}

}  // namespace

double rate_log_target(const LiftedPhi& lp, const CMat& phibar, int k, bool missed, const ScenarioConfig& cfg) {
    CMat c = rate_log_coefficient(lp, k, missed, cfg);
    return std::log2(trace_re(c, phibar) + cfg.sigma2_su);
}

AffineLogBound sca_rate_surrogate_phi(const LiftedPhi& lp, const CMat& phibar_prev, int k, bool missed,
                                      const ScenarioConfig& cfg) {
    CMat c = rate_log_coefficient(lp, k, missed, cfg);
    double f0 = trace_re(c, phibar_prev) + cfg.sigma2_su;
    if (!(f0 > 0.0)) throw std::domain_error("sca_rate_surrogate_phi: non-positive log argument");
    AffineLogBound b;
    b.value = std::log2(f0);
    b.grad = c / (kLn2 * f0);
    b.x0 = phibar_prev;
    return b;
}

double PdSurrogate::lhs(double s) const {
    double base = sigma2 * n_b + p_pbs * s - sigma2 * root0;
    if (root0 > 0.0) base -= kappa * p_pbs * (s - s0) / root0;
    return base;
}

double PdSurrogate::exact_lhs(double s) const {
    double arg = kappa * (2.0 * p_pbs * s / sigma2 + n_b);
    return sigma2 * n_b + p_pbs * s - sigma2 * std::sqrt(std::max(arg, 0.0));
}

PdSurrogate sca_pd_surrogate(const LiftedPhi& lp, const CMat& phibar_prev, double z, double tau,
                             const ScenarioConfig& cfg) {
    if (z < 0.0) throw std::domain_error("sca_pd_surrogate: z must be non-negative");
    if (!(tau > 0.0)) throw std::domain_error("sca_pd_surrogate: tau must be positive");
    PdSurrogate p;
    p.z = z;
    p.kappa = z / (tau * cfg.f_s);
    p.s0 = trace_re(lp.E_hat, phibar_prev);
    p.p_pbs = cfg.p_pbs;
    p.sigma2 = cfg.sigma2_sbs;
    p.n_b = cfg.n_b;
    double arg = p.kappa * (2.0 * p.p_pbs * p.s0 / p.sigma2 + p.n_b);
    if (arg < 0.0) throw std::domain_error("sca_pd_surrogate: negative square-root argument");
    p.root0 = std::sqrt(arg);
    return p;
}

}  // namespace cisac
