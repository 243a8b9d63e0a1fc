#include <algorithm>
#include <cmath>
#include <limits>

#include "cisac/bcd.hpp"

namespace cisac {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

struct Scored {
    CMat W;
    Evaluation ev;
    bool feasible = false;
    double objective = -std::numeric_limits<double>::infinity();
};

Scored score(const ChannelSet& ch, const CMat& W, const CVec& phi, double tau, double epsilon,
             const ScenarioConfig& cfg) {
    Scored s;
    s.W = W;
    s.ev = evaluate(ch, W, phi, tau, epsilon, cfg);
    s.feasible = p1_feasibility(s.ev, cfg, strict_tolerances()).feasible;
    s.objective = s.ev.weighted_min_sinr;
    return s;
}

double relative_change(double now, double before) {
    if (before == 0.0) return now == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(now - before) / std::abs(before);
}

// Relaxed beamforming problem in scaled variables X_i = W_i / P_SBS. Rows are normalized by the
// noise or threshold they are compared with; t is in units of sigma_ms^2.
conic::Problem build_problem(const LiftedW& lw, const DinkelbachW& y, const std::vector<CMat>& expansion,
                             const ScenarioConfig& cfg) {
    const int M = static_cast<int>(lw.eff.G.size());
    const int K = static_cast<int>(lw.eff.g.size());
    const int L = static_cast<int>(lw.eff.g_bar.size());
    const double p = cfg.p_sbs;
    conic::Problem pr;
    for (int i = 0; i < M + K; ++i)
        pr.add_variable(cfg.n_b, false, i < M ? "ms" + std::to_string(i) : "su" + std::to_string(i - M));

    for (int m = 0; m < M; ++m) {
        CMat gg = lw.eff.G[m].adjoint() * lw.eff.G[m];
        double scale = p / cfg.sigma2_ms;
        conic::Affine a;
        a.terms.push_back({m, -(lw.a1[m] + lw.a2[m]) * scale * gg});
        for (int i = M; i < M + K; ++i) a.terms.push_back({i, (y.y1[m] + y.y2[m]) * scale * gg});
        a.t_coeff = 1.0;
        double rhs = -y.y1[m] - y.y2[m] * lw.a_bar[m] / cfg.sigma2_ms;
        pr.add_le(a, rhs, "sinr[" + std::to_string(m) + "]");
    }

    for (int k = 0; k < K; ++k) {
        RateSurrogateW sur = sca_rate_surrogate_w(lw, expansion, k, cfg);
        CMat gg = lw.eff.g[k] * lw.eff.g[k].adjoint();
        const double ns = cfg.sigma2_su;
        conic::LogConstraint c;
        c.label = "rate[" + std::to_string(k) + "]";
        conic::Affine all;  // (received power from every SUE beam) / sigma^2
        for (int i = 0; i < K; ++i) all.terms.push_back({M + i, (p / ns) * gg});
        conic::Affine idle = all;
        idle.constant = 1.0;
        c.logs.push_back({lw.b, idle});
        conic::Affine missed = all;
        missed.constant = lw.a_tilde[k] / ns;
        c.logs.push_back({lw.b_tilde, missed});
        // tangent bounds of the interference logs, with the log2(sigma^2) offsets cancelled
        double x0 = sur.idle.x0 / ns;
        double slope = 0.0, constant = 0.0;
        if (lw.b > 0.0) {
            slope += lw.b / (kLn2 * (x0 + 1.0));
            constant += lw.b * std::log2(x0 + 1.0);
        }
        if (lw.b_tilde > 0.0) {
            double off = lw.a_tilde[k] / ns;
            slope += lw.b_tilde / (kLn2 * (x0 + off));
            constant += lw.b_tilde * std::log2(x0 + off);
        }
        for (int i = 0; i < K; ++i)
            if (i != k) c.linear.terms.push_back({M + i, -slope * (p / ns) * gg});
        c.rhs = cfg.r_k[k] + constant - slope * x0;
        pr.add_log(c);
    }

    const double duty_power = lw.b + lw.b_tilde;
    if (duty_power > 0.0) {
        conic::Affine a;
        for (int i = 0; i < M + K; ++i) a.terms.push_back({i, CMat::Identity(cfg.n_b, cfg.n_b)});
        pr.add_le(a, 1.0 / duty_power, "power");
    }
    if (lw.b_tilde > 0.0) {
        for (int l = 0; l < L; ++l) {
            CMat gg = lw.eff.g_bar[l] * lw.eff.g_bar[l].adjoint();
            conic::Affine a;
            double scale = lw.b_tilde * p / cfg.gamma_l0[l];
            for (int i = 0; i < M + K; ++i) a.terms.push_back({i, scale * gg});
            pr.add_le(a, 1.0, "interference[" + std::to_string(l) + "]");
        }
    }
    return pr;
}

struct Extracted {
    CMat W;
    double ratio_min = 1.0;
};

Extracted extract(const std::vector<CMat>& x, const ScenarioConfig& cfg) {
    Extracted e;
    e.W = CMat::Zero(cfg.n_b, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        double tr = x[i].trace().real();
        if (!(tr > 0.0)) continue;
        conic::Rank1 r = conic::principal_rank1(x[i]);
        e.ratio_min = std::min(e.ratio_min, r.ratio);
        double n = r.v.norm();
        if (n > 0.0) e.W.col(static_cast<Eigen::Index>(i)) = r.v * std::sqrt(cfg.p_sbs * tr) / n;
    }
    return e;
}

std::vector<CMat> scaled_lift(const CMat& W, double p) {
    std::vector<CMat> out = lift_beams(W);
    for (auto& m : out) m /= p;
    return out;
}

}  // namespace

WResult solve_w(const ChannelSet& ch, const CVec& phi, double tau, double epsilon, const ScenarioConfig& cfg,
                const std::optional<CMat>& incumbent) {
    const int M = ch.m_ms();
    const int K = ch.k_su();
    LiftedW lw = build_lifted_w(ch, phi, tau, epsilon, cfg);
    conic::Options opt;
    opt.keep_merit = false;

    WResult res;
    Scored best;
    bool have = false;
    if (incumbent && incumbent->rows() == cfg.n_b && incumbent->cols() == M + K) {
        Scored s = score(ch, *incumbent, phi, tau, epsilon, cfg);
        if (s.feasible) {
            best = s;
            have = true;
        }
    }

    // start: weighted received power (y = 0), rate tangents taken at W = 0
    {
        DinkelbachW y0;
        y0.y1.assign(static_cast<std::size_t>(M), 0.0);
        y0.y2.assign(static_cast<std::size_t>(M), 0.0);
        std::vector<CMat> zero(static_cast<std::size_t>(M + K), CMat::Zero(cfg.n_b, cfg.n_b));
        conic::Solution sol = conic::solve(build_problem(lw, y0, zero, cfg), opt);
        if (sol.status == conic::Status::optimal || sol.status == conic::Status::max_iter) {
            Extracted e = extract(sol.X, cfg);
            res.rank1_ratio_min = std::min(res.rank1_ratio_min, e.ratio_min);
            Scored s = score(ch, e.W, phi, tau, epsilon, cfg);
            if (s.feasible && (!have || s.objective > best.objective)) {
                best = s;
                have = true;
            }
        } else if (!have) {
            throw InfeasibleError("solve_w: relaxed beamforming problem is infeasible", sol.witness);
        }
    }
    if (!have) throw InfeasibleError("solve_w: no feasible beamformer found at the start", "rank-1 extraction");

    res.objective_trace.push_back(best.objective);
    for (int it = 1; it <= cfg.i_max; ++it) {
        ++res.dinkelbach_iterations;
        const double before = best.objective;
        DinkelbachW y = dinkelbach_update_w(lw, lift_beams(best.W), cfg);
        double sca_prev = best.objective;
        for (int j = 1; j <= cfg.j_max; ++j) {
            ++res.sca_iterations;
            opt.initial = scaled_lift(best.W, cfg.p_sbs);
            conic::Solution sol = conic::solve(build_problem(lw, y, lift_beams(best.W), cfg), opt);
            if (sol.status != conic::Status::optimal && sol.status != conic::Status::max_iter) break;
            Extracted e = extract(sol.X, cfg);
            res.rank1_ratio_min = std::min(res.rank1_ratio_min, e.ratio_min);
            Scored s = score(ch, e.W, phi, tau, epsilon, cfg);
            if (!s.feasible || s.objective <= best.objective) break;
            best = s;
            if (relative_change(best.objective, sca_prev) < cfg.eps_tol) break;
            sca_prev = best.objective;
        }
        res.objective_trace.push_back(best.objective);
        if (relative_change(best.objective, before) < cfg.eps_tol) break;
    }
    res.W = best.W;
    res.rank1_flag = res.rank1_ratio_min < 0.95;
    return res;
}

}  // namespace cisac
