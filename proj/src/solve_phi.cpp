#include <algorithm>
#include <cmath>
#include <limits>

#include "cisac/bcd.hpp"
#include "cisac/sensing.hpp"

namespace cisac {

namespace {

double relative_change(double now, double before) {
    if (before == 0.0) return now == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(now - before) / std::abs(before);
}

CVec unit_modulus_from(const CVec& lifted_vec) {
    const Eigen::Index n = lifted_vec.size() - 1;
    CVec phi(n);
    cplx ref = lifted_vec(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx z = std::abs(ref) > 0.0 ? lifted_vec(i) / ref : lifted_vec(i);
        phi(i) = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0);
    }
    return phi;
}

bool better(const conic::Candidate& a, const conic::Candidate& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.objective > b.objective;
}

double current_z(const CMat& phibar, const ChannelSet& ch, double tau, double epsilon, const ScenarioConfig& cfg,
                 double zmin) {
    try {
        return std::max(zmin, z_of_phi(phibar, ch, tau, epsilon, cfg));
    } catch (const std::domain_error&) {
        return zmin;
    }
}

conic::Problem build_problem(const LiftedPhi& lp, const DinkelbachPhi& y, double z, double tau, double epsilon,
                             const CMat& x0, const ScenarioConfig& cfg) {
    const int M = static_cast<int>(lp.G_bar.size());
    const int K = static_cast<int>(lp.E.size());
    const int n = static_cast<int>(lp.E_hat.rows());
    const double miss = miss_bound_z(z);
    conic::Problem pr;
    const int v = pr.add_variable(n, true, "phibar");

    for (int m = 0; m < M; ++m) {
        const double s = 1.0 / cfg.sigma2_ms;
        CMat coeff = -(lp.a1[m] + lp.c[m] * miss) * s * lp.G_bar[m][m];
        for (int i = M; i < M + K; ++i) coeff += (y.y1[m] + y.y2[m]) * s * lp.G_bar[m][i];
        coeff += y.y2[m] * cfg.p_pbs * s * lp.G_tilde[m];
        conic::Affine a;
        a.terms.push_back({v, coeff});
        a.t_coeff = 1.0;
        pr.add_le(a, -y.y1[m] - y.y2[m], "sinr[" + std::to_string(m) + "]");
    }

    const double cm = lp.c_tilde * miss;
    for (int k = 0; k < K; ++k) {
        const double ns = cfg.sigma2_su;
        CMat all = CMat::Zero(n, n);
        for (int i = 0; i < K; ++i) all += lp.E[k][i].conjugate();
        conic::LogConstraint c;
        c.label = "rate[" + std::to_string(k) + "]";
        conic::Affine idle;
        idle.terms.push_back({v, all / ns});
        idle.constant = 1.0;
        c.logs.push_back({lp.b, idle});
        conic::Affine missed;
        missed.terms.push_back({v, (all + cfg.p_pbs * lp.E_bar[k]) / ns});
        missed.constant = 1.0;
        c.logs.push_back({cm, missed});
        AffineLogBound g1 = sca_rate_surrogate_phi(lp, x0, k, false, cfg);
        AffineLogBound g2 = sca_rate_surrogate_phi(lp, x0, k, true, cfg);
        CMat grad = lp.b * g1.grad + cm * g2.grad;
        c.linear.terms.push_back({v, -grad});
        double log_ns = std::log2(ns);
        c.rhs = cfg.r_k[k] + lp.b * (g1.value - log_ns) + cm * (g2.value - log_ns) - trace_re(grad, x0);
        pr.add_log(c);
    }

    if (cm > 0.0) {
        for (std::size_t l = 0; l < lp.E_tilde.size(); ++l) {
            CMat coeff = CMat::Zero(n, n);
            for (const CMat& e : lp.E_tilde[l]) coeff += e;
            conic::Affine a;
            a.terms.push_back({v, (cm / cfg.gamma_l0[l]) * coeff});
            pr.add_le(a, 1.0, "interference[" + std::to_string(l) + "]");
        }
    }

    // sensing: surrogate left side >= epsilon, divided by sigma_sbs^2
    PdSurrogate pd = sca_pd_surrogate(lp, x0, z, tau, cfg);
    {
        const double sn = cfg.sigma2_sbs;
        double slope = cfg.p_pbs / sn;
        double rhs = cfg.n_b - pd.root0 - epsilon / sn;
        if (pd.root0 > 0.0) {
            slope *= 1.0 - pd.kappa / pd.root0;
            rhs += pd.kappa * (cfg.p_pbs / sn) * pd.s0 / pd.root0;
        }
        conic::Affine a;
        a.terms.push_back({v, -slope * lp.E_hat});
        pr.add_le(a, rhs, "detection");
    }
    return pr;
}

struct ZChoice {
    double z = 0.0;
    bool admissible = false;
};

// Exhaustive z scan at a fixed lifted point.
ZChoice search_z(const LiftedPhi& lp, const PhiQuantities& q, double zmin, double zmax, double w_power,
                 double tau, const ScenarioConfig& cfg) {
    ZChoice best;
    double best_val = -std::numeric_limits<double>::infinity();
    const int n = std::max(cfg.z_grid, 2);
    const double d = 1.0 - tau / cfg.t_total;
    for (int g = 0; g < n; ++g) {
        double z = zmax <= zmin ? zmin : zmin + (zmax - zmin) * g / (n - 1);
        double miss = miss_bound_z(z);
        bool ok = true;
        std::vector<double> rates = model_rates(lp, q, z);
        for (std::size_t k = 0; k < rates.size(); ++k) ok = ok && rates[k] >= cfg.r_k[k];
        for (std::size_t l = 0; l < q.gamma.size(); ++l) ok = ok && lp.c_tilde * miss * q.gamma[l] <= cfg.gamma_l0[l];
        double power = d * (cfg.prob_h0 * (1.0 - lp.pf) + cfg.prob_h1 * miss) * w_power;
        ok = ok && power <= cfg.p_sbs;
        if (!ok) continue;
        double val = model_objective(lp, q, z);
        if (!best.admissible || val >= best_val) {
            best_val = val;
            best.z = z;
            best.admissible = true;
        }
    }
    return best;
}

}  // namespace

PhiResult solve_phi(const ChannelSet& ch, const CMat& W, double tau, double epsilon, const CVec& phi_init,
                    const ScenarioConfig& cfg, std::uint64_t seed) {
    if (phi_init.size() != ch.n_r()) throw std::invalid_argument("solve_phi: phase vector has the wrong length");
    LiftedPhi lp = build_lifted_phi(ch, W, tau, epsilon, cfg);
    const double w_power = W.squaredNorm();
    auto evaluator = [&](const CVec& phi) {
        Evaluation ev = evaluate(ch, W, phi, tau, epsilon, cfg);
        conic::Candidate c;
        c.feasible = p1_feasibility(ev, cfg, strict_tolerances()).feasible;
        c.objective = ev.weighted_min_sinr;
        return c;
    };

    PhiResult res;
    CVec inc = phi_init;
    conic::Candidate inc_score = evaluator(inc);
    const double zmin = z_min(cfg.p_d0);
    double z = current_z(RisPhase::from_phi(inc).lift(), ch, tau, epsilon, cfg, zmin);
    conic::Options opt;
    opt.keep_merit = false;
    std::uint64_t draw = 0;
    const std::uint64_t rand_seed = mix_seed(seed, stream::randomization);

    // one relaxed solve at the current z, followed by rounding; returns true on a strict improvement
    auto sca_step = [&](const DinkelbachPhi& y) {
        CMat x0 = RisPhase::from_phi(inc).lift();
        conic::Problem pr = build_problem(lp, y, z, tau, epsilon, x0, cfg);
        opt.initial = std::vector<CMat>{x0};
        conic::Solution sol = conic::solve(pr, opt);
        if (sol.status != conic::Status::optimal && sol.status != conic::Status::max_iter) return false;
        conic::Rank1 r1 = conic::principal_rank1(sol.X[0]);
        res.rank1_ratio = r1.ratio;
        conic::RandomizationResult rr =
            conic::gaussian_randomization(sol.X[0], cfg.n_rand, evaluator, mix_seed(rand_seed, draw++));
        res.randomization_feasible = rr.found_feasible;
        CVec pick = rr.phi;
        conic::Candidate pick_score = rr.score;
        CVec eig = unit_modulus_from(r1.v);
        conic::Candidate eig_score = evaluator(eig);
        if (better(eig_score, pick_score)) {
            pick = eig;
            pick_score = eig_score;
        }
        if (!better(pick_score, inc_score)) return false;
        inc = pick;
        inc_score = pick_score;
        return true;
    };

    res.objective_trace.push_back(inc_score.objective);
    for (int i = 1; i <= cfg.i_max; ++i) {
        ++res.dinkelbach_iterations;
        const double dt_before = inc_score.objective;
        DinkelbachPhi y = dinkelbach_update_phi(lp, RisPhase::from_phi(inc).lift(), z, cfg);
        for (int j = 1; j <= cfg.j_max; ++j) {
            ++res.ao_iterations;
            const double ao_before = inc_score.objective;
            const double z_before = z;
            double sca_prev = inc_score.objective;
            for (int k = 1; k <= cfg.k_max; ++k) {
                ++res.sca_iterations;
                if (!sca_step(y)) break;
                if (relative_change(inc_score.objective, sca_prev) < cfg.eps_tol) break;
                sca_prev = inc_score.objective;
            }
            CMat x = RisPhase::from_phi(inc).lift();
            PhiQuantities q = phi_quantities(lp, x, cfg);
            double zcap = current_z(x, ch, tau, epsilon, cfg, zmin);
            ZChoice zc = search_z(lp, q, zmin, zcap, w_power, tau, cfg);
            if (zc.admissible) z = zc.z;
            bool z_moved = std::abs(z - z_before) > cfg.eps_tol * std::max(1.0, std::abs(z_before));
            if (relative_change(inc_score.objective, ao_before) < cfg.eps_tol && !z_moved) break;
        }
        res.objective_trace.push_back(inc_score.objective);
        if (relative_change(inc_score.objective, dt_before) < cfg.eps_tol) break;
    }
    res.phi = inc;
    res.z = z;
    return res;
}

}  // namespace cisac
