#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cisac/bcd.hpp"
#include "cisac/sensing.hpp"

namespace cisac {

namespace {

double relative_change(double now, double before) {
    if (before == 0.0) return now == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(now - before) / std::abs(before);
}

TracePoint trace_point(int iter, const std::string& stage, const ChannelSet& ch, const CMat& W, const CVec& phi,
                       double tau, double epsilon, double rank1, const ScenarioConfig& cfg) {
    Evaluation ev = evaluate(ch, W, phi, tau, epsilon, cfg);
    TracePoint p;
    p.iter = iter;
    p.stage = stage;
    p.objective = ev.weighted_min_sinr;
    p.pd = ev.pd;
    p.pf = ev.pf;
    p.tau = tau;
    p.min_rate = std::numeric_limits<double>::infinity();
    for (const auto& r : ev.rate) p.min_rate = std::min(p.min_rate, r.avg_rate);
    if (ev.rate.empty()) p.min_rate = 0.0;
    p.max_interf = 0.0;
    for (double v : ev.interference) p.max_interf = std::max(p.max_interf, v);
    p.rank1_ratio_min = rank1;
    return p;
}

}  // namespace

std::vector<double> tau_grid(const ScenarioConfig& cfg) {
    const int n = std::max(cfg.tau_grid, 2);
    const double delta = cfg.t_total / (n + 1);
    std::vector<double> g;
    for (int i = 1; i <= n; ++i) g.push_back(i * delta);
    return g;
}

double tau_search(const ChannelSet& ch, const CMat& W, const CVec& phi, double epsilon, const ScenarioConfig& cfg) {
    double best_tau = -1.0;
    double best = -std::numeric_limits<double>::infinity();
    std::string first_violation;
    for (double tau : tau_grid(cfg)) {
        Evaluation ev = evaluate(ch, W, phi, tau, epsilon, cfg);
        FeasibilityReport rep = p1_feasibility(ev, cfg, strict_tolerances());
        if (!rep.feasible) {
            if (first_violation.empty()) first_violation = rep.violated;
            continue;
        }
        if (ev.weighted_min_sinr > best) {
            best = ev.weighted_min_sinr;
            best_tau = tau;
        }
    }
    if (best_tau < 0.0) throw InfeasibleError("tau_search: no feasible sensing time on the grid", first_violation);
    return best_tau;
}

double initial_tau(const ChannelSet& ch, const CVec& phi, double epsilon, const ScenarioConfig& cfg) {
    const double snr = snr_sbs(ch, phi, cfg);
    for (double tau : tau_grid(cfg)) {
        if (false_alarm_probability(tau, epsilon, cfg) <= cfg.p_f0 &&
            detection_probability(tau, epsilon, snr, cfg) >= cfg.p_d0)
            return tau;
    }
    throw InfeasibleError("initial_tau: no grid point meets the sensing targets", "detection probability");
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
    std::ostringstream os;
    os.precision(17);
    os << "iter,stage,objective,pd,pf,tau,min_rate,max_interf,rank1_ratio_min\n";
    for (const auto& p : trace)
        os << p.iter << ',' << p.stage << ',' << p.objective << ',' << p.pd << ',' << p.pf << ',' << p.tau << ','
           << p.min_rate << ',' << p.max_interf << ',' << p.rank1_ratio_min << '\n';
    return os.str();
}

ComplexityReport complexity_report(const ScenarioConfig& cfg, const IterationCounts& c, double eta) {
    const double log_term = std::log(1.0 / eta);
    const double M = cfg.m_ms, K = cfg.k_su, L = cfg.l_pu;
    ComplexityReport r;
    double bs_dim = std::max<double>(cfg.n_b, 2.0 * (M + K) + L + 1.0);
    r.o_bs = log_term * c.dt_bs * c.sca_bs * std::pow(bs_dim, 4.0) * std::sqrt(2.0 * M + 2.0 * K + L + 1.0);
    double ris_dim = cfg.n_r + M + K + L + 3.0;
    r.o_ris = log_term * c.dt_ris * c.ao_ris * c.sca_ris * std::pow(ris_dim, 4.0) * std::sqrt(cfg.n_r + 1.0);
    r.o_bcd = c.bcd * (r.o_bs + r.o_ris);
    return r;
}

CVec rate_max_ris(const ChannelSet& ch) {
    const int nr = ch.n_r();
    const int K = ch.k_su();
    if (K == 0) return unit_ris(nr).phi;
    // per-SUE factor [H_S2R diag(h_R2SU), h_S2SU] so that the channel is factor * (phi; 1)
    std::vector<CMat> f;
    CMat lifted = CMat::Zero(nr + 1, nr + 1);
    for (int k = 0; k < K; ++k) {
        CMat b(ch.n_b(), nr + 1);
        b.leftCols(nr) = ch.H_s2r * ch.h_r2su[k].asDiagonal();
        b.col(nr) = ch.h_s2su[k];
        CMat r = b.adjoint() * b;
        double tr = r.trace().real();
        if (tr > 0.0) lifted += r / tr;
        f.push_back(std::move(b));
    }
    conic::Rank1 top = conic::principal_rank1(lifted);
    CVec phi(nr);
    cplx ref = top.v(nr);
    for (int n = 0; n < nr; ++n) {
        cplx z = std::abs(ref) > 0.0 ? top.v(n) / ref : top.v(n);
        phi(n) = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0);
    }
    auto weakest = [&](const CVec& p) {
        CVec pb(nr + 1);
        pb.head(nr) = p;
        pb(nr) = 1.0;
        double w = std::numeric_limits<double>::infinity();
        for (const CMat& b : f) w = std::min(w, (b * pb).squaredNorm());
        return w;
    };
    // a few coordinate sweeps over 16 phase levels on the weakest link gain
    double cur = weakest(phi);
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (int n = 0; n < nr; ++n) {
            cplx keep = phi(n);
            for (int a = 0; a < 16; ++a) {
                phi(n) = std::polar(1.0, 2.0 * M_PI * a / 16.0);
                double v = weakest(phi);
                if (v > cur) {
                    cur = v;
                    keep = phi(n);
                }
            }
            phi(n) = keep;
        }
    }
    return phi;
}

BcdResult bcd(const ChannelSet& ch, const ScenarioConfig& cfg, std::uint64_t seed, const BcdOptions& options) {
    BcdResult res;
    res.epsilon = detection_threshold(cfg);
    CVec phi = options.phi ? *options.phi : random_ris(ch.n_r(), mix_seed(seed, stream::ris_init)).phi;
    if (phi.size() != ch.n_r()) throw std::invalid_argument("bcd: phase vector has the wrong length");

    double tau = 0.0;
    WResult w0;
    try {
        tau = options.fixed_tau ? *options.fixed_tau : initial_tau(ch, phi, res.epsilon, cfg);
        w0 = solve_w(ch, phi, tau, res.epsilon, cfg);
    } catch (const InfeasibleError&) {
        if (options.ris != RisMode::optimize || !options.rate_warm_start) throw;
        phi = rate_max_ris(ch);
        res.warm_started = true;
        tau = options.fixed_tau ? *options.fixed_tau : initial_tau(ch, phi, res.epsilon, cfg);
        w0 = solve_w(ch, phi, tau, res.epsilon, cfg);
    }
    CMat W = w0.W;
    double rank1 = w0.rank1_ratio_min;
    int calls_w = 1, calls_phi = 0;
    res.counts.dt_bs += w0.dinkelbach_iterations;
    res.counts.sca_bs += w0.sca_iterations;

    res.trace.push_back(trace_point(0, "init", ch, W, phi, tau, res.epsilon, rank1, cfg));
    res.objective.push_back(res.trace.back().objective);

    for (int it = 1; it <= cfg.i_max; ++it) {
        res.iterations = it;
        const double before = res.objective.back();
        try {
            if (!options.fixed_tau) {
                tau = tau_search(ch, W, phi, res.epsilon, cfg);
                res.trace.push_back(trace_point(it, "tau", ch, W, phi, tau, res.epsilon, rank1, cfg));
            }
            WResult wr = solve_w(ch, phi, tau, res.epsilon, cfg, W);
            W = wr.W;
            rank1 = wr.rank1_ratio_min;
            ++calls_w;
            res.counts.dt_bs += wr.dinkelbach_iterations;
            res.counts.sca_bs += wr.sca_iterations;
            res.trace.push_back(trace_point(it, "w", ch, W, phi, tau, res.epsilon, rank1, cfg));
            if (options.ris == RisMode::optimize) {
                PhiResult pr = solve_phi(ch, W, tau, res.epsilon, phi, cfg, mix_seed(seed, 1000 + it));
                phi = pr.phi;
                ++calls_phi;
                res.counts.dt_ris += pr.dinkelbach_iterations;
                res.counts.ao_ris += pr.ao_iterations;
                res.counts.sca_ris += pr.sca_iterations;
                res.trace.push_back(trace_point(it, "phi", ch, W, phi, tau, res.epsilon, pr.rank1_ratio, cfg));
            }
        } catch (const InfeasibleError& e) {
            throw InfeasibleError(std::string("bcd iteration ") + std::to_string(it) + ": " + e.what(), e.binding());
        }
        res.objective.push_back(res.trace.back().objective);
        if (relative_change(res.objective.back(), before) < cfg.eps_tol) {
            res.converged = true;
            break;
        }
    }
    res.tau = tau;
    res.W = W;
    res.phi = phi;
    res.counts.bcd = res.iterations;
    res.counts.dt_bs /= calls_w;
    res.counts.sca_bs /= calls_w;
    if (calls_phi > 0) {
        res.counts.dt_ris /= calls_phi;
        res.counts.ao_ris /= calls_phi;
        res.counts.sca_ris /= calls_phi;
    }
    return res;
}

}  // namespace cisac
