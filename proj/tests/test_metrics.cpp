#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "cisac/bcd.hpp"
#include "cisac/metrics.hpp"
#include "cisac/sensing.hpp"
#include "support.hpp"

using namespace cisac;
using namespace testing;

namespace {

GeometricLink random_link(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(-1.3, 1.3), ph(0.0, 2 * M_PI), mag(0.5, 2.0);
    GeometricLink l;
    l.theta_d = ang(rng);
    l.theta_r = ang(rng);
    l.theta_d_prime = ang(rng);
    l.theta_r_prime = ang(rng);
    l.h_d = std::polar(mag(rng), ph(rng));
    l.h_r = std::polar(mag(rng), ph(rng));
    return l;
}

// Perturbs coordinate c of the channel parameter vector.
GeometricLink shifted(GeometricLink l, int c, double h) {
    switch (c) {
    case 0: l.theta_d += h; break;
    case 1: l.theta_r += h; break;
    case 2: l.h_d += cplx(0.0, h); break;
    case 3: l.h_d += cplx(h, 0.0); break;
    case 4: l.h_r += cplx(0.0, h); break;
    case 5: l.h_r += cplx(h, 0.0); break;
    }
    return l;
}

CMat fd_partials(const GeometricLink& l, const CVec& w, const CVec& phi, const ScenarioConfig& cfg, double h) {
    CMat d(cfg.n_m, 6);
    for (int c = 0; c < 6; ++c)
        d.col(c) = (noiseless_rx(shifted(l, c, h), w, phi, cfg) - noiseless_rx(shifted(l, c, -h), w, phi, cfg)) / (2 * h);
    return d;
}

}  // namespace

TEST_CASE("noiseless received signal") {
    std::mt19937_64 rng(1);
    ScenarioConfig cfg = desk_scenario();
    GeometricLink l = random_link(rng);
    CVec w = random_vector(cfg.n_b, rng);
    CVec phi = random_phases(cfg.n_r, rng);

    GeometricLink direct_only = l;
    direct_only.h_r = 0.0;
    CVec want = l.h_d * steering_vector(l.theta_d, cfg.n_m) * (steering_vector(l.theta_d_prime, cfg.n_b).transpose() * w)(0);
    CHECK((noiseless_rx(direct_only, w, phi, cfg) - want).norm() <= 1e-14 * want.norm());
    CHECK(noiseless_rx(l, CVec::Zero(cfg.n_b), phi, cfg).norm() == 0.0);

    // the same signal through effective_channels with rank-1 channels substituted
    ChannelSet ch = desk_instance(1).ch;
    const CVec a_d = steering_vector(l.theta_d_prime, cfg.n_b), b_d = steering_vector(l.theta_d, cfg.n_m);
    const CVec a_r = steering_vector(l.theta_r_prime, cfg.n_b), b_r = steering_vector(l.theta_r, cfg.n_m);
    const CVec c_in = steering_vector(l.theta_r_prime, cfg.n_r), c_out = steering_vector(l.theta_r, cfg.n_r);
    ch.H_s2ms[0] = l.h_d * a_d * b_d.transpose();
    ch.H_s2r = a_r * c_in.transpose();
    ch.H_r2ms[0] = l.h_r * c_out * b_r.transpose();
    CVec eff = effective_channels(ch, phi).G[0] * w;
    CVec rx = noiseless_rx(l, w, phi, cfg);
    CHECK((eff - rx).norm() <= 1e-12 * rx.norm());
}

TEST_CASE("channel partials") {
    std::mt19937_64 rng(2);
    ScenarioConfig cfg = desk_scenario();
    for (int trial = 0; trial < 25; ++trial) {
        GeometricLink l = random_link(rng);
        CVec w = random_vector(cfg.n_b, rng);
        CVec phi = random_phases(cfg.n_r, rng);
        CMat d = partials_channel(l, w, phi, cfg);
        CVec re_hd = steering_vector(l.theta_d, cfg.n_m) * (steering_vector(l.theta_d_prime, cfg.n_b).transpose() * w)(0);
        CHECK((d.col(3) - re_hd).norm() <= 1e-14 * re_hd.norm());
        CHECK((d.col(2) - cplx(0, 1) * d.col(3)).norm() <= 1e-15 * d.col(3).norm());
        CHECK((d.col(4) - cplx(0, 1) * d.col(5)).norm() <= 1e-15 * d.col(5).norm());
        CMat fd = fd_partials(l, w, phi, cfg, 1e-6);
        for (int c = 0; c < 6; ++c) CHECK((d.col(c) - fd.col(c)).norm() <= 1e-5 * d.col(c).norm());
    }
}

TEST_CASE("channel FIM") {
    std::mt19937_64 rng(3);
    ScenarioConfig cfg = desk_scenario();
    GeometricLink l = random_link(rng);
    CVec w = random_vector(cfg.n_b, rng);
    CVec phi = random_phases(cfg.n_r, rng);
    const double tau = 2e-3;
    RMat f = fim_channel(l, w, phi, tau, cfg);
    CHECK((f - f.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<RMat> es(f);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().maxCoeff());

    CHECK(fim_channel(l, w, phi, cfg.t_total, cfg).norm() == 0.0);
    CHECK_THROWS(fim_channel(l, w, phi, 1.5 * cfg.t_total, cfg));

    ScenarioConfig noisy = cfg;
    noisy.sigma2_ms *= 2.0;
    CHECK((fim_channel(l, w, phi, tau, noisy) - 0.5 * f).norm() <= 1e-14 * f.norm());

    GeometricLink direct_only = l;
    direct_only.h_r = 0.0;
    RMat fd = fim_channel(direct_only, w, phi, tau, cfg);
    double gain = std::norm((steering_vector(l.theta_d_prime, cfg.n_b).transpose() * w)(0));
    double want = 2.0 * (cfg.t_total - tau) / cfg.sigma2_ms * cfg.n_m * gain;
    CHECK(rel_err(fd(2, 2), want) < 1e-12);
    CHECK(rel_err(fd(3, 3), want) < 1e-12);
    CHECK(std::abs(fd(2, 3)) <= 1e-12 * want);

    // finite-difference FIM on 100 instances
    for (int trial = 0; trial < 100; ++trial) {
        GeometricLink li = random_link(rng);
        CVec wi = random_vector(cfg.n_b, rng);
        CVec pi = random_phases(cfg.n_r, rng);
        CMat d = fd_partials(li, wi, pi, cfg, 1e-6);
        RMat num = (2.0 * (cfg.t_total - tau) / cfg.sigma2_ms) * (d.adjoint() * d).real();
        RMat got = fim_channel(li, wi, pi, tau, cfg);
        CHECK((got - num).norm() <= 1e-4 * got.norm());
    }
}

TEST_CASE("Jacobian") {
    ScenarioConfig cfg = desk_scenario();
    RMat g = jacobian({70.0, 30.0}, cfg);
    CHECK(g(0, 0) == doctest::Approx(-20.0 / 5300.0).epsilon(1e-14));
    CHECK(g(0, 1) == doctest::Approx(70.0 / 5300.0).epsilon(1e-14));
    CHECK((g.bottomRightCorner(4, 4) - RMat::Identity(4, 4)).norm() == 0.0);
    CHECK(g.topRightCorner(2, 4).norm() == 0.0);
    CHECK(g.bottomLeftCorner(4, 2).norm() == 0.0);
    // moving the MS radially away from the SBS: same direction, magnitude ~ 1/d
    RMat g2 = jacobian({140.0, 10.0}, cfg);
    CHECK(g2(0, 0) / g(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(g2(0, 1) / g(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
    // entries are |d|/d^2 = 1/d, so radial doubling halves them
    CHECK_THROWS_AS(jacobian(cfg.pos_sbs, cfg), GeometryError);
    CHECK_THROWS_AS(jacobian(cfg.pos_ris, cfg), GeometryError);
}

TEST_CASE("position FIM and PEB") {
    CHECK(peb(3.0 * RMat::Identity(6, 6)).value == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
    RMat f = RMat::Identity(6, 6);
    f(0, 0) = 2.0;
    f(1, 1) = 8.0;
    CHECK(peb(f).value == doctest::Approx(std::sqrt(0.625)).epsilon(1e-14));
    CHECK(peb(4.0 * f).value == doctest::Approx(0.5 * std::sqrt(0.625)).epsilon(1e-14));

    RMat singular = RMat::Identity(6, 6);
    singular(4, 4) = 0.0;
    try {
        peb(singular);
        FAIL("expected a singular FIM");
    } catch (const SingularFimError& e) {
        CHECK(std::abs(e.direction()(4)) == doctest::Approx(1.0));
    }
    RMat rank_def = RMat::Identity(6, 6);
    rank_def(0, 1) = rank_def(1, 0) = 1.0;  // position block [[1,1],[1,1]]
    try {
        peb(rank_def);
        FAIL("expected a singular FIM");
    } catch (const SingularFimError& e) {
        CHECK(std::abs(std::abs(e.direction()(0)) - std::sqrt(0.5)) < 1e-8);
    }

    std::mt19937_64 rng(4);
    ScenarioConfig cfg = desk_scenario();
    Instance in = desk_instance(4);
    GeometricLink l = geometric_ms_link(cfg, in.pos, 1, 4);
    CVec w = random_vector(cfg.n_b, rng);
    CVec phi = random_phases(cfg.n_r, rng);
    FimPair p = fim_pair(l, w, phi, 1e-3, in.pos.ms[1], cfg);
    CHECK((p.f_p - p.gamma.transpose() * p.f_c * p.gamma).norm() <= 1e-10 * p.f_p.norm());
    CHECK((p.f_p - p.f_p.transpose()).norm() == 0.0);
}

TEST_CASE("PEB scaling laws") {
    std::mt19937_64 rng(5);
    ScenarioConfig cfg = desk_scenario();
    cfg.cluster_ms = {60.0, 0.0};  // well away from the SBS-RIS line
    for (int trial = 0; trial < 10; ++trial) {
        Instance in = make_instance(cfg, 50 + trial);
        GeometricLink l = geometric_ms_link(cfg, in.pos, 0, 50 + trial);
        CVec w = random_vector(cfg.n_b, rng);
        CVec phi = random_phases(cfg.n_r, rng);
        const double tau = 2e-3;
        double base = peb(fim_pair(l, w, phi, tau, in.pos.ms[0], cfg).f_p).value;
        ScenarioConfig noisy = cfg;
        noisy.sigma2_ms *= 3.0;
        CHECK(rel_err(peb(fim_pair(l, w, phi, tau, in.pos.ms[0], noisy).f_p).value, std::sqrt(3.0) * base) < 1e-8);
        // (T - tau) scaled by 2
        double tau2 = cfg.t_total - 2.0 * (cfg.t_total - tau) / 2.5;
        double half = peb(fim_pair(l, w, phi, tau2, in.pos.ms[0], cfg).f_p).value;
        CHECK(rel_err(half, base * std::sqrt(2.5 / 2.0)) < 1e-8);
    }
}

TEST_CASE("weighted PEB") {
    ScenarioConfig cfg = desk_scenario();
    CHECK(weighted_peb({2.0, 4.0}, cfg) == 3.0);
    cfg.lambda_m = {1.0};
    CHECK(weighted_peb({7.5}, cfg) == 7.5);
    cfg.lambda_m = {0.2, 0.3, 0.5};
    CHECK(weighted_peb({1.25, 1.25, 1.25}, cfg) == doctest::Approx(1.25).epsilon(1e-15));
    CHECK_THROWS(weighted_peb({1.0}, cfg));
}

TEST_CASE("MS SINR") {
    std::mt19937_64 rng(6);
    Instance in = desk_instance(6);
    const ScenarioConfig& cfg = in.cfg;
    CMat W = random_matrix(cfg.n_b, 4, rng, 0.3);
    CVec phi = random_phases(cfg.n_r, rng);
    CHECK(ms_sinr(in.ch, W, phi, cfg.t_total, 0.9, 0.1, cfg, 0).avg == 0.0);
    SinrBreakdown s = ms_sinr(in.ch, W, phi, 2e-3, 1.0, 0.0, cfg, 1);
    CHECK(rel_err(s.avg, (1 - 2e-3 / cfg.t_total) * cfg.prob_h0 * s.case1) < 1e-14);

    ScenarioConfig quiet = cfg;
    quiet.p_pbs = 0.0;
    CMat W0 = W;
    W0.rightCols(2).setZero();  // no SUE beams
    SinrBreakdown q = ms_sinr(in.ch, W0, phi, 2e-3, 0.9, 0.1, quiet, 0);
    double want = (effective_channels(in.ch, phi).G[0] * W0.col(0)).squaredNorm() / cfg.sigma2_ms;
    CHECK(rel_err(q.case1, want) < 1e-12);
    CHECK(rel_err(q.case2, want) < 1e-12);

    double prev = std::numeric_limits<double>::infinity();
    for (double tau : tau_grid(cfg)) {
        double v = ms_sinr(in.ch, W, phi, tau, 0.95, 0.05, cfg, 0).avg;
        CHECK(v <= prev);
        prev = v;
    }
}

TEST_CASE("SUE rate") {
    std::mt19937_64 rng(7);
    Instance in = desk_instance(7);
    ScenarioConfig cfg = in.cfg;
    CMat W = random_matrix(cfg.n_b, 4, rng, 0.3);
    CVec phi = random_phases(cfg.n_r, rng);
    CHECK(su_rate(in.ch, W, phi, cfg.t_total, 0.9, 0.1, cfg, 0).avg_rate == 0.0);

    // single active SUE, no PBS signal, no RIS
    ChannelSet bare = without_ris(in.ch);
    cfg.p_pbs = 0.0;
    CMat W1 = W;
    W1.col(3).setZero();
    const double tau = 3e-3, pd = 0.93, pf = 0.07;
    double snr = std::norm((in.ch.h_s2su[0].transpose() * W1.col(2))(0)) / cfg.sigma2_su;
    double duty = 1 - tau / cfg.t_total;
    double want = duty * (cfg.prob_h0 * (1 - pf) + cfg.prob_h1 * (1 - pd)) * std::log2(1 + snr);
    CHECK(rel_err(su_rate(bare, W1, phi, tau, pd, pf, cfg, 0).avg_rate, want) < 1e-12);

    RateBreakdown r1 = su_rate(bare, W1, phi, tau, pd, pf, cfg, 0);
    RateBreakdown r2 = su_rate(bare, std::sqrt(2.0) * W1, phi, tau, pd, pf, cfg, 0);
    CHECK(rel_err(r2.sinr_case1, 2.0 * r1.sinr_case1) < 1e-12);
    CHECK(r2.avg_rate > r1.avg_rate);
}

TEST_CASE("PUE interference") {
    std::mt19937_64 rng(8);
    Instance in = desk_instance(8);
    CVec phi = random_phases(in.cfg.n_r, rng);
    CMat W = random_matrix(in.cfg.n_b, 4, rng);
    CHECK(pue_interference(in.ch, CMat::Zero(in.cfg.n_b, 4), phi, 0) == 0.0);
    const cplx c(0.4, -1.3);
    CHECK(rel_err(pue_interference(in.ch, c * W, phi, 1), std::norm(c) * pue_interference(in.ch, W, phi, 1)) < 1e-12);
    double want = 0.0;
    for (int i = 0; i < 4; ++i) {
        cplx rx = (in.ch.h_s2pu[0].transpose() * W.col(i))(0) +
                  (in.ch.h_r2pu[0].transpose() * phi.asDiagonal() * in.ch.H_s2r.transpose() * W.col(i))(0);
        want += std::norm(rx);
    }
    CHECK(rel_err(pue_interference(in.ch, W, phi, 0), want) < 1e-12);
}

TEST_CASE("beam phase invariance") {
    std::mt19937_64 rng(9);
    Instance in = desk_instance(9);
    CVec phi = random_phases(in.cfg.n_r, rng);
    CMat W = random_matrix(in.cfg.n_b, 4, rng, 0.2);
    for (int i = 0; i < 4; ++i) {
        CMat V = W;
        V.col(i) *= std::polar(1.0, 0.7 + i);
        for (int m = 0; m < 2; ++m)
            CHECK(rel_err(ms_sinr(in.ch, V, phi, 2e-3, 0.9, 0.1, in.cfg, m).avg, ms_sinr(in.ch, W, phi, 2e-3, 0.9, 0.1, in.cfg, m).avg) < 1e-12);
        for (int k = 0; k < 2; ++k)
            CHECK(rel_err(su_rate(in.ch, V, phi, 2e-3, 0.9, 0.1, in.cfg, k).avg_rate, su_rate(in.ch, W, phi, 2e-3, 0.9, 0.1, in.cfg, k).avg_rate) < 1e-12);
        for (int l = 0; l < 2; ++l) CHECK(rel_err(pue_interference(in.ch, V, phi, l), pue_interference(in.ch, W, phi, l)) < 1e-12);
    }
}

TEST_CASE("evaluation and feasibility report") {
    std::mt19937_64 rng(10);
    Instance in = desk_instance(10);
    const ScenarioConfig& cfg = in.cfg;
    CVec phi = random_phases(cfg.n_r, rng);
    const double tau = 6e-3, eps = detection_threshold(cfg);
    Evaluation ev = evaluate(in.ch, CMat::Zero(cfg.n_b, 4), phi, tau, eps, cfg);
    FeasibilityReport rep = p1_feasibility(ev, cfg);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.rate_slack[0] < 0.0);
    CHECK(rep.power_slack == doctest::Approx(cfg.p_sbs));
    for (int l = 0; l < 2; ++l) CHECK(rep.interference_slack[l] == doctest::Approx(cfg.gamma_l0[l]));
    CHECK(rep.unit_modulus_residual == 0.0);
    CHECK_FALSE(rep.violated.empty());

    CMat W = random_matrix(cfg.n_b, 4, rng, 0.05);
    Evaluation e2 = evaluate(in.ch, W, phi, tau, eps, cfg);
    double snr = snr_sbs(in.ch, phi, cfg);
    CHECK(e2.pd == detection_probability(tau, eps, snr, cfg));
    CHECK(e2.pf == false_alarm_probability(tau, eps, cfg));
    double mn = std::numeric_limits<double>::infinity(), sum = 0.0;
    for (int m = 0; m < 2; ++m) {
        double v = cfg.lambda_m[m] * ms_sinr(in.ch, W, phi, tau, e2.pd, e2.pf, cfg, m).avg;
        mn = std::min(mn, v);
        sum += v;
    }
    CHECK(rel_err(e2.weighted_min_sinr, mn) < 1e-12);
    CHECK(rel_err(e2.weighted_sum_sinr, sum) < 1e-12);
    CHECK(rel_err(e2.rate[1].avg_rate, su_rate(in.ch, W, phi, tau, e2.pd, e2.pf, cfg, 1).avg_rate) < 1e-12);

    CVec off = phi;
    off(3) *= 1.001;
    CHECK(p1_feasibility(in.ch, W, off, tau, eps, cfg).unit_modulus_residual == doctest::Approx(1e-3).epsilon(1e-6));

    nlohmann::json j = nlohmann::json::parse(metrics_record(e2, {1.0, 2.0}, 1.5, tau));
    for (const char* k : {"weighted_min_sinr", "weighted_sum_sinr", "peb", "weighted_peb", "rate", "gamma", "pd", "pf", "tau"})
        CHECK(j.contains(k));
}
