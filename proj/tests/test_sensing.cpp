#include <doctest.h>

#include <cmath>

#include "cisac/sensing.hpp"
#include "support.hpp"

using namespace cisac;
using namespace testing;

namespace {

ScenarioConfig sensing_cfg() {
    ScenarioConfig c = desk_scenario();
    c.n_b = 16;
    c.sigma2_sbs = 1e-9;
    return c;
}

}  // namespace

TEST_CASE("Q function") {
    CHECK(q_function(0.0) == 0.5);
    CHECK(q_function(40.0) < 1e-300);
    CHECK(q_function(1.6448536) == doctest::Approx(0.05).epsilon(2e-6));
    CHECK(std::abs(q_function(1.6448536) - 0.05) < 1e-7);
    for (double x : {-3.0, -0.5, 0.25, 1.0, 2.5, 5.0, 8.0})
        CHECK(rel_err(q_function(x), 0.5 * std::erfc(x / std::sqrt(2.0))) < 1e-12);
    CHECK(q_function(-1.2) + q_function(1.2) == doctest::Approx(1.0).epsilon(1e-15));
    for (double p : {1e-12, 1e-4, 0.1, 0.5, 0.9, 0.999999}) CHECK(rel_err(q_function(q_inverse(p)), p) < 1e-10);
    CHECK(q_inverse(0.1) == doctest::Approx(1.2815515655446004).epsilon(1e-12));
    CHECK_THROWS(q_inverse(0.0));
    CHECK_THROWS(q_inverse(1.0));
}

TEST_CASE("false alarm probability") {
    ScenarioConfig c = sensing_cfg();
    const double tau = 6000.0 / c.f_s;  // tau f_s = 6000
    CHECK(false_alarm_probability(tau, c.sigma2_sbs * c.n_b, c) == 0.5);
    CHECK(false_alarm_probability(tau, 1.0, c) == 0.0);
    double eps = c.sigma2_sbs * (16.0 + 1.2816 * 4.0 / std::sqrt(6000.0));
    CHECK(std::abs(false_alarm_probability(tau, eps, c) - 0.100) < 1e-4);
    CHECK_THROWS(false_alarm_probability(0.0, eps, c));
    CHECK_THROWS(false_alarm_probability(-1e-3, eps, c));
    // strictly increasing as the threshold drops
    double prev = -1.0;
    for (double e = 16.2e-9; e >= 15.8e-9; e -= 0.02e-9) {
        double p = false_alarm_probability(tau, e, c);
        CHECK(p > prev);
        prev = p;
    }
}

TEST_CASE("detection probability") {
    ScenarioConfig c = sensing_cfg();
    const double tau = 1e-3;
    const double eps = calibrate_threshold(tau, 0.1, c);
    CHECK(detection_probability(tau, eps, 0.0, c) == doctest::Approx(false_alarm_probability(tau, eps, c)).epsilon(1e-15));
    CHECK(detection_probability(tau, eps, 1e6, c) == 1.0);
    double prev = 0.0;
    for (double snr : {0.0, 0.01, 0.05, 0.1, 0.3, 1.0}) {
        double p = detection_probability(tau, eps, snr, c);
        CHECK(p > prev);
        CHECK(p >= false_alarm_probability(tau, eps, c) - 1e-15);
        prev = p;
    }
    // threshold below the signal mean: longer sensing helps
    const double snr = 0.05;
    const double e_low = c.sigma2_sbs * (c.n_b + 0.5 * snr);
    prev = 0.0;
    for (double t = 1e-4; t < c.t_total; t += 5e-4) {
        double p = detection_probability(t, e_low, snr, c);
        CHECK(p > prev);
        prev = p;
    }
    CHECK_THROWS(detection_probability(0.0, eps, 1.0, c));
    CHECK_THROWS(detection_probability(tau, eps, -1.0, c));
    // the complement is evaluated without cancellation
    const double g = detection_argument(tau, eps, 0.3, c);
    CHECK(missed_detection_probability(tau, eps, 0.3, c) == q_function(-g));
    CHECK(missed_detection_probability(tau, eps, 0.1, c) ==
          doctest::Approx(1.0 - detection_probability(tau, eps, 0.1, c)).epsilon(1e-12));
}

TEST_CASE("threshold calibration") {
    ScenarioConfig c = sensing_cfg();
    const double tau = 6000.0 / c.f_s;
    CHECK(calibrate_threshold(tau, 0.5, c) == doctest::Approx(c.sigma2_sbs * c.n_b).epsilon(1e-15));
    for (double t : {1e-4, 1e-3, 5e-3, 9.9e-3})
        for (double p : {1e-4, 0.01, 0.1, 0.5, 0.9}) CHECK(std::abs(false_alarm_probability(t, calibrate_threshold(t, p, c), c) - p) < 1e-9);
    double closed = c.sigma2_sbs * (16.0 + q_inverse(0.1) * 4.0 / std::sqrt(6000.0));
    CHECK(calibrate_threshold(tau, 0.1, c) == doctest::Approx(closed).epsilon(1e-14));
    CHECK(calibrate_threshold(tau, 0.1, c) == doctest::Approx(c.sigma2_sbs * (16.0 + 1.2816 * 4.0 / std::sqrt(6000.0))).epsilon(1e-6));

    ScenarioConfig d = desk_scenario();
    CHECK(detection_threshold(d) == calibrate_threshold(0.5 * d.t_total, d.p_f0, d));
    d.epsilon_det = 3e-8;
    CHECK(detection_threshold(d) == 3e-8);
}

TEST_CASE("exponential detection bound") {
    CHECK(pd_bound_z(0.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(pd_bound_z(2.0) == doctest::Approx(1.0 - std::exp(-1.0) / 12.0 - 0.25 * std::exp(-4.0 / 3.0)).epsilon(1e-15));
    CHECK(pd_bound_z(2.0) == doctest::Approx(0.9035).epsilon(1e-4));
    CHECK(pd_bound_z(2000.0) == 1.0);
    CHECK(miss_bound_z(3.0) + pd_bound_z(3.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS(pd_bound_z(-0.1));
    const double zm = z_min(0.9);
    CHECK(pd_bound_z(zm) >= 0.9);
    CHECK(pd_bound_z(zm * (1 - 1e-9)) < 0.9);
    CHECK(z_min(0.5) == 0.0);
    // above x ~ 0.67 the two-exponential form bounds the Gaussian tail
    for (double x = 0.7; x <= 6.0; x += 1e-3) CHECK_MESSAGE(q_function(x) <= miss_bound_z(x * x), x);
}

TEST_CASE("sensing lift and z") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        Instance in = desk_instance(100 + trial);
        CVec phi = random_phases(in.ch.n_r(), rng);
        CMat lifted = lift_phase(phi);
        double direct = sensing_channel(in.ch, phi).squaredNorm();
        CMat e = sensing_lift(in.ch);
        CHECK(rel_err((e * lifted).trace().real(), direct) < 1e-10);
        CHECK(rel_err(sensing_factor(in.ch).operator*(lift_vector(phi)).squaredNorm(), direct) < 1e-12);
        CHECK(rel_err(snr_sbs(in.ch, phi, in.cfg), (e * lifted).trace().real() * in.cfg.p_pbs / in.cfg.sigma2_sbs) < 1e-10);

        const double tau = 2e-3;
        const double eps = detection_threshold(in.cfg);
        double z = z_of_phi(lifted, in.ch, tau, eps, in.cfg);
        double g = detection_argument(tau, eps, snr_sbs(in.ch, phi, in.cfg), in.cfg);
        CHECK(rel_err(z, g * g) < 1e-9);
        CHECK(rel_err(z_of_phi(lifted, in.ch, 4 * tau, eps, in.cfg), 4 * z) < 1e-9);
        CHECK(detection_probability(tau, eps, snr_sbs(in.ch, phi, in.cfg), in.cfg) >= pd_bound_z(z));
    }
}

TEST_CASE("z at the zero-numerator point and the unfavorable regime") {
    ScenarioConfig c = desk_scenario();
    Instance in = desk_instance(1);
    CVec phi = CVec::Ones(c.n_r);
    double snr = snr_sbs(in.ch, phi, c);
    double eps = c.sigma2_sbs * (c.n_b + snr);
    CHECK(z_of_phi(lift_phase(phi), in.ch, 1e-3, eps, c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(z_of_phi(lift_phase(phi), in.ch, 1e-3, eps * 2.0, c), std::domain_error);
}

TEST_CASE("ROC curves") {
    ScenarioConfig c = desk_scenario();
    c.p_pbs = 1e-12;
    Instance in = make_instance(c, 5);
    CVec phi = CVec::Ones(c.n_r);
    ChannelSet silent = in.ch;
    silent.h_p2s.setZero();
    silent.H_s2r.setZero();
    std::vector<double> grid = default_pf_grid();
    CHECK(grid.size() == 25);
    CHECK(grid.front() == doctest::Approx(1e-4));
    CHECK(grid.back() == doctest::Approx(0.9));
    for (const RocPoint& p : roc_curve(silent, phi, 1e-3, c, grid)) CHECK(p.one_minus_pd == doctest::Approx(1.0 - p.pf).epsilon(1e-9));

    // weak and strong primary signal on the same channels
    auto weak = roc_curve(in.ch, phi, 1e-3, c, grid);
    ScenarioConfig strong = c;
    strong.p_pbs = 4e-12;
    auto loud = roc_curve(in.ch, phi, 1e-3, strong, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(loud[i].one_minus_pd < weak[i].one_minus_pd);
        CHECK(weak[i].pd + weak[i].one_minus_pd == doctest::Approx(1.0).epsilon(1e-12));
    }
    auto near_one = roc_curve(in.ch, phi, 1e-3, c, {0.999999});
    CHECK(near_one[0].one_minus_pd < 1e-5);
}
