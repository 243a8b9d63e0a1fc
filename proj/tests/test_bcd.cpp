#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cisac/bcd.hpp"
#include "cisac/sensing.hpp"
#include "support.hpp"

using namespace cisac;
using namespace testing;

TEST_CASE("complexity report") {
    ScenarioConfig cfg = default_scenario();
    IterationCounts c;
    c.dt_bs = 3;
    c.sca_bs = 2;
    c.dt_ris = 2;
    c.ao_ris = 3;
    c.sca_ris = 4;
    c.bcd = 5;
    ComplexityReport r = complexity_report(cfg, c, 1e-6);
    CHECK(r.o_bs == doctest::Approx(18017497.17632722).epsilon(1e-12));
    CHECK(r.o_ris == doctest::Approx(5382333172.92173).epsilon(1e-12));
    CHECK(r.o_bcd == doctest::Approx(5 * (r.o_bs + r.o_ris)).epsilon(1e-15));

    IterationCounts none = c;
    none.dt_bs = 0;
    CHECK(complexity_report(cfg, none).o_bs == 0.0);

    // the dominant term grows as N_R^4.5
    cfg.n_r = 4000;
    double small = complexity_report(cfg, c).o_ris;
    cfg.n_r = 8000;
    double large = complexity_report(cfg, c).o_ris;
    CHECK(large / small == doctest::Approx(std::pow(2.0, 4.5)).epsilon(0.01));
}

TEST_CASE("trace file layout") {
    std::vector<TracePoint> t(2);
    t[0].stage = "init";
    t[1].iter = 1;
    t[1].stage = "w";
    t[1].objective = 0.25;
    std::string csv = trace_csv(t);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line == "iter,stage,objective,pd,pf,tau,min_rate,max_interf,rank1_ratio_min");
    std::getline(is, line);
    CHECK(line.rfind("0,init,", 0) == 0);
    std::getline(is, line);
    CHECK(line.rfind("1,w,0.25,", 0) == 0);
    CHECK_FALSE(std::getline(is, line));
}

TEST_CASE("block coordinate ascent") {
    Instance in = desk_instance(1);
    BcdResult r = bcd(in.ch, in.cfg, 1);
    REQUIRE(!r.objective.empty());
    CHECK(r.iterations >= 1);
    CHECK(r.iterations <= in.cfg.i_max);
    CHECK(static_cast<int>(r.objective.size()) == r.iterations + 1);
    for (std::size_t i = 1; i < r.objective.size(); ++i)
        CHECK(r.objective[i] >= r.objective[i - 1] - 1e-6 * std::abs(r.objective[i - 1]));
    CHECK(r.trace.front().stage == "init");
    CHECK(r.counts.bcd == r.iterations);
    CHECK(r.epsilon == detection_threshold(in.cfg));

    FeasibilityReport rep = p1_feasibility(in.ch, r.W, r.phi, r.tau, r.epsilon, in.cfg);
    CHECK_MESSAGE(rep.feasible, rep.violated);
    Evaluation ev = evaluate(in.ch, r.W, r.phi, r.tau, r.epsilon, in.cfg);
    CHECK(ev.weighted_min_sinr == r.objective.back());
    for (const TracePoint& p : r.trace) {
        CHECK(p.pd >= in.cfg.p_d0 - 1e-3);
        CHECK(p.pf <= in.cfg.p_f0 + 1e-6);
    }

    // determinism
    BcdResult again = bcd(in.ch, in.cfg, 1);
    CHECK(again.objective == r.objective);
    CHECK(again.W == r.W);
    CHECK(again.phi == r.phi);
    CHECK(trace_csv(again.trace) == trace_csv(r.trace));
}

TEST_CASE("fixed phases and fixed sensing time") {
    Instance in = desk_instance(2);
    BcdOptions fixed;
    fixed.ris = RisMode::fixed;
    fixed.phi = rate_max_ris(in.ch);
    BcdResult r = bcd(in.ch, in.cfg, 2, fixed);
    CHECK(r.phi == *fixed.phi);
    for (const TracePoint& p : r.trace) CHECK(p.stage != "phi");
    CHECK(r.counts.dt_ris == 0.0);

    BcdOptions pinned = fixed;
    pinned.fixed_tau = 0.006;
    BcdResult p = bcd(in.ch, in.cfg, 2, pinned);
    CHECK(p.tau == 0.006);
    for (const TracePoint& t : p.trace) {
        CHECK(t.stage != "tau");
        CHECK(t.tau == 0.006);
    }
    BcdOptions wrong;
    wrong.phi = CVec::Ones(3);
    CHECK_THROWS_AS(bcd(in.ch, in.cfg, 2, wrong), std::invalid_argument);
}

TEST_CASE("undetectable primary is reported as infeasible") {
    Instance in = desk_instance(3);
    ChannelSet silent = in.ch;
    silent.h_p2s.setZero();
    silent.H_s2r.setZero();
    try {
        bcd(silent, in.cfg, 3);
        FAIL("expected an infeasible run");
    } catch (const InfeasibleError& e) {
        CHECK(e.binding() == "detection probability");
    }
}
