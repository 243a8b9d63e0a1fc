#include "cisac/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace cisac::conic {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Affine map with one dense block per variable (empty block = zero).
struct Lin {
    std::vector<CMat> blocks;
    double t = 0.0;
    double c = 0.0;
};

double dot(const CMat& a, const CMat& b) { return (a.cwiseProduct(b.conjugate())).sum().real(); }

double eval(const Lin& f, const std::vector<CMat>& x, double t) {
    double v = f.c + f.t * t;
    for (std::size_t i = 0; i < f.blocks.size(); ++i)
        if (f.blocks[i].size()) v += dot(f.blocks[i], x[i]);
    return v;
}

Lin compile(const Affine& a, const std::vector<Variable>& vars) {
    Lin f;
    f.blocks.resize(vars.size());
    for (const Term& term : a.terms) {
        if (term.var < 0 || term.var >= static_cast<int>(vars.size()))
            throw std::invalid_argument("conic: term refers to an unknown variable");
        const int n = vars[term.var].dim;
        if (term.coeff.rows() != n || term.coeff.cols() != n)
            throw std::invalid_argument("conic: coefficient dimension mismatch");
        CMat h = 0.5 * (term.coeff + term.coeff.adjoint());
        if (f.blocks[term.var].size()) f.blocks[term.var] += h; else f.blocks[term.var] = h;
    }
    f.t = a.t_coeff;
    f.c = a.constant;
    return f;
}

struct Ineq {
    Lin lhs;
    double rhs = 0.0;
    std::string label;
};

struct Log {
    std::vector<double> weight;
    std::vector<Lin> args;
    Lin lin;
    double rhs = 0.0;
    std::string label;
};

// Barrier problem in a uniform form: maximize the scalar slot subject to ineqs, logs,
// user equalities and unit diagonals.
struct Form {
    std::vector<Variable> vars;
    std::vector<Ineq> ineqs;
    std::vector<Ineq> eqs;
    std::vector<Log> logs;
};

struct Values {
    bool in_domain = false;
    std::vector<double> slack;
    std::vector<std::vector<double>> args;
    std::vector<double> g;
    std::vector<Eigen::LLT<CMat>> chol;
    double logdet = 0.0;
};

Values evaluate(const Form& p, const std::vector<CMat>& x, double t) {
    Values v;
    v.chol.reserve(x.size());
    for (const CMat& xv : x) {
        v.chol.emplace_back(xv);
        if (v.chol.back().info() != Eigen::Success) return v;
        const CMat& l = v.chol.back().matrixLLT();
        for (Eigen::Index i = 0; i < l.rows(); ++i) {
            double d = l(i, i).real();
            if (!(d > 0.0) || !std::isfinite(d)) return v;
            v.logdet += 2.0 * std::log(d);
        }
    }
    for (const Ineq& c : p.ineqs) {
        double s = c.rhs - eval(c.lhs, x, t);
        if (!(s > 0.0)) return v;
        v.slack.push_back(s);
    }
    for (const Log& c : p.logs) {
        std::vector<double> a;
        double g = eval(c.lin, x, t) - c.rhs;
        for (std::size_t j = 0; j < c.args.size(); ++j) {
            double u = eval(c.args[j], x, t);
            if (!(u > 0.0)) return v;
            a.push_back(u);
            g += c.weight[j] * std::log2(u);
        }
        if (!(g > 0.0) || !std::isfinite(g)) return v;
        v.args.push_back(std::move(a));
        v.g.push_back(g);
    }
    v.in_domain = true;
    return v;
}

double merit(const Values& v, double s, double t) {
    double f = -s * t - v.logdet;
    for (double sl : v.slack) f -= std::log(sl);
    for (double g : v.g) f -= std::log(g);
    return f;
}

int barrier_parameter(const Form& p) {
    int m = static_cast<int>(p.ineqs.size() + p.logs.size());
    for (const auto& var : p.vars) m += var.dim;
    return m;
}

// One Hessian rank-one term u u^T scaled by 1/w, with gradient coefficient gamma.
struct Row {
    const std::vector<CMat>* blocks = nullptr;
    std::vector<CMat> own;
    double t = 0.0;
    double w = 0.0;
    double gamma = 0.0;
    int dvar = -1;  // unit-diagonal row: (dvar, didx)
    int didx = -1;
    const std::vector<CMat>& b() const { return blocks ? *blocks : own; }
};

struct Step {
    std::vector<CMat> dx;
    double dt = 0.0;
    double decrement = 0.0;
    bool ok = false;
};

Step newton_step(const Form& p, const std::vector<CMat>& x, const Values& v, double s) {
    const std::size_t nv = x.size();
    std::vector<Row> rows;
    for (std::size_t a = 0; a < p.ineqs.size(); ++a) {
        Row r;
        r.blocks = &p.ineqs[a].lhs.blocks;
        r.t = p.ineqs[a].lhs.t;
        r.w = v.slack[a] * v.slack[a];
        r.gamma = 1.0 / v.slack[a];
        rows.push_back(std::move(r));
    }
    for (std::size_t l = 0; l < p.logs.size(); ++l) {
        const Log& c = p.logs[l];
        const double g = v.g[l];
        Row grad;
        grad.own.resize(nv);
        grad.t = c.lin.t;
        for (std::size_t i = 0; i < nv; ++i)
            if (c.lin.blocks[i].size()) grad.own[i] = c.lin.blocks[i];
        for (std::size_t j = 0; j < c.args.size(); ++j) {
            double coef = c.weight[j] / (kLn2 * v.args[l][j]);
            grad.t += coef * c.args[j].t;
            for (std::size_t i = 0; i < nv; ++i) {
                const CMat& bj = c.args[j].blocks[i];
                if (!bj.size()) continue;
                if (grad.own[i].size()) grad.own[i] += coef * bj; else grad.own[i] = coef * bj;
            }
        }
        grad.w = g * g;
        grad.gamma = -1.0 / g;
        rows.push_back(std::move(grad));
        for (std::size_t j = 0; j < c.args.size(); ++j) {
            if (c.weight[j] <= 0.0) continue;
            Row r;
            r.blocks = &c.args[j].blocks;
            r.t = c.args[j].t;
            double u = v.args[l][j];
            r.w = kLn2 * u * u * g / c.weight[j];
            rows.push_back(std::move(r));
        }
    }
    for (const Ineq& e : p.eqs) {
        Row r;
        r.blocks = &e.lhs.blocks;
        r.t = e.lhs.t;
        rows.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < nv; ++i) {
        if (!p.vars[i].unit_diagonal) continue;
        for (int d = 0; d < p.vars[i].dim; ++d) {
            Row r;
            r.dvar = static_cast<int>(i);
            r.didx = d;
            rows.push_back(std::move(r));
        }
    }

    const std::size_t m = rows.size();
    // Z_q = X u_q X for dense rows
    std::vector<std::vector<CMat>> z(m);
    for (std::size_t q = 0; q < m; ++q) {
        if (rows[q].dvar >= 0) continue;
        z[q].resize(nv);
        const auto& bq = rows[q].b();
        for (std::size_t i = 0; i < nv; ++i)
            if (i < bq.size() && bq[i].size()) z[q][i] = x[i] * bq[i] * x[i];
    }
    RMat kmat = RMat::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    RVec ux(m);
    for (std::size_t q = 0; q < m; ++q) {
        const Row& rq = rows[q];
        if (rq.dvar >= 0) {
            ux(q) = x[rq.dvar](rq.didx, rq.didx).real();
        } else {
            double acc = 0.0;
            const auto& bq = rq.b();
            for (std::size_t i = 0; i < nv; ++i)
                if (i < bq.size() && bq[i].size()) acc += dot(bq[i], x[i]);
            ux(q) = acc;
        }
        for (std::size_t r = 0; r <= q; ++r) {
            const Row& rr = rows[r];
            double kv = 0.0;
            if (rq.dvar >= 0 && rr.dvar >= 0) {
                if (rq.dvar == rr.dvar) kv = std::norm(x[rq.dvar](rq.didx, rr.didx));
            } else if (rq.dvar >= 0) {
                const CMat& zr = z[r][rq.dvar];
                if (zr.size()) kv = zr(rq.didx, rq.didx).real();
            } else if (rr.dvar >= 0) {
                const CMat& zq = z[q][rr.dvar];
                if (zq.size()) kv = zq(rr.didx, rr.didx).real();
            } else {
                const auto& bq = rq.b();
                for (std::size_t i = 0; i < nv; ++i)
                    if (i < bq.size() && bq[i].size() && z[r][i].size()) kv += dot(bq[i], z[r][i]);
            }
            kmat(q, r) = kv;
            kmat(r, q) = kv;
        }
    }

    RVec gam(m), cvec(m), wvec(m);
    for (std::size_t q = 0; q < m; ++q) {
        gam(q) = rows[q].gamma;
        cvec(q) = rows[q].t;
        wvec(q) = rows[q].w;
    }
    const double gt = -s + gam.dot(cvec);
    RVec h = -ux + kmat * gam;

    const Eigen::Index n = static_cast<Eigen::Index>(m) + 1;
    RMat a = RMat::Zero(n, n);
    a.topLeftCorner(m, m) = kmat;
    a.diagonal().head(m) += wvec;
    a.block(0, m, m, 1) = -cvec;
    a.block(m, 0, 1, m) = -cvec.transpose();
    RVec rhs(n);
    rhs.head(m) = -h;
    rhs(m) = gt;

    // symmetric diagonal equilibration before the dense solve
    RVec scale(n);
    for (Eigen::Index q = 0; q < static_cast<Eigen::Index>(m); ++q) {
        double d = a(q, q);
        scale(q) = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    double cmax = cvec.cwiseAbs().maxCoeff();
    scale(m) = cmax > 0.0 ? 1.0 / cmax : 1.0;
    RMat as = scale.asDiagonal() * a * scale.asDiagonal();
    RVec sol = as.fullPivLu().solve(scale.asDiagonal() * rhs);
    sol = scale.asDiagonal() * sol;

    Step st;
    if (!sol.allFinite()) return st;
    RVec lam = sol.head(m);
    st.dt = sol(m);
    RVec mu = gam + lam;

    st.dx.resize(nv);
    for (std::size_t i = 0; i < nv; ++i) st.dx[i] = x[i];
    std::vector<RVec> diag_mu(nv);
    for (std::size_t q = 0; q < m; ++q) {
        const Row& rq = rows[q];
        if (rq.dvar >= 0) {
            if (!diag_mu[rq.dvar].size()) diag_mu[rq.dvar] = RVec::Zero(p.vars[rq.dvar].dim);
            diag_mu[rq.dvar](rq.didx) = mu(q);
            continue;
        }
        for (std::size_t i = 0; i < nv; ++i)
            if (z[q][i].size()) st.dx[i] -= mu(q) * z[q][i];
    }
    for (std::size_t i = 0; i < nv; ++i) {
        if (diag_mu[i].size()) st.dx[i] -= x[i] * diag_mu[i].asDiagonal() * x[i];
        st.dx[i] = 0.5 * (st.dx[i] + st.dx[i].adjoint()).eval();
    }

    // <g, dx>: barrier part -Tr(X^{-1} dX) plus the row gradients
    double total_dim = 0.0;
    for (const auto& var : p.vars) total_dim += var.dim;
    double tr_inv = total_dim - mu.dot(ux);
    RVec u_dx = ux - kmat * mu;
    double gdx = -tr_inv + gam.dot(u_dx) + gt * st.dt;
    st.decrement = -gdx;
    st.ok = std::isfinite(st.decrement);
    return st;
}

struct State {
    std::vector<CMat> x;
    double t = 0.0;
};

enum class Stop { converged, stopped_early, max_iter, unbounded, stalled };

struct BarrierRun {
    Stop stop = Stop::max_iter;
    double s = 1.0;
};

// Path following from a strictly feasible state. early() is polled after each Newton step.
BarrierRun path_follow(const Form& p, State& st, double s0, double tol, double mu, int& budget, int phase,
                       std::vector<MeritEntry>* log, const std::function<bool(const State&)>& early) {
    BarrierRun run;
    double s = s0;
    const double nu = barrier_parameter(p);
    int centering = 0;
    for (;;) {
        Values v = evaluate(p, st.x, st.t);
        if (!v.in_domain) {
            run.stop = Stop::stalled;
            run.s = s;
            return run;
        }
        double f = merit(v, s, st.t);
        if (log) log->push_back({phase, centering, f});
        for (int inner = 0; inner < 200; ++inner) {
            if (budget <= 0) {
                run.stop = Stop::max_iter;
                run.s = s;
                return run;
            }
            Step step = newton_step(p, st.x, v, s);
            if (!step.ok) break;
            if (step.decrement < 0.0) break;  // numerical noise at the centre
            if (0.5 * step.decrement <= 1e-10) break;
            --budget;
            double alpha = 1.0;
            bool accepted = false;
            const double f_before = f;
            for (int ls = 0; ls < 80; ++ls) {
                State trial;
                trial.x.resize(st.x.size());
                for (std::size_t i = 0; i < st.x.size(); ++i) trial.x[i] = st.x[i] + alpha * step.dx[i];
                trial.t = st.t + alpha * step.dt;
                Values tv = evaluate(p, trial.x, trial.t);
                if (tv.in_domain) {
                    double ft = merit(tv, s, trial.t);
                    if (ft <= f - 0.25 * alpha * step.decrement) {
                        st = std::move(trial);
                        v = std::move(tv);
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
            if (log) log->push_back({phase, centering, f});
            // progress at rounding level: the centre is as good as it gets
            if (f_before - f <= 1e-12 * (1.0 + std::abs(f))) break;
            if (st.t > 1e15) {
                run.stop = Stop::unbounded;
                run.s = s;
                return run;
            }
            if (early && early(st)) {
                run.stop = Stop::stopped_early;
                run.s = s;
                return run;
            }
        }
        if (nu / s <= tol * (1.0 + std::abs(st.t))) {
            run.stop = Stop::converged;
            run.s = s;
            return run;
        }
        s *= mu;
        ++centering;
        if (s > 1e30) {
            run.stop = Stop::stalled;
            run.s = s;
            return run;
        }
    }
}

Form compile_problem(const Problem& pr) {
    Form f;
    f.vars = pr.variables;
    for (const auto& var : f.vars)
        if (var.dim < 1) throw std::invalid_argument("conic: variable dimension must be >= 1");
    for (const auto& c : pr.affine) {
        Ineq q{compile(c.lhs, f.vars), c.rhs, c.label};
        if (c.equality) {
            if (q.lhs.t != 0.0) throw std::invalid_argument("conic: t may not appear in an equality");
            f.eqs.push_back(std::move(q));
        } else {
            if (q.lhs.t < 0.0) throw std::invalid_argument("conic: t may only be bounded from above");
            f.ineqs.push_back(std::move(q));
        }
    }
    for (const auto& c : pr.logs) {
        Log l;
        for (const auto& term : c.logs) {
            if (term.weight < 0.0) throw std::invalid_argument("conic: log weights must be >= 0");
            if (term.weight == 0.0) continue;
            l.weight.push_back(term.weight);
            l.args.push_back(compile(term.argument, f.vars));
            if (l.args.back().t != 0.0) throw std::invalid_argument("conic: t may not appear inside a log");
        }
        l.lin = compile(c.linear, f.vars);
        if (l.lin.t > 0.0) throw std::invalid_argument("conic: t may only be bounded from above");
        l.rhs = c.rhs;
        l.label = c.label;
        f.logs.push_back(std::move(l));
    }
    return f;
}

std::vector<CMat> starting_point(const Form& f, const Options& opt) {
    std::vector<CMat> x;
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        const int n = f.vars[i].dim;
        CMat xi = CMat::Identity(n, n);
        if (opt.initial && i < opt.initial->size() && (*opt.initial)[i].rows() == n) {
            CMat h = psd_project((*opt.initial)[i]);
            double tr = h.trace().real();
            if (tr > 0.0) {
                const double theta = 1e-3;
                xi = (1.0 - theta) * h + theta * (tr / n) * CMat::Identity(n, n);
            }
        }
        if (f.vars[i].unit_diagonal) {
            RVec d = xi.diagonal().real().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            xi = d.asDiagonal() * xi * d.asDiagonal();
        }
        x.push_back(0.5 * (xi + xi.adjoint()));
    }
    if (f.eqs.empty()) return x;
    // least-norm correction inside the span of the equality coefficients
    const Eigen::Index ne = static_cast<Eigen::Index>(f.eqs.size());
    RMat gram(ne, ne);
    RVec res(ne);
    for (Eigen::Index a = 0; a < ne; ++a) {
        res(a) = f.eqs[a].rhs - eval(f.eqs[a].lhs, x, 0.0);
        for (Eigen::Index b = 0; b < ne; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i)
                if (f.eqs[a].lhs.blocks[i].size() && f.eqs[b].lhs.blocks[i].size())
                    acc += dot(f.eqs[a].lhs.blocks[i], f.eqs[b].lhs.blocks[i]);
            gram(a, b) = acc;
        }
    }
    RVec coef = gram.completeOrthogonalDecomposition().solve(res);
    for (Eigen::Index a = 0; a < ne; ++a)
        for (std::size_t i = 0; i < x.size(); ++i)
            if (f.eqs[a].lhs.blocks[i].size()) x[i] += coef(a) * f.eqs[a].lhs.blocks[i];
    return x;
}

bool t_free(const Lin& l) { return l.t == 0.0; }

// Largest t keeping every t-bounding constraint strictly satisfied at x.
double t_ceiling(const Form& f, const std::vector<CMat>& x) {
    double ceil = std::numeric_limits<double>::infinity();
    for (const Ineq& c : f.ineqs) {
        if (t_free(c.lhs)) continue;
        double rest = eval(c.lhs, x, 0.0);
        ceil = std::min(ceil, (c.rhs - rest) / c.lhs.t);
    }
    for (const Log& c : f.logs) {
        if (t_free(c.lin)) continue;
        double g = eval(c.lin, x, 0.0) - c.rhs;
        for (std::size_t j = 0; j < c.args.size(); ++j) {
            double u = eval(c.args[j], x, 0.0);
            if (!(u > 0.0)) return -std::numeric_limits<double>::infinity();
            g += c.weight[j] * std::log2(u);
        }
        ceil = std::min(ceil, g / (-c.lin.t));
    }
    return ceil;
}

struct Violation {
    double worst = 0.0;
    std::string label;
};

Violation worst_violation(const Form& f, const std::vector<CMat>& x, double t, bool skip_objective = false) {
    Violation v;
    auto note = [&](double amount, const std::string& label) {
        if (amount > v.worst) {
            v.worst = amount;
            v.label = label;
        }
    };
    for (const Ineq& c : f.ineqs)
        if (!skip_objective || t_free(c.lhs)) note((eval(c.lhs, x, t) - c.rhs) / (1.0 + std::abs(c.rhs)), c.label);
    for (const Ineq& c : f.eqs) note(std::abs(eval(c.lhs, x, t) - c.rhs) / (1.0 + std::abs(c.rhs)), c.label);
    for (const Log& c : f.logs) {
        if (skip_objective && !t_free(c.lin)) continue;
        double g = eval(c.lin, x, t) - c.rhs;
        bool bad = false;
        for (std::size_t j = 0; j < c.args.size(); ++j) {
            double u = eval(c.args[j], x, t);
            if (!(u > 0.0)) bad = true; else g += c.weight[j] * std::log2(u);
        }
        note(bad ? std::numeric_limits<double>::infinity() : -g, c.label);
    }
    for (std::size_t i = 0; i < f.vars.size(); ++i) {
        if (!f.vars[i].unit_diagonal) continue;
        double dev = (x[i].diagonal().real().array() - 1.0).abs().maxCoeff();
        note(dev, f.vars[i].name.empty() ? "unit diagonal" : f.vars[i].name + " unit diagonal");
    }
    return v;
}

double min_eig(const std::vector<CMat>& x) {
    double m = std::numeric_limits<double>::infinity();
    for (const CMat& xv : x) {
        Eigen::SelfAdjointEigenSolver<CMat> es(xv, Eigen::EigenvaluesOnly);
        m = std::min(m, es.eigenvalues().minCoeff());
    }
    return m;
}

}  // namespace

int Problem::add_variable(int dim, bool unit_diagonal, std::string name) {
    variables.push_back({dim, unit_diagonal, std::move(name)});
    return static_cast<int>(variables.size()) - 1;
}

void Problem::add_le(Affine lhs, double rhs, std::string label) {
    affine.push_back({std::move(lhs), false, rhs, std::move(label)});
}

void Problem::add_eq(Affine lhs, double rhs, std::string label) {
    affine.push_back({std::move(lhs), true, rhs, std::move(label)});
}

void Problem::add_log(LogConstraint c) { logs.push_back(std::move(c)); }

const char* to_string(Status s) {
    switch (s) {
        case Status::optimal: return "optimal";
        case Status::infeasible: return "infeasible";
        case Status::max_iter: return "max_iter";
        case Status::unbounded: return "unbounded";
    }
    return "unknown";
}

Solution solve(const Problem& problem, const Options& opt) {
    Form f = compile_problem(problem);
    bool has_t = false;
    for (const auto& c : f.ineqs) has_t |= !t_free(c.lhs);
    for (const auto& c : f.logs) has_t |= !t_free(c.lin);
    if (!has_t) throw std::invalid_argument("conic: no constraint bounds t, the problem is unbounded");

    Solution sol;
    std::vector<MeritEntry>* log = opt.keep_merit ? &sol.merit : nullptr;
    int budget = opt.max_newton;
    std::vector<CMat> x = starting_point(f, opt);

    auto finish = [&](Status status, const State& st, double s, const Form& form) {
        sol.status = status;
        sol.X = st.x;
        sol.t = st.t;
        for (std::size_t i = 0; i < form.vars.size(); ++i) {
            if (!form.vars[i].unit_diagonal) continue;
            RVec d = sol.X[i].diagonal().real().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
            sol.X[i] = d.asDiagonal() * sol.X[i] * d.asDiagonal();
        }
        Violation v = worst_violation(f, sol.X, sol.t);
        sol.residuals.primal_infeasibility = v.worst;
        sol.residuals.min_eigenvalue = min_eig(sol.X);
        sol.residuals.gap = barrier_parameter(f) / s / (1.0 + std::abs(sol.t));
        sol.newton_steps = opt.max_newton - budget;
        return sol;
    };

    // Feasibility search over the t-free constraints, margin variable in the t slot.
    bool need_phase1 = false;
    {
        Values v0;
        Form tf;
        tf.vars = f.vars;
        for (const auto& c : f.ineqs)
            if (t_free(c.lhs)) tf.ineqs.push_back(c);
        for (const auto& c : f.logs)
            if (t_free(c.lin)) tf.logs.push_back(c);
        v0 = evaluate(tf, x, 0.0);
        need_phase1 = !v0.in_domain;
    }
    if (need_phase1) {
        Form p1;
        p1.vars = f.vars;
        p1.eqs = f.eqs;
        double rho0 = std::numeric_limits<double>::infinity();
        for (const auto& c : f.ineqs) {
            if (!t_free(c.lhs)) continue;
            Ineq q = c;
            double scale = std::max(1.0, std::abs(c.rhs));
            q.lhs.t = scale;
            rho0 = std::min(rho0, (c.rhs - eval(c.lhs, x, 0.0)) / scale);
            p1.ineqs.push_back(std::move(q));
        }
        for (const auto& c : f.logs) {
            if (!t_free(c.lin)) continue;
            Log q = c;
            q.lin.t = -1.0;
            double g = eval(c.lin, x, 0.0) - c.rhs;
            for (std::size_t j = 0; j < c.args.size(); ++j) {
                double u = eval(c.args[j], x, 0.0);
                if (!(u > 0.0)) {
                    sol.witness = c.label + " (log argument not positive at the start)";
                    return finish(Status::infeasible, State{x, 0.0}, 1.0, f);
                }
                g += c.weight[j] * std::log2(u);
            }
            rho0 = std::min(rho0, g);
            p1.logs.push_back(std::move(q));
        }
        Ineq cap;
        cap.lhs.blocks.resize(f.vars.size());
        cap.lhs.t = 1.0;
        cap.rhs = 1.0;
        cap.label = "margin cap";
        p1.ineqs.push_back(cap);

        State st{x, std::min(rho0, 1.0) - 1.0};
        const double target = 1e-3;
        BarrierRun run = path_follow(p1, st, 1.0, opt.tol, opt.mu, budget, 1, log,
                                     [&](const State& s) { return s.t >= target; });
        if (run.stop != Stop::stopped_early && !(st.t > 0.0)) {
            Violation v = worst_violation(f, st.x, 0.0, true);
            sol.witness = v.label.empty() ? "feasibility search did not reach a strictly feasible point" : v.label;
            if (run.stop == Stop::max_iter) return finish(Status::max_iter, st, run.s, f);
            return finish(Status::infeasible, st, run.s, f);
        }
        x = st.x;
    }

    double ceil = t_ceiling(f, x);
    if (!std::isfinite(ceil)) {
        sol.witness = "objective bound undefined at the start";
        return finish(Status::infeasible, State{x, 0.0}, 1.0, f);
    }
    State st{x, ceil - 0.1 * (1.0 + std::abs(ceil))};
    BarrierRun run = path_follow(f, st, 1.0, opt.tol, opt.mu, budget, 2, log, nullptr);
    switch (run.stop) {
        case Stop::converged:
        case Stop::stalled:
        case Stop::stopped_early:
            return finish(Status::optimal, st, run.s, f);
        case Stop::unbounded:
            return finish(Status::unbounded, st, run.s, f);
        case Stop::max_iter:
            break;
    }
    return finish(Status::max_iter, st, run.s, f);
}

std::string dump_problem(const Problem& problem) {
    using nlohmann::json;
    auto mat = [](const CMat& m) {
        json j;
        j["dim"] = m.rows();
        json re = json::array(), im = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                re.push_back(m(r, c).real());
                im.push_back(m(r, c).imag());
            }
        j["real"] = re;
        j["imag"] = im;
        return j;
    };
    auto affine = [&](const Affine& a) {
        json j;
        json terms = json::array();
        for (const auto& t : a.terms) terms.push_back({{"var", t.var}, {"coeff", mat(t.coeff)}});
        j["terms"] = terms;
        j["t"] = a.t_coeff;
        j["constant"] = a.constant;
        return j;
    };
    json j;
    json vars = json::array();
    for (const auto& v : problem.variables)
        vars.push_back({{"dim", v.dim}, {"unit_diagonal", v.unit_diagonal}, {"name", v.name}});
    j["variables"] = vars;
    json aff = json::array();
    for (const auto& c : problem.affine)
        aff.push_back({{"lhs", affine(c.lhs)},
                       {"sense", c.equality ? "==" : "<="},
                       {"rhs", c.rhs},
                       {"label", c.label}});
    j["affine"] = aff;
    json logs = json::array();
    for (const auto& c : problem.logs) {
        json terms = json::array();
        for (const auto& t : c.logs) terms.push_back({{"weight", t.weight}, {"argument", affine(t.argument)}});
        logs.push_back({{"logs", terms}, {"linear", affine(c.linear)}, {"rhs", c.rhs}, {"label", c.label}});
    }
    j["logs"] = logs;
    j["objective"] = "maximize t";
    return j.dump();
}

}  // namespace cisac::conic
