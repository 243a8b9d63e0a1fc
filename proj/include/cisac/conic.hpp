#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cisac/types.hpp"

namespace cisac::conic {

// Re Tr(coeff * X_var); coeff is symmetrized on entry.
struct Term {
    int var = 0;
    CMat coeff;
};

struct Affine {
    std::vector<Term> terms;
    double t_coeff = 0.0;
    double constant = 0.0;
};

// lhs <= rhs, or lhs == rhs when equality is set.
struct AffineConstraint {
    Affine lhs;
    bool equality = false;
    double rhs = 0.0;
    std::string label;
};

// weight * log2(argument), weight >= 0.
struct LogTerm {
    double weight = 0.0;
    Affine argument;
};

// sum of log terms + linear >= rhs. The linear part may hold -t to bound the objective.
struct LogConstraint {
    std::vector<LogTerm> logs;
    Affine linear;
    double rhs = 0.0;
    std::string label;
};

struct Variable {
    int dim = 0;
    bool unit_diagonal = false;
    std::string name;
};

// maximize t over Hermitian PSD variables. t may only appear as an upper bound:
// positive coefficient in a <= constraint or negative coefficient in a log constraint.
struct Problem {
    std::vector<Variable> variables;
    std::vector<AffineConstraint> affine;
    std::vector<LogConstraint> logs;

    int add_variable(int dim, bool unit_diagonal = false, std::string name = {});
    void add_le(Affine lhs, double rhs, std::string label = {});
    void add_eq(Affine lhs, double rhs, std::string label = {});
    void add_log(LogConstraint c);
};

enum class Status { optimal, infeasible, max_iter, unbounded };
const char* to_string(Status s);

struct Residuals {
    double primal_infeasibility = 0.0;
    double min_eigenvalue = 0.0;
    double gap = 0.0;  // barrier duality measure relative to 1 + |t|
};

struct MeritEntry {
    int phase = 0;       // 1 = feasibility search, 2 = optimization
    int centering = 0;   // index of the barrier parameter
    double value = 0.0;
};

struct Solution {
    std::vector<CMat> X;
    double t = 0.0;
    Status status = Status::max_iter;
    Residuals residuals;
    int newton_steps = 0;
    std::vector<MeritEntry> merit;
    std::string witness;  // most violated constraint when infeasible
};

struct Options {
    double tol = 1e-9;
    int max_newton = 600;
    double mu = 20.0;
    // Optional starting matrices; mixed with a scaled identity so the start is positive definite.
    std::optional<std::vector<CMat>> initial;
    bool keep_merit = true;
};

Solution solve(const Problem& problem, const Options& options = {});

// JSON listing variable dims, coefficient matrices and bounds.
std::string dump_problem(const Problem& problem);

// ---- PSD helpers ----

CMat psd_project(const CMat& m);

struct Rank1 {
    CVec v;
    double ratio = 0.0;      // lambda_1 / Tr(X)
    bool ambiguous = false;  // leading eigenvalue not separated from the next
};

Rank1 principal_rank1(const CMat& x);

struct Candidate {
    bool feasible = false;
    double objective = 0.0;
};

struct RandomizationResult {
    CVec phi;
    Candidate score;
    bool found_feasible = false;
    int evaluated = 0;
};

// Draws n_samples from CN(0, X), fixes the last coordinate to 1, projects onto unit modulus,
// and keeps the best feasible candidate (best infeasible one when none is feasible).
RandomizationResult gaussian_randomization(const CMat& x, int n_samples,
                                           const std::function<Candidate(const CVec&)>& evaluator,
                                           std::uint64_t seed);

}  // namespace cisac::conic
