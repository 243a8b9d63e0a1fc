#include <cmath>
#include <limits>

#include "cisac/conic.hpp"

namespace cisac::conic {

CMat psd_project(const CMat& m) {
    CMat h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    RVec lam = es.eigenvalues().cwiseMax(0.0);
    CMat out = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
    return 0.5 * (out + out.adjoint());
}

Rank1 principal_rank1(const CMat& x) {
    CMat h = 0.5 * (x + x.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const Eigen::Index n = h.rows();
    Rank1 r;
    double top = es.eigenvalues()(n - 1);
    double tr = h.trace().real();
    r.v = std::sqrt(std::max(top, 0.0)) * es.eigenvectors().col(n - 1);
    r.ratio = tr > 0.0 ? top / tr : 0.0;
    if (n > 1) {
        double second = es.eigenvalues()(n - 2);
        r.ambiguous = top - second <= 1e-9 * std::max(1.0, std::abs(top));
    }
    return r;
}

namespace {

// Unit-modulus vector from a lifted sample: divide by the trailing coordinate and drop it.
CVec normalize_sample(const CVec& xi) {
    const Eigen::Index n = xi.size() - 1;
    CVec phi(n);
    cplx ref = xi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cplx z = std::abs(ref) > 0.0 ? xi(i) / ref : xi(i);
        phi(i) = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0);
    }
    return phi;
}

bool better(const Candidate& a, const Candidate& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.objective > b.objective;
}

}  // namespace

RandomizationResult gaussian_randomization(const CMat& x, int n_samples,
                                           const std::function<Candidate(const CVec&)>& evaluator,
                                           std::uint64_t seed) {
    if (x.rows() < 2 || x.rows() != x.cols())
        throw std::invalid_argument("gaussian_randomization: need a square matrix of size >= 2");
    CMat h = 0.5 * (x + x.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    CMat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    RandomizationResult best;
    best.score.objective = -std::numeric_limits<double>::infinity();
    bool have = false;
    const Eigen::Index n = h.rows();
    for (int s = 0; s < n_samples; ++s) {
        CVec r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double re = gauss(rng);
            double im = gauss(rng);
            r(i) = cplx(re, im);
        }
        CVec phi = normalize_sample(root * r);
        Candidate c = evaluator(phi);
        ++best.evaluated;
        if (!have || better(c, best.score)) {
            best.phi = phi;
            best.score = c;
            have = true;
        }
    }
    best.found_feasible = have && best.score.feasible;
    return best;
}

}  // namespace cisac::conic
