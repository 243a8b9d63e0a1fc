#pragma once

#include <cmath>
#include <complex>
#include <random>

#include "cisac/channels.hpp"
#include "cisac/scenario.hpp"

namespace testing {

using namespace cisac;

struct Instance {
    ScenarioConfig cfg;
    NodePositions pos;
    ChannelSet ch;
};

inline Instance make_instance(const ScenarioConfig& cfg, std::uint64_t seed) {
    Instance in{cfg, place_nodes(cfg, seed), {}};
    in.ch = generate_channels(cfg, in.pos, seed);
    return in;
}

inline Instance desk_instance(std::uint64_t seed) { return make_instance(desk_scenario(), seed); }

inline cplx gaussian(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, std::sqrt(0.5));
    return {n(rng), n(rng)};
}

inline CVec random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = scale * gaussian(rng);
    return v;
}

inline CMat random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    CMat a(rows, cols);
    for (int j = 0; j < cols; ++j) a.col(j) = random_vector(rows, rng, scale);
    return a;
}

inline CVec random_phases(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    CVec v(n);
    for (int i = 0; i < n; ++i) v(i) = std::polar(1.0, u(rng));
    return v;
}

inline CMat random_hermitian(int n, std::mt19937_64& rng) {
    CMat a = random_matrix(n, n, rng);
    return 0.5 * (a + a.adjoint());
}

inline CMat random_psd(int n, int rank, std::mt19937_64& rng) {
    CMat f = random_matrix(n, rank, rng);
    CMat x = f * f.adjoint();
    return 0.5 * (x + x.adjoint());
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline CVec lift_vector(const CVec& phi) {
    CVec v(phi.size() + 1);
    v.head(phi.size()) = phi;
    v(phi.size()) = 1.0;
    return v;
}

inline CMat lift_phase(const CVec& phi) {
    CVec v = lift_vector(phi);
    return v * v.adjoint();
}

}  // namespace testing
