#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cisac/scenario.hpp"
#include "cisac/types.hpp"

namespace cisac {

// exp(-j*pi*i*sin(theta)), i = 0..n-1 (half-wavelength ULA).
CVec steering_vector(double theta, int n);
// Elementwise d/dtheta of steering_vector.
CVec steering_derivative(double theta, int n);

double path_gain(double d, double alpha, double g0);

// arctan(|dy|/|dx|) between two nodes. Coincident nodes and the vertical
// (endfire) case are rejected.
double bearing(Point2 from, Point2 to);

struct ChannelSet {
    CVec h_p2s;                   // N_B
    std::vector<CVec> h_s2su;     // K x N_B
    std::vector<CVec> h_s2pu;     // L x N_B
    CMat H_s2r;                   // N_B x N_R
    std::vector<CMat> H_s2ms;     // M x (N_B x N_M)
    CVec h_p2r;                   // N_R
    std::vector<CVec> h_p2ms;     // M x N_M
    std::vector<cplx> h_p2su;     // K
    std::vector<CMat> H_r2ms;     // M x (N_R x N_M)
    std::vector<CVec> h_r2su;     // K x N_R
    std::vector<CVec> h_r2pu;     // L x N_R

    int n_b() const { return static_cast<int>(h_p2s.size()); }
    int n_r() const { return static_cast<int>(h_p2r.size()); }
    int m_ms() const { return static_cast<int>(H_s2ms.size()); }
    int k_su() const { return static_cast<int>(h_s2su.size()); }
    int l_pu() const { return static_cast<int>(h_s2pu.size()); }
};

ChannelSet generate_channels(const ScenarioConfig& cfg, const NodePositions& pos, std::uint64_t seed);

// Zeroes every channel that touches the RIS.
ChannelSet without_ris(ChannelSet ch);

struct RisPhase {
    CVec phi;                      // diagonal of the reflection matrix
    std::optional<CMat> lifted;    // (N_R+1)^2, phibar * phibar^H

    static RisPhase from_phi(CVec phi);
    CVec phibar() const;           // (phi, 1)
    CMat lift() const;             // lifted if present, else phibar * phibar^H
};

RisPhase random_ris(int n_r, std::uint64_t seed);
RisPhase unit_ris(int n_r);

struct EffectiveChannels {
    std::vector<CMat> G;      // M x (N_M x N_B): H_r2ms^T Phi H_s2r^T + H_s2ms^T
    std::vector<CVec> g;      // K x N_B, |g_k^H w|^2 is the SUE-k received power from w
    std::vector<CVec> g_bar;  // L x N_B, likewise for PUE l
};

EffectiveChannels effective_channels(const ChannelSet& ch, const CVec& phi);

// h_P2S + H_S2R Phi h_P2R, the primary signal seen at the SBS array.
CVec sensing_channel(const ChannelSet& ch, const CVec& phi);

struct GeometricLink {
    cplx h_d;
    cplx h_r;
    double theta_d = 0.0;
    double theta_r = 0.0;
    double theta_d_prime = 0.0;
    double theta_r_prime = 0.0;
};

GeometricLink geometric_ms_link(const ScenarioConfig& cfg, const NodePositions& pos, int ms_index,
                                std::uint64_t seed);

// Real/imag interleaved arrays keyed by channel name.
std::string channel_dump(const ChannelSet& ch);

}  // namespace cisac
