#include "cisac/channels.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace cisac {

namespace {

struct ComplexNormal {
    std::mt19937_64& rng;
    std::normal_distribution<double> n{0.0, 1.0};
    cplx operator()() {
        double re = n(rng);
        double im = n(rng);
        return cplx(re, im) * M_SQRT1_2;
    }
};

CMat rayleigh(ComplexNormal& cn, int rows, int cols, double gain) {
    CMat h(rows, cols);
    double amp = std::sqrt(gain);
    for (int j = 0; j < cols; ++j)
        for (int i = 0; i < rows; ++i) h(i, j) = amp * cn();
    return h;
}

// Rician around a unit-modulus rank-1 LoS term with a random common phase.
CMat rician(ComplexNormal& cn, std::mt19937_64& rng, const CMat& los, double gain, double k_factor) {
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    cplx rot = std::polar(1.0, ang(rng));
    double los_w = std::isinf(k_factor) ? 1.0 : std::sqrt(k_factor / (k_factor + 1.0));
    double nlos_w = std::isinf(k_factor) ? 0.0 : std::sqrt(1.0 / (k_factor + 1.0));
    CMat nlos = rayleigh(cn, static_cast<int>(los.rows()), static_cast<int>(los.cols()), 1.0);
    return std::sqrt(gain) * (los_w * rot * los + nlos_w * nlos);
}

nlohmann::json interleave(const CMat& m) {
    nlohmann::json j = nlohmann::json::object();
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c).real());
            data.push_back(m(r, c).imag());
        }
    j["data"] = data;
    return j;
}

}  // namespace

CVec steering_vector(double theta, int n) {
    if (n < 1) throw std::invalid_argument("steering_vector: n must be >= 1");
    CVec v(n);
    double s = std::sin(theta);
    for (int i = 0; i < n; ++i) v(i) = std::polar(1.0, -M_PI * i * s);
    return v;
}

CVec steering_derivative(double theta, int n) {
    CVec v = steering_vector(theta, n);
    double c = std::cos(theta);
    for (int i = 0; i < n; ++i) v(i) *= cplx(0.0, -M_PI * i * c);
    return v;
}

double path_gain(double d, double alpha, double g0) {
    if (!(d > 0.0)) throw std::invalid_argument("path_gain: distance must be positive");
    return g0 * std::pow(d, -alpha);
}

double bearing(Point2 from, Point2 to) {
    double dx = std::abs(to.x - from.x);
    double dy = std::abs(to.y - from.y);
    if (dx == 0.0 && dy == 0.0) throw GeometryError("bearing: coincident nodes");
    if (dx == 0.0) throw GeometryError("bearing: nodes vertically aligned (endfire, angle pi/2)");
    return std::atan(dy / dx);
}

ChannelSet generate_channels(const ScenarioConfig& cfg, const NodePositions& pos, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, stream::channels));
    ComplexNormal cn{rng};
    const int nb = cfg.n_b, nr = cfg.n_r, nm = cfg.n_m;
    auto direct = [&](Point2 a, Point2 b) { return path_gain(distance(a, b), cfg.alpha_direct, cfg.g0_ref); };
    auto reflect = [&](Point2 a, Point2 b) { return path_gain(distance(a, b), cfg.alpha_ris, cfg.g0_ref); };

    ChannelSet ch;
    ch.h_p2s = rayleigh(cn, nb, 1, direct(cfg.pos_pbs, cfg.pos_sbs)).col(0);

    double th_sr = bearing(cfg.pos_sbs, cfg.pos_ris);
    CMat los_sr = steering_vector(th_sr, nb) * steering_vector(th_sr, nr).transpose();
    ch.H_s2r = rician(cn, rng, los_sr, reflect(cfg.pos_sbs, cfg.pos_ris), cfg.rician_k);

    double th_pr = bearing(cfg.pos_pbs, cfg.pos_ris);
    ch.h_p2r = rician(cn, rng, steering_vector(th_pr, nr), reflect(cfg.pos_pbs, cfg.pos_ris), cfg.rician_k).col(0);

    for (const Point2& ms : pos.ms) {
        ch.H_s2ms.push_back(rayleigh(cn, nb, nm, direct(cfg.pos_sbs, ms)));
        ch.h_p2ms.push_back(rayleigh(cn, nm, 1, direct(cfg.pos_pbs, ms)).col(0));
        double th = bearing(cfg.pos_ris, ms);
        CMat los = steering_vector(th, nr) * steering_vector(th, nm).transpose();
        ch.H_r2ms.push_back(rician(cn, rng, los, reflect(cfg.pos_ris, ms), cfg.rician_k));
    }
    for (const Point2& su : pos.su) {
        ch.h_s2su.push_back(rayleigh(cn, nb, 1, direct(cfg.pos_sbs, su)).col(0));
        ch.h_p2su.push_back(rayleigh(cn, 1, 1, direct(cfg.pos_pbs, su))(0, 0));
        double th = bearing(cfg.pos_ris, su);
        ch.h_r2su.push_back(rician(cn, rng, steering_vector(th, nr), reflect(cfg.pos_ris, su), cfg.rician_k).col(0));
    }
    for (const Point2& pu : pos.pu) {
        ch.h_s2pu.push_back(rayleigh(cn, nb, 1, direct(cfg.pos_sbs, pu)).col(0));
        double th = bearing(cfg.pos_ris, pu);
        ch.h_r2pu.push_back(rician(cn, rng, steering_vector(th, nr), reflect(cfg.pos_ris, pu), cfg.rician_k).col(0));
    }
    return ch;
}

ChannelSet without_ris(ChannelSet ch) {
    ch.H_s2r.setZero();
    ch.h_p2r.setZero();
    for (auto& h : ch.H_r2ms) h.setZero();
    for (auto& h : ch.h_r2su) h.setZero();
    for (auto& h : ch.h_r2pu) h.setZero();
    return ch;
}

RisPhase RisPhase::from_phi(CVec phi) {
    RisPhase r;
    r.phi = std::move(phi);
    return r;
}

CVec RisPhase::phibar() const {
    CVec v(phi.size() + 1);
    v.head(phi.size()) = phi;
    v(phi.size()) = 1.0;
    return v;
}

CMat RisPhase::lift() const {
    if (lifted) return *lifted;
    CVec v = phibar();
    return v * v.adjoint();
}

RisPhase random_ris(int n_r, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, stream::ris_init));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    CVec phi(n_r);
    for (int n = 0; n < n_r; ++n) phi(n) = std::polar(1.0, ang(rng));
    return RisPhase::from_phi(phi);
}

RisPhase unit_ris(int n_r) { return RisPhase::from_phi(CVec::Ones(n_r)); }

EffectiveChannels effective_channels(const ChannelSet& ch, const CVec& phi) {
    if (phi.size() != ch.n_r()) throw std::invalid_argument("effective_channels: phi has wrong length");
    EffectiveChannels eff;
    // Phi H_s2r^T, shared by every receiver
    CMat phi_st = phi.asDiagonal() * ch.H_s2r.transpose();
    for (int m = 0; m < ch.m_ms(); ++m) {
        if (ch.H_r2ms[m].rows() != ch.n_r() || ch.H_s2ms[m].rows() != ch.n_b())
            throw std::invalid_argument("effective_channels: MS channel dimension mismatch");
        eff.G.push_back(ch.H_r2ms[m].transpose() * phi_st + ch.H_s2ms[m].transpose());
    }
    for (int k = 0; k < ch.k_su(); ++k) {
        CVec row = phi_st.transpose() * ch.h_r2su[k] + ch.h_s2su[k];
        eff.g.push_back(row.conjugate());
    }
    for (int l = 0; l < ch.l_pu(); ++l) {
        CVec row = phi_st.transpose() * ch.h_r2pu[l] + ch.h_s2pu[l];
        eff.g_bar.push_back(row.conjugate());
    }
    return eff;
}

CVec sensing_channel(const ChannelSet& ch, const CVec& phi) {
    return ch.h_p2s + ch.H_s2r * phi.asDiagonal() * ch.h_p2r;
}

GeometricLink geometric_ms_link(const ScenarioConfig& cfg, const NodePositions& pos, int ms_index,
                                std::uint64_t seed) {
    if (ms_index < 0 || ms_index >= static_cast<int>(pos.ms.size()))
        throw std::out_of_range("geometric_ms_link: MS index out of range");
    const Point2 ms = pos.ms[static_cast<std::size_t>(ms_index)];
    if (distance(ms, cfg.pos_sbs) == 0.0) throw GeometryError("geometric_ms_link: MS coincides with the SBS");
    if (distance(ms, cfg.pos_ris) == 0.0) throw GeometryError("geometric_ms_link: MS coincides with the RIS");

    GeometricLink link;
    link.theta_d = bearing(cfg.pos_sbs, ms);
    link.theta_d_prime = bearing(ms, cfg.pos_sbs);
    link.theta_r = bearing(cfg.pos_ris, ms);
    link.theta_r_prime = bearing(cfg.pos_sbs, cfg.pos_ris);

    std::mt19937_64 rng(mix_seed(mix_seed(seed, stream::geometric), static_cast<std::uint64_t>(ms_index)));
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    double gd = path_gain(distance(cfg.pos_sbs, ms), cfg.alpha_direct, cfg.g0_ref);
    double gr = path_gain(distance(cfg.pos_sbs, cfg.pos_ris), cfg.alpha_ris, cfg.g0_ref) *
                path_gain(distance(cfg.pos_ris, ms), cfg.alpha_ris, cfg.g0_ref);
    link.h_d = std::polar(std::sqrt(gd), ang(rng));
    link.h_r = std::polar(std::sqrt(gr), ang(rng));
    return link;
}

std::string channel_dump(const ChannelSet& ch) {
    nlohmann::json j;
    auto vec = [](const CVec& v) { return interleave(CMat(v)); };
    j["h_p2s"] = vec(ch.h_p2s);
    j["H_s2r"] = interleave(ch.H_s2r);
    j["h_p2r"] = vec(ch.h_p2r);
    auto list = [](const auto& items, auto conv) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& it : items) a.push_back(conv(it));
        return a;
    };
    j["h_s2su"] = list(ch.h_s2su, vec);
    j["h_s2pu"] = list(ch.h_s2pu, vec);
    j["H_s2ms"] = list(ch.H_s2ms, interleave);
    j["h_p2ms"] = list(ch.h_p2ms, vec);
    j["H_r2ms"] = list(ch.H_r2ms, interleave);
    j["h_r2su"] = list(ch.h_r2su, vec);
    j["h_r2pu"] = list(ch.h_r2pu, vec);
    nlohmann::json p2su = nlohmann::json::array();
    for (cplx h : ch.h_p2su) {
        p2su.push_back(h.real());
        p2su.push_back(h.imag());
    }
    j["h_p2su"] = p2su;
    return j.dump();
}

}  // namespace cisac
