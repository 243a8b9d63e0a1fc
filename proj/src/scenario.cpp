#include "cisac/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace cisac {

using nlohmann::json;

namespace {

constexpr double default_lambda = 0.5;
constexpr double default_rate = 2.0;
constexpr double default_gamma_dbm = -10.0;

// Smallest-magnitude dBm text that maps back onto exactly the same watt value,
// so that serialize/load is idempotent bit for bit.
double dbm_for_roundtrip(double watt) {
    double dbm = watt_to_dbm(watt);
    if (dbm_to_watt(dbm) == watt) return dbm;
    double lo = dbm;
    double hi = dbm;
    for (int i = 0; i < 64; ++i) {
        lo = std::nextafter(lo, -INFINITY);
        hi = std::nextafter(hi, INFINITY);
        if (dbm_to_watt(lo) == watt) return lo;
        if (dbm_to_watt(hi) == watt) return hi;
    }
    return dbm;
}

json point_json(Point2 p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j, const std::string& key) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(key, "expected [x, y] in meters");
    return {j[0].get<double>(), j[1].get<double>()};
}

double number_from(const json& j, const std::string& key) {
    if (!j.is_number()) throw ConfigError(key, "expected a number");
    return j.get<double>();
}

int count_from(const json& j, const std::string& key) {
    if (!j.is_number_integer()) throw ConfigError(key, "expected an integer");
    return j.get<int>();
}

// Scalar broadcasts to every node; an array must already have the right length.
std::vector<double> per_node_from(const json& j, const std::string& key, bool dbm) {
    std::vector<double> out;
    auto conv = [&](const json& v) {
        double x = number_from(v, key);
        return dbm ? dbm_to_watt(x) : x;
    };
    if (j.is_array()) {
        for (const auto& v : j) out.push_back(conv(v));
    } else {
        out.push_back(conv(j));
    }
    return out;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "n_b", "n_r", "n_m", "m_ms", "k_su", "l_pu",
        "pos_sbs", "pos_pbs", "pos_ris", "cluster_ms", "cluster_su", "cluster_pu", "cluster_radius",
        "p_sbs", "p_pbs", "sigma2_sbs", "sigma2_ms", "sigma2_su",
        "prob_h0", "prob_h1", "f_c", "f_s", "t_total",
        "lambda_m", "r_k", "gamma_l0", "p_d0", "p_f0", "epsilon_det",
        "alpha_ris", "alpha_direct", "g0_ref", "rician_k",
        "eps_tol", "i_max", "j_max", "k_max", "tau_grid", "z_grid", "n_rand"};
    return keys;
}

void require(bool ok, const char* field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

}  // namespace

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watt_to_dbm(double watt) { return 10.0 * std::log10(watt) + 30.0; }

ScenarioConfig default_scenario() {
    ScenarioConfig cfg;
    cfg.p_sbs = dbm_to_watt(35.0);
    cfg.p_pbs = dbm_to_watt(35.0);
    cfg.sigma2_sbs = dbm_to_watt(-60.0);
    cfg.sigma2_ms = dbm_to_watt(-60.0);
    cfg.sigma2_su = dbm_to_watt(-60.0);
    resize_per_node(cfg);
    return cfg;
}

ScenarioConfig desk_scenario() {
    ScenarioConfig cfg = default_scenario();
    cfg.n_b = 8;
    cfg.n_r = 16;
    cfg.n_m = 4;
    return cfg;
}

void resize_per_node(ScenarioConfig& cfg) {
    cfg.lambda_m.resize(static_cast<std::size_t>(std::max(cfg.m_ms, 0)), default_lambda);
    cfg.r_k.resize(static_cast<std::size_t>(std::max(cfg.k_su, 0)), default_rate);
    cfg.gamma_l0.resize(static_cast<std::size_t>(std::max(cfg.l_pu, 0)), dbm_to_watt(default_gamma_dbm));
}

void validate(const ScenarioConfig& c) {
    require(c.n_b >= 1, "n_b", "must be >= 1");
    require(c.n_r >= 1, "n_r", "must be >= 1");
    require(c.n_m >= 1, "n_m", "must be >= 1");
    require(c.m_ms >= 1, "m_ms", "must be >= 1");
    require(c.k_su >= 1, "k_su", "must be >= 1");
    require(c.l_pu >= 1, "l_pu", "must be >= 1");
    require(c.cluster_radius >= 0.0 && std::isfinite(c.cluster_radius), "cluster_radius", "must be finite and >= 0");
    require(c.p_sbs > 0.0, "p_sbs", "must be positive");
    require(c.p_pbs > 0.0, "p_pbs", "must be positive");
    require(c.sigma2_sbs > 0.0, "sigma2_sbs", "must be positive");
    require(c.sigma2_ms > 0.0, "sigma2_ms", "must be positive");
    require(c.sigma2_su > 0.0, "sigma2_su", "must be positive");
    require(c.prob_h0 >= 0.0 && c.prob_h0 <= 1.0, "prob_h0", "must lie in [0, 1]");
    require(c.prob_h1 >= 0.0 && c.prob_h1 <= 1.0, "prob_h1", "must lie in [0, 1]");
    require(std::abs(c.prob_h0 + c.prob_h1 - 1.0) <= 1e-12, "prob_h0+prob_h1",
            "probability sum must equal 1");
    require(c.f_c > 0.0, "f_c", "must be positive");
    require(c.f_s > 0.0, "f_s", "must be positive");
    require(c.t_total > 0.0, "t_total", "must be positive");
    require(c.lambda_m.size() == static_cast<std::size_t>(c.m_ms), "lambda_m", "needs one weight per MS");
    for (double v : c.lambda_m) require(v > 0.0 && v <= 1.0, "lambda_m", "weights must lie in (0, 1]");
    require(c.r_k.size() == static_cast<std::size_t>(c.k_su), "r_k", "needs one threshold per SUE");
    for (double v : c.r_k) require(v > 0.0 && std::isfinite(v), "r_k", "must be positive");
    require(c.gamma_l0.size() == static_cast<std::size_t>(c.l_pu), "gamma_l0", "needs one threshold per PUE");
    for (double v : c.gamma_l0) require(v > 0.0 && std::isfinite(v), "gamma_l0", "must be positive");
    require(c.p_f0 > 0.0 && c.p_f0 < 1.0, "p_f0", "must lie in (0, 1)");
    require(c.p_d0 > 0.0 && c.p_d0 < 1.0, "p_d0", "must lie in (0, 1)");
    require(c.p_f0 < c.p_d0, "p_f0", "must be below p_d0");
    if (c.epsilon_det) require(*c.epsilon_det > 0.0, "epsilon_det", "must be positive");
    require(c.alpha_ris > 0.0, "alpha_ris", "must be positive");
    require(c.alpha_direct > 0.0, "alpha_direct", "must be positive");
    require(c.g0_ref > 0.0, "g0_ref", "must be positive");
    require(c.rician_k >= 0.0, "rician_k", "must be >= 0");
    require(c.eps_tol > 0.0, "eps_tol", "must be positive");
    require(c.i_max >= 1, "i_max", "must be >= 1");
    require(c.j_max >= 1, "j_max", "must be >= 1");
    require(c.k_max >= 1, "k_max", "must be >= 1");
    require(c.tau_grid >= 2, "tau_grid", "must be >= 2");
    require(c.z_grid >= 2, "z_grid", "must be >= 2");
    require(c.n_rand >= 1, "n_rand", "must be >= 1");
}

ScenarioConfig load_scenario(std::string_view document) {
    json doc;
    std::string text(document);
    bool blank = text.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank) {
        doc = json::object();
    } else {
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(std::string("scenario parse failure: ") + e.what());
        }
    }
    if (!doc.is_object()) throw std::runtime_error("scenario parse failure: top level must be an object");
    for (const auto& [key, value] : doc.items()) {
        if (!known_keys().count(key)) throw ConfigError(key, "unknown key");
    }

    ScenarioConfig cfg = default_scenario();
    auto has = [&](const char* k) { return doc.contains(k); };

    if (has("n_b")) cfg.n_b = count_from(doc["n_b"], "n_b");
    if (has("n_r")) cfg.n_r = count_from(doc["n_r"], "n_r");
    if (has("n_m")) cfg.n_m = count_from(doc["n_m"], "n_m");
    if (has("m_ms")) cfg.m_ms = count_from(doc["m_ms"], "m_ms");
    if (has("k_su")) cfg.k_su = count_from(doc["k_su"], "k_su");
    if (has("l_pu")) cfg.l_pu = count_from(doc["l_pu"], "l_pu");

    if (has("pos_sbs")) cfg.pos_sbs = point_from(doc["pos_sbs"], "pos_sbs");
    if (has("pos_pbs")) cfg.pos_pbs = point_from(doc["pos_pbs"], "pos_pbs");
    if (has("pos_ris")) cfg.pos_ris = point_from(doc["pos_ris"], "pos_ris");
    if (has("cluster_ms")) cfg.cluster_ms = point_from(doc["cluster_ms"], "cluster_ms");
    if (has("cluster_su")) cfg.cluster_su = point_from(doc["cluster_su"], "cluster_su");
    if (has("cluster_pu")) cfg.cluster_pu = point_from(doc["cluster_pu"], "cluster_pu");
    if (has("cluster_radius")) cfg.cluster_radius = number_from(doc["cluster_radius"], "cluster_radius");

    if (has("p_sbs")) cfg.p_sbs = dbm_to_watt(number_from(doc["p_sbs"], "p_sbs"));
    if (has("p_pbs")) cfg.p_pbs = dbm_to_watt(number_from(doc["p_pbs"], "p_pbs"));
    if (has("sigma2_sbs")) cfg.sigma2_sbs = dbm_to_watt(number_from(doc["sigma2_sbs"], "sigma2_sbs"));
    if (has("sigma2_ms")) cfg.sigma2_ms = dbm_to_watt(number_from(doc["sigma2_ms"], "sigma2_ms"));
    if (has("sigma2_su")) cfg.sigma2_su = dbm_to_watt(number_from(doc["sigma2_su"], "sigma2_su"));

    if (has("prob_h0")) cfg.prob_h0 = number_from(doc["prob_h0"], "prob_h0");
    if (has("prob_h1")) cfg.prob_h1 = number_from(doc["prob_h1"], "prob_h1");
    if (has("f_c")) cfg.f_c = number_from(doc["f_c"], "f_c");
    if (has("f_s")) cfg.f_s = number_from(doc["f_s"], "f_s");
    if (has("t_total")) cfg.t_total = number_from(doc["t_total"], "t_total");

    // Counts may have changed; per-node lists not given in the document follow them.
    cfg.lambda_m.clear();
    cfg.r_k.clear();
    cfg.gamma_l0.clear();
    resize_per_node(cfg);
    auto fill = [](std::vector<double>& dst, std::vector<double> src, int count) {
        if (src.size() == 1 && count != 1) src.assign(static_cast<std::size_t>(std::max(count, 0)), src.front());
        dst = std::move(src);
    };
    if (has("lambda_m")) fill(cfg.lambda_m, per_node_from(doc["lambda_m"], "lambda_m", false), cfg.m_ms);
    if (has("r_k")) fill(cfg.r_k, per_node_from(doc["r_k"], "r_k", false), cfg.k_su);
    if (has("gamma_l0")) fill(cfg.gamma_l0, per_node_from(doc["gamma_l0"], "gamma_l0", true), cfg.l_pu);

    if (has("p_d0")) cfg.p_d0 = number_from(doc["p_d0"], "p_d0");
    if (has("p_f0")) cfg.p_f0 = number_from(doc["p_f0"], "p_f0");
    if (has("epsilon_det") && !doc["epsilon_det"].is_null())
        cfg.epsilon_det = number_from(doc["epsilon_det"], "epsilon_det");

    if (has("alpha_ris")) cfg.alpha_ris = number_from(doc["alpha_ris"], "alpha_ris");
    if (has("alpha_direct")) cfg.alpha_direct = number_from(doc["alpha_direct"], "alpha_direct");
    if (has("g0_ref")) cfg.g0_ref = number_from(doc["g0_ref"], "g0_ref");
    if (has("rician_k")) cfg.rician_k = number_from(doc["rician_k"], "rician_k");

    if (has("eps_tol")) cfg.eps_tol = number_from(doc["eps_tol"], "eps_tol");
    if (has("i_max")) cfg.i_max = count_from(doc["i_max"], "i_max");
    if (has("j_max")) cfg.j_max = count_from(doc["j_max"], "j_max");
    if (has("k_max")) cfg.k_max = count_from(doc["k_max"], "k_max");
    if (has("tau_grid")) cfg.tau_grid = count_from(doc["tau_grid"], "tau_grid");
    if (has("z_grid")) cfg.z_grid = count_from(doc["z_grid"], "z_grid");
    if (has("n_rand")) cfg.n_rand = count_from(doc["n_rand"], "n_rand");

    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return load_scenario(ss.str());
}

std::string serialize_scenario(const ScenarioConfig& c) {
    json j;
    j["n_b"] = c.n_b;
    j["n_r"] = c.n_r;
    j["n_m"] = c.n_m;
    j["m_ms"] = c.m_ms;
    j["k_su"] = c.k_su;
    j["l_pu"] = c.l_pu;
    j["pos_sbs"] = point_json(c.pos_sbs);
    j["pos_pbs"] = point_json(c.pos_pbs);
    j["pos_ris"] = point_json(c.pos_ris);
    j["cluster_ms"] = point_json(c.cluster_ms);
    j["cluster_su"] = point_json(c.cluster_su);
    j["cluster_pu"] = point_json(c.cluster_pu);
    j["cluster_radius"] = c.cluster_radius;
    j["p_sbs"] = dbm_for_roundtrip(c.p_sbs);
    j["p_pbs"] = dbm_for_roundtrip(c.p_pbs);
    j["sigma2_sbs"] = dbm_for_roundtrip(c.sigma2_sbs);
    j["sigma2_ms"] = dbm_for_roundtrip(c.sigma2_ms);
    j["sigma2_su"] = dbm_for_roundtrip(c.sigma2_su);
    j["prob_h0"] = c.prob_h0;
    j["prob_h1"] = c.prob_h1;
    j["f_c"] = c.f_c;
    j["f_s"] = c.f_s;
    j["t_total"] = c.t_total;
    j["lambda_m"] = c.lambda_m;
    j["r_k"] = c.r_k;
    json gam = json::array();
    for (double g : c.gamma_l0) gam.push_back(dbm_for_roundtrip(g));
    j["gamma_l0"] = gam;
    j["p_d0"] = c.p_d0;
    j["p_f0"] = c.p_f0;
    j["epsilon_det"] = c.epsilon_det ? json(*c.epsilon_det) : json(nullptr);
    j["alpha_ris"] = c.alpha_ris;
    j["alpha_direct"] = c.alpha_direct;
    j["g0_ref"] = c.g0_ref;
    j["rician_k"] = c.rician_k;
    j["eps_tol"] = c.eps_tol;
    j["i_max"] = c.i_max;
    j["j_max"] = c.j_max;
    j["k_max"] = c.k_max;
    j["tau_grid"] = c.tau_grid;
    j["z_grid"] = c.z_grid;
    j["n_rand"] = c.n_rand;
    return j.dump(2);
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_scenario(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

NodePositions place_nodes(const ScenarioConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(mix_seed(seed, stream::placement));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&](Point2 centre) {
        // sqrt of a uniform radius fraction gives a uniform density over the disk
        double r = cfg.cluster_radius * std::sqrt(unit(rng));
        double a = 2.0 * M_PI * unit(rng);
        return Point2{centre.x + r * std::cos(a), centre.y + r * std::sin(a)};
    };
    NodePositions pos;
    for (int m = 0; m < cfg.m_ms; ++m) pos.ms.push_back(draw(cfg.cluster_ms));
    for (int k = 0; k < cfg.k_su; ++k) pos.su.push_back(draw(cfg.cluster_su));
    for (int l = 0; l < cfg.l_pu; ++l) pos.pu.push_back(draw(cfg.cluster_pu));
    return pos;
}

}  // namespace cisac
