#include "cisac/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "cisac/metrics.hpp"
#include "cisac/sensing.hpp"

namespace cisac {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kSchemeNames[] = {"proposed", "optimal_ris", "random_ris", "no_ris", "ss_specific_ris"};
const char* const kKindNames[] = {"power_sweep", "ris_sweep", "ms_antenna_sweep", "ris_location_grid",
                                  "roc",         "tau_sweep", "convergence_cdf",  "single_solve"};

bool same_double(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same_list(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!same_double(a[i], b[i])) return false;
    return true;
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Grid value applied to the configuration; returns the fixed sensing time for tau_sweep.
std::optional<double> apply_point(ExperimentKind kind, double value, const Point2* cell, ScenarioConfig& cfg) {
    switch (kind) {
    case ExperimentKind::power_sweep:
        cfg.p_sbs = dbm_to_watt(value);
        break;
    case ExperimentKind::ris_sweep:
        cfg.n_r = static_cast<int>(value);
        break;
    case ExperimentKind::ms_antenna_sweep:
        cfg.n_m = static_cast<int>(value);
        break;
    case ExperimentKind::ris_location_grid:
        if (cell) cfg.pos_ris = *cell;
        break;
    case ExperimentKind::tau_sweep: {
        double tau = value * cfg.t_total;
        // the threshold follows the false-alarm target at the swept sensing time
        cfg.epsilon_det = calibrate_threshold(tau, cfg.p_f0, cfg);
        return tau;
    }
    case ExperimentKind::roc:
    case ExperimentKind::convergence_cdf:
    case ExperimentKind::single_solve:
        break;
    }
    return std::nullopt;
}

ResultRecord failed_record(Scheme scheme, std::uint64_t seed, const std::string& error) {
    ResultRecord r;
    r.scheme = to_string(scheme);
    r.seed = seed;
    r.weighted_min_sinr = kNaN;
    r.weighted_sum_sinr = kNaN;
    r.weighted_peb = kNaN;
    r.pd = kNaN;
    r.pf = kNaN;
    r.tau = kNaN;
    r.feasible = false;
    r.error = error.empty() ? "unknown error" : error;
    return r;
}

double weighted_peb_of(const ScenarioConfig& cfg, const NodePositions& pos, const CMat& W, const CVec& phi,
                       double tau, std::uint64_t seed) {
    return weighted_peb(solution_pebs(cfg, pos, W, phi, tau, seed, true), cfg);
}

// Coordinate descent on discrete phases against the weighted PEB, restarted from random phases.
BcdResult optimal_ris_search(const ChannelSet& ch, const NodePositions& pos, const ScenarioConfig& cfg,
                             std::uint64_t seed) {
    constexpr int kAngles = 36;
    constexpr int kSweeps = 3;
    constexpr int kRestarts = 5;
    const double eps = detection_threshold(cfg);
    const Tolerances strict = strict_tolerances();
    const int nr = ch.n_r();

    std::optional<BcdResult> best;
    double best_peb = std::numeric_limits<double>::infinity();
    std::string last_error;

    for (int r = 0; r < kRestarts; ++r) {
        CVec phi = random_ris(nr, mix_seed(mix_seed(seed, stream::heuristic), r)).phi;
        double tau = 0.0;
        CMat W;
        BcdResult res;
        res.epsilon = eps;
        try {
            tau = initial_tau(ch, phi, eps, cfg);
            W = solve_w(ch, phi, tau, eps, cfg).W;
        } catch (const InfeasibleError& e) {
            last_error = e.what();
            continue;
        }
        auto score = [&](const CVec& p) {
            double v = weighted_peb_of(cfg, pos, W, p, tau, seed);
            return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
        };
        res.objective.push_back(evaluate(ch, W, phi, tau, eps, cfg).weighted_min_sinr);
        double cur = score(phi);
        for (int sweep = 0; sweep < kSweeps; ++sweep) {
            for (int n = 0; n < nr; ++n) {
                const cplx keep = phi(n);
                cplx chosen = keep;
                for (int a = 0; a < kAngles; ++a) {
                    phi(n) = std::polar(1.0, 2.0 * M_PI * a / kAngles);
                    if (phi(n) == keep) continue;
                    double v = score(phi);
                    if (!(v < cur)) continue;
                    if (!p1_feasibility(ch, W, phi, tau, eps, cfg, strict).feasible) continue;
                    cur = v;
                    chosen = phi(n);
                }
                phi(n) = chosen;
            }
            try {
                W = solve_w(ch, phi, tau, eps, cfg, W).W;
            } catch (const InfeasibleError& e) {
                last_error = e.what();
                break;
            }
            cur = score(phi);
            res.objective.push_back(evaluate(ch, W, phi, tau, eps, cfg).weighted_min_sinr);
            res.iterations = sweep + 1;
        }
        try {
            tau = tau_search(ch, W, phi, eps, cfg);
            W = solve_w(ch, phi, tau, eps, cfg, W).W;
        } catch (const InfeasibleError& e) {
            last_error = e.what();
            continue;
        }
        double final_peb = score(phi);
        if (!p1_feasibility(ch, W, phi, tau, eps, cfg).feasible) continue;
        if (!best || final_peb < best_peb) {
            res.tau = tau;
            res.W = W;
            res.phi = phi;
            res.converged = true;
            res.counts.bcd = res.iterations;
            best_peb = final_peb;
            best = std::move(res);
        }
    }
    if (!best) throw InfeasibleError("optimal_ris: no restart produced a feasible point: " + last_error, "restart");
    return *best;
}

SolveOutcome solve_configured(const ScenarioConfig& cfg, Scheme scheme, std::uint64_t seed,
                              std::optional<double> fixed_tau) {
    const auto start = std::chrono::steady_clock::now();
    SolveOutcome out;
    out.positions = place_nodes(cfg, seed);
    out.channels = generate_channels(cfg, out.positions, seed);
    out.epsilon = detection_threshold(cfg);

    BcdOptions opt;
    opt.fixed_tau = fixed_tau;
    bool ris_present = true;
    switch (scheme) {
    case Scheme::proposed:
        out.solution = bcd(out.channels, cfg, seed, opt);
        break;
    case Scheme::random_ris:
        opt.ris = RisMode::fixed;
        out.solution = bcd(out.channels, cfg, seed, opt);
        break;
    case Scheme::no_ris:
        opt.ris = RisMode::fixed;
        opt.phi = unit_ris(cfg.n_r).phi;
        out.channels = without_ris(std::move(out.channels));
        ris_present = false;
        out.solution = bcd(out.channels, cfg, seed, opt);
        break;
    case Scheme::ss_specific_ris:
        opt.ris = RisMode::fixed;
        opt.phi = sensing_max_ris(out.channels);
        out.solution = bcd(out.channels, cfg, seed, opt);
        break;
    case Scheme::optimal_ris:
        if (fixed_tau) throw std::invalid_argument("optimal_ris does not support a fixed sensing time");
        out.solution = optimal_ris_search(out.channels, out.positions, cfg, seed);
        break;
    }

    const BcdResult& s = out.solution;
    Evaluation ev = evaluate(out.channels, s.W, s.phi, s.tau, out.epsilon, cfg);
    ResultRecord& r = out.record;
    r.scheme = to_string(scheme);
    r.seed = seed;
    r.weighted_min_sinr = ev.weighted_min_sinr;
    r.weighted_sum_sinr = ev.weighted_sum_sinr;
    r.peb = solution_pebs(cfg, out.positions, s.W, s.phi, s.tau, seed, ris_present);
    r.weighted_peb = weighted_peb(r.peb, cfg);
    for (const auto& rate : ev.rate) r.rate.push_back(rate.avg_rate);
    r.pd = ev.pd;
    r.pf = ev.pf;
    r.tau = s.tau;
    r.iterations = s.iterations;
    r.feasible = p1_feasibility(ev, cfg).feasible;
    r.wall_time = seconds_since(start);
    return out;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        s += format_double(v[i]);
    }
    return s;
}

std::string quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

double parse_double(const std::string& s) {
    if (s.empty()) return kNaN;
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number: " + s);
    return v;
}

std::vector<double> split_list(const std::string& s) {
    std::vector<double> v;
    if (s.empty()) return v;
    std::size_t pos = 0;
    while (true) {
        std::size_t next = s.find(';', pos);
        v.push_back(parse_double(s.substr(pos, next - pos)));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return v;
}

// RFC 4180 rows; quoted fields may hold commas, doubled quotes and newlines.
std::vector<std::vector<std::string>> csv_rows(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw std::invalid_argument("csv: unterminated quoted field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

const char* const kRecordColumns[] = {"scheme", "seed",  "sweep_x", "sweep_y", "weighted_min_sinr",
                                      "weighted_sum_sinr", "weighted_peb", "peb", "rate", "pd", "pf",
                                      "tau", "iterations", "wall_time", "feasible", "error"};
constexpr std::size_t kRecordColumnCount = sizeof kRecordColumns / sizeof kRecordColumns[0];

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json list_json(const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(number_or_null(x));
    return a;
}

double json_number(const nlohmann::json& j) { return j.is_null() ? kNaN : j.get<double>(); }

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".manifest.json");
}

}  // namespace

const char* to_string(Scheme s) { return kSchemeNames[static_cast<int>(s)]; }

Scheme parse_scheme(std::string_view name) {
    for (int i = 0; i < 5; ++i)
        if (name == kSchemeNames[i]) return static_cast<Scheme>(i);
    throw std::invalid_argument("unknown scheme: " + std::string(name));
}

const char* to_string(ExperimentKind k) { return kKindNames[static_cast<int>(k)]; }

ExperimentKind parse_kind(std::string_view name) {
    for (int i = 0; i < 8; ++i)
        if (name == kKindNames[i]) return static_cast<ExperimentKind>(i);
    throw std::invalid_argument("unknown experiment kind: " + std::string(name));
}

std::vector<Point2> default_location_cells() {
    std::vector<Point2> cells;
    for (int x = -20; x <= 90; x += 10)
        for (int y = -50; y <= 60; y += 10) cells.push_back({double(x), double(y)});
    return cells;
}

void validate(const ExperimentSpec& spec) {
    if (spec.seeds.empty()) throw std::invalid_argument("experiment: seed list is empty");
    std::set<std::uint64_t> distinct(spec.seeds.begin(), spec.seeds.end());
    if (distinct.size() != spec.seeds.size()) throw std::invalid_argument("experiment: seeds must be distinct");
    if (spec.threads < 0) throw std::invalid_argument("experiment: negative thread count");
    switch (spec.kind) {
    case ExperimentKind::ris_location_grid:
        if (spec.cells.empty()) throw std::invalid_argument("experiment: location grid has no cells");
        return;
    case ExperimentKind::single_solve:
    case ExperimentKind::convergence_cdf:
        return;
    default:
        break;
    }
    if (spec.grid.empty()) throw std::invalid_argument("experiment: sweep grid is empty");
    for (double v : spec.grid) {
        if (!std::isfinite(v)) throw std::invalid_argument("experiment: non-finite grid value");
        switch (spec.kind) {
        case ExperimentKind::ris_sweep:
        case ExperimentKind::ms_antenna_sweep:
            if (!is_integer(v) || v < 1) throw std::invalid_argument("experiment: array sizes must be positive integers");
            break;
        case ExperimentKind::tau_sweep:
            if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("experiment: tau fractions must lie in (0, 1)");
            break;
        case ExperimentKind::roc:
            if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("experiment: false-alarm targets must lie in (0, 1)");
            break;
        default:
            break;
        }
    }
    if (spec.kind == ExperimentKind::tau_sweep && spec.scheme == Scheme::optimal_ris)
        throw std::invalid_argument("experiment: optimal_ris cannot run with a fixed sensing time");
}

bool same_record(const ResultRecord& a, const ResultRecord& b) {
    return a.scheme == b.scheme && a.seed == b.seed && same_double(a.sweep_x, b.sweep_x) &&
           same_double(a.sweep_y, b.sweep_y) && same_double(a.weighted_min_sinr, b.weighted_min_sinr) &&
           same_double(a.weighted_sum_sinr, b.weighted_sum_sinr) && same_double(a.weighted_peb, b.weighted_peb) &&
           same_list(a.peb, b.peb) && same_list(a.rate, b.rate) && same_double(a.pd, b.pd) &&
           same_double(a.pf, b.pf) && same_double(a.tau, b.tau) && a.iterations == b.iterations &&
           same_double(a.wall_time, b.wall_time) && a.feasible == b.feasible && a.error == b.error;
}

std::vector<double> solution_pebs(const ScenarioConfig& cfg, const NodePositions& pos, const CMat& W,
                                  const CVec& phi, double tau, std::uint64_t seed, bool ris_present) {
    std::vector<double> out;
    for (int m = 0; m < static_cast<int>(pos.ms.size()); ++m) {
        GeometricLink link = geometric_ms_link(cfg, pos, m, seed);
        if (!ris_present) link.h_r = 0.0;
        try {
            FimPair f = fim_pair(link, W.col(m), phi, tau, pos.ms[m], cfg);
            out.push_back(peb(f.f_p).value);
        } catch (const SingularFimError&) {
            out.push_back(kNaN);
        }
    }
    return out;
}

CVec sensing_max_ris(const ChannelSet& ch) {
    const int nr = ch.n_r();
    CMat lifted = sensing_lift(ch);
    if (lifted.norm() == 0.0) return unit_ris(nr).phi;
    conic::Rank1 top = conic::principal_rank1(lifted);
    const cplx ref = top.v(nr);
    CVec phi(nr);
    for (int n = 0; n < nr; ++n) {
        cplx z = std::abs(ref) > 0.0 ? top.v(n) / ref : top.v(n);
        phi(n) = std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0, 0.0);
    }
    return phi;
}

SolveOutcome solve_point(const ScenarioConfig& cfg, Scheme scheme, std::uint64_t seed, std::optional<double> fixed_tau) {
    validate(cfg);
    return solve_configured(cfg, scheme, seed, fixed_tau);
}

RunOutput run(const ExperimentSpec& spec, const ScenarioConfig& cfg) {
    validate(spec);
    validate(cfg);

    struct Point {
        double x = 0.0, y = 0.0;
        const Point2* cell = nullptr;
    };
    std::vector<Point> points;
    switch (spec.kind) {
    case ExperimentKind::ris_location_grid:
        for (const Point2& c : spec.cells) points.push_back({c.x, c.y, &c});
        break;
    case ExperimentKind::single_solve:
    case ExperimentKind::convergence_cdf:
    case ExperimentKind::roc:
        points.push_back({});  // the roc grid is a list of false-alarm targets, not a sweep
        break;
    default:
        for (double v : spec.grid) points.push_back({v, 0.0, nullptr});
        break;
    }

    const std::size_t n_seeds = spec.seeds.size();
    const std::size_t n_tasks = points.size() * n_seeds;
    RunOutput out;
    out.records.resize(n_tasks);
    std::vector<std::vector<RocRecord>> roc(n_tasks);

    auto work = [&](std::size_t task) {
        const Point& p = points[task / n_seeds];
        const std::uint64_t seed = spec.seeds[task % n_seeds];
        ResultRecord rec;
        try {
            ScenarioConfig local = cfg;
            std::optional<double> fixed_tau = apply_point(spec.kind, p.x, p.cell, local);
            validate(local);
            SolveOutcome o = solve_configured(local, spec.scheme, seed, fixed_tau);
            rec = o.record;
            if (spec.kind == ExperimentKind::roc) {
                const std::vector<double> grid = spec.grid.empty() ? default_pf_grid() : spec.grid;
                for (const RocPoint& q : roc_curve(o.channels, o.solution.phi, o.solution.tau, local, grid))
                    roc[task].push_back({q.pf, q.pd, q.one_minus_pd, rec.scheme, seed});
            }
        } catch (const std::exception& e) {
            rec = failed_record(spec.scheme, seed, e.what());
        }
        rec.sweep_x = p.x;
        rec.sweep_y = p.y;
        out.records[task] = std::move(rec);
    };

    int threads = spec.threads > 0 ? spec.threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(n_tasks)));
    if (threads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) work(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back([&] {
                for (std::size_t t = next++; t < n_tasks; t = next++) work(t);
            });
        for (auto& th : pool) th.join();
    }

    for (const auto& r : out.records)
        if (!r.error.empty() || !r.feasible) out.any_failed = true;
    for (auto& v : roc) out.roc.insert(out.roc.end(), v.begin(), v.end());
    return out;
}

Format parse_format(std::string_view name) {
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    throw std::invalid_argument("unknown format: " + std::string(name));
}

std::string records_csv(const std::vector<ResultRecord>& records) {
    std::ostringstream s;
    for (std::size_t i = 0; i < kRecordColumnCount; ++i) s << (i ? "," : "") << kRecordColumns[i];
    s << '\n';
    for (const auto& r : records) {
        s << r.scheme << ',' << r.seed << ',' << format_double(r.sweep_x) << ',' << format_double(r.sweep_y) << ','
          << format_double(r.weighted_min_sinr) << ',' << format_double(r.weighted_sum_sinr) << ','
          << format_double(r.weighted_peb) << ',' << join_list(r.peb) << ',' << join_list(r.rate) << ','
          << format_double(r.pd) << ',' << format_double(r.pf) << ',' << format_double(r.tau) << ','
          << r.iterations << ',' << format_double(r.wall_time) << ',' << (r.feasible ? 1 : 0) << ','
          << quote(r.error) << '\n';
    }
    return s.str();
}

std::string records_json(const std::vector<ResultRecord>& records) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json j;
        j["scheme"] = r.scheme;
        j["seed"] = r.seed;
        j["sweep_x"] = number_or_null(r.sweep_x);
        j["sweep_y"] = number_or_null(r.sweep_y);
        j["weighted_min_sinr"] = number_or_null(r.weighted_min_sinr);
        j["weighted_sum_sinr"] = number_or_null(r.weighted_sum_sinr);
        j["weighted_peb"] = number_or_null(r.weighted_peb);
        j["peb"] = list_json(r.peb);
        j["rate"] = list_json(r.rate);
        j["pd"] = number_or_null(r.pd);
        j["pf"] = number_or_null(r.pf);
        j["tau"] = number_or_null(r.tau);
        j["iterations"] = r.iterations;
        j["wall_time"] = number_or_null(r.wall_time);
        j["feasible"] = r.feasible;
        j["error"] = r.error;
        a.push_back(std::move(j));
    }
    return a.dump(2) + "\n";
}

std::vector<ResultRecord> parse_records(std::string_view text, Format format) {
    std::vector<ResultRecord> out;
    if (format == Format::json) {
        nlohmann::json a = nlohmann::json::parse(text);
        if (!a.is_array()) throw std::invalid_argument("records: expected a JSON array");
        for (const auto& j : a) {
            ResultRecord r;
            r.scheme = j.at("scheme").get<std::string>();
            r.seed = j.at("seed").get<std::uint64_t>();
            r.sweep_x = json_number(j.at("sweep_x"));
            r.sweep_y = json_number(j.at("sweep_y"));
            r.weighted_min_sinr = json_number(j.at("weighted_min_sinr"));
            r.weighted_sum_sinr = json_number(j.at("weighted_sum_sinr"));
            r.weighted_peb = json_number(j.at("weighted_peb"));
            for (const auto& v : j.at("peb")) r.peb.push_back(json_number(v));
            for (const auto& v : j.at("rate")) r.rate.push_back(json_number(v));
            r.pd = json_number(j.at("pd"));
            r.pf = json_number(j.at("pf"));
            r.tau = json_number(j.at("tau"));
            r.iterations = j.at("iterations").get<int>();
            r.wall_time = json_number(j.at("wall_time"));
            r.feasible = j.at("feasible").get<bool>();
            r.error = j.at("error").get<std::string>();
            out.push_back(std::move(r));
        }
        return out;
    }
    auto rows = csv_rows(text);
    if (rows.empty()) throw std::invalid_argument("records: missing CSV header");
    if (rows[0].size() != kRecordColumnCount) throw std::invalid_argument("records: unexpected CSV header");
    for (std::size_t i = 0; i < kRecordColumnCount; ++i)
        if (rows[0][i] != kRecordColumns[i]) throw std::invalid_argument("records: unexpected CSV header");
    for (std::size_t n = 1; n < rows.size(); ++n) {
        const auto& f = rows[n];
        if (f.size() != kRecordColumnCount)
            throw std::invalid_argument("records: row " + std::to_string(n) + " has the wrong field count");
        ResultRecord r;
        r.scheme = f[0];
        r.seed = std::stoull(f[1]);
        r.sweep_x = parse_double(f[2]);
        r.sweep_y = parse_double(f[3]);
        r.weighted_min_sinr = parse_double(f[4]);
        r.weighted_sum_sinr = parse_double(f[5]);
        r.weighted_peb = parse_double(f[6]);
        r.peb = split_list(f[7]);
        r.rate = split_list(f[8]);
        r.pd = parse_double(f[9]);
        r.pf = parse_double(f[10]);
        r.tau = parse_double(f[11]);
        r.iterations = std::stoi(f[12]);
        r.wall_time = parse_double(f[13]);
        r.feasible = f[14] == "1";
        r.error = f[15];
        out.push_back(std::move(r));
    }
    return out;
}


std::string roc_csv(const std::vector<RocRecord>& points) {
    std::ostringstream s;
    s << "scheme,seed,pf,pd,one_minus_pd\n";
    for (const auto& p : points)
        s << p.scheme << ',' << p.seed << ',' << format_double(p.pf) << ',' << format_double(p.pd) << ','
          << format_double(p.one_minus_pd) << '\n';
    return s.str();
}

std::string roc_json(const std::vector<RocRecord>& points) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : points)
        a.push_back({{"scheme", p.scheme},
                     {"seed", p.seed},
                     {"pf", number_or_null(p.pf)},
                     {"pd", number_or_null(p.pd)},
                     {"one_minus_pd", number_or_null(p.one_minus_pd)}});
    return a.dump(2) + "\n";
}

std::string manifest_json(const Manifest& m) {
    nlohmann::json j;
    j["kind"] = m.kind;
    j["scheme"] = m.scheme;
    j["seeds"] = m.seeds;
    j["grid"] = m.grid;
    j["config_hash"] = m.config_hash;
    j["tool_version"] = m.tool_version;
    j["timestamp"] = m.timestamp;
    return j.dump(2) + "\n";
}

Manifest make_manifest(const ExperimentSpec& spec, const ScenarioConfig& cfg) {
    Manifest m;
    m.kind = to_string(spec.kind);
    m.scheme = to_string(spec.scheme);
    m.seeds = spec.seeds;
    m.grid = spec.grid;
    if (spec.kind == ExperimentKind::ris_location_grid) {
        m.grid.clear();
        for (const Point2& c : spec.cells) {
            m.grid.push_back(c.x);
            m.grid.push_back(c.y);
        }
    }
    m.config_hash = config_hash(cfg);
    std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    m.timestamp = buf;
    return m;
}

void emit(const std::vector<ResultRecord>& records, Format format, const std::filesystem::path& path,
          const Manifest& manifest) {
    if (records.empty()) throw std::invalid_argument("emit: no records");
    write_file(path, format == Format::csv ? records_csv(records) : records_json(records));
    write_file(manifest_path(path), manifest_json(manifest));
}

void emit_roc(const std::vector<RocRecord>& points, Format format, const std::filesystem::path& path,
              const Manifest& manifest) {
    if (points.empty()) throw std::invalid_argument("emit: no ROC points");
    write_file(path, format == Format::csv ? roc_csv(points) : roc_json(points));
    write_file(manifest_path(path), manifest_json(manifest));
}

std::vector<std::pair<int, double>> convergence_cdf(const std::vector<ResultRecord>& records) {
    std::vector<int> its;
    for (const auto& r : records)
        if (r.error.empty()) its.push_back(r.iterations);
    std::sort(its.begin(), its.end());
    std::vector<std::pair<int, double>> cdf;
    for (std::size_t i = 0; i < its.size(); ++i) {
        if (i + 1 < its.size() && its[i + 1] == its[i]) continue;
        cdf.emplace_back(its[i], double(i + 1) / its.size());
    }
    return cdf;
}

}  // namespace cisac
