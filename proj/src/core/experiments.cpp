#include "core/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/threadpool.hpp"

namespace scldgm {

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_text(ss.str());
}

Config Config::from_text(const std::string& text) {
    Config c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError("config line without '=': " + t);
        c.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return c;
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string Config::get_str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw ConfigError("");
        return v;
    } catch (...) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + it->second);
    }
}

int Config::get_int(const std::string& key, int def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos;
        long v = std::stol(it->second, &pos, 10);
        if (pos != it->second.size()) throw ConfigError("");
        return static_cast<int>(v);
    } catch (...) {
        throw ConfigError("config: bad integer value for '" + key + "': " + it->second);
    }
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    try {
        size_t pos;
        unsigned long long v = std::stoull(it->second, &pos, 10);
        if (pos != it->second.size()) throw ConfigError("");
        return static_cast<uint64_t>(v);
    } catch (...) {
        throw ConfigError("config: bad seed value for '" + key + "': " + it->second);
    }
}

GridSpec Config::get_grid(const std::string& key, const GridSpec& def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    GridSpec g;
    char extra;
    if (std::sscanf(it->second.c_str(), "%lf:%lf:%lf%c", &g.start, &g.stop, &g.step, &extra) != 3)
        throw ConfigError("config: grid '" + key + "' must be start:stop:step, got " + it->second);
    if (!(g.step > 0.0) || !(g.stop >= g.start))
        throw ConfigError("config: degenerate grid for '" + key + "'");
    return g;
}

std::vector<double> Config::get_list(const std::string& key,
                                     const std::vector<double>& def) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return def;
    std::vector<double> out;
    std::istringstream is(it->second);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("config: bad list element for '" + key + "': " + tok);
        }
    }
    if (out.empty()) throw ConfigError("config: empty list for '" + key + "'");
    return out;
}

std::string Config::echo() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// ReportTable

std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string ReportTable::to_csv() const {
    std::string out;
    for (const auto& m : meta) {
        out += "# ";
        out += m;
        out += '\n';
    }
    for (size_t i = 0; i < columns.size(); ++i) {
        if (i) out += ',';
        out += columns[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += r[i];
        }
        out += '\n';
    }
    return out;
}

void ReportTable::write_csv(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << to_csv();
}

std::string ReportTable::to_summary() const {
    std::vector<size_t> width(columns.size(), 0);
    for (size_t i = 0; i < columns.size(); ++i) width[i] = columns[i].size();
    for (const auto& r : rows)
        for (size_t i = 0; i < r.size() && i < width.size(); ++i)
            width[i] = std::max(width[i], r[i].size());
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out += "  ";
            out += cells[i];
            out.append(width[i] > cells[i].size() ? width[i] - cells[i].size() : 0, ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    };
    emit(columns);
    for (const auto& r : rows) emit(r);
    return out;
}

// ---------------------------------------------------------------------------
// shared config -> params plumbing

namespace {

void append_config_meta(ReportTable& t, const Config& cfg, const std::string& kind) {
    t.meta.push_back("kind=" + kind);
    std::istringstream is(cfg.echo());
    std::string line;
    while (std::getline(is, line)) t.meta.push_back(line);
}

EnsembleParams ensemble_from_config(const Config& cfg) {
    EnsembleParams p;
    p.l = cfg.get_int("l", 5);
    p.R = cfg.get_double("R", 0.5);
    p.L = cfg.get_int("L", 1);
    p.w = cfg.get_int("w", 1);
    p.n = cfg.get_int("n", 2000);
    p.seed = cfg.get_u64("seed", 1);
    std::string ens = cfg.get_str("ensemble", "");
    if (ens == "underlying") {
        p.L = 1;
        p.w = 1;
    } else if (!ens.empty() && ens != "coupled") {
        throw ConfigError("config: ensemble must be 'underlying' or 'coupled'");
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

DecimationConfig decimation_from_config(const Config& cfg) {
    DecimationConfig d;
    d.beta = cfg.get_double("beta", 1.0);
    std::string rule = cfg.get_str("rule", "hard");
    if (rule == "hard")
        d.rule = DecimationRule::Hard;
    else if (rule == "random" || rule == "randomized")
        d.rule = DecimationRule::Randomized;
    else
        throw ConfigError("config: rule must be 'hard' or 'random'");
    d.epsilon = cfg.get_double("eps", 0.01);
    d.T = cfg.get_int("T", 10);
    d.delta = cfg.get_double("delta", 0.0);
    d.seed = cfg.get_u64("seed", 1);
    try {
        d.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return d;
}

CavityParams cavity_from_config(const Config& cfg) {
    CavityParams p;
    p.l = cfg.get_int("l", 5);
    p.R = cfg.get_double("R", 0.5);
    p.L = cfg.get_int("L", 1);
    p.w = cfg.get_int("w", 1);
    p.beta = cfg.get_double("beta", 1.0);
    p.pop_size = cfg.get_int("pop", p.L > 1 ? 1000 : 30000);
    p.t_max = cfg.get_int("tmax", 3000);
    p.seed = cfg.get_u64("seed", 1);
    p.avg_sweeps = cfg.get_int("avg-sweeps", 200);
    p.blocks = cfg.get_int("blocks", 50);
    p.saturation_cap = cfg.get_double("cap", 0.0);
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return p;
}

int workers_from_config(const Config& cfg) {
    int wk = cfg.get_int("workers", 1);
    if (wk < 1) throw ConfigError("config: workers must be >= 1");
    return wk;
}

int trials_from_config(const Config& cfg) {
    int t = cfg.get_int("trials", 20);
    if (t < 1) throw ConfigError("config: trials must be >= 1");
    return t;
}

} // namespace

// ---------------------------------------------------------------------------
// encode: one trial batch at fixed parameters, per-trial rows

ReportTable run_encode(const Config& cfg) {
    EnsembleParams ep = ensemble_from_config(cfg);
    DecimationConfig dc = decimation_from_config(cfg);
    int trials = trials_from_config(cfg);
    int workers = workers_from_config(cfg);

    TrialStats st = run_trials(ep, dc, trials, workers);

    ReportTable t;
    append_config_meta(t, cfg, "encode");
    t.meta.push_back("mean_distortion=" + format_num(st.mean_distortion) +
                     " stderr=" + format_num(st.stderr_distortion));
    t.meta.push_back("mean_conv_fraction=" + format_num(st.mean_convergence) +
                     " stderr=" + format_num(st.stderr_convergence));
    t.columns = {"trial", "beta", "distortion", "conv_fraction", "rounds", "wall_ms"};
    for (int k = 0; k < trials; ++k) {
        const TrialResult& r = st.per_trial[k];
        t.add_row({std::to_string(k), format_num(dc.beta), format_num(r.distortion),
                   format_num(r.conv_fraction), std::to_string(r.rounds),
                   format_num(r.wall_ms)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// beta sweeps

namespace {

struct SweepPoint {
    double beta;
    TrialStats stats;
};

std::vector<SweepPoint> sweep_betas(const EnsembleParams& ep, DecimationConfig dc,
                                    const std::vector<double>& betas, int trials, int workers) {
    std::vector<SweepPoint> out(betas.size());
    for (size_t i = 0; i < betas.size(); ++i) {
        dc.beta = betas[i];
        out[i].beta = betas[i];
        out[i].stats = run_trials(ep, dc, trials, workers);
    }
    return out;
}

std::vector<double> grid_values(const GridSpec& g) {
    std::vector<double> v;
    for (double b = g.start; b <= g.stop + 1e-12; b += g.step) v.push_back(b);
    return v;
}

} // namespace

ReportTable beta_sweep(const Config& cfg) {
    EnsembleParams ep = ensemble_from_config(cfg);
    DecimationConfig dc = decimation_from_config(cfg);
    int trials = trials_from_config(cfg);
    int workers = workers_from_config(cfg);
    GridSpec grid = cfg.get_grid("grid", {0.4, 1.4, 0.05});

    std::vector<double> betas = grid_values(grid);
    std::vector<SweepPoint> pts = sweep_betas(ep, dc, betas, trials, workers);

    ReportTable t;
    append_config_meta(t, cfg, "beta-sweep");
    t.columns = {"beta", "distortion", "distortion_err", "conv_fraction", "conv_fraction_err",
                 "trials", "seed"};
    double best_beta = betas.front(), best_d = 1e300;
    for (const auto& p : pts) {
        if (p.stats.mean_distortion < best_d) {
            best_d = p.stats.mean_distortion;
            best_beta = p.beta;
        }
        t.add_row({format_num(p.beta), format_num(p.stats.mean_distortion),
                   format_num(p.stats.stderr_distortion), format_num(p.stats.mean_convergence),
                   format_num(p.stats.stderr_convergence), std::to_string(trials),
                   std::to_string(ep.seed)});
    }
    t.meta.push_back("argmin_beta=" + format_num(best_beta) +
                     " min_distortion=" + format_num(best_d));
    return t;
}

ReportTable conv_prob(const Config& cfg) {
    EnsembleParams ep = ensemble_from_config(cfg);
    int trials = trials_from_config(cfg);
    int workers = workers_from_config(cfg);
    GridSpec grid = cfg.get_grid("grid", {0.4, 1.4, 0.1});
    std::vector<double> betas = grid_values(grid);

    ReportTable t;
    append_config_meta(t, cfg, "conv-prob");
    t.columns = {"rule", "beta", "conv_fraction", "conv_fraction_err", "distortion",
                 "distortion_err", "trials"};
    for (const char* rule : {"hard", "random"}) {
        Config c2 = cfg;
        c2.set("rule", rule);
        DecimationConfig dc = decimation_from_config(c2);
        std::vector<SweepPoint> pts = sweep_betas(ep, dc, betas, trials, workers);
        for (const auto& p : pts)
            t.add_row({rule, format_num(p.beta), format_num(p.stats.mean_convergence),
                       format_num(p.stats.stderr_convergence),
                       format_num(p.stats.mean_distortion),
                       format_num(p.stats.stderr_distortion), std::to_string(trials)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// rate-distortion sweep

ReportTable rd_sweep(const Config& cfg) {
    Config base = cfg;
    std::vector<double> rates = cfg.get_list("rates", {0.5});
    int trials = trials_from_config(cfg);
    int workers = workers_from_config(cfg);
    std::string rule = cfg.get_str("rule", "hard");

    ReportTable t;
    append_config_meta(t, cfg, "rd-sweep");
    t.columns = {"R", "distortion", "distortion_err", "beta_used", "D_sh", "trials"};
    for (double R : rates) {
        if (!(R > 0.0) || !(R < 1.0))
            throw ConfigError("rd-sweep: rates must lie strictly inside (0,1)");
        Config c2 = base;
        c2.set("R", format_num(R));
        EnsembleParams ep = ensemble_from_config(c2);
        DecimationConfig dc = decimation_from_config(c2);
        double used_beta;
        TrialStats st;
        if (rule == "random" || rule == "randomized") {
            // randomized rule runs at the capacity-matched test-channel value
            used_beta = beta_sh(R);
            dc.beta = used_beta;
            st = run_trials(ep, dc, trials, workers);
        } else {
            GridSpec grid = cfg.get_grid("grid", {0.4, 1.4, 0.05});
            std::vector<double> betas = grid_values(grid);
            std::vector<SweepPoint> pts = sweep_betas(ep, dc, betas, trials, workers);
            size_t best = 0;
            for (size_t i = 1; i < pts.size(); ++i)
                if (pts[i].stats.mean_distortion < pts[best].stats.mean_distortion) best = i;
            // one refinement pass around the coarse optimum
            double lo = pts[best].beta - grid.step + 0.01, hi = pts[best].beta + grid.step - 0.01;
            std::vector<double> fine;
            for (double b = lo; b <= hi + 1e-12; b += 0.01)
                if (b > 0.0) fine.push_back(b);
            std::vector<SweepPoint> fpts = sweep_betas(ep, dc, fine, trials, workers);
            SweepPoint bestp = pts[best];
            for (const auto& p : fpts)
                if (p.stats.mean_distortion < bestp.stats.mean_distortion) bestp = p;
            used_beta = bestp.beta;
            st = bestp.stats;
        }
        t.add_row({format_num(R), format_num(st.mean_distortion),
                   format_num(st.stderr_distortion), format_num(used_beta),
                   format_num(shannon_distortion(R)), std::to_string(trials)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// sampling check: randomized-rule distortion against (1 - tanh beta)/2

ReportTable sampling_check(const Config& cfg) {
    Config c2 = cfg;
    c2.set("rule", "random");
    EnsembleParams ep = ensemble_from_config(c2);
    DecimationConfig dc = decimation_from_config(c2);
    int trials = trials_from_config(cfg);
    int workers = workers_from_config(cfg);
    GridSpec grid = cfg.get_grid("grid", {0.1, 1.0, 0.1});
    std::vector<double> betas = grid_values(grid);
    std::vector<SweepPoint> pts = sweep_betas(ep, dc, betas, trials, workers);

    ReportTable t;
    append_config_meta(t, cfg, "sampling-check");
    t.columns = {"beta", "distortion", "distortion_err", "internal_energy_half", "deviation",
                 "trials"};
    for (const auto& p : pts) {
        double ref = 0.5 * internal_energy(p.beta);
        t.add_row({format_num(p.beta), format_num(p.stats.mean_distortion),
                   format_num(p.stats.stderr_distortion), format_num(ref),
                   format_num(p.stats.mean_distortion - ref), std::to_string(trials)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// cavity-side experiments

namespace {

void scan_rows(ReportTable& t, const std::vector<ScanPoint>& scan) {
    for (const auto& s : scan)
        t.add_row({format_num(s.beta), format_num(s.sigma), format_num(s.sigma_err),
                   format_num(s.f), format_num(s.phi_int), s.trivial ? "1" : "0",
                   std::to_string(s.sweeps)});
}

} // namespace

ReportTable complexity_scan(const Config& cfg) {
    CavityParams base = cavity_from_config(cfg);
    GridSpec grid = cfg.get_grid("grid", {0.7, 1.2, 0.05});
    int workers = workers_from_config(cfg);
    std::vector<double> betas = grid_values(grid);
    std::vector<ScanPoint> scan(betas.size());
    parallel_tasks(workers, static_cast<int>(betas.size()), [&](int i) {
        CavityParams p = base;
        p.beta = betas[i];
        scan[i] = evaluate_scan_point(p);
    });

    ReportTable t;
    append_config_meta(t, cfg, "complexity-scan");
    t.columns = {"beta", "sigma", "sigma_err", "f", "phi_int", "trivial_flag", "sweeps"};
    scan_rows(t, scan);
    return t;
}

ReportTable thresholds_run(const Config& cfg) {
    CavityParams base = cavity_from_config(cfg);
    GridSpec grid = cfg.get_grid("grid", {0.7, 1.2, 0.05});
    double tol = cfg.get_double("tol", 0.005);

    Thresholds th = find_thresholds(base, grid, tol);

    ReportTable t;
    append_config_meta(t, cfg, "thresholds");
    t.meta.push_back("beta_d=" + format_num(th.beta_d) +
                     " bracket=" + format_num(th.beta_d_bracket));
    t.meta.push_back("beta_c=" + format_num(th.beta_c) +
                     " bracket=" + format_num(th.beta_c_bracket));
    t.columns = {"beta", "sigma", "sigma_err", "f", "phi_int", "trivial_flag", "sweeps"};
    scan_rows(t, th.scan);
    return t;
}

ReportTable thresholds_table(const Config& cfg) {
    std::vector<double> ls = cfg.get_list("ls", {3, 4, 5});
    std::vector<double> Ls = cfg.get_list("Ls", {1});
    std::vector<double> ws = cfg.get_list("ws", {1});
    double tol = cfg.get_double("tol", 0.005);
    GridSpec grid = cfg.get_grid("grid", {0.7, 1.2, 0.02});

    ReportTable t;
    append_config_meta(t, cfg, "thresholds-table");
    t.columns = {"l", "R", "L", "w", "beta_d", "beta_d_bracket", "beta_c", "beta_c_bracket"};
    for (double lv : ls) {
        for (size_t i = 0; i < Ls.size(); ++i) {
            int L = static_cast<int>(Ls[i]);
            int w = static_cast<int>(ws[std::min(i, ws.size() - 1)]);
            Config c2 = cfg;
            c2.set("l", std::to_string(static_cast<int>(lv)));
            c2.set("L", std::to_string(L));
            c2.set("w", std::to_string(w));
            CavityParams p = cavity_from_config(c2);
            Thresholds th = find_thresholds(p, grid, tol);
            t.add_row({std::to_string(static_cast<int>(lv)), format_num(p.R), std::to_string(L),
                       std::to_string(w), format_num(th.beta_d), format_num(th.beta_d_bracket),
                       format_num(th.beta_c), format_num(th.beta_c_bracket)});
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// ensemble statistics

ReportTable ensemble_stats(const Config& cfg) {
    EnsembleParams ep = ensemble_from_config(cfg);
    FactorGraph g = sample_coupled(ep);
    double lam = static_cast<double>(ep.l) / ep.R;

    int VP = g.L + g.w - 1;
    std::vector<long long> degree_sum(VP, 0);
    for (int i = 0; i < g.num_codebits(); ++i)
        degree_sum[g.codebit_pos[i] - 1] += g.codebit_degree(i);

    ReportTable t;
    append_config_meta(t, cfg, "ensemble-stats");
    t.meta.push_back("checks=" + std::to_string(g.num_checks()) +
                     " codebits=" + std::to_string(g.num_codebits()) +
                     " edges=" + std::to_string(g.num_edges()));
    t.meta.push_back("coupled_rate=" + format_num(coupled_rate(ep.R, ep.L, ep.w)));
    t.columns = {"z", "codebits", "mean_degree", "expected_degree"};
    for (int z = 1; z <= VP; ++z) {
        // check positions reaching code-bit position z
        int reach = 0;
        for (int y = 0; y < g.w; ++y)
            if (z - y >= 1 && z - y <= g.L) ++reach;
        double expect = lam * static_cast<double>(reach) / g.w;
        t.add_row({std::to_string(z), std::to_string(g.m),
                   format_num(static_cast<double>(degree_sum[z - 1]) / g.m),
                   format_num(expect)});
    }
    return t;
}

// ---------------------------------------------------------------------------
// dispatcher

int run_experiment(const std::string& kind, const Config& cfg, const std::string& out_csv,
                   std::string* summary_out, std::string* error_out) {
    try {
        ReportTable t;
        if (kind == "encode")
            t = run_encode(cfg);
        else if (kind == "beta-sweep")
            t = beta_sweep(cfg);
        else if (kind == "conv-prob")
            t = conv_prob(cfg);
        else if (kind == "rd-sweep")
            t = rd_sweep(cfg);
        else if (kind == "sampling-check")
            t = sampling_check(cfg);
        else if (kind == "thresholds")
            t = thresholds_run(cfg);
        else if (kind == "complexity-scan")
            t = complexity_scan(cfg);
        else if (kind == "thresholds-table")
            t = thresholds_table(cfg);
        else if (kind == "ensemble-stats")
            t = ensemble_stats(cfg);
        else
            throw ConfigError("unknown experiment kind: " + kind);

        if (!out_csv.empty()) t.write_csv(out_csv);
        if (summary_out) {
            *summary_out = t.to_summary();
            for (const auto& m : t.meta)
                if (m.rfind("beta_", 0) == 0 || m.rfind("argmin", 0) == 0 ||
                    m.rfind("mean_", 0) == 0)
                    *summary_out += m + "\n";
        }
        return 0;
    } catch (const ConfigError& e) {
        if (error_out) *error_out = e.what();
        return 2;
    } catch (const BracketError& e) {
        if (error_out) {
            *error_out = std::string(e.what()) + "\nscan:\n";
            for (const auto& s : e.scan)
                *error_out += "  beta=" + format_num(s.beta) + " sigma=" + format_num(s.sigma) +
                              " trivial=" + (s.trivial ? std::string("1") : std::string("0")) +
                              "\n";
        }
        return 3;
    } catch (const std::invalid_argument& e) {
        if (error_out) *error_out = e.what();
        return 2;
    } catch (const std::exception& e) {
        if (error_out) *error_out = e.what();
        return 4;
    }
}

} // namespace scldgm
