// sc-ldgm: command-line front end for the spatially coupled LDGM lossy
// compression library. Subcommands assemble a flat key=value configuration
// (config file first, then flag overrides) and hand it to the shared
// library; exit codes: 0 success, 2 invalid config, 3 bracket/convergence
// failure, 4 I/O failure.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scldgm.h"

namespace {

struct SubCmd {
    CLI::App* app = nullptr;
    std::string kind;
    std::string config_path;
    std::string out_path;
    bool summary = false;
    std::vector<std::pair<std::string, CLI::Option*>> passthrough;

    CLI::Option* add(const std::string& flag, const std::string& key, const std::string& desc) {
        CLI::Option* o = app->add_option(flag, desc);
        passthrough.emplace_back(key, o);
        return o;
    }

    std::string build_config() const {
        std::string text;
        if (!config_path.empty()) {
            FILE* f = std::fopen(config_path.c_str(), "rb");
            if (!f) throw CLI::RuntimeError("cannot open config file: " + config_path, 2);
            char buf[4096];
            size_t n;
            while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
            std::fclose(f);
            text += '\n';
        }
        for (const auto& [key, opt] : passthrough)
            if (opt->count() > 0) text += key + "=" + opt->results().back() + "\n";
        return text;
    }
};

SubCmd* make_subcommand(CLI::App& cli, std::vector<std::unique_ptr<SubCmd>>& store,
                        const std::string& name, const std::string& kind,
                        const std::string& desc) {
    auto sc = std::make_unique<SubCmd>();
    sc->app = cli.add_subcommand(name, desc);
    sc->kind = kind;
    sc->app->add_option("--config", sc->config_path, "flat key=value config file");
    sc->app->add_option("--out", sc->out_path, "output CSV path");
    sc->app->add_flag("--summary", sc->summary, "print an aligned text table");
    store.push_back(std::move(sc));
    return store.back().get();
}

void add_ensemble_opts(SubCmd* sc) {
    sc->add("--ensemble", "ensemble", "underlying|coupled");
    sc->add("--l", "l", "check degree");
    sc->add("--R", "R", "design compression rate");
    sc->add("--L", "L", "coupled positions");
    sc->add("--w", "w", "coupling window");
    sc->add("--n", "n", "checks per position");
    sc->add("--seed", "seed", "master seed");
}

void add_encoder_opts(SubCmd* sc) {
    sc->add("--beta", "beta", "inverse temperature");
    sc->add("--rule", "rule", "hard|random");
    sc->add("--eps", "eps", "BP convergence tolerance (default 0.01)");
    sc->add("--T", "T", "max BP iterations per round (default 10)");
    sc->add("--delta", "delta", "batch decimation fraction (default strict one-bit)");
    sc->add("--trials", "trials", "number of independent trials");
    sc->add("--workers", "workers", "worker threads for trials/grid points");
}

void add_cavity_opts(SubCmd* sc) {
    sc->add("--pop", "pop", "population size per position");
    sc->add("--tmax", "tmax", "max population-dynamics sweeps");
    sc->add("--grid", "grid", "beta grid start:stop:step");
    sc->add("--tol", "tol", "bisection tolerance");
    sc->add("--avg-sweeps", "avg-sweeps", "sweeps pooled into functional estimates");
    sc->add("--beta", "beta", "inverse temperature (single-point runs)");
    sc->add("--workers", "workers", "worker threads");
}

int run_kind(const SubCmd* sc) {
    std::string cfg = sc->build_config();
    std::vector<char> summary(sc->summary ? (1 << 20) : 1);
    int rc = scldgm_run_experiment(sc->kind.c_str(), cfg.c_str(),
                                   sc->out_path.empty() ? nullptr : sc->out_path.c_str(),
                                   sc->summary ? summary.data() : nullptr, summary.size());
    if (rc != SCLDGM_OK) {
        std::fprintf(stderr, "sc-ldgm %s: %s\n", sc->kind.c_str(), scldgm_last_error());
        return rc;
    }
    if (sc->summary) std::fputs(summary.data(), stdout);
    if (!sc->out_path.empty()) std::fprintf(stderr, "wrote %s\n", sc->out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"spatially coupled LDGM lossy compression toolkit"};
    cli.require_subcommand(1);
    std::vector<std::unique_ptr<SubCmd>> subs;

    SubCmd* enc = make_subcommand(cli, subs, "encode", "encode",
                                  "run BPGD encoding trials, one CSV row per trial");
    add_ensemble_opts(enc);
    add_encoder_opts(enc);

    SubCmd* bsw = make_subcommand(cli, subs, "beta-sweep", "beta-sweep",
                                  "mean distortion and convergence fraction over a beta grid");
    add_ensemble_opts(bsw);
    add_encoder_opts(bsw);
    bsw->add("--grid", "grid", "beta grid start:stop:step");

    SubCmd* cvp = make_subcommand(cli, subs, "conv-prob", "conv-prob",
                                  "convergence probability for both decision rules");
    add_ensemble_opts(cvp);
    add_encoder_opts(cvp);
    cvp->add("--grid", "grid", "beta grid start:stop:step");

    SubCmd* rds = make_subcommand(cli, subs, "rd-sweep", "rd-sweep",
                                  "rate-distortion sweep (hard rule optimizes beta; random "
                                  "rule runs at the capacity-matched beta)");
    add_ensemble_opts(rds);
    add_encoder_opts(rds);
    rds->add("--rates", "rates", "comma-separated rate list");
    rds->add("--grid", "grid", "beta optimization grid start:stop:step");

    SubCmd* smp = make_subcommand(cli, subs, "sampling-check", "sampling-check",
                                  "randomized-rule distortion against (1 - tanh beta)/2");
    add_ensemble_opts(smp);
    add_encoder_opts(smp);
    smp->add("--grid", "grid", "beta grid start:stop:step");

    SubCmd* thr = make_subcommand(cli, subs, "thresholds", "thresholds",
                                  "dynamical and condensation thresholds by population dynamics");
    add_ensemble_opts(thr);
    add_cavity_opts(thr);

    SubCmd* cxs = make_subcommand(cli, subs, "complexity-scan", "complexity-scan",
                                  "complexity curve over a beta grid");
    add_ensemble_opts(cxs);
    add_cavity_opts(cxs);

    SubCmd* tht = make_subcommand(cli, subs, "thresholds-table", "thresholds-table",
                                  "threshold table over (l, L, w) combinations");
    add_ensemble_opts(tht);
    add_cavity_opts(tht);
    tht->add("--ls", "ls", "comma-separated check degrees");
    tht->add("--Ls", "Ls", "comma-separated L values");
    tht->add("--ws", "ws", "comma-separated w values (paired with Ls)");

    SubCmd* ens = make_subcommand(cli, subs, "ensemble-stats", "ensemble-stats",
                                  "per-position degree statistics of a sampled graph");
    add_ensemble_opts(ens);

    // graph sampling goes straight through the handle API
    std::string g_out;
    scldgm_ensemble_params gp{3, 0.5, 1, 1, 100, 1, 0};
    CLI::App* sg = cli.add_subcommand("sample-graph", "sample a graph and write the text format");
    sg->add_option("--l", gp.l, "check degree");
    sg->add_option("--R", gp.R, "design compression rate");
    sg->add_option("--L", gp.L, "coupled positions");
    sg->add_option("--w", gp.w, "coupling window");
    sg->add_option("--n", gp.n, "checks per position");
    sg->add_option("--seed", gp.seed, "sampling seed");
    sg->add_option("--out", g_out, "output path")->required();

    CLI11_PARSE(cli, argc, argv);

    if (sg->parsed()) {
        scldgm_graph* g = nullptr;
        int rc = scldgm_graph_sample(&gp, &g);
        if (rc == SCLDGM_OK) rc = scldgm_graph_save(g, g_out.c_str());
        scldgm_graph_free(g);
        if (rc != SCLDGM_OK) {
            std::fprintf(stderr, "sc-ldgm sample-graph: %s\n", scldgm_last_error());
            return rc;
        }
        std::fprintf(stderr, "wrote %s\n", g_out.c_str());
        return 0;
    }

    for (const auto& sc : subs)
        if (sc->app->parsed()) return run_kind(sc.get());
    return 0;
}
