#include "scldgm.h"

#include <cstring>
#include <string>

#include "core/cavity.hpp"
#include "core/encoder.hpp"
#include "core/ensemble.hpp"
#include "core/experiments.hpp"

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
    g_last_error = what ? what : "unknown error";
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const scldgm::BracketError& e) {
        return fail(SCLDGM_ERR_BRACKET, e.what());
    } catch (const scldgm::ConfigError& e) {
        return fail(SCLDGM_ERR_INVALID, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(SCLDGM_ERR_INVALID, e.what());
    } catch (const std::logic_error& e) {
        return fail(SCLDGM_ERR_INVALID, e.what());
    } catch (const std::runtime_error& e) {
        return fail(SCLDGM_ERR_IO, e.what());
    } catch (const std::exception& e) {
        return fail(SCLDGM_ERR_INTERNAL, e.what());
    }
}

scldgm::EnsembleParams to_params(const scldgm_ensemble_params& p) {
    scldgm::EnsembleParams out;
    out.l = p.l;
    out.R = p.R;
    out.L = p.L;
    out.w = p.w;
    out.n = p.n;
    out.seed = p.seed;
    out.stream = p.stream;
    return out;
}

scldgm::CavityParams to_params(const scldgm_cavity_params& p) {
    scldgm::CavityParams out;
    out.l = p.l;
    out.R = p.R;
    out.L = p.L;
    out.w = p.w;
    out.beta = p.beta;
    if (p.pop_size > 0) out.pop_size = p.pop_size;
    if (p.t_max > 0) out.t_max = p.t_max;
    out.seed = p.seed;
    out.stream = p.stream;
    return out;
}

} // namespace

struct scldgm_graph {
    scldgm::FactorGraph g;
};

extern "C" {

const char* scldgm_version(void) { return "scldgm 1.0.0"; }

const char* scldgm_last_error(void) { return g_last_error.c_str(); }

int scldgm_graph_sample(const scldgm_ensemble_params* params, scldgm_graph** out) {
    if (!params || !out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* h = new scldgm_graph{scldgm::sample_coupled(to_params(*params))};
        *out = h;
        return SCLDGM_OK;
    });
}

void scldgm_graph_free(scldgm_graph* g) { delete g; }

int scldgm_graph_counts(const scldgm_graph* g, int32_t* checks, int32_t* codebits,
                        int64_t* edges) {
    if (!g) return fail(SCLDGM_ERR_INVALID, "null graph");
    if (checks) *checks = g->g.num_checks();
    if (codebits) *codebits = g->g.num_codebits();
    if (edges) *edges = g->g.num_edges();
    return SCLDGM_OK;
}

int scldgm_graph_save(const scldgm_graph* g, const char* path) {
    if (!g || !path) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        scldgm::save_graph(g->g, std::string(path));
        return SCLDGM_OK;
    });
}

int scldgm_graph_load(const char* path, scldgm_graph** out) {
    if (!path || !out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* h = new scldgm_graph{scldgm::load_graph_file(path)};
        *out = h;
        return SCLDGM_OK;
    });
}

int scldgm_reconstruct(const scldgm_graph* g, const uint8_t* u, int32_t u_len, uint8_t* xhat,
                       int32_t x_len) {
    if (!g || !u || !xhat) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        if (u_len != g->g.num_codebits() || x_len != g->g.num_checks())
            throw std::invalid_argument("reconstruct: length mismatch");
        std::vector<uint8_t> uv(u, u + u_len);
        std::vector<uint8_t> xv = scldgm::reconstruct(g->g, uv);
        std::memcpy(xhat, xv.data(), xv.size());
        return SCLDGM_OK;
    });
}

int scldgm_distortion(const uint8_t* a, const uint8_t* b, int32_t len, double* out) {
    if (!a || !b || !out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        std::vector<uint8_t> av(a, a + len), bv(b, b + len);
        *out = scldgm::distortion(av, bv);
        return SCLDGM_OK;
    });
}

int scldgm_sample_source(int32_t n, uint64_t seed, uint64_t stream, uint8_t* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        std::vector<uint8_t> x = scldgm::sample_source(static_cast<size_t>(n), seed, stream);
        std::memcpy(out, x.data(), x.size());
        return SCLDGM_OK;
    });
}

double scldgm_coupled_rate(double R, int32_t L, int32_t w) {
    return R * (1.0 + static_cast<double>(w - 1) / static_cast<double>(L));
}

int scldgm_exhaustive_optimal(const scldgm_graph* g, const uint8_t* x, int32_t x_len,
                              uint8_t* u_out, int32_t u_len, double* distortion) {
    if (!g || !x || !u_out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        if (x_len != g->g.num_checks() || u_len != g->g.num_codebits())
            throw std::invalid_argument("exhaustive_optimal: length mismatch");
        std::vector<uint8_t> xv(x, x + x_len);
        scldgm::ExhaustiveResult r = scldgm::exhaustive_optimal(g->g, xv);
        std::memcpy(u_out, r.codeword.data(), r.codeword.size());
        if (distortion) *distortion = r.distortion;
        return SCLDGM_OK;
    });
}

int scldgm_encode(const scldgm_graph* g, const uint8_t* x, int32_t x_len,
                  const scldgm_encode_config* cfg, uint8_t* u_out, int32_t u_len,
                  scldgm_encode_stats* stats) {
    if (!g || !x || !cfg || !u_out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        if (x_len != g->g.num_checks() || u_len != g->g.num_codebits())
            throw std::invalid_argument("encode: length mismatch");
        scldgm::DecimationConfig dc;
        dc.beta = cfg->beta;
        dc.rule = cfg->rule == SCLDGM_RULE_RANDOM ? scldgm::DecimationRule::Randomized
                                                  : scldgm::DecimationRule::Hard;
        if (cfg->epsilon > 0.0) dc.epsilon = cfg->epsilon;
        if (cfg->T > 0) dc.T = cfg->T;
        dc.delta = cfg->delta;
        dc.seed = cfg->seed;
        dc.stream = cfg->stream;
        std::vector<uint8_t> xv(x, x + x_len);
        scldgm::EncodeResult r = scldgm::run_bpgd(g->g, xv, dc);
        std::memcpy(u_out, r.codeword.data(), r.codeword.size());
        if (stats) {
            stats->distortion = r.distortion;
            stats->conv_fraction = r.convergence_fraction;
            stats->rounds = r.rounds;
        }
        return SCLDGM_OK;
    });
}

int scldgm_complexity_point(const scldgm_cavity_params* params, scldgm_complexity* out) {
    if (!params || !out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        scldgm::ScanPoint pt = scldgm::evaluate_scan_point(to_params(*params));
        out->sigma = pt.sigma;
        out->sigma_err = pt.sigma_err;
        out->f = pt.f;
        out->phi_int = pt.phi_int;
        out->trivial = pt.trivial ? 1 : 0;
        return SCLDGM_OK;
    });
}

int scldgm_find_thresholds(const scldgm_cavity_params* params, double grid_start,
                           double grid_stop, double grid_step, double tol,
                           scldgm_thresholds* out) {
    if (!params || !out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        scldgm::GridSpec grid{grid_start, grid_stop, grid_step};
        scldgm::Thresholds th = scldgm::find_thresholds(to_params(*params), grid, tol);
        out->beta_d = th.beta_d;
        out->beta_d_bracket = th.beta_d_bracket;
        out->beta_c = th.beta_c;
        out->beta_c_bracket = th.beta_c_bracket;
        return SCLDGM_OK;
    });
}

int scldgm_shannon_distortion(double R, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::shannon_distortion(R);
        return SCLDGM_OK;
    });
}

int scldgm_beta_sh(double R, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::beta_sh(R);
        return SCLDGM_OK;
    });
}

int scldgm_free_energy(double beta, double R, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::free_energy_simplified(beta, R);
        return SCLDGM_OK;
    });
}

int scldgm_internal_energy(double beta, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::internal_energy(beta);
        return SCLDGM_OK;
    });
}

int scldgm_large_degree_complexity(double beta, double R, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::large_degree_complexity(beta, R);
        return SCLDGM_OK;
    });
}

int scldgm_large_degree_beta_c(double R, double* out) {
    if (!out) return fail(SCLDGM_ERR_INVALID, "null argument");
    return guarded([&] {
        *out = scldgm::large_degree_beta_c(R);
        return SCLDGM_OK;
    });
}

int scldgm_run_experiment(const char* kind, const char* config, const char* out_csv,
                          char* summary, size_t summary_cap) {
    if (!kind) return fail(SCLDGM_ERR_INVALID, "null kind");
    std::string summary_text, error_text;
    int rc = SCLDGM_ERR_INTERNAL;
    int wrapped = guarded([&] {
        scldgm::Config cfg = scldgm::Config::from_text(config ? config : "");
        rc = scldgm::run_experiment(kind, cfg, out_csv ? out_csv : "", &summary_text,
                                    &error_text);
        return SCLDGM_OK;
    });
    if (wrapped != SCLDGM_OK) return wrapped;
    if (rc != 0) return fail(rc, error_text.c_str());
    if (summary && summary_cap > 0) {
        size_t count = summary_text.size() < summary_cap - 1 ? summary_text.size()
                                                             : summary_cap - 1;
        std::memcpy(summary, summary_text.data(), count);
        summary[count] = '\0';
    }
    return SCLDGM_OK;
}

} // extern "C"
