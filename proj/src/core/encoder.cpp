#include "core/encoder.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "core/message_passing.hpp"
#include "core/threadpool.hpp"

namespace scldgm {

void DecimationConfig::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("encoder: epsilon must be > 0");
    if (T < 1) throw std::invalid_argument("encoder: T must be >= 1");
    if (delta > 1.0) throw std::invalid_argument("encoder: delta must be <= 1");
    if (beta < 0.0) throw std::invalid_argument("encoder: beta must be >= 0");
}

EncoderGraph::EncoderGraph(const FactorGraph& g) : base_(&g) {
    int C = g.num_checks(), M = g.num_codebits();
    check_slots_.resize(C);
    var_slots_.resize(M);
    for (int c = 0; c < C; ++c) {
        check_slots_[c].reserve(g.check_degree(c));
        for (int e = g.check_off[c]; e < g.check_off[c + 1]; ++e) check_slots_[c].push_back(e);
    }
    for (int i = 0; i < M; ++i) {
        var_slots_[i].reserve(g.codebit_degree(i));
        for (int k = g.var_off[i]; k < g.var_off[i + 1]; ++k) var_slots_[i].push_back(g.var_edges[k]);
    }
    node_alive_.assign(M, 1);
    remaining_ = M;
    live_edges_ = g.num_edges();
    pos_remaining_.assign(g.L + g.w - 1, 0);
    for (int i = 0; i < M; ++i) pos_remaining_[g.codebit_pos[i] - 1]++;
}

void EncoderGraph::decimate(int node, int value, std::vector<uint8_t>& x) {
    if (!node_alive_[node]) throw std::logic_error("decimate: node already fixed");
    const FactorGraph& g = *base_;
    for (int e : var_slots_[node]) {
        int c = g.edge_check[e];
        if (value) x[c] ^= 1;  // once per slot: multiplicity counts
        auto& slots = check_slots_[c];
        for (size_t k = 0; k < slots.size(); ++k) {
            if (slots[k] == e) {
                slots[k] = slots.back();
                slots.pop_back();
                break;
            }
        }
        --live_edges_;
    }
    var_slots_[node].clear();
    node_alive_[node] = 0;
    --remaining_;
    pos_remaining_[g.codebit_pos[node] - 1]--;
}

std::vector<int> EncoderGraph::boundary_pool() const {
    const FactorGraph& g = *base_;
    std::vector<int> pool;
    int taken = 0;
    for (size_t p = 0; p < pos_remaining_.size() && taken < g.w; ++p) {
        if (pos_remaining_[p] == 0) continue;
        ++taken;
        for (int i = static_cast<int>(p) * g.m; i < static_cast<int>(p + 1) * g.m; ++i)
            if (node_alive_[i]) pool.push_back(i);
    }
    return pool;
}

std::vector<int> EncoderGraph::alive_nodes() const {
    std::vector<int> out;
    out.reserve(remaining_);
    for (int i = 0; i < static_cast<int>(node_alive_.size()); ++i)
        if (node_alive_[i]) out.push_back(i);
    return out;
}

int fix_hard(double eta, Rng& rng) {
    if (eta > 0.0) return 0;
    if (eta < 0.0) return 1;
    return rng.fair_bit();
}

int fix_random(double eta, double beta, Rng& rng) {
    double p0 = 0.5 * (1.0 + std::tanh(beta * eta));
    return rng.bernoulli(p0) ? 0 : 1;
}

int select_node(const std::vector<double>& biases, const EncoderGraph& graph, Rng& rng) {
    if (graph.remaining() == 0) throw std::logic_error("select_node: empty graph");
    double B = 0.0;
    for (int i = 0; i < static_cast<int>(biases.size()); ++i)
        if (graph.alive(i)) B = std::max(B, std::fabs(biases[i]));
    std::vector<int> pool;
    if (B > 0.0) {
        for (int i = 0; i < static_cast<int>(biases.size()); ++i)
            if (graph.alive(i) && std::fabs(biases[i]) == B) pool.push_back(i);
    } else {
        pool = graph.base().coupled() ? graph.boundary_pool() : graph.alive_nodes();
    }
    return pool[rng.uniform_index(static_cast<uint32_t>(pool.size()))];
}

namespace {

constexpr double kAtanhCap = 1.0 - 1e-15;

// One synchronous BP round restricted to live slots; returns the message
// total variation normalized by the current edge count.
double bpgd_round(const EncoderGraph& eg, const std::vector<uint8_t>& x, double beta,
                  std::vector<double>& eta, std::vector<double>& eta_hat,
                  std::vector<double>& bias) {
    const FactorGraph& g = eg.base();
    double tb = std::tanh(beta);
    double tv = 0.0;
    double tbuf[64], sbuf[65];
    for (int c = 0; c < g.num_checks(); ++c) {
        const auto& slots = eg.check_slots(c);
        int d = static_cast<int>(slots.size());
        if (d == 0) continue;
        double J = x[c] ? -1.0 : 1.0;
        if (d == 1) {
            tv += std::fabs(J - eta_hat[slots[0]]);
            eta_hat[slots[0]] = J;
            continue;
        }
        // untouched region: every incoming eta is still exactly zero, so each
        // leave-one-out product vanishes (d >= 2) and the outputs stay zero
        bool virgin = true;
        for (int k = 0; k < d && virgin; ++k)
            virgin = eta[slots[k]] == 0.0 && eta_hat[slots[k]] == 0.0;
        if (virgin) continue;
        double* t = tbuf;
        double* s = sbuf;
        std::vector<double> heap;
        if (d > 64) {
            heap.resize(2 * d + 1);
            t = heap.data();
            s = t + d;
        }
        for (int k = 0; k < d; ++k) t[k] = std::tanh(beta * eta[slots[k]]);
        s[d] = 1.0;
        for (int k = d - 1; k >= 0; --k) s[k] = s[k + 1] * t[k];
        double pre = 1.0;
        for (int k = 0; k < d; ++k) {
            double excl = pre * s[k + 1];
            double nh;
            if (beta == 0.0) {
                nh = 0.0;
            } else {
                double arg = tb * excl;
                if (arg > kAtanhCap) arg = kAtanhCap;
                if (arg < -kAtanhCap) arg = -kAtanhCap;
                nh = J * std::atanh(arg) / beta;
                if (nh > 1.0) nh = 1.0;
                if (nh < -1.0) nh = -1.0;
            }
            int e = slots[k];
            tv += std::fabs(nh - eta_hat[e]);
            eta_hat[e] = nh;
            pre *= t[k];
        }
    }
    int E = eg.live_edges();
    tv = E > 0 ? tv / static_cast<double>(E) : 0.0;

    for (int i = 0; i < g.num_codebits(); ++i) {
        if (!eg.alive(i)) continue;
        const auto& slots = eg.var_slots(i);
        double sum = 0.0;
        for (int e : slots) sum += eta_hat[e];
        if (sum == 0.0 && bias[i] == 0.0) {
            // all-zero incidence: eta values are already zero sums
            bool silent = true;
            for (int e : slots)
                if (eta_hat[e] != 0.0 || eta[e] != 0.0) {
                    silent = false;
                    break;
                }
            if (silent) continue;
        }
        bias[i] = sum;
        for (int e : slots) eta[e] = sum - eta_hat[e];
    }
    return tv;
}

} // namespace

EncodeResult run_bpgd(const FactorGraph& g, const std::vector<uint8_t>& x0,
                      const DecimationConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(x0.size()) != g.num_checks())
        throw std::invalid_argument("run_bpgd: source length mismatch");

    std::vector<uint8_t> x(x0);
    EncoderGraph eg(g);
    int M = g.num_codebits();
    std::vector<double> eta(g.num_edges(), 0.0), eta_hat(g.num_edges(), 0.0);
    std::vector<double> bias(M, 0.0);
    std::vector<int8_t> assignment(M, -1);
    Rng rng = Rng::stream(cfg.seed, cfg.stream, 2);

    EncodeResult res;
    long rounds = 0, converged_rounds = 0;
    std::vector<std::pair<double, int>> scored;
    std::vector<int> picks;

    while (eg.remaining() > 0) {
        int t_dec = 0;
        bool converged = false;
        for (int t = 0; t < cfg.T; ++t) {
            double tv = bpgd_round(eg, x, cfg.beta, eta, eta_hat, bias);
            t_dec = t + 1;
            if (tv < cfg.epsilon) {
                converged = true;
                break;
            }
        }
        ++rounds;
        if (converged) ++converged_rounds;

        double B = 0.0;
        for (int i = 0; i < M; ++i)
            if (eg.alive(i)) B = std::max(B, std::fabs(bias[i]));

        int batch = 1;
        if (cfg.delta > 0.0)
            batch = std::max(1, static_cast<int>(std::floor(cfg.delta * eg.remaining())));
        batch = std::min(batch, eg.remaining());

        picks.clear();
        if (batch == 1 && B > 0.0) {
            picks.push_back(select_node(bias, eg, rng));
        } else {
            // biased nodes first, by |bias| descending with randomized ties
            scored.clear();
            for (int i = 0; i < M; ++i)
                if (eg.alive(i) && bias[i] != 0.0) scored.emplace_back(std::fabs(bias[i]), i);
            if (static_cast<int>(scored.size()) <= batch) {
                for (const auto& s : scored) picks.push_back(s.second);
            } else {
                std::nth_element(scored.begin(), scored.begin() + (batch - 1), scored.end(),
                                 [](const auto& a, const auto& b) { return a.first > b.first; });
                double pivot = scored[batch - 1].first;
                std::vector<int> ties;
                for (const auto& s : scored) {
                    if (s.first > pivot)
                        picks.push_back(s.second);
                    else if (s.first == pivot)
                        ties.push_back(s.second);
                }
                int need = batch - static_cast<int>(picks.size());
                for (int q = 0; q < need; ++q) {
                    uint32_t j = q + rng.uniform_index(static_cast<uint32_t>(ties.size() - q));
                    std::swap(ties[q], ties[j]);
                    picks.push_back(ties[q]);
                }
            }
            // any shortfall is unbiased: seed it like the B = 0 rule, from the
            // moving boundary on coupled graphs
            int need = batch - static_cast<int>(picks.size());
            if (need > 0) {
                std::vector<int> pool = g.coupled() ? eg.boundary_pool() : eg.alive_nodes();
                std::vector<int> zeros;
                zeros.reserve(pool.size());
                for (int i : pool)
                    if (bias[i] == 0.0) zeros.push_back(i);
                int take = std::min<int>(need, static_cast<int>(zeros.size()));
                for (int q = 0; q < take; ++q) {
                    uint32_t j = q + rng.uniform_index(static_cast<uint32_t>(zeros.size() - q));
                    std::swap(zeros[q], zeros[j]);
                    picks.push_back(zeros[q]);
                }
            }
        }

        for (int node : picks) {
            int value = cfg.rule == DecimationRule::Hard ? fix_hard(bias[node], rng)
                                                         : fix_random(bias[node], cfg.beta, rng);
            if (cfg.record_trace)
                res.trace.push_back({rounds, t_dec, B, node, value});
            assignment[node] = static_cast<int8_t>(value);
            eg.decimate(node, value, x);
        }
    }

    res.rounds = rounds;
    res.convergence_fraction =
        rounds > 0 ? static_cast<double>(converged_rounds) / static_cast<double>(rounds) : 1.0;
    res.codeword.resize(M);
    for (int i = 0; i < M; ++i) res.codeword[i] = static_cast<uint8_t>(assignment[i]);
    res.reconstruction.resize(g.num_checks());
    long long mism = 0;
    for (int c = 0; c < g.num_checks(); ++c) {
        res.reconstruction[c] = static_cast<uint8_t>(x0[c] ^ x[c]);
        mism += x[c];
    }
    res.distortion = static_cast<double>(mism) / static_cast<double>(g.num_checks());
    return res;
}

TrialStats run_trials(const EnsembleParams& params, const DecimationConfig& cfg, int trials,
                      int workers) {
    if (trials < 1) throw std::invalid_argument("run_trials: trials must be >= 1");
    params.validate();
    TrialStats stats;
    stats.per_trial.resize(trials);

    parallel_tasks(workers, trials, [&](int k) {
        auto t0 = std::chrono::steady_clock::now();
        EnsembleParams p = params;
        p.stream = static_cast<uint64_t>(k);
        FactorGraph g = sample_coupled(p);
        std::vector<uint8_t> x = sample_source(static_cast<size_t>(g.num_checks()), p.seed,
                                               static_cast<uint64_t>(k));
        DecimationConfig c = cfg;
        c.seed = params.seed;
        c.stream = static_cast<uint64_t>(k);
        EncodeResult r = run_bpgd(g, x, c);
        auto t1 = std::chrono::steady_clock::now();
        TrialResult& out = stats.per_trial[k];
        out.distortion = r.distortion;
        out.conv_fraction = r.convergence_fraction;
        out.rounds = r.rounds;
        out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    });

    Welford wd, wc;
    for (const auto& t : stats.per_trial) {
        wd.add(t.distortion);
        wc.add(t.conv_fraction);
    }
    stats.trials = trials;
    stats.mean_distortion = wd.mean;
    stats.stderr_distortion = wd.std_error();
    stats.mean_convergence = wc.mean;
    stats.stderr_convergence = wc.std_error();
    return stats;
}

} // namespace scldgm
