#pragma once

#include <cstdint>
#include <vector>

#include "core/ensemble.hpp"
#include "core/mathutil.hpp"
#include "core/rng.hpp"

namespace scldgm {

enum class DecimationRule { Hard, Randomized };

struct DecimationConfig {
    double beta = 1.0;
    DecimationRule rule = DecimationRule::Hard;
    double epsilon = 0.01;  // convergence tolerance of the message total variation
    int T = 10;             // max BP iterations per decimation round
    // Batch fraction in (0, 1]: fix round(delta * m_remaining) code-bits per
    // round. <= 0 selects strict one-bit decimation.
    double delta = 0.0;
    uint64_t seed = 0;
    uint64_t stream = 0;
    bool record_trace = false;

    void validate() const;
};

// Mutable working graph of one encoder run. Built from an immutable
// FactorGraph; decimation removes code-bits and their edge slots.
class EncoderGraph {
public:
    explicit EncoderGraph(const FactorGraph& g);

    // Fix code-bit `node` to `value`: flips x_a once per incident slot, then
    // removes the node. Throws if the node was already fixed.
    void decimate(int node, int value, std::vector<uint8_t>& x);

    bool alive(int node) const { return node_alive_[node] != 0; }
    int remaining() const { return remaining_; }
    int live_edges() const { return live_edges_; }
    const FactorGraph& base() const { return *base_; }

    const std::vector<int>& check_slots(int c) const { return check_slots_[c]; }
    const std::vector<int>& var_slots(int i) const { return var_slots_[i]; }

    // Code-bits (alive) in the w left-most positions that still hold any.
    std::vector<int> boundary_pool() const;
    std::vector<int> alive_nodes() const;

private:
    const FactorGraph* base_;
    std::vector<std::vector<int>> check_slots_;
    std::vector<std::vector<int>> var_slots_;
    std::vector<uint8_t> node_alive_;
    std::vector<int> pos_remaining_;  // per code-bit position (1-based index-1)
    int remaining_ = 0;
    int live_edges_ = 0;
};

struct DecimationTraceRow {
    long round = 0;
    int t_dec = 0;
    double max_bias = 0.0;
    int node = 0;
    int value = 0;
};

struct EncodeResult {
    std::vector<uint8_t> codeword;
    std::vector<uint8_t> reconstruction;
    double distortion = 0.0;
    double convergence_fraction = 0.0;  // rounds ended by the tv criterion
    long rounds = 0;
    std::vector<DecimationTraceRow> trace;
};

// Hard decision: 0 for positive bias, 1 for negative, fair coin at zero.
int fix_hard(double eta, Rng& rng);
// Randomized decision: 0 with probability (1 + tanh(beta eta)) / 2.
int fix_random(double eta, double beta, Rng& rng);

// Uniform choice among the max-|bias| nodes; at zero max bias, uniform over
// the boundary pool (coupled) or over all remaining nodes (underlying).
int select_node(const std::vector<double>& biases, const EncoderGraph& graph, Rng& rng);

// Full BPGD encoder: BP to the decimation instant, fix, decimate, repeat.
EncodeResult run_bpgd(const FactorGraph& graph, const std::vector<uint8_t>& x,
                      const DecimationConfig& cfg);

struct TrialResult {
    double distortion = 0.0;
    double conv_fraction = 0.0;
    long rounds = 0;
    double wall_ms = 0.0;
};

struct TrialStats {
    long trials = 0;
    double mean_distortion = 0.0, stderr_distortion = 0.0;
    double mean_convergence = 0.0, stderr_convergence = 0.0;
    std::vector<TrialResult> per_trial;
};

// Independent (graph, source, run) per trial; trial k draws from streams
// (seed, k, {0,1,2}) so results replay individually and in parallel.
TrialStats run_trials(const EnsembleParams& params, const DecimationConfig& cfg, int trials,
                      int workers = 1);

} // namespace scldgm
