#pragma once

#include <utility>
#include <vector>

#include "core/ensemble.hpp"

namespace scldgm {

// Per-edge BP messages for one (graph, source, beta) instance.
// eta[e] is the code-bit -> check message on slot e, eta_hat[e] the
// check -> code-bit message; |eta_hat| <= 1 always.
struct MessageState {
    double beta = 1.0;
    std::vector<double> eta;
    std::vector<double> eta_hat;
    std::vector<int8_t> source_sign;  // J_a = (-1)^{x_a} per check

    static MessageState zero_init(const FactorGraph& graph, const std::vector<uint8_t>& x,
                                  double beta);
};

// eta_hat = J beta^{-1} atanh(tanh(beta) prod_j tanh(beta eta_j)).
// Empty incoming list means empty product = 1, hence result = J exactly.
double check_update(const double* incoming, int count, int J, double beta);

// Plain sum; empty list -> 0.
double variable_update(const double* incoming, int count);

// One synchronous flooding round: all eta_hat from current eta, then all eta
// from the new eta_hat. Returns tv = mean |eta_hat - previous eta_hat|.
double iterate_round(const FactorGraph& graph, MessageState& state);

struct BiasVector {
    std::vector<double> eta;  // per code-bit
    long generation = 0;
};

BiasVector compute_biases(const FactorGraph& graph, const MessageState& state);

// BP marginal (p0, p1) of a code-bit with total bias eta.
std::pair<double, double> bp_marginal(double eta, double beta);

// Brute-force marginals of the Gibbs measure; refuses M > 20.
std::vector<std::pair<double, double>> exact_marginal_oracle(const FactorGraph& graph,
                                                             const std::vector<uint8_t>& x,
                                                             double beta);

} // namespace scldgm
